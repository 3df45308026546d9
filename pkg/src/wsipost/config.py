"""Pipeline constants and the class vocabulary.

Every numeric knob used anywhere in the pipeline lives in PipelineConfig so
that a single config echo in each output file fully documents a run.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

from .errors import ConfigurationError

# Instance classes, in the order used for one-hot encodings.
CLASSES = ("Glomerulus", "Arteriole", "Artery")

# Tissue-region classes from the annotation vocabulary.
TISSUE_CLASSES = ("Cortex", "Medulla", "Capsule/Other")

IGNORE_CLASS = "Ignore"

# Full annotation vocabulary accepted in GeoJSON files.
ANNOTATION_CLASSES = CLASSES + TISSUE_CLASSES + (IGNORE_CLASS,)

# Thumbnail label values -> class names.
TISSUE_LABELS = {0: "background", 1: "Capsule/Other", 2: "Cortex", 3: "Medulla"}


@dataclass(frozen=True)
class PipelineConfig:
    """All tunable constants of the post-processing pipeline.

    Defaults are the production values: 4096 px tiles with a 32 px overlap,
    resized by half to the 2048 px model input, the edge-filter pair
    (20% circumference / 90% area in the outer 10% band), the 25 px minimum
    instance area and the 0.7 cross-class IoU cutoff.
    """

    tile_size: int = 4096
    tile_overlap: int = 32
    model_input: int = 2048
    thumbnail_size: int = 4096
    edge_circumference_max: float = 0.20
    edge_band_area_min: float = 0.90
    band_fraction: float = 0.10
    min_instance_area: int = 25
    cross_class_iou_cutoff: float = 0.7
    match_iou: float = 0.5
    static_thresholds: tuple = (0.3, 0.5, 0.7, 0.9)
    min_tile_tissue_fraction: float = 0.05
    same_class_suppress_iou: float = 0.5
    dct_bins: int = 20

    def __post_init__(self):
        self.validate()

    @property
    def model_scale(self) -> float:
        return self.model_input / self.tile_size

    @property
    def upsample_factor(self) -> int:
        return self.tile_size // self.model_input

    def validate(self) -> None:
        if self.tile_size <= 0:
            raise ConfigurationError(f"tile_size must be positive, got {self.tile_size}")
        if not 0 <= self.tile_overlap < self.tile_size:
            raise ConfigurationError(
                f"tile_overlap must be in [0, tile_size), got {self.tile_overlap}"
            )
        if self.model_input <= 0 or self.tile_size % self.model_input != 0:
            # Integer up/down-sampling keeps binary masks exact; 4096 -> 2048 is x2.
            raise ConfigurationError(
                f"model_input must divide tile_size, got {self.model_input}/{self.tile_size}"
            )
        if self.thumbnail_size <= 0:
            raise ConfigurationError("thumbnail_size must be positive")
        if not 0.0 < self.edge_circumference_max < 1.0:
            raise ConfigurationError("edge_circumference_max must be in (0, 1)")
        if not 0.0 < self.edge_band_area_min < 1.0:
            raise ConfigurationError("edge_band_area_min must be in (0, 1)")
        if not 0.0 < self.band_fraction < 0.5:
            raise ConfigurationError("band_fraction must be in (0, 0.5)")
        if self.min_instance_area < 0:
            raise ConfigurationError("min_instance_area must be >= 0")
        for name in ("cross_class_iou_cutoff", "match_iou", "same_class_suppress_iou"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ConfigurationError(f"{name} must be in (0, 1], got {v}")
        if not all(0.0 <= t <= 1.0 for t in self.static_thresholds):
            raise ConfigurationError("static_thresholds must lie in [0, 1]")
        if not 0.0 <= self.min_tile_tissue_fraction <= 1.0:
            raise ConfigurationError("min_tile_tissue_fraction must lie in [0, 1]")
        if self.dct_bins < 2:
            raise ConfigurationError("dct_bins must be >= 2")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["static_thresholds"] = list(self.static_thresholds)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        if "static_thresholds" in d:
            d["static_thresholds"] = tuple(d["static_thresholds"])
        return cls(**d)

    def with_overrides(self, **kwargs) -> "PipelineConfig":
        return replace(self, **kwargs)
