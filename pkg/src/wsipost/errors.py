"""Exception hierarchy. Every error belongs to one of five families that
map to distinct CLI exit codes."""


class PipelineError(Exception):
    """Base class for all pipeline errors."""

    family = "format"


class FormatError(PipelineError):
    """Malformed input data: bad RLE, bad label values, bad file layout."""

    family = "format"


class VocabularyError(PipelineError):
    """A class name outside the annotation vocabulary."""

    family = "vocabulary"


class GeometryError(PipelineError):
    """Invalid geometry: unclosed rings, out-of-frame masks."""

    family = "geometry"


class FrameError(GeometryError):
    """Two pixel sets compared across different coordinate frames."""


class UndefinedMeasureError(GeometryError):
    """A geometric measurement requested on an empty mask."""


class ConfigurationError(PipelineError):
    """Invalid or inconsistent run configuration."""

    family = "configuration"


class CapacityError(PipelineError):
    """A bounded resource (placement attempts, slide extent) was exhausted."""

    family = "capacity"


EXIT_CODES = {
    "format": 2,
    "vocabulary": 3,
    "geometry": 4,
    "configuration": 5,
    "capacity": 6,
}


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, PipelineError):
        return EXIT_CODES.get(exc.family, 1)
    return 1
