"""Run-length-encoded binary mask algebra.

Every pixel set in the pipeline is an RleMask: alternating background /
foreground run lengths over a column-major scan of a width x height grid,
first run background (possibly zero). This is the COCO uncompressed-RLE
layout, so external model outputs convert losslessly.

Masks placed in a shared coordinate frame (PlacedMask) support exact IoU,
cropping and per-column interval algebra without ever materialising a
full-slide bitmap.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FormatError, FrameError, UndefinedMeasureError

__all__ = [
    "PixelBox",
    "RleMask",
    "PlacedMask",
    "rle_encode",
    "rle_decode",
    "validate_rle",
    "round_half_up",
    "column_segments",
    "from_segments",
    "crop",
    "crop_placed",
    "tighten",
    "upsample_placed",
    "iou",
    "edge_contact_fraction",
    "border_band_area_fraction",
    "interval_union_length",
    "merge_intervals",
    "depth_intervals",
    "placed_flat_intervals",
]


def round_half_up(value: float) -> int:
    """Round to the nearest integer, halves away from zero toward +inf."""
    return int(np.floor(value + 0.5))


@dataclass(frozen=True)
class PixelBox:
    """Axis-aligned pixel rectangle: origin (x, y) plus extent (w, h)."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise FormatError(f"pixel box needs positive extent, got {self.w}x{self.h}")

    @property
    def x1(self) -> int:
        return self.x + self.w

    @property
    def y1(self) -> int:
        return self.y + self.h

    def intersect(self, other: "PixelBox") -> "PixelBox | None":
        x0 = max(self.x, other.x)
        y0 = max(self.y, other.y)
        x1 = min(self.x1, other.x1)
        y1 = min(self.y1, other.y1)
        if x1 <= x0 or y1 <= y0:
            return None
        return PixelBox(x0, y0, x1 - x0, y1 - y0)


@dataclass(eq=False)
class RleMask:
    """Binary mask as alternating bg/fg run lengths, column-major scan."""

    width: int
    height: int
    runs: np.ndarray

    def __post_init__(self):
        self.runs = np.asarray(self.runs, dtype=np.int64)

    def __eq__(self, other):
        if not isinstance(other, RleMask):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and np.array_equal(self.runs, other.runs)
        )

    @property
    def area(self) -> int:
        """Foreground pixel count: the sum of odd-indexed runs."""
        return int(self.runs[1::2].sum())

    @property
    def size(self) -> int:
        return self.width * self.height

    def to_json(self) -> dict:
        return {"size": [self.height, self.width], "counts": [int(r) for r in self.runs]}

    @classmethod
    def from_json(cls, obj: dict) -> "RleMask":
        try:
            h, w = obj["size"]
            m = cls(int(w), int(h), np.asarray(obj["counts"], dtype=np.int64))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed RLE object: {exc}") from exc
        validate_rle(m)
        return m


def validate_rle(m: RleMask) -> None:
    """Check the canonical-form invariants, raising FormatError on violation."""
    if m.width <= 0 or m.height <= 0:
        raise FormatError(f"mask needs positive extent, got {m.width}x{m.height}")
    if m.runs.ndim != 1 or m.runs.size == 0:
        raise FormatError("runs must be a non-empty 1-D sequence")
    if np.any(m.runs < 0):
        raise FormatError("negative run length")
    total = int(m.runs.sum())
    if total != m.size:
        raise FormatError(f"runs sum to {total}, expected {m.size}")
    # Only the leading background run may be zero.
    if np.any(m.runs[1:] == 0):
        raise FormatError("zero-length run after the first position")


def rle_encode(bitmap) -> RleMask:
    """Encode a 2-D boolean grid (indexed [y, x]) into canonical RLE."""
    a = np.asarray(bitmap, dtype=bool)
    if a.ndim != 2 or a.shape[0] == 0 or a.shape[1] == 0:
        raise FormatError(f"expected a non-empty 2-D grid, got shape {a.shape}")
    h, w = a.shape
    flat = a.reshape(-1, order="F")
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], change, [flat.size]))
    runs = np.diff(bounds)
    if flat[0]:
        runs = np.concatenate(([0], runs))
    return RleMask(w, h, runs)


def rle_decode(m: RleMask) -> np.ndarray:
    """Decode to a 2-D boolean grid indexed [y, x]."""
    vals = np.zeros(len(m.runs), dtype=bool)
    vals[1::2] = True
    flat = np.repeat(vals, m.runs)
    return flat.reshape((m.height, m.width), order="F")


def _fg_flat_intervals(m: RleMask) -> tuple[np.ndarray, np.ndarray]:
    """Half-open [start, end) foreground intervals in the flat column-major index."""
    ends = np.cumsum(m.runs)
    starts = ends - m.runs
    s = starts[1::2]
    e = ends[1::2]
    keep = e > s
    return s[keep], e[keep]


def column_segments(m: RleMask) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Foreground as per-column segments (cols, y0, y1), y half-open.

    Runs that wrap column boundaries are split, so every returned segment
    lies within a single column.
    """
    s, e = _fg_flat_intervals(m)
    if s.size == 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty.copy(), empty.copy()
    h = m.height
    c0 = s // h
    c1 = (e - 1) // h
    n = c1 - c0 + 1
    total = int(n.sum())
    run_idx = np.repeat(np.arange(s.size), n)
    offs = np.arange(total) - np.repeat(np.cumsum(n) - n, n)
    cols = c0[run_idx] + offs
    first = offs == 0
    last = offs == n[run_idx] - 1
    y0 = np.where(first, s[run_idx] - c0[run_idx] * h, 0)
    y1 = np.where(last, e[run_idx] - c1[run_idx] * h, h)
    return cols, y0, y1


def _merge_flat(fs: np.ndarray, fe: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Merge overlapping/touching half-open intervals; returns sorted disjoint."""
    if fs.size == 0:
        return fs, fe
    order = np.argsort(fs, kind="stable")
    fs = fs[order]
    fe = fe[order]
    running = np.maximum.accumulate(fe)
    new = np.empty(fs.size, dtype=bool)
    new[0] = True
    new[1:] = fs[1:] > running[:-1]
    starts = fs[new]
    ends = np.maximum.reduceat(fe, np.flatnonzero(new))
    return starts, ends


def from_segments(width: int, height: int, cols, y0, y1) -> RleMask:
    """Build a canonical RleMask from per-column segments (may overlap/touch)."""
    cols = np.asarray(cols, dtype=np.int64)
    y0 = np.asarray(y0, dtype=np.int64)
    y1 = np.asarray(y1, dtype=np.int64)
    keep = y1 > y0
    cols, y0, y1 = cols[keep], y0[keep], y1[keep]
    if cols.size == 0:
        return RleMask(width, height, np.array([width * height], dtype=np.int64))
    if np.any((cols < 0) | (cols >= width)) or np.any(y0 < 0) or np.any(y1 > height):
        raise FormatError("segment outside the target grid")
    fs = cols * height + y0
    fe = cols * height + y1
    fs, fe = _merge_flat(fs, fe)
    n = fs.size
    runs = np.empty(2 * n, dtype=np.int64)
    runs[0::2] = fs - np.concatenate(([0], fe[:-1]))
    runs[1::2] = fe - fs
    trailing = width * height - int(fe[-1])
    if trailing > 0:
        runs = np.concatenate((runs, [trailing]))
    return RleMask(width, height, runs)


def _clip_segments(cols, y0, y1, box: PixelBox):
    """Clip segments to a box, re-expressed relative to the box origin."""
    keep = (cols >= box.x) & (cols < box.x1)
    cols, y0, y1 = cols[keep], y0[keep], y1[keep]
    y0 = np.maximum(y0, box.y)
    y1 = np.minimum(y1, box.y1)
    keep = y1 > y0
    return cols[keep] - box.x, y0[keep] - box.y, y1[keep] - box.y


def crop(m: RleMask, box: PixelBox) -> RleMask:
    """Crop a mask to a window given in the mask's own grid coordinates."""
    cols, y0, y1 = column_segments(m)
    cols, y0, y1 = _clip_segments(cols, y0, y1, box)
    return from_segments(box.w, box.h, cols, y0, y1)


@dataclass(eq=False)
class PlacedMask:
    """An RleMask placed at an (x, y) origin inside a named coordinate frame."""

    mask: RleMask
    origin: tuple[int, int]
    frame: str = "slide"

    def __eq__(self, other):
        if not isinstance(other, PlacedMask):
            return NotImplemented
        return (
            self.mask == other.mask
            and tuple(self.origin) == tuple(other.origin)
            and self.frame == other.frame
        )

    @property
    def area(self) -> int:
        return self.mask.area

    def grid_box(self) -> PixelBox:
        """The full mask grid as a box in frame coordinates."""
        return PixelBox(self.origin[0], self.origin[1], self.mask.width, self.mask.height)

    def bbox(self) -> PixelBox | None:
        """Tight foreground bounding box in frame coordinates, None if empty."""
        s, e = _fg_flat_intervals(self.mask)
        if s.size == 0:
            return None
        h = self.mask.height
        c0 = s // h
        c1 = (e - 1) // h
        multi = c1 > c0
        ymin = int(np.where(multi, 0, s % h).min())
        ymax = int(np.where(multi, h - 1, (e - 1) % h).max())
        xmin = int(c0.min())
        xmax = int(c1.max())
        ox, oy = self.origin
        return PixelBox(ox + xmin, oy + ymin, xmax - xmin + 1, ymax - ymin + 1)

    def frame_segments(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Column segments expressed in frame coordinates."""
        cols, y0, y1 = column_segments(self.mask)
        ox, oy = self.origin
        return cols + ox, y0 + oy, y1 + oy


def crop_placed(p: PlacedMask, box: PixelBox) -> PlacedMask:
    """Crop a placed mask to a frame-coordinate window (origin moves to the box)."""
    cols, y0, y1 = p.frame_segments()
    cols, y0, y1 = _clip_segments(cols, y0, y1, box)
    return PlacedMask(from_segments(box.w, box.h, cols, y0, y1), (box.x, box.y), p.frame)


def tighten(p: PlacedMask) -> PlacedMask:
    """Crop a placed mask to its tight foreground bounding box."""
    box = p.bbox()
    if box is None:
        return p
    return crop_placed(p, box)


def upsample_placed(p: PlacedMask, factor: int, frame: str | None = None) -> PlacedMask:
    """Nearest-neighbour upsample by an integer factor (each pixel -> k x k block)."""
    if factor < 1:
        raise FormatError(f"upsample factor must be >= 1, got {factor}")
    if factor == 1:
        return PlacedMask(p.mask, p.origin, frame or p.frame)
    cols, y0, y1 = column_segments(p.mask)
    k = factor
    cols = (cols[:, None] * k + np.arange(k)).ravel()
    y0 = np.repeat(y0 * k, k)
    y1 = np.repeat(y1 * k, k)
    m = from_segments(p.mask.width * k, p.mask.height * k, cols, y0, y1)
    ox, oy = p.origin
    return PlacedMask(m, (ox * k, oy * k), frame or p.frame)


def iou(a: PlacedMask, b: PlacedMask) -> float:
    """Mask IoU of two placed masks in the same frame. iou(empty, empty) = 0."""
    if a.frame != b.frame:
        raise FrameError(f"cannot compare frames {a.frame!r} and {b.frame!r}")
    area_a = a.area
    area_b = b.area
    if area_a == 0 and area_b == 0:
        return 0.0
    bb_a = a.bbox()
    bb_b = b.bbox()
    overlap = bb_a.intersect(bb_b) if bb_a and bb_b else None
    if overlap is None:
        return 0.0
    ca, ya0, ya1 = _clip_segments(*a.frame_segments(), overlap)
    cb, yb0, yb1 = _clip_segments(*b.frame_segments(), overlap)
    h = np.int64(overlap.h)
    fs = np.concatenate((ca * h + ya0, cb * h + yb0))
    fe = np.concatenate((ca * h + ya1, cb * h + yb1))
    union_in_box = interval_union_length(fs, fe)
    len_a = int((ya1 - ya0).sum())
    len_b = int((yb1 - yb0).sum())
    inter = len_a + len_b - union_in_box
    union = area_a + area_b - inter
    return inter / union


def _boundary_window(m: RleMask) -> tuple[np.ndarray, PixelBox]:
    """Dense window over the foreground bbox with its boundary pixels marked.

    A boundary pixel is foreground with at least one background-or-outside
    4-neighbour. Zero padding is correct at the grid edge because pixels
    outside the frame count the same as background.
    """
    placed = PlacedMask(m, (0, 0), "local")
    box = placed.bbox()
    window = rle_decode(crop(m, box))
    padded = np.zeros((window.shape[0] + 2, window.shape[1] + 2), dtype=bool)
    padded[1:-1, 1:-1] = window
    interior = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    return window & ~interior, box


def edge_contact_fraction(m: RleMask, tile: PixelBox) -> float:
    """Fraction of mask boundary pixels lying on the tile's outermost ring.

    The mask grid must be congruent with the tile frame.
    """
    if (m.width, m.height) != (tile.w, tile.h):
        raise FrameError(
            f"mask grid {m.width}x{m.height} does not match tile frame {tile.w}x{tile.h}"
        )
    if m.area == 0:
        raise UndefinedMeasureError("edge contact fraction of an empty mask")
    boundary, box = _boundary_window(m)
    ys = box.y + np.arange(box.h)
    xs = box.x + np.arange(box.w)
    on_ring = (
        (ys[:, None] == 0)
        | (ys[:, None] == tile.h - 1)
        | (xs[None, :] == 0)
        | (xs[None, :] == tile.w - 1)
    )
    total = int(np.count_nonzero(boundary))
    ring = int(np.count_nonzero(boundary & on_ring))
    return ring / total


def border_band_area_fraction(m: RleMask, tile: PixelBox, band_fraction: float = 0.10) -> float:
    """Fraction of mask area inside the tile's border band.

    The band width is round-half-up(band_fraction x tile side), applied per
    side, so the default 0.10 on a 4096 px tile gives a 410 px band.
    """
    if not 0.0 < band_fraction < 0.5:
        raise ValueError(f"band_fraction must be in (0, 0.5), got {band_fraction}")
    if (m.width, m.height) != (tile.w, tile.h):
        raise FrameError(
            f"mask grid {m.width}x{m.height} does not match tile frame {tile.w}x{tile.h}"
        )
    area = m.area
    if area == 0:
        raise UndefinedMeasureError("border band fraction of an empty mask")
    bw = round_half_up(band_fraction * tile.w)
    bh = round_half_up(band_fraction * tile.h)
    if tile.w - 2 * bw <= 0 or tile.h - 2 * bh <= 0:
        return 1.0
    interior = PixelBox(bw, bh, tile.w - 2 * bw, tile.h - 2 * bh)
    cols, y0, y1 = column_segments(m)
    _, iy0, iy1 = _clip_segments(cols, y0, y1, interior)
    interior_area = int((iy1 - iy0).sum())
    return (area - interior_area) / area


# ---------------------------------------------------------------------------
# 1-D interval algebra over flat (column-major) pixel indices. Used for
# exact pixel-set measures (unions, intersections) without dense bitmaps.
# ---------------------------------------------------------------------------


def interval_union_length(starts: np.ndarray, ends: np.ndarray) -> int:
    """Total length of the union of half-open intervals."""
    if len(starts) == 0:
        return 0
    order = np.argsort(starts, kind="stable")
    s = np.asarray(starts)[order]
    e = np.asarray(ends)[order]
    prev = np.concatenate(([s[0]], np.maximum.accumulate(e)[:-1]))
    return int(np.clip(e - np.maximum(s, prev), 0, None).sum())


def merge_intervals(starts, ends) -> tuple[np.ndarray, np.ndarray]:
    """Disjoint sorted union of half-open intervals."""
    return _merge_flat(np.asarray(starts, dtype=np.int64), np.asarray(ends, dtype=np.int64))


def depth_intervals(starts, ends, min_depth: int) -> tuple[np.ndarray, np.ndarray]:
    """Regions covered by at least `min_depth` of the given intervals."""
    starts = np.asarray(starts, dtype=np.int64)
    ends = np.asarray(ends, dtype=np.int64)
    if starts.size == 0:
        return starts, ends
    pos = np.concatenate((starts, ends))
    delta = np.concatenate((np.ones(starts.size, np.int64), -np.ones(ends.size, np.int64)))
    order = np.argsort(pos, kind="stable")
    pos = pos[order]
    delta = delta[order]
    boundary = np.empty(pos.size, dtype=bool)
    boundary[0] = True
    boundary[1:] = pos[1:] != pos[:-1]
    upos = pos[boundary]
    net = np.add.reduceat(delta, np.flatnonzero(boundary))
    depth = np.cumsum(net)
    deep = depth[:-1] >= min_depth
    return upos[:-1][deep], upos[1:][deep]


def placed_flat_intervals(masks, frame_height: int) -> tuple[np.ndarray, np.ndarray]:
    """Flatten placed masks into half-open intervals over x * H + y."""
    all_s = []
    all_e = []
    h = np.int64(frame_height)
    for p in masks:
        cols, y0, y1 = p.frame_segments()
        all_s.append(cols * h + y0)
        all_e.append(cols * h + y1)
    if not all_s:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty.copy()
    return np.concatenate(all_s), np.concatenate(all_e)
