"""Sparse pillar feature maps on a 2D grid.

A pillar map stores only its active cells: a sorted list of (row, col)
coordinates, each paired with a fixed-length feature vector. Activeness is
membership, not value: an entry whose features are all zero is still active,
and stays active through elementwise ops. The dense mirror of a map is a
row-major (height, width, channels) array with zeros at inactive cells.

Entries are kept sorted by (row, col) ascending and coordinates are unique.
Constructors validate both properties; `from_entries` sorts for you.

Text form (PLT v1)::

    PLT v1 <height> <width> <channels> <n>
    <row> <col> <c0> <c1> ... <c{channels-1}>
    ...

one line per entry, values in scientific notation with 9 significant digits
(exact float32 round-trip). The reader rejects unsorted or duplicate
coordinates rather than repairing them.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import (
    BadVectorLengthError,
    DuplicateCoordError,
    FormatError,
    OutOfBoundsError,
    ShapeMismatchError,
)
from .util import fmt_float

Coord = tuple[int, int]

FEATURE_DTYPE = np.float32


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DenseGrid:
    """Dense (height, width, channels) float32 array, row-major."""

    data: np.ndarray

    def __post_init__(self) -> None:
        if self.data.ndim != 3:
            raise ShapeMismatchError(f"dense grid must be 3-d, got shape {self.data.shape}")
        d = np.ascontiguousarray(self.data, dtype=FEATURE_DTYPE)
        object.__setattr__(self, "data", _freeze(d))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class PillarTensor:
    """Sparse pillar map: sorted unique coords plus an (n, channels) feature array."""

    height: int
    width: int
    channels: int
    coords: tuple[Coord, ...]
    features: np.ndarray

    def __post_init__(self) -> None:
        if self.height <= 0 or self.width <= 0 or self.channels <= 0:
            raise ShapeMismatchError("height, width and channels must be positive")
        feats = np.ascontiguousarray(self.features, dtype=FEATURE_DTYPE)
        if feats.shape != (len(self.coords), self.channels):
            raise BadVectorLengthError(
                f"feature array shape {feats.shape} does not match "
                f"{len(self.coords)} entries x {self.channels} channels"
            )
        validate_coords(self.height, self.width, self.coords)
        object.__setattr__(self, "features", _freeze(feats))

    # -- basic queries ------------------------------------------------------

    @property
    def n_active(self) -> int:
        return len(self.coords)

    def density(self) -> float:
        return self.n_active / (self.height * self.width)

    @cached_property
    def index_of(self) -> dict[Coord, int]:
        """Coordinate -> entry index lookup."""
        return {c: i for i, c in enumerate(self.coords)}

    def entries(self) -> Iterable[tuple[Coord, np.ndarray]]:
        for i, c in enumerate(self.coords):
            yield c, self.features[i]

    def with_features(self, features: np.ndarray) -> "PillarTensor":
        """Same active set, new feature values (shape must match)."""
        return PillarTensor(self.height, self.width, self.channels, self.coords, features)

    # -- dense conversion ---------------------------------------------------

    def to_dense(self) -> DenseGrid:
        grid = np.zeros((self.height, self.width, self.channels), dtype=FEATURE_DTYPE)
        if self.coords:
            rows = np.fromiter((c[0] for c in self.coords), dtype=np.int64, count=self.n_active)
            cols = np.fromiter((c[1] for c in self.coords), dtype=np.int64, count=self.n_active)
            grid[rows, cols] = self.features
        return DenseGrid(grid)


def validate_coords(height: int, width: int, coords: Sequence[Coord]) -> None:
    """Assert coords are in bounds, unique, and sorted row-major. O(n)."""
    prev: Coord | None = None
    for c in coords:
        r, k = c
        if not (0 <= r < height and 0 <= k < width):
            raise OutOfBoundsError(f"coordinate {c} outside {height}x{width} grid")
        if prev is not None:
            if c == prev:
                raise DuplicateCoordError(f"duplicate coordinate {c}")
            if c < prev:
                raise ShapeMismatchError(f"coordinates not sorted: {c} after {prev}")
        prev = c


def from_entries(
    height: int,
    width: int,
    channels: int,
    entries: Iterable[tuple[Coord, Sequence[float]]],
) -> PillarTensor:
    """Build a tensor from (coord, vector) pairs in any order.

    Entries are sorted row-major. Raises OutOfBoundsError, DuplicateCoordError
    or BadVectorLengthError on bad input.
    """
    items = list(entries)
    for coord, vec in items:
        r, c = coord
        if not (0 <= r < height and 0 <= c < width):
            raise OutOfBoundsError(f"coordinate {coord} outside {height}x{width} grid")
        if len(vec) != channels:
            raise BadVectorLengthError(
                f"entry at {coord} has {len(vec)} values, expected {channels}"
            )
    items.sort(key=lambda e: e[0])
    for (a, _), (b, _) in zip(items, items[1:]):
        if a == b:
            raise DuplicateCoordError(f"duplicate coordinate {a}")
    coords = tuple(coord for coord, _ in items)
    feats = np.array([vec for _, vec in items], dtype=FEATURE_DTYPE)
    feats = feats.reshape(len(items), channels)
    return PillarTensor(height, width, channels, coords, feats)


def from_dense(grid: DenseGrid) -> PillarTensor:
    """Active set = cells with at least one nonzero channel."""
    mask = np.any(grid.data != 0, axis=2)
    idx = np.argwhere(mask)
    coords = tuple((int(r), int(c)) for r, c in idx)
    feats = grid.data[mask] if coords else np.zeros((0, grid.channels), dtype=FEATURE_DTYPE)
    return PillarTensor(grid.height, grid.width, grid.channels, coords, feats)


def empty(height: int, width: int, channels: int) -> PillarTensor:
    return PillarTensor(
        height, width, channels, (), np.zeros((0, channels), dtype=FEATURE_DTYPE)
    )


def concat_channels(tensors: Sequence[PillarTensor]) -> PillarTensor:
    """Channel-wise concatenation over the union of active sets.

    All tensors must share grid dims. Where a tensor has no entry for a
    coordinate in the union, its channel block is zero-filled.
    """
    if not tensors:
        raise ShapeMismatchError("concat_channels needs at least one tensor")
    h, w = tensors[0].height, tensors[0].width
    for t in tensors[1:]:
        if (t.height, t.width) != (h, w):
            raise ShapeMismatchError(
                f"grid mismatch in concat: {(t.height, t.width)} vs {(h, w)}"
            )
    union = sorted(set().union(*(t.coords for t in tensors)))
    total_c = sum(t.channels for t in tensors)
    out = np.zeros((len(union), total_c), dtype=FEATURE_DTYPE)
    offset = 0
    for t in tensors:
        pos = t.index_of
        for j, coord in enumerate(union):
            i = pos.get(coord)
            if i is not None:
                out[j, offset : offset + t.channels] = t.features[i]
        offset += t.channels
    return PillarTensor(h, w, total_c, tuple(union), out)


# -- PLT v1 text I/O --------------------------------------------------------

PLT_MAGIC = "PLT v1"


def write_plt(t: PillarTensor, f: TextIO) -> None:
    f.write(f"{PLT_MAGIC} {t.height} {t.width} {t.channels} {t.n_active}\n")
    for (r, c), vec in t.entries():
        vals = " ".join(fmt_float(v) for v in vec)
        f.write(f"{r} {c} {vals}\n")


def save_plt(t: PillarTensor, path: str) -> None:
    with open(path, "w") as f:
        write_plt(t, f)


def read_plt(f: TextIO) -> PillarTensor:
    """Parse PLT v1. Rejects unsorted or duplicate coordinates."""
    header = f.readline()
    parts = header.split()
    if len(parts) != 6 or " ".join(parts[:2]) != PLT_MAGIC:
        raise FormatError(f"bad PLT header: {header!r}")
    try:
        h, w, c, n = (int(x) for x in parts[2:])
    except ValueError as e:
        raise FormatError(f"bad PLT header numbers: {header!r}") from e
    coords: list[Coord] = []
    feats = np.zeros((n, c), dtype=FEATURE_DTYPE)
    prev: Coord | None = None
    for i in range(n):
        line = f.readline()
        if not line:
            raise FormatError(f"PLT truncated: expected {n} entries, got {i}")
        tok = line.split()
        if len(tok) != 2 + c:
            raise FormatError(f"PLT entry {i} has {len(tok) - 2} values, expected {c}")
        coord = (int(tok[0]), int(tok[1]))
        if not (0 <= coord[0] < h and 0 <= coord[1] < w):
            raise FormatError(f"PLT entry {i} coordinate {coord} outside {h}x{w} grid")
        if prev is not None and coord <= prev:
            kind = "duplicate" if coord == prev else "unsorted"
            raise FormatError(f"PLT entry {i} is {kind}: {coord} after {prev}")
        prev = coord
        coords.append(coord)
        feats[i] = [float(x) for x in tok[2:]]
    rest = f.read().strip()
    if rest:
        raise FormatError(f"PLT has content after {n} entries: {rest[:40]!r}")
    return PillarTensor(h, w, c, tuple(coords), feats)


def load_plt(path: str) -> PillarTensor:
    with open(path) as f:
        return read_plt(f)
