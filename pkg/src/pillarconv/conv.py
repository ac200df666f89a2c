"""Sparse 2D convolution via rulebooks, plus exact dense oracles.

A rulebook is the list of (input_index, weight_index, output_index) tuples a
sparse convolution executes: gather the input feature vector, multiply by the
weight slice for that kernel offset, scatter-add into the output entry. The
builders here differ only in which output set they commit to:

* submanifold: outputs exactly the active inputs, so the active set never
  grows with depth;
* full sparse: outputs everywhere any input reaches (the dilation union,
  clipped to the grid);
* selective: outputs at every active input plus the full dilation
  neighborhoods of a selected subset. With nothing selected this is the
  submanifold rulebook, with everything selected it is the full sparse one.

Offset conventions. For odd stride-1 kernels (the only stride-1 form) weight
index w enumerates centered offsets (dr, dc) in row-major order, and a tuple
pairs input i with output o exactly when coord(o) - coord(i) = offset(w).
The only strided form is the 2x2/stride-2 pair: the downsampling convolution
sends input (r, c) to output (r // 2, c // 2) under weight offset
(r % 2, c % 2), and the transposed convolution sends input (r, c) to the four
outputs (2r + dr, 2c + dc), clipped to the output bounds. Stride-1 output
positions use same padding; positions reached outside the grid are dropped.

Tuples are stored sorted by (output_index, weight_index, input_index) and
execution accumulates in exactly that order per output, so results are
bit-for-bit reproducible. Products accumulate in float64 and round to float32
once at the end.

FLOPs convention: flops = 2 * n_tuples * c_in * c_out + n_outputs * c_out.
Every multiply-accumulate counts as two operations and every output entry
pays one bias add per channel, whether or not the bias is zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import (
    BadKernelShapeError,
    FormatError,
    SelectionNotSubsetError,
    ShapeMismatchError,
    StrideUnsupportedError,
    UnsortedInputError,
)
from .tensor import FEATURE_DTYPE, Coord, DenseGrid, PillarTensor
from .util import fmt_float


# -- kernels -----------------------------------------------------------------


@dataclass(frozen=True)
class Kernel:
    """Convolution weights: (k_h * k_w, c_in, c_out) plus a (c_out,) bias.

    Supported shapes: odd k_h x k_w at stride 1, and 2x2 at stride 2.
    """

    k_h: int
    k_w: int
    c_in: int
    c_out: int
    stride: int
    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self) -> None:
        if self.stride == 1:
            if self.k_h < 1 or self.k_w < 1 or self.k_h % 2 == 0 or self.k_w % 2 == 0:
                raise BadKernelShapeError(
                    f"stride-1 kernels must be odd, got {self.k_h}x{self.k_w}"
                )
        elif self.stride == 2:
            if (self.k_h, self.k_w) != (2, 2):
                raise BadKernelShapeError(
                    f"stride-2 kernels must be 2x2, got {self.k_h}x{self.k_w}"
                )
        else:
            raise StrideUnsupportedError(f"stride {self.stride} not supported")
        w = np.ascontiguousarray(self.weights, dtype=FEATURE_DTYPE)
        b = np.ascontiguousarray(self.bias, dtype=FEATURE_DTYPE)
        if w.shape != (self.k_h * self.k_w, self.c_in, self.c_out):
            raise ShapeMismatchError(
                f"weights shape {w.shape}, expected "
                f"{(self.k_h * self.k_w, self.c_in, self.c_out)}"
            )
        if b.shape != (self.c_out,):
            raise ShapeMismatchError(f"bias shape {b.shape}, expected ({self.c_out},)")
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def taps(self) -> int:
        return self.k_h * self.k_w

    @cached_property
    def offsets(self) -> tuple[Coord, ...]:
        """Weight offsets in weight-index order.

        Centered for stride 1, raw {0,1}x{0,1} for the 2x2 stride-2 form.
        """
        if self.stride == 1:
            ph, pw = self.k_h // 2, self.k_w // 2
            return tuple(
                (dr, dc)
                for dr in range(-ph, ph + 1)
                for dc in range(-pw, pw + 1)
            )
        return ((0, 0), (0, 1), (1, 0), (1, 1))

    @staticmethod
    def seeded(
        k_h: int,
        k_w: int,
        c_in: int,
        c_out: int,
        stride: int = 1,
        seed: int = 0,
        scale: float | None = None,
        bias_scale: float = 0.0,
    ) -> "Kernel":
        """Deterministic pseudorandom kernel (Philox counter-based stream).

        Weights are normal with std 1/sqrt(taps * c_in) unless `scale` is
        given; bias is normal * bias_scale (zero bias by default).
        """
        rng = np.random.Generator(np.random.Philox(key=seed))
        if scale is None:
            scale = 1.0 / np.sqrt(k_h * k_w * c_in)
        w = rng.standard_normal((k_h * k_w, c_in, c_out)) * scale
        b = rng.standard_normal(c_out) * bias_scale
        return Kernel(k_h, k_w, c_in, c_out, stride, w, b)

    @staticmethod
    def identity(channels: int) -> "Kernel":
        """1x1 stride-1 kernel that passes features through unchanged."""
        w = np.eye(channels, dtype=FEATURE_DTYPE).reshape(1, channels, channels)
        return Kernel(1, 1, channels, channels, 1, w, np.zeros(channels))


# -- rulebooks ---------------------------------------------------------------


@dataclass(frozen=True)
class Rulebook:
    """Gather-multiply-scatter plan for one sparse convolution.

    Parallel arrays of (input_index, weight_index, output_index), sorted by
    (output, weight, input). `output_coords` is the sorted unique output set;
    indices refer into it and into the input tensor's entry order.
    """

    in_idx: np.ndarray
    w_idx: np.ndarray
    out_idx: np.ndarray
    output_coords: tuple[Coord, ...]
    out_height: int
    out_width: int

    def __post_init__(self) -> None:
        for name in ("in_idx", "w_idx", "out_idx"):
            a = np.ascontiguousarray(getattr(self, name), dtype=np.int64)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        n = self.in_idx.size
        if self.w_idx.size != n or self.out_idx.size != n:
            raise ShapeMismatchError("rulebook arrays must have equal length")

    @property
    def n_tuples(self) -> int:
        return int(self.in_idx.size)

    @property
    def n_outputs(self) -> int:
        return len(self.output_coords)

    def tuple_set(self) -> set[tuple[int, int, int]]:
        return set(zip(self.in_idx.tolist(), self.w_idx.tolist(), self.out_idx.tolist()))

    def tuples_per_offset(self, taps: int) -> np.ndarray:
        return np.bincount(self.w_idx, minlength=taps).astype(np.int64)

    def same_tuples(self, other: "Rulebook") -> bool:
        """Set equality of tuples (canonical sort makes it array equality)."""
        return (
            self.output_coords == other.output_coords
            and np.array_equal(self.in_idx, other.in_idx)
            and np.array_equal(self.w_idx, other.w_idx)
            and np.array_equal(self.out_idx, other.out_idx)
        )


def _assemble(
    triples: list[tuple[int, int, int]],
    out_coords: list[Coord],
    out_h: int,
    out_w: int,
) -> Rulebook:
    """Sort tuples canonically and freeze them into a Rulebook."""
    n = len(triples)
    in_idx = np.fromiter((t[0] for t in triples), dtype=np.int64, count=n)
    w_idx = np.fromiter((t[1] for t in triples), dtype=np.int64, count=n)
    out_idx = np.fromiter((t[2] for t in triples), dtype=np.int64, count=n)
    if n:
        order = np.lexsort((in_idx, w_idx, out_idx))
        in_idx, w_idx, out_idx = in_idx[order], w_idx[order], out_idx[order]
    return Rulebook(in_idx, w_idx, out_idx, tuple(out_coords), out_h, out_w)


def _require_stride1(k: Kernel, op: str) -> None:
    if k.stride != 1:
        raise StrideUnsupportedError(f"{op} requires stride 1, got {k.stride}")


def build_rulebook_subm(
    active: Sequence[Coord], k: Kernel, bounds: tuple[int, int] | None = None
) -> Rulebook:
    """Submanifold rulebook: outputs exactly the active set.

    A tuple (i, w, o) exists iff both ends are active and
    coord(o) - coord(i) = offset(w). Bounds never affect the tuple set; they
    only record the output grid dims (inferred from the coords if omitted).
    """
    _require_stride1(k, "submanifold convolution")
    if any(a >= b for a, b in zip(active, active[1:])):
        raise UnsortedInputError("submanifold builder needs row-major sorted coords")
    index = {c: i for i, c in enumerate(active)}
    triples: list[tuple[int, int, int]] = []
    for w, (dr, dc) in enumerate(k.offsets):
        for i, (r, c) in enumerate(active):
            o = index.get((r + dr, c + dc))
            if o is not None:
                triples.append((i, w, o))
    if bounds is None:
        bounds = (
            max((r for r, _ in active), default=0) + 1,
            max((c for _, c in active), default=0) + 1,
        )
    return _assemble(triples, list(active), bounds[0], bounds[1])


def build_rulebook_sparse(
    active: Sequence[Coord], k: Kernel, out_bounds: tuple[int, int]
) -> Rulebook:
    """Dilating sparse rulebook: outputs everywhere any input reaches.

    Stride 1 uses same padding (output grid = input grid); positions landing
    outside `out_bounds` are dropped. Stride 2 maps input (r, c) to output
    ((r - dr) / 2, (c - dc) / 2) for the offset of matching parity.
    """
    out_h, out_w = out_bounds
    reach: list[tuple[Coord, int, int]] = []  # (out coord, w, input index)
    if k.stride == 1:
        for w, (dr, dc) in enumerate(k.offsets):
            for i, (r, c) in enumerate(active):
                orow, ocol = r + dr, c + dc
                if 0 <= orow < out_h and 0 <= ocol < out_w:
                    reach.append(((orow, ocol), w, i))
    else:
        for i, (r, c) in enumerate(active):
            orow, ocol = r // 2, c // 2
            if orow < out_h and ocol < out_w:
                w = (r % 2) * 2 + (c % 2)
                reach.append(((orow, ocol), w, i))
    out_coords = sorted({rc for rc, _, _ in reach})
    out_index = {rc: j for j, rc in enumerate(out_coords)}
    triples = [(i, w, out_index[rc]) for rc, w, i in reach]
    return _assemble(triples, out_coords, out_h, out_w)


def build_rulebook_downsample2x2(
    active: Sequence[Coord], k: Kernel, in_bounds: tuple[int, int]
) -> Rulebook:
    """2x2 stride-2 downsampling convolution.

    Output grid is ceil(h/2) x ceil(w/2); each input contributes one tuple at
    (r // 2, c // 2) with weight offset (r % 2, c % 2).
    """
    if (k.k_h, k.k_w, k.stride) != (2, 2, 2):
        raise BadKernelShapeError("downsample needs a 2x2 stride-2 kernel")
    h, w = in_bounds
    out_h, out_w = (h + 1) // 2, (w + 1) // 2
    return build_rulebook_sparse(active, k, (out_h, out_w))


def build_rulebook_deconv2x2(
    active: Sequence[Coord], k: Kernel, out_bounds: tuple[int, int]
) -> Rulebook:
    """2x2 stride-2 transposed convolution.

    Input (r, c) produces outputs (2r + dr, 2c + dc) for each weight offset,
    clipped to `out_bounds`.
    """
    if (k.k_h, k.k_w, k.stride) != (2, 2, 2):
        raise BadKernelShapeError("deconv needs a 2x2 stride-2 kernel")
    out_h, out_w = out_bounds
    reach: list[tuple[Coord, int, int]] = []
    for w, (dr, dc) in enumerate(k.offsets):
        for i, (r, c) in enumerate(active):
            orow, ocol = 2 * r + dr, 2 * c + dc
            if orow < out_h and ocol < out_w:
                reach.append(((orow, ocol), w, i))
    out_coords = sorted({rc for rc, _, _ in reach})
    out_index = {rc: j for j, rc in enumerate(out_coords)}
    triples = [(i, w, out_index[rc]) for rc, w, i in reach]
    return _assemble(triples, out_coords, out_h, out_w)


def build_rulebook_selective(
    active: Sequence[Coord],
    selected: Iterable[Coord],
    k: Kernel,
    out_bounds: tuple[int, int],
) -> Rulebook:
    """Selectively dilated rulebook.

    Output set = active union the clipped kernel neighborhoods of the
    selected pillars. Tuples pair every active input with every output in
    kernel reach, so outputs created by a neighbor's dilation still receive
    contributions from non-selected inputs.
    """
    _require_stride1(k, "selective dilation")
    out_h, out_w = out_bounds
    active_set = set(active)
    sel = set(selected)
    extra = sel - active_set
    if extra:
        raise SelectionNotSubsetError(f"selected coords not active: {sorted(extra)[:4]}")
    out_set = set(active)
    for r, c in sel:
        for dr, dc in k.offsets:
            orow, ocol = r + dr, c + dc
            if 0 <= orow < out_h and 0 <= ocol < out_w:
                out_set.add((orow, ocol))
    out_coords = sorted(out_set)
    out_index = {rc: j for j, rc in enumerate(out_coords)}
    triples: list[tuple[int, int, int]] = []
    for w, (dr, dc) in enumerate(k.offsets):
        for i, (r, c) in enumerate(active):
            o = out_index.get((r + dr, c + dc))
            if o is not None:
                triples.append((i, w, o))
    return _assemble(triples, out_coords, out_h, out_w)


# -- execution ---------------------------------------------------------------


def execute_rulebook(rb: Rulebook, t: PillarTensor, k: Kernel) -> PillarTensor:
    """Run gather-multiply-scatter over the rulebook.

    Accumulates in float64 in canonical tuple order per output, adds bias,
    rounds to float32. Output tensor lives on the rulebook's output grid.
    """
    if t.channels != k.c_in:
        raise ShapeMismatchError(f"input has {t.channels} channels, kernel wants {k.c_in}")
    if rb.n_tuples:
        if int(rb.in_idx.max()) >= t.n_active:
            raise ShapeMismatchError("rulebook input index out of range for this tensor")
        if int(rb.w_idx.max()) >= k.taps:
            raise ShapeMismatchError("rulebook weight index out of range for this kernel")
    acc = np.zeros((rb.n_outputs, k.c_out), dtype=np.float64)
    feats = t.features.astype(np.float64)
    weights = k.weights.astype(np.float64)
    # per-offset passes in ascending w preserve the canonical (w, input)
    # accumulation order for every output
    for w in range(k.taps):
        mask = rb.w_idx == w
        if not mask.any():
            continue
        contrib = feats[rb.in_idx[mask]] @ weights[w]
        np.add.at(acc, rb.out_idx[mask], contrib)
    acc += k.bias.astype(np.float64)
    out = acc.astype(FEATURE_DTYPE)
    if rb.n_outputs == 0:
        out = np.zeros((0, k.c_out), dtype=FEATURE_DTYPE)
    return PillarTensor(rb.out_height, rb.out_width, k.c_out, rb.output_coords, out)


def flops_of_rulebook(rb: Rulebook, c_in: int, c_out: int) -> int:
    """flops = 2 * tuples * c_in * c_out + outputs * c_out (bias adds)."""
    return 2 * rb.n_tuples * c_in * c_out + rb.n_outputs * c_out


# -- dense oracles -----------------------------------------------------------


def dense_conv_oracle(g: DenseGrid, k: Kernel) -> DenseGrid:
    """Dense convolution with the exact conventions of the sparse builders.

    Stride 1: same padding, out[o] = sum_w in[o - offset(w)] @ W[w] + bias.
    Stride 2 (2x2): out[(R, C)] = sum_{dr,dc} in[(2R+dr, 2C+dc)] @ W + bias
    on a ceil(h/2) x ceil(w/2) grid. No sparsity shortcuts: every output
    position is computed.
    """
    if g.channels != k.c_in:
        raise ShapeMismatchError(f"grid has {g.channels} channels, kernel wants {k.c_in}")
    h, w = g.height, g.width
    data = g.data.astype(np.float64)
    weights = k.weights.astype(np.float64)
    if k.stride == 1:
        out = np.zeros((h, w, k.c_out), dtype=np.float64)
        for wi, (dr, dc) in enumerate(k.offsets):
            # output rows R with R - dr inside the grid
            r0, r1 = max(0, dr), min(h, h + dr)
            c0, c1 = max(0, dc), min(w, w + dc)
            if r0 >= r1 or c0 >= c1:
                continue
            src = data[r0 - dr : r1 - dr, c0 - dc : c1 - dc]
            out[r0:r1, c0:c1] += src @ weights[wi]
    else:
        out_h, out_w = (h + 1) // 2, (w + 1) // 2
        out = np.zeros((out_h, out_w, k.c_out), dtype=np.float64)
        for wi, (dr, dc) in enumerate(k.offsets):
            src = data[dr::2, dc::2]
            out[: src.shape[0], : src.shape[1]] += src @ weights[wi]
    out += k.bias.astype(np.float64)
    return DenseGrid(out.astype(FEATURE_DTYPE))


def dense_deconv_oracle(g: DenseGrid, k: Kernel, out_bounds: tuple[int, int] | None = None) -> DenseGrid:
    """Dense 2x2 stride-2 transposed convolution (default output 2h x 2w)."""
    if g.channels != k.c_in:
        raise ShapeMismatchError(f"grid has {g.channels} channels, kernel wants {k.c_in}")
    if (k.k_h, k.k_w, k.stride) != (2, 2, 2):
        raise BadKernelShapeError("deconv oracle needs a 2x2 stride-2 kernel")
    out_h, out_w = out_bounds or (2 * g.height, 2 * g.width)
    data = g.data.astype(np.float64)
    weights = k.weights.astype(np.float64)
    out = np.zeros((out_h, out_w, k.c_out), dtype=np.float64)
    for wi, (dr, dc) in enumerate(k.offsets):
        dst = out[dr::2, dc::2]
        src = data[: dst.shape[0], : dst.shape[1]]
        dst[: src.shape[0], : src.shape[1]] += src @ weights[wi]
    out += k.bias.astype(np.float64)
    return DenseGrid(out.astype(FEATURE_DTYPE))


def dense_conv_reference(g: DenseGrid, k: Kernel) -> DenseGrid:
    """Scalar-loop reference convolution, small grids only.

    Same math as dense_conv_oracle written as six nested loops, kept as an
    independent cross-check of the vectorized oracle.
    """
    h, w = g.height, g.width
    if k.stride == 1:
        out_h, out_w = h, w
    else:
        out_h, out_w = (h + 1) // 2, (w + 1) // 2
    out = np.zeros((out_h, out_w, k.c_out), dtype=np.float64)
    for orow in range(out_h):
        for ocol in range(out_w):
            for wi, (dr, dc) in enumerate(k.offsets):
                if k.stride == 1:
                    r, c = orow - dr, ocol - dc
                else:
                    r, c = 2 * orow + dr, 2 * ocol + dc
                if not (0 <= r < h and 0 <= c < w):
                    continue
                for ci in range(k.c_in):
                    v = float(g.data[r, c, ci])
                    for co in range(k.c_out):
                        out[orow, ocol, co] += v * float(k.weights[wi, ci, co])
            for co in range(k.c_out):
                out[orow, ocol, co] += float(k.bias[co])
    return DenseGrid(out.astype(FEATURE_DTYPE))


# -- KRN v1 text I/O ---------------------------------------------------------

KRN_MAGIC = "KRN v1"


def write_krn(k: Kernel, f: TextIO) -> None:
    """KRN v1: header, one line of c_out weights per (offset, c_in), one bias line."""
    f.write(f"{KRN_MAGIC} {k.k_h} {k.k_w} {k.c_in} {k.c_out} {k.stride}\n")
    for w in range(k.taps):
        for ci in range(k.c_in):
            f.write(" ".join(fmt_float(v) for v in k.weights[w, ci]) + "\n")
    f.write(" ".join(fmt_float(v) for v in k.bias) + "\n")


def save_krn(k: Kernel, path: str) -> None:
    with open(path, "w") as f:
        write_krn(k, f)


def read_krn(f: TextIO) -> Kernel:
    header = f.readline()
    parts = header.split()
    if len(parts) != 7 or " ".join(parts[:2]) != KRN_MAGIC:
        raise FormatError(f"bad KRN header: {header!r}")
    try:
        k_h, k_w, c_in, c_out, stride = (int(x) for x in parts[2:])
    except ValueError as e:
        raise FormatError(f"bad KRN header numbers: {header!r}") from e
    weights = np.zeros((k_h * k_w, c_in, c_out), dtype=FEATURE_DTYPE)
    for w in range(k_h * k_w):
        for ci in range(c_in):
            tok = f.readline().split()
            if len(tok) != c_out:
                raise FormatError(f"KRN weight line has {len(tok)} values, expected {c_out}")
            weights[w, ci] = [float(x) for x in tok]
    tok = f.readline().split()
    if len(tok) != c_out:
        raise FormatError(f"KRN bias line has {len(tok)} values, expected {c_out}")
    bias = np.array([float(x) for x in tok], dtype=FEATURE_DTYPE)
    return Kernel(k_h, k_w, c_in, c_out, stride, weights, bias)


def load_krn(path: str) -> Kernel:
    with open(path) as f:
        return read_krn(f)
