"""Cycle model for a systolic-array accelerator with a streaming rule generator.

The rule generator consumes coordinates row-band by row-band. For a 3x3
stride-1 layer, candidate output row R draws contributors from input rows
R-1, R, R+1. Four pipelined stages process each band:

  1. alignment       streams every contributing entry into the band
  2. row merge       collapses contributors to distinct columns
  3. dilation check  ORs the per-entry dilation flags of each merged column
  4. column dilation expands flagged columns by one and unions the centers

A band costs the max over stages of (ops x per-op latency); bands overlap,
so mapping time is the sum of band costs. Stage ops per band: alignment
streams each contributor once, the other three stages each touch every
merged column once. Strided layers (2x2 stride-2 conv and its transpose)
use the same alignment/merge accounting with no dilation stages.

GEMM time tiles each weight offset's gathered rows onto an
array_rows x array_cols systolic array: ceil(n_w / rows) * ceil(c_out / cols)
passes of c_in cycles each. The dense baseline runs every grid position
through the same array as one long pass plus a rows+cols pipeline fill.
Feature working sets beyond SRAM capacity stall one cycle per spilled
64-value line. At the network level, rule generation for a layer overlaps
the previous layer's GEMM; stalls never overlap.

Flops convention in reports: 2 * tuples * c_in * c_out + outputs * c_out.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .conv import Kernel, Rulebook, _assemble
from .errors import BadKernelShapeError, ShapeMismatchError
from .tensor import Coord
from .util import ceil_div

BYTES_PER_VALUE = 4
SPILL_LINE_VALUES = 64


@dataclass(frozen=True)
class AcceleratorConfig:
    array_rows: int = 64
    array_cols: int = 64
    sram_kbytes: int = 654
    lat_align: int = 1
    lat_merge: int = 1
    lat_dilate: int = 1
    lat_expand: int = 1

    @property
    def sram_values(self) -> int:
        return self.sram_kbytes * 1024 // BYTES_PER_VALUE


@dataclass(frozen=True)
class MappingStats:
    """Streaming rule-generation work, summed over row bands."""

    bands: int
    alignment: int
    row_merge: int
    dilation_check: int
    column_dilation: int
    cycles: int  # sum over bands of the slowest stage


ZERO_MAPPING = MappingStats(0, 0, 0, 0, 0, 0)


def _coords_2d(coords) -> np.ndarray:
    a = np.asarray(coords, dtype=np.int64)
    if a.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    if a.ndim != 2 or a.shape[1] != 2:
        raise ShapeMismatchError(f"coords must be (n, 2), got {a.shape}")
    return a


def generate_rules_pipelined(
    height: int,
    width: int,
    coords,
    flags,
    k: Kernel,
    cfg: AcceleratorConfig | None = None,
) -> tuple[Rulebook, MappingStats]:
    """Streaming selective-dilation rule generation for a 3x3 stride-1 kernel.

    `coords` is the sorted active set, `flags` marks the entries whose
    neighborhoods dilate. Flags all False reproduces the submanifold
    rulebook, all True the full sparse one. Returns the rulebook (canonical
    tuple order) and the mapping-stage statistics.
    """
    if (k.k_h, k.k_w, k.stride) != (3, 3, 1):
        raise BadKernelShapeError("pipelined rule generation needs a 3x3 stride-1 kernel")
    cfg = cfg or AcceleratorConfig()
    pts = _coords_2d(coords)
    n = pts.shape[0]
    fl = np.asarray(flags, dtype=bool)
    if fl.shape != (n,):
        raise ShapeMismatchError(f"flags shape {fl.shape} for {n} entries")
    if n == 0:
        return _assemble([], [], height, width), ZERO_MAPPING

    rows = pts[:, 0]
    cols = pts[:, 1]
    row_values = np.unique(rows)
    row_start = np.searchsorted(rows, row_values, side="left")
    row_end = np.searchsorted(rows, row_values, side="right")
    row_slice = {int(r): (int(s), int(e)) for r, s, e in zip(row_values, row_start, row_end)}

    cand = sorted(
        {int(r) + d for r in row_values for d in (-1, 0, 1) if 0 <= int(r) + d < height}
    )
    triples: list[tuple[int, int, int]] = []
    out_coords: list[Coord] = []
    align_total = merge_total = cycles = 0
    for band_row in cand:
        # merged columns of this band, and which entries feed each
        merged: dict[int, list[tuple[int, int]]] = {}
        center: set[int] = set()
        dilate: set[int] = set()
        n_contrib = 0
        for roff in (-1, 0, 1):
            r_in = band_row + roff
            if r_in not in row_slice:
                continue
            s, e = row_slice[r_in]
            n_contrib += e - s
            for idx in range(s, e):
                c = int(cols[idx])
                merged.setdefault(c, []).append((idx, roff))
                if roff == 0:
                    center.add(c)
                if fl[idx]:
                    dilate.add(c)
        out_cols: set[int] = set(center)
        for m in dilate:
            for dc in (-1, 0, 1):
                tc = m + dc
                if 0 <= tc < width:
                    out_cols.add(tc)
        col_index = {tc: len(out_coords) + i for i, tc in enumerate(sorted(out_cols))}
        out_coords.extend((band_row, tc) for tc in sorted(out_cols))
        for m, entries in merged.items():
            for dc in (-1, 0, 1):
                tc = m + dc
                oi = col_index.get(tc)
                if oi is None:
                    continue
                for idx, roff in entries:
                    # offset = output - input, so dr = -roff
                    w = (1 - roff) * 3 + (dc + 1)
                    triples.append((idx, w, oi))
        n_merged = len(merged)
        align_total += n_contrib
        merge_total += n_merged
        cycles += max(
            n_contrib * cfg.lat_align,
            n_merged * cfg.lat_merge,
            n_merged * cfg.lat_dilate,
            n_merged * cfg.lat_expand,
        )
    stats = MappingStats(len(cand), align_total, merge_total, merge_total, merge_total, cycles)
    return _assemble(triples, out_coords, height, width), stats


def mapping_stats_strided(coords, kind: str, cfg: AcceleratorConfig | None = None) -> MappingStats:
    """Alignment and merge work for 2x2 stride-2 layers.

    Downsampling bands are output rows fed by two input rows; transposed
    bands are the two output rows each input row feeds, with every merged
    column expanding to two output columns (counted as column dilation).
    """
    cfg = cfg or AcceleratorConfig()
    pts = _coords_2d(coords)
    if pts.shape[0] == 0:
        return ZERO_MAPPING
    if kind == "downsample":
        band_of = pts[:, 0] // 2
        col_of = pts[:, 1] // 2
        expand = False
    elif kind == "deconv":
        band_of = np.repeat(pts[:, 0], 2) * 2 + np.tile([0, 1], pts.shape[0])
        col_of = np.repeat(pts[:, 1], 2)
        expand = True
    else:
        raise ShapeMismatchError(f"unknown strided kind {kind!r}")
    bands = np.unique(band_of)
    align_total = merge_total = cycles = 0
    for b in bands:
        mask = band_of == b
        n_contrib = int(mask.sum())
        n_merged = int(np.unique(col_of[mask]).size)
        align_total += n_contrib
        merge_total += n_merged
        stage_costs = [n_contrib * cfg.lat_align, n_merged * cfg.lat_merge]
        if expand:
            stage_costs.append(n_merged * cfg.lat_expand)
        cycles += max(stage_costs)
    expand_total = merge_total if expand else 0
    return MappingStats(len(bands), align_total, merge_total, 0, expand_total, cycles)


def _mapping_stats_1x1(coords, cfg: AcceleratorConfig) -> MappingStats:
    # 1x1 layers stream each row band through alignment and merge untouched
    pts = _coords_2d(coords)
    if pts.shape[0] == 0:
        return ZERO_MAPPING
    _, counts = np.unique(pts[:, 0], return_counts=True)
    per_band = [int(c) for c in counts]
    cycles = sum(max(c * cfg.lat_align, c * cfg.lat_merge) for c in per_band)
    total = int(sum(per_band))
    return MappingStats(len(per_band), total, total, 0, 0, cycles)


# -- cycle accounting ----------------------------------------------------------


def gemm_cycles_sparse(
    n_per_offset: Sequence[int], c_in: int, c_out: int, cfg: AcceleratorConfig
) -> int:
    """Tiled gather-matmul passes, one group per weight offset."""
    total = 0
    col_tiles = ceil_div(c_out, cfg.array_cols)
    for n_w in n_per_offset:
        if n_w:
            total += ceil_div(int(n_w), cfg.array_rows) * col_tiles * c_in
    return total


def dense_baseline_cycles(
    positions: int, taps: int, c_in: int, c_out: int, cfg: AcceleratorConfig
) -> int:
    """One long systolic pass over every grid position, plus pipeline fill."""
    tiles = ceil_div(positions, cfg.array_rows) * ceil_div(c_out, cfg.array_cols)
    return tiles * taps * c_in + cfg.array_rows + cfg.array_cols


def stall_cycles(
    n_in: int, n_out: int, taps: int, c_in: int, c_out: int, cfg: AcceleratorConfig
) -> int:
    """One cycle per spilled 64-value line of the layer's working set."""
    working = n_in * c_in + n_out * c_out + taps * c_in * c_out + c_out
    spill = max(0, working - cfg.sram_values)
    return ceil_div(spill, SPILL_LINE_VALUES)


@dataclass(frozen=True)
class LayerCycles:
    layer_id: str
    mode: str
    mapping: MappingStats
    gemm: int
    stall: int
    dense_baseline: int
    flops: int

    @property
    def total(self) -> int:
        return self.mapping.cycles + self.gemm + self.stall


@dataclass(frozen=True)
class NetworkCycles:
    layers: tuple[LayerCycles, ...]
    mapping: int
    gemm: int
    stall: int
    total: int  # with mapping/GEMM overlap across layers
    dense_total: int
    speedup: float
    ideal_flops_ratio: float


def simulate_layer(trace, cfg: AcceleratorConfig | None = None) -> LayerCycles:
    """Cycle cost of one traced layer.

    Dense-mode layers cost exactly their dense baseline (no mapping, no
    stall), so an all-dense network simulates to speedup 1.
    """
    cfg = cfg or AcceleratorConfig()
    dense = dense_baseline_cycles(
        trace.dense_positions, trace.dense_taps, trace.c_in, trace.c_out, cfg
    )
    if trace.mode.value == "dense":
        return LayerCycles(trace.layer_id, trace.mode.value, ZERO_MAPPING, dense, 0, dense, trace.flops)
    if trace.kind in ("downsample", "deconv"):
        mapping = mapping_stats_strided(trace.in_coords, trace.kind, cfg)
    elif (trace.k_h, trace.k_w) == (1, 1):
        mapping = _mapping_stats_1x1(trace.in_coords, cfg)
    else:
        probe = Kernel(
            3, 3, 1, 1, 1,
            np.zeros((9, 1, 1), dtype=np.float32),
            np.zeros(1, dtype=np.float32),
        )
        _, mapping = generate_rules_pipelined(
            trace.in_h, trace.in_w, trace.in_coords, trace.flags, probe, cfg
        )
    gemm = gemm_cycles_sparse(trace.n_per_offset, trace.c_in, trace.c_out, cfg)
    n_in = trace.in_coords.shape[0]
    stall = stall_cycles(
        n_in, trace.n_out, trace.k_h * trace.k_w, trace.c_in, trace.c_out, cfg
    )
    return LayerCycles(trace.layer_id, trace.mode.value, mapping, gemm, stall, dense, trace.flops)


def simulate_network(traces: Sequence, cfg: AcceleratorConfig | None = None) -> NetworkCycles:
    """Simulate traced layers in execution order.

    Total time overlaps each layer's rule generation with the previous
    layer's GEMM: mapping_1 + sum(max(mapping_i, gemm_{i-1})) + gemm_last,
    plus all stalls.
    """
    cfg = cfg or AcceleratorConfig()
    per = [simulate_layer(tr, cfg) for tr in traces]
    if not per:
        return NetworkCycles((), 0, 0, 0, 0, 0, 1.0, 1.0)
    mapping_sum = sum(p.mapping.cycles for p in per)
    gemm_sum = sum(p.gemm for p in per)
    stall_sum = sum(p.stall for p in per)
    total = per[0].mapping.cycles
    for prev, cur in zip(per, per[1:]):
        total += max(cur.mapping.cycles, prev.gemm)
    total += per[-1].gemm + stall_sum
    dense_total = sum(p.dense_baseline for p in per)
    sparse_flops = sum(p.flops for p in per)
    dense_flops = sum(
        tr.dense_positions * (2 * tr.dense_taps * tr.c_in * tr.c_out + tr.c_out)
        for tr in traces
    )
    speedup = dense_total / total if total else float("inf")
    ideal = dense_flops / sparse_flops if sparse_flops else float("inf")
    return NetworkCycles(
        tuple(per), mapping_sum, gemm_sum, stall_sum, total, dense_total, speedup, ideal
    )


def cycles_to_dict(net: NetworkCycles) -> dict:
    """JSON-ready report of a simulated network."""
    return {
        "layers": [
            {
                "layer_id": p.layer_id,
                "mode": p.mode,
                "bands": p.mapping.bands,
                "alignment": p.mapping.alignment,
                "row_merge": p.mapping.row_merge,
                "dilation_check": p.mapping.dilation_check,
                "column_dilation": p.mapping.column_dilation,
                "mapping_cycles": p.mapping.cycles,
                "gemm_cycles": p.gemm,
                "stall_cycles": p.stall,
                "total_cycles": p.total,
                "dense_baseline_cycles": p.dense_baseline,
                "flops": p.flops,
            }
            for p in net.layers
        ],
        "mapping_cycles": net.mapping,
        "gemm_cycles": net.gemm,
        "stall_cycles": net.stall,
        "total_cycles": net.total,
        "dense_total_cycles": net.dense_total,
        "speedup_vs_dense": net.speedup,
        "ideal_flops_ratio": net.ideal_flops_ratio,
    }
