"""Block-level functional emulation of the temporally blocked PE chain.

Each pass streams every spatial block through ``par_time`` PEs.  PE ``k``
advances the whole block span by one time-step, but only cells inside
``valid_region(span, k)`` hold correct values; the rest is redundant halo
work.  Positions outside the grid are fed a quiet-NaN sentinel instead of
being read from storage, and the span edges see the sentinel as their
missing neighbours, so invalid data grows inwards by ``rad`` cells per PE.
Only the compute region is written back, and the emulator checks that no
sentinel ever reaches it.

The shift register is not simulated cycle by cycle: a block buffer holding
the PE's time-step is semantically the same sliding window.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from .geometry import (
    BlockingConfig,
    InvalidConfig,
    TilingGeometry,
    block_span,
    clip,
    compute_span,
    require_valid,
    tiling_geometry,
    unaligned_block_starts,
)
from .stencils import DTYPE, Grid, StencilError, StencilSpec, cell_update, clamp_index

SENTINEL = DTYPE(np.nan)


class SentinelLeak(RuntimeError):
    """A sentinel (out-of-bound) value reached a cell that is written back."""


@dataclass
class EmulationCounters:
    ext_reads: int = 0
    ext_writes: int = 0
    redundant_updates: int = 0
    oob_updates: int = 0
    forwarded_cells: int = 0
    passes: int = 0
    unaligned_block_starts: int = 0

    def __iadd__(self, other: "EmulationCounters"):
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))
        return self

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def valid_region(span: tuple[int, int], k: int, rad: int, dim: int) -> tuple[int, int]:
    """Cells of ``span`` holding correct values after PE ``k``, clipped to the grid."""
    lo, hi = clip((span[0] + rad * k, span[1] - rad * k), dim)
    if hi <= lo:
        raise InvalidConfig(f"no valid cells left in span {span} after {k} PEs")
    return lo, hi


@dataclass
class BlockPassState:
    """One block flowing through the PE chain."""

    block: tuple[int, ...]   # block index per blocked dimension (x first)
    spans: tuple[tuple[int, int], ...]
    buffer: np.ndarray   # block span at the time-step of the last active PE
    active_pe_count: int = 0


def _spans(geom: TilingGeometry, config: BlockingConfig, block: Sequence[int]):
    bsizes = config.block_sizes(geom.rank)
    spans = tuple(block_span(b, c, geom.size_halo, bs)
                  for b, c, bs in zip(block, geom.csize, bsizes))
    computes = tuple(compute_span(b, c) for b, c in zip(block, geom.csize))
    return spans, computes


def _block_counters(spec, geom, config, block, active_pes) -> EmulationCounters:
    """Counter delta for one block pass derived from geometry alone."""
    spans, computes = _spans(geom, config, block)
    streamed = geom.streamed_dim
    span_cells = math.prod(hi - lo for lo, hi in spans)
    inbound = math.prod(hi - lo for lo, hi in (clip(s, d) for s, d in zip(spans, geom.dims)))
    written = math.prod(hi - lo for lo, hi in (clip(c, d) for c, d in zip(computes, geom.dims)))
    return EmulationCounters(
        ext_reads=inbound * streamed * spec.num_read,
        ext_writes=written * streamed * spec.num_write,
        redundant_updates=active_pes * (inbound - written) * streamed,
        oob_updates=active_pes * (span_cells - inbound) * streamed,
        forwarded_cells=(config.par_time - active_pes) * span_cells * streamed,
    )


def _gather_index(span: tuple[int, int], dim: int, offset: int) -> np.ndarray:
    # Index into a span buffer padded by one sentinel cell on each side.
    # In-bound cells clamp at the grid edge; anything leaving the span hits padding.
    start, stop = span
    idx = np.empty(stop - start, dtype=np.intp)
    for j, g in enumerate(range(start, stop)):
        t = clamp_index(g + offset, dim) if 0 <= g < dim else g + offset
        local = t - start
        idx[j] = min(max(local, -1), stop - start) + 1
    return idx


def _load(src: np.ndarray, spans, dims) -> tuple[np.ndarray, int]:
    """Copy the in-bound part of the block spans into a sentinel-filled buffer."""
    nd = src.ndim
    shape = [0] * nd
    dst_sl = [slice(None)] * nd
    src_sl = [slice(None)] * nd
    shape[0] = src.shape[0]
    for i, (span, dim) in enumerate(zip(spans, dims)):
        axis = nd - 1 - i
        lo, hi = clip(span, dim)
        shape[axis] = span[1] - span[0]
        dst_sl[axis] = slice(lo - span[0], hi - span[0])
        src_sl[axis] = slice(lo, hi)
    buf = np.full(shape, SENTINEL, dtype=DTYPE)
    piece = src[tuple(src_sl)]
    buf[tuple(dst_sl)] = piece
    return buf, piece.size


def _region_slices(spans, regions, ndim) -> tuple[slice, ...]:
    sl = [slice(None)] * ndim
    for i, (span, (lo, hi)) in enumerate(zip(spans, regions)):
        sl[ndim - 1 - i] = slice(lo - span[0], hi - span[0])
    return tuple(sl)


def emulate_block(spec: StencilSpec, grid_t: np.ndarray, aux: np.ndarray | None,
                  block: Sequence[int], config: BlockingConfig, active_pes: int,
                  geom: TilingGeometry | None = None):
    """Run one spatial block through the PE chain.

    Returns ``(write_slices, values, counters)`` where ``values`` is the block's
    compute region (clipped to the grid) after ``active_pes`` time-steps and
    ``write_slices`` locates it in the global grid array.
    """
    if not 1 <= active_pes <= config.par_time:
        raise ValueError(f"active_pes must be in [1, {config.par_time}], got {active_pes}")
    dims = tuple(grid_t.shape[::-1])
    geom = geom or tiling_geometry(dims, spec, config)
    spans, computes = _spans(geom, config, block)
    nd = grid_t.ndim
    blocked = geom.rank - 1   # x for 2D, x and y for 3D

    buf, n_main = _load(grid_t, spans, dims)
    state = BlockPassState(tuple(block), spans, buf)
    n_aux = 0
    p = None
    if spec.has_aux_grid:
        p, n_aux = _load(aux, spans, dims)

    streamed = np.arange(grid_t.shape[0])
    sidx = {d: np.clip(streamed + d, 0, grid_t.shape[0] - 1) for d in (-1, 1)}
    bidx = [{d: _gather_index(spans[i], dims[i], d) for d in (-1, 1)} for i in range(blocked)]

    oob = np.zeros(buf.shape, dtype=bool)
    for i in range(blocked):
        axis = nd - 1 - i
        g = np.arange(*spans[i])
        mask = (g < 0) | (g >= dims[i])
        shape = [1] * nd
        shape[axis] = mask.size
        oob |= mask.reshape(shape)

    pad_width = [(0, 0)] * nd
    for i in range(blocked):
        pad_width[nd - 1 - i] = (1, 1)

    for k in range(1, active_pes + 1):
        padded = np.pad(buf, pad_width, mode="constant", constant_values=SENTINEL)
        core = [slice(1, -1) if w == (1, 1) else slice(None) for w in pad_width]

        def along(axis_i, d):
            axis = nd - 1 - axis_i
            sl = list(core)
            sl[axis] = bidx[axis_i][d]
            return padded[tuple(sl)]

        vals = {"c": buf, "w": along(0, -1), "e": along(0, +1)}
        if nd == 2:
            vals["n"] = buf[sidx[-1], :]
            vals["s"] = buf[sidx[+1], :]
        else:
            vals["n"] = along(1, -1)
            vals["s"] = along(1, +1)
            vals["b"] = buf[sidx[-1], :, :]
            vals["a"] = buf[sidx[+1], :, :]
        buf = cell_update(spec, vals, p)
        buf[oob] = SENTINEL
        state.buffer, state.active_pe_count = buf, k

        regions = [valid_region(spans[i], k, spec.rad, dims[i]) for i in range(blocked)]
        if np.isnan(buf[_region_slices(spans, regions, nd)]).any():
            raise SentinelLeak(f"sentinel inside valid region at PE {k}, block {tuple(block)}")

    written = [clip(c, d) for c, d in zip(computes, dims)]
    values = buf[_region_slices(spans, written, nd)]
    if np.isnan(values).any():
        raise SentinelLeak(f"sentinel in write region of block {tuple(block)}")

    out_sl = [slice(None)] * nd
    for i, (lo, hi) in enumerate(written):
        out_sl[nd - 1 - i] = slice(lo, hi)

    counters = _block_counters(spec, geom, config, block, active_pes)
    # reads measured from what was actually fetched, not from the formula
    counters.ext_reads = n_main + n_aux
    counters.ext_writes = values.size * spec.num_write
    return tuple(out_sl), values, counters


def blocks(geom: TilingGeometry) -> list[tuple[int, ...]]:
    """Block indices in processing order (x fastest, from the top-left block)."""
    return [tuple(reversed(ix)) for ix in product(*(range(n) for n in reversed(geom.bnum)))]


def emulate(spec: StencilSpec, grid: Grid | None, config: BlockingConfig, iterations: int,
            aux: Grid | None = None, dims: Sequence[int] | None = None,
            dry_run: bool = False, order: Iterable[tuple[int, ...]] | None = None,
            workers: int = 1) -> tuple[Grid | None, EmulationCounters]:
    """Run ``iterations`` time-steps in ``ceil(iterations / par_time)`` passes.

    With ``dry_run`` no cell data is touched (``grid`` may be None and
    ``dims`` must be given); only the counters are produced.  ``order``
    overrides the block order within each pass and ``workers`` > 1 processes
    the blocks of a pass on a thread pool; neither changes the result.
    """
    if iterations < 0:
        raise ValueError(f"iterations must be >= 0, got {iterations}")
    if grid is not None:
        if dims is not None and tuple(dims) != grid.dims:
            raise StencilError(f"dims {tuple(dims)} do not match grid dims {grid.dims}")
        dims = grid.dims
        if grid.rank != spec.rank:
            raise StencilError(f"{spec.name} is {spec.rank}D but the grid is {grid.rank}D")
    elif not dry_run:
        raise ValueError("a grid is required unless dry_run is set")
    if dims is None:
        raise ValueError("dims are required for a dry run")
    if not dry_run and spec.has_aux_grid:
        if aux is None or aux.dims != grid.dims:
            raise StencilError(f"{spec.name} needs a power grid with dims {grid.dims}")
    require_valid(config, spec, dims)
    geom = tiling_geometry(dims, spec, config)

    counters = EmulationCounters()
    if iterations == 0:
        return (grid.copy() if grid is not None else None), counters

    order = list(order) if order is not None else blocks(geom)
    if sorted(order) != sorted(blocks(geom)):
        raise ValueError("order must be a permutation of all blocks")
    passes = -(-iterations // config.par_time)
    misaligned = unaligned_block_starts(dims, spec, config)
    state = None if dry_run else grid.data.copy()
    aux_data = aux.data if (aux is not None and not dry_run) else None

    for n in range(passes):
        active = min(config.par_time, iterations - n * config.par_time)
        counters.passes += 1
        counters.unaligned_block_starts += misaligned
        if dry_run:
            for b in order:
                counters += _block_counters(spec, geom, config, b, active)
            continue
        nxt = np.empty_like(state)

        def run(b, src=state, active=active):
            return emulate_block(spec, src, aux_data, b, config, active, geom)

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(run, order))
        else:
            results = [run(b) for b in order]
        for sl, values, delta in results:
            nxt[sl] = values
            counters += delta
        state = nxt

    return (None if dry_run else Grid(state)), counters


def collapsed_iteration_count(config: BlockingConfig, dims: Sequence[int], spec: StencilSpec) -> int:
    """Trip count of the single collapsed loop for one pass.

    Each block pass runs ``bsize_x * bsize_y / par_vec`` iterations per row
    (2D) or plane (3D), over the streamed dimension plus ``size_halo`` extra
    rows/planes to drain the PE chain.
    """
    require_valid(config, spec, dims)
    geom = tiling_geometry(dims, spec, config)
    per_row = math.prod(config.block_sizes(spec.rank)) // config.par_vec
    return geom.num_blocks * per_row * (geom.streamed_dim + geom.size_halo)
