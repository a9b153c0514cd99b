"""Block, halo and external-memory volume geometry for overlapped tiling.

2D stencils are blocked along x and streamed along y; 3D stencils are
blocked along x and y and streamed along z.  Spatial block ``b`` in a blocked
dimension starts ``size_halo`` cells before its compute region, so block 0
hangs off the low edge of the grid::

    |<- halo ->|<------- csize ------->|<- halo ->|
    b*csize - halo       b*csize        (b+1)*csize     (b+1)*csize + halo

After the last PE only the compute regions are valid, and those are
consecutive and disjoint.  Cells of a spatial block that fall outside
``[0, dim)`` are never read from or written to external memory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .stencils import SIZE_CELL, StencilSpec

# Block-start alignment granule in words; padding by par_time % 8 targets it.
ALIGN_WORDS = 8


class InvalidConfig(ValueError):
    pass


@dataclass(frozen=True)
class BlockingConfig:
    bsize_x: int
    par_vec: int
    par_time: int
    bsize_y: int | None = None

    def __post_init__(self):
        for name in ("bsize_x", "par_vec", "par_time"):
            if int(getattr(self, name)) < 1:
                raise InvalidConfig(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.bsize_y is not None and self.bsize_y < 1:
            raise InvalidConfig(f"bsize_y must be >= 1, got {self.bsize_y}")

    def block_sizes(self, rank: int) -> tuple[int, ...]:
        """Block size per blocked dimension (x, then y for 3D)."""
        if rank == 2:
            return (self.bsize_x,)
        return (self.bsize_x, self.bsize_y if self.bsize_y is not None else self.bsize_x)

    def to_dict(self) -> dict:
        d = {"bsize_x": self.bsize_x, "par_vec": self.par_vec, "par_time": self.par_time}
        if self.bsize_y is not None:
            d["bsize_y"] = self.bsize_y
        return d


def halo_width(rad: int, par_time: int) -> int:
    return rad * par_time


def compute_block_size(bsize: int, size_halo: int) -> int:
    csize = bsize - 2 * size_halo
    if csize <= 0:
        raise InvalidConfig(
            f"compute block is empty: bsize {bsize} - 2 x halo {size_halo} = {csize}"
        )
    return csize


def block_count(dim: int, csize: int) -> int:
    if csize < 1:
        raise InvalidConfig(f"csize must be >= 1, got {csize}")
    return -(-dim // csize)


def traversed(bnum: int, csize: int, size_halo: int) -> int:
    return bnum * csize + 2 * size_halo


def shift_register_size(rank: int, rad: int, bsize_x: int, bsize_y: int | None, par_vec: int) -> int:
    """On-chip shift-register length in cells for one PE."""
    if rank == 2:
        return 2 * rad * bsize_x + par_vec
    return 2 * rad * bsize_x * bsize_y + par_vec


def block_span(b: int, csize: int, size_halo: int, bsize: int) -> tuple[int, int]:
    """Half-open cell interval covered by spatial block ``b``."""
    start = b * csize - size_halo
    return start, start + bsize


def compute_span(b: int, csize: int) -> tuple[int, int]:
    return b * csize, (b + 1) * csize


def clip(span: tuple[int, int], dim: int) -> tuple[int, int]:
    lo, hi = max(span[0], 0), min(span[1], dim)
    return lo, max(lo, hi)


def inbound_extent_sum(dim: int, bsize: int, size_halo: int) -> int:
    """Sum over all blocks of the in-bound length of each block span."""
    csize = compute_block_size(bsize, size_halo)
    total = 0
    for b in range(block_count(dim, csize)):
        lo, hi = clip(block_span(b, csize, size_halo, bsize), dim)
        total += hi - lo
    return total


@dataclass(frozen=True)
class TilingGeometry:
    rank: int
    dims: tuple[int, ...]
    size_halo: int
    csize: tuple[int, ...]   # per blocked dimension
    bnum: tuple[int, ...]
    trav: tuple[int, ...]
    sr_size: int
    size_input: int
    t_cell: int
    t_read: int
    t_write: int

    @property
    def num_blocks(self) -> int:
        return math.prod(self.bnum)

    @property
    def streamed_dim(self) -> int:
        return self.dims[-1]


def tiling_geometry(dims: Sequence[int], spec: StencilSpec, config: BlockingConfig) -> TilingGeometry:
    dims = tuple(int(d) for d in dims)
    if len(dims) != spec.rank:
        raise InvalidConfig(f"{spec.name} is {spec.rank}D, got dims {dims}")
    halo = halo_width(spec.rad, config.par_time)
    bsizes = config.block_sizes(spec.rank)
    csize = tuple(compute_block_size(bs, halo) for bs in bsizes)
    bnum = tuple(block_count(d, c) for d, c in zip(dims, csize))
    trav = tuple(traversed(n, c, halo) for n, c in zip(bnum, csize))
    streamed = dims[-1]
    t_cell = math.prod(n * bs for n, bs in zip(bnum, bsizes)) * streamed
    inbound = math.prod(inbound_extent_sum(d, bs, halo) for d, bs in zip(dims, bsizes))
    size_input = math.prod(dims)
    sr = shift_register_size(spec.rank, spec.rad, bsizes[0], bsizes[-1], config.par_vec)
    return TilingGeometry(
        rank=spec.rank, dims=dims, size_halo=halo, csize=csize, bnum=bnum, trav=trav,
        sr_size=sr, size_input=size_input, t_cell=t_cell,
        t_read=inbound * streamed * spec.num_read,
        t_write=size_input * spec.num_write,
    )


def read_write_volumes(dims: Sequence[int], spec: StencilSpec, config: BlockingConfig) -> tuple[int, int, int]:
    """``(t_cell, t_read, t_write)`` for one pass over the grid."""
    g = tiling_geometry(dims, spec, config)
    return g.t_cell, g.t_read, g.t_write


def lumped_read_volume(dims: Sequence[int], spec: StencilSpec, config: BlockingConfig) -> int:
    """2D read volume by lumped subtraction of ``(trav_x - dim_x)`` columns.

    Agrees with the per-block clipping in :func:`tiling_geometry` whenever
    only the first and last blocks cross the grid edge.
    """
    if spec.rank != 2:
        raise ValueError("the lumped out-of-bound formula is 2D only")
    g = tiling_geometry(dims, spec, config)
    dim_x, dim_y = g.dims
    return (g.t_cell - (g.trav[0] - dim_x) * dim_y) * spec.num_read


@dataclass(frozen=True)
class AlignmentPlan:
    pad_words: int
    fully_aligned: bool


def alignment_plan(config: BlockingConfig, size_cell: int = SIZE_CELL) -> AlignmentPlan:
    if size_cell != SIZE_CELL:
        raise ValueError("alignment rule is defined for 4-byte cells only")
    return AlignmentPlan(pad_words=config.par_time % 8, fully_aligned=config.par_time % 4 == 0)


def unaligned_block_starts(dims: Sequence[int], spec: StencilSpec, config: BlockingConfig) -> int:
    """Blocks per pass whose x start is off the alignment granule.

    A block's start address is its span start shifted by the
    ``alignment_plan(config).pad_words`` words of buffer padding.
    """
    g = tiling_geometry(dims, spec, config)
    pad = alignment_plan(config).pad_words
    count = sum(1 for b in range(g.bnum[0])
                if (b * g.csize[0] - g.size_halo + pad) % ALIGN_WORDS)
    rows_of_blocks = g.bnum[1] if spec.rank == 3 else 1
    return count * rows_of_blocks


@dataclass(frozen=True)
class Violation:
    rule: str
    message: str
    severity: str = "error"   # "error" or "warning"

    def __str__(self):
        return f"{self.severity}: [{self.rule}] {self.message}"


def _pow2(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def validate_config(config: BlockingConfig, spec: StencilSpec, dims: Sequence[int] | None = None,
                    device=None) -> list[Violation]:
    """Check a configuration against the parameter-tuning rules.

    Structural rules are errors; the par_time-multiple-of-four preference,
    dims that are not multiples of csize and block widths that are not a
    multiple of the device's memory alignment width are warnings.
    """
    out: list[Violation] = []
    bsizes = config.block_sizes(spec.rank)
    if not _pow2(config.par_vec):
        out.append(Violation("par_vec_pow2", f"par_vec {config.par_vec} is not a power of two"))
    for axis, bs in zip("xy", bsizes):
        if not _pow2(bs):
            out.append(Violation("bsize_pow2", f"bsize_{axis} {bs} is not a power of two"))
    if config.bsize_x % config.par_vec:
        out.append(Violation("bsize_x_div_par_vec",
                             f"bsize_x {config.bsize_x} is not divisible by par_vec {config.par_vec}"))
    if spec.rank == 3 and config.bsize_y is not None and config.bsize_y != config.bsize_x:
        out.append(Violation("square_blocks_3d",
                             f"3D blocks must be square, got {config.bsize_x} x {config.bsize_y}"))
    if spec.rank == 2 and config.bsize_y is not None:
        out.append(Violation("bsize_y_unused", "bsize_y is ignored for 2D stencils (y is streamed)",
                             "warning"))
    halo = halo_width(spec.rad, config.par_time)
    csizes = []
    for axis, bs in zip("xy", bsizes):
        cs = bs - 2 * halo
        csizes.append(cs)
        if cs < 1:
            out.append(Violation("csize_positive",
                                 f"csize_{axis} = {bs} - 2 x {halo} = {cs} leaves no valid computation"))
    if config.par_time % 4:
        out.append(Violation("par_time_mult4",
                             f"par_time {config.par_time} is not a multiple of four; "
                             "some block starts will be unaligned", "warning"))
    if dims is not None:
        dims = tuple(dims)
        if len(dims) != spec.rank:
            out.append(Violation("dims_rank", f"{spec.name} is {spec.rank}D, got dims {dims}"))
        elif any(d < 1 for d in dims):
            out.append(Violation("dims_positive", f"all dims must be >= 1, got {dims}"))
        else:
            for axis, d, cs in zip("xy", dims, csizes):
                if cs >= 1 and d % cs:
                    out.append(Violation("dim_mult_csize",
                                         f"dim_{axis} {d} is not a multiple of csize_{axis} {cs}",
                                         "warning"))
    if device is not None:
        words = device.align_width // (8 * SIZE_CELL)
        if config.bsize_x % words:
            out.append(Violation("bsize_x_align",
                                 f"bsize_x {config.bsize_x} is not a multiple of {device.align_width} bits",
                                 "warning"))
    return out


def errors(violations: list[Violation]) -> list[Violation]:
    return [v for v in violations if v.severity == "error"]


def require_valid(config: BlockingConfig, spec: StencilSpec, dims=None, device=None) -> list[Violation]:
    """Raise :class:`InvalidConfig` on any error; return the warnings."""
    found = validate_config(config, spec, dims, device)
    bad = errors(found)
    if bad:
        raise InvalidConfig("; ".join(str(v) for v in bad))
    return found
