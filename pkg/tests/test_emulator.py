import numpy as np
import pytest

from stencilblock.emulator import (
    EmulationCounters,
    blocks,
    collapsed_iteration_count,
    emulate,
    emulate_block,
    valid_region,
)
from stencilblock.geometry import BlockingConfig, InvalidConfig, tiling_geometry
from stencilblock.stencils import Grid, StencilError, load_stencil, reference_run

D2D = load_stencil("diffusion2d")
H2D = load_stencil("hotspot2d")
D3D = load_stencil("diffusion3d")
H3D = load_stencil("hotspot3d")


def same_bits(a, b):
    return np.array_equal(a.view(np.uint32), b.view(np.uint32))


def inputs(spec, dims, seed=0):
    g = Grid.random(dims, seed)
    return g, (Grid.random(dims, seed + 1) if spec.has_aux_grid else None)


def test_valid_region_shrinks_by_rad():
    assert valid_region((-12, 244), 0, 1, 696) == (0, 244)
    assert valid_region((220, 476), 3, 1, 696) == (223, 473)
    assert valid_region((452, 708), 12, 1, 696) == (464, 696)


def test_valid_region_exhausted():
    with pytest.raises(InvalidConfig):
        valid_region((0, 10), 5, 1, 100)


def test_single_block_matches_reference_inside_compute_region():
    cfg = BlockingConfig(32, 1, 2)
    g, _ = inputs(D2D, (64, 64))
    sl, values, counters = emulate_block(D2D, g.data, None, (0,), cfg, 2)
    ref = reference_run(D2D, g, None, 2).data
    assert sl[1] == slice(0, 28)
    assert same_bits(values, ref[:, 0:28])
    assert counters.ext_reads == 30 * 64
    assert counters.ext_writes == 28 * 64


def test_active_pes_bounds():
    g, _ = inputs(D2D, (64, 64))
    with pytest.raises(ValueError):
        emulate_block(D2D, g.data, None, (0,), BlockingConfig(32, 1, 2), 3)


def test_block_order_x_fastest():
    geom = tiling_geometry((48, 48, 48), D3D, BlockingConfig(16, 2, 3, 16))
    order = blocks(geom)
    assert order[:3] == [(0, 0), (1, 0), (2, 0)]
    assert len(order) == geom.num_blocks == 25


def test_3d_partial_last_pass():
    cfg = BlockingConfig(16, 2, 3, 16)
    g, _ = inputs(D3D, (48, 48, 48), 5)
    out, c = emulate(D3D, g, cfg, 7)
    assert c.passes == 3
    assert c.forwarded_cells > 0
    assert same_bits(out.data, reference_run(D3D, g, None, 7).data)
    geom = tiling_geometry((48, 48, 48), D3D, cfg)
    assert c.ext_reads == 3 * geom.t_read
    assert c.ext_writes == 3 * geom.t_write


def test_full_pass_forwards_nothing():
    g, _ = inputs(D2D, (64, 40))
    _, c = emulate(D2D, g, BlockingConfig(32, 2, 4), 8)
    assert c.forwarded_cells == 0
    assert c.redundant_updates > 0


@pytest.mark.parametrize("name", ["diffusion2d", "hotspot2d", "diffusion3d", "hotspot3d"])
def test_dims_not_multiple_of_csize(name):
    spec = load_stencil(name)
    dims = (101, 37) if spec.rank == 2 else (29, 27, 25)
    cfg = BlockingConfig(32, 4, 3, 32 if spec.rank == 3 else None)
    g, aux = inputs(spec, dims, 9)
    out, c = emulate(spec, g, cfg, 5, aux)
    assert same_bits(out.data, reference_run(spec, g, aux, 5).data)
    geom = tiling_geometry(dims, spec, cfg)
    assert (c.ext_reads, c.ext_writes) == (2 * geom.t_read, 2 * geom.t_write)


def test_dry_run_equals_full_run_counters(any_stencil):
    dims = (70, 33) if any_stencil.rank == 2 else (30, 26, 20)
    cfg = BlockingConfig(16, 2, 2, 16 if any_stencil.rank == 3 else None)
    g, aux = inputs(any_stencil, dims)
    _, full = emulate(any_stencil, g, cfg, 5, aux)
    none, dry = emulate(any_stencil, None, cfg, 5, dims=dims, dry_run=True)
    assert none is None
    assert dry == full


def test_order_and_workers_do_not_change_result():
    cfg = BlockingConfig(32, 2, 4)
    g, aux = inputs(H2D, (120, 50), 3)
    geom = tiling_geometry((120, 50), H2D, cfg)
    base, c0 = emulate(H2D, g, cfg, 6, aux)
    rev, c1 = emulate(H2D, g, cfg, 6, aux, order=list(reversed(blocks(geom))))
    par, c2 = emulate(H2D, g, cfg, 6, aux, workers=4)
    assert same_bits(base.data, rev.data) and same_bits(base.data, par.data)
    assert c0 == c1 == c2


def test_order_must_be_permutation():
    cfg = BlockingConfig(32, 2, 4)
    g, _ = inputs(D2D, (120, 50))
    with pytest.raises(ValueError):
        emulate(D2D, g, cfg, 2, order=[(0,), (1,)])


def test_config_invariance():
    g, aux = inputs(H3D, (40, 36, 30), 4)
    ref = reference_run(H3D, g, aux, 8).data
    for cfg in (BlockingConfig(16, 1, 1, 16), BlockingConfig(32, 4, 4, 32), BlockingConfig(64, 2, 8, 64)):
        out, _ = emulate(H3D, g, cfg, 8, aux)
        assert same_bits(out.data, ref)


def test_zero_iterations_copies_grid():
    g, _ = inputs(D2D, (40, 40))
    out, c = emulate(D2D, g, BlockingConfig(16, 1, 2), 0)
    assert np.array_equal(out.data, g.data) and out.data is not g.data
    assert c == EmulationCounters()


def test_input_errors():
    cfg = BlockingConfig(16, 1, 2)
    with pytest.raises(ValueError):
        emulate(D2D, None, cfg, 2)
    with pytest.raises(StencilError):
        emulate(H2D, Grid.zeros((20, 20)), cfg, 2)
    with pytest.raises(InvalidConfig):
        emulate(D2D, Grid.zeros((20, 20)), BlockingConfig(16, 3, 2), 2)


def test_unaligned_counter_accumulates():
    _, c = emulate(D2D, None, BlockingConfig(4096, 8, 6), 12, dims=(16336, 16336), dry_run=True)
    assert c.passes == 2
    assert c.unaligned_block_starts > 0 and c.unaligned_block_starts % 2 == 0
    _, c = emulate(D2D, None, BlockingConfig(4096, 8, 36), 72, dims=(16096, 16096), dry_run=True)
    assert c.unaligned_block_starts == 0


def test_collapsed_iteration_count():
    cfg = BlockingConfig(4096, 8, 36)
    assert collapsed_iteration_count(cfg, (16096, 16096), D2D) == 4 * 512 * 16132
    cfg3 = BlockingConfig(256, 16, 12, 256)
    assert collapsed_iteration_count(cfg3, (696, 696, 696), D3D) == 9 * 4096 * 708
