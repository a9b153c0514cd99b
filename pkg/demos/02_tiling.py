"""Spatial blocks, halos and how much memory traffic a pass costs."""
from stencilblock import BlockingConfig, load_stencil, tiling_geometry
from stencilblock.geometry import alignment_plan, block_span, compute_span, validate_config

spec = load_stencil("diffusion2d")
cfg = BlockingConfig(bsize_x=4096, par_vec=8, par_time=36)
geom = tiling_geometry((16096, 16096), spec, cfg)
print(geom)

for b in range(geom.bnum[0]):
    print(b, "span", block_span(b, geom.csize[0], geom.size_halo, cfg.bsize_x),
          "computes", compute_span(b, geom.csize[0]))

# reads per pass vs reads an unblocked sweep would need
print("read overhead %.2f%%" % (100 * (geom.t_read / geom.size_input - 1)))

# more temporal parallelism means a wider halo and more redundant work
for pt in (4, 12, 36, 72, 200):
    g = tiling_geometry((16096, 16096), spec, BlockingConfig(4096, 8, pt))
    print(f"par_time {pt:3d}  csize {g.csize[0]}  blocks {g.bnum[0]}  redundancy {g.t_cell / g.size_input:.3f}")

# alignment: par_time not a multiple of four leaves block starts off the memory granule
for pt in (4, 6, 36):
    print(pt, alignment_plan(BlockingConfig(4096, 8, pt)))

for v in validate_config(BlockingConfig(4096, 3, 6), spec, (16000, 16000)):
    print(v)
