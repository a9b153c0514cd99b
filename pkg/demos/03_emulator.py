"""Functional emulation of the blocked PE chain, checked against the reference."""
import time

import numpy as np

from stencilblock import BlockingConfig, Grid, emulate, load_stencil, reference_run, tiling_geometry

spec = load_stencil("hotspot2d")
dims = (150, 97)
cfg = BlockingConfig(64, 4, 4)
grid, power = Grid.random(dims, 42), Grid.random(dims, 43)

t0 = time.perf_counter()
out, counters = emulate(spec, grid, cfg, iterations=7, aux=power)
print("emulated in %.3f s" % (time.perf_counter() - t0))

ref = reference_run(spec, grid, power, 7)
print("bitwise equal:", np.array_equal(out.data.view(np.uint32), ref.data.view(np.uint32)))
print(counters)

geom = tiling_geometry(dims, spec, cfg)
print("ext_reads == passes * t_read:", counters.ext_reads == counters.passes * geom.t_read)

# 7 iterations on 4 PEs: the second pass forwards through one idle PE
print("forwarded cells", counters.forwarded_cells)

# counters for a large grid without touching any data
_, big = emulate(load_stencil("diffusion2d"), None, BlockingConfig(4096, 8, 36), 1000,
                 dims=(16096, 16096), dry_run=True)
print(big.to_dict())
