"""Design-space search on one device, then a calibrated projection onto a bigger one."""
from stencilblock import BlockingConfig, load_device, load_stencil
from stencilblock.tuner import (
    ProjectionSpec,
    SearchBounds,
    default_area,
    enumerate_candidates,
    project,
    rank_candidates,
)

spec = load_stencil("diffusion3d")
dev = load_device("arria-10-gx-1150")
dims = (696, 696, 696)

cands = enumerate_candidates(spec, dims, SearchBounds(256, 16, 12, min_bsize=64))
print(len(cands), "structurally valid configurations")
for c in rank_candidates(cands, spec, dev, dims, 1000, 300e6, default_area(spec, dev)):
    cfg = c.config
    print(f"{cfg.bsize_x:4d} {cfg.par_vec:3d} {cfg.par_time:3d}  {c.estimate.eff_gbps:8.3f} GB/s"
          f"  DSP {c.dsp_pct(dev):5.1f}%  BRAM {c.bram_pct(dev):5.1f}%")

# projection: the model is optimistic, so scale by a measured calibration factor
d2 = load_stencil("diffusion2d")
gx = load_device("stratix-10-gx-2800")
p = project(d2, ProjectionSpec(gx, 450e6, 0.8, 5000, (23736, 23736)),
            BlockingConfig(8192, 8, 140), default_area(d2, gx))
print("%.1f GB/s, %.1f GFLOP/s using %.1f GB/s (%.0f%% of peak)"
      % (p.estimate.eff_gbps, p.estimate.gflops, p.used_bandwidth, p.used_bandwidth_pct))
