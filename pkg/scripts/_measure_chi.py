"""Dev probe: bond dimension and build cost vs svd_tol / dt / dim."""
import time

from pulseforge.bath import BathConfig, SpectralDensity, influence_coefficients
import pulseforge.process_tensor as ptm
from pulseforge.process_tensor import PTBuildConfig

sd = SpectralDensity(0.027, 2.2)
cfg = BathConfig(4.0)
kernels = {}


def probe(tol, n_steps, eigs, dt, n_c):
    if (dt, n_c) not in kernels:
        kernels[(dt, n_c)] = influence_coefficients(sd, cfg, dt, n_c)
    k = kernels[(dt, n_c)]
    t0 = time.time()
    pt = ptm.build_process_tensor(
        k, PTBuildConfig(dt=dt, n_steps=n_steps, n_c=n_c,
                         coupling_eigs=eigs, svd_tol=tol, max_bond=4096))
    el = time.time() - t0
    b = pt.bonds
    print(f"d={len(eigs)} dt={dt} n_c={n_c} tol={tol:g} N={n_steps}: {el:.0f}s "
          f"maxbond={max(b)} tail_ms_per_step={1000 * el / n_steps:.0f}", flush=True)


two = (0.0, 1.0)
three = (0.0, 1.0, 2.0)
probe(1e-6, 420, two, 0.01, 300)
probe(1e-7, 420, two, 0.01, 300)
probe(1e-5, 380, three, 0.01, 300)
probe(1e-6, 380, three, 0.01, 300)
probe(1e-6, 400, two, 0.02, 150)
probe(1e-7, 400, two, 0.02, 150)
probe(1e-6, 350, three, 0.02, 150)
probe(1e-8, 380, two, 0.01, 300)
print("ALL DONE", flush=True)
