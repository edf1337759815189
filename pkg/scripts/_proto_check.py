"""Prototype validation: brute-force path-sum vs PT contraction (dev aid)."""
import itertools
import time

import numpy as np

from pulseforge.bath import BathConfig, InfluenceKernel, SpectralDensity, influence_coefficients
from pulseforge.process_tensor import PTBuildConfig, build_process_tensor, pt_diagnostics


def liouville(u):
    return np.kron(u, u.conj())


def brute_force(kernel, eigs, props, rho0vec, n_steps, n_c, upto=None):
    n = np.asarray(eigs, float)
    d_nu = (n[:, None] - n[None, :]).ravel()
    s_nu = (n[:, None] + n[None, :]).ravel()
    D = len(d_nu)
    eta = kernel.eta
    upto = n_steps if upto is None else upto

    def gate(k, later, earlier):
        return np.exp(-d_nu[later] * (eta[k].real * d_nu[earlier] + 1j * eta[k].imag * s_nu[earlier]))

    rho = np.zeros(D, complex)
    x0 = props[0] @ rho0vec
    for path in itertools.product(range(D), repeat=upto):
        w = 1.0 + 0j
        for idx in range(upto):
            nn = idx + 1
            for k in range(0, min(nn - 1, n_c) + 1):
                w *= gate(k, path[idx], path[idx - k])
        amp = x0[path[0]]
        for idx in range(1, upto):
            amp *= props[idx][path[idx], path[idx - 1]]
        rho[path[upto - 1]] += amp * w
    return props_half_apply(rho, props, upto)


def props_half_apply(rho, props, upto):
    return props[upto] @ rho


def contract(pt, props, rho0vec, upto=None):
    upto = pt.n_steps if upto is None else upto
    x = props[0] @ rho0vec
    f = x[None, :]
    for i in range(upto):
        f = np.einsum("bvc,bv->cv", pt.sites[i], f)
        if i < upto - 1:
            f = np.einsum("uv,bv->bu", props[i + 1], f)
    closed = pt.caps[upto] @ f
    return props[upto] @ closed


def main():
    rng = np.random.default_rng(7)
    sd = SpectralDensity(0.4, 2.2)  # strong coupling to stress truncation
    cfg = BathConfig(6.0)
    dt = 0.2
    for eigs, n_steps, n_c in [((0.0, 1.0), 6, 3), ((0.0, 1.0, 2.0), 4, 2), ((0.0, 1.0), 5, 10)]:
        kernel = influence_coefficients(sd, cfg, dt, max(n_c, 1))
        pt = build_process_tensor(kernel, PTBuildConfig(dt=dt, n_steps=n_steps, n_c=kernel.n_c, coupling_eigs=eigs))
        d = len(eigs)
        D = d * d
        props = []
        for i in range(n_steps + 1):
            h = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            h = h + h.conj().T
            w, v = np.linalg.eigh(h)
            u = v @ np.diag(np.exp(-1j * w * dt)) @ v.conj().T
            props.append(liouville(u))
        rho0 = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        rho0 = rho0 @ rho0.conj().T
        rho0 /= np.trace(rho0)
        bf = brute_force(kernel, eigs, props, rho0.ravel(), n_steps, kernel.n_c)
        ct = contract(pt, props, rho0.ravel())
        err = np.max(np.abs(bf - ct))
        print(f"eigs={eigs} N={n_steps} n_c={kernel.n_c}: max|bf-pt| = {err:.3e}")
        # mid-chain caps
        for m in (1, n_steps - 1):
            bfm = brute_force(kernel, eigs, props, rho0.ravel(), n_steps, kernel.n_c, upto=m)
            ctm = contract(pt, props, rho0.ravel(), upto=m)
            print(f"   caps at m={m}: {np.max(np.abs(bfm - ctm)):.3e}")

    # timing probe at paper parameters, two-level
    sd = SpectralDensity(0.027, 2.2)
    cfgT = BathConfig(4.0)
    t0 = time.time()
    kernel = influence_coefficients(sd, cfgT, 0.01, 300)
    pt = build_process_tensor(kernel, PTBuildConfig(dt=0.01, n_steps=3000, n_c=300, coupling_eigs=(0.0, 1.0)))
    print("2lvl T=4 dt=0.01 N=3000 n_c=300:", time.time() - t0, "s")
    diag = pt_diagnostics(pt)
    print("max bond:", diag["max_bond"], "converged_at:", diag["converged_at"],
          "unique sites:", diag["n_unique_sites"], "cap0:", pt.caps[0])


if __name__ == "__main__":
    main()
