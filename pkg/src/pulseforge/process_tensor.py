"""Builds, caches, and serializes the discrete-time process tensor encoding
the bath influence, independent of any driving protocol.

The influence functional over Liouville path variables nu_1..nu_N is

    F[{nu}] = prod_{n} prod_{k=0}^{min(n-1, n_c)} I_k(nu_n, nu_{n-k}),
    I_k(later, earlier) = exp(-d_later * (Re eta_k * d_earlier
                                          + 1j * Im eta_k * s_earlier)),

with d_nu = n_i - n_j and s_nu = n_i + n_j the coupling-eigenvalue difference
and sum of the Liouville index nu = (i, j).  F is represented as an MPS over
the path variables (site tensors diagonal in the physical system legs, so
each rank-4 site (bond, row, col, bond) is stored as its diagonal
(bond, nu, bond)).  The build walks the chain once; each step zips the comb
of lag-k gates into a sliding window of the last n_c sites, truncating by
SVD.  Because the bath is stationary, the emitted site tensors converge after
the transient and the bulk of the chain reuses a single converged tensor.

An auxiliary "dummy" path state with d = s = 0 rides along during the build:
routing all future steps through it terminates the influence exactly, which
yields the per-step closure (cap) vectors used for mid-chain state readout.
"""

from __future__ import annotations

import json
import logging
import struct
import time
from dataclasses import dataclass, field

import numpy as np

from ._linalg import CapacityError, svd_truncate
from .bath import InfluenceKernel
from .constants import DEFAULT_SVD_TOL

log = logging.getLogger("pulseforge")

MAGIC = b"PTC1"
FORMAT_VERSION = 1
INDEX_ORDER = "bond_in,system_diag,bond_out"


class PTFormatError(RuntimeError):
    """Malformed or truncated process-tensor cache file."""


class PTCompatibilityError(RuntimeError):
    """Cached process tensor does not match the requested run configuration."""


class NumericalError(RuntimeError):
    """Non-finite values encountered during a build or contraction."""


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash."""
    h = 0xCBF29CE484222325
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


@dataclass(frozen=True)
class PTBuildConfig:
    dt: float
    n_steps: int
    n_c: int
    coupling_eigs: tuple
    svd_tol: float = DEFAULT_SVD_TOL
    max_bond: int = 512

    def __post_init__(self):
        if not 0.0 < self.svd_tol < 1.0:
            raise ValueError(f"svd_tol must be in (0, 1), got {self.svd_tol}")
        if self.n_steps < 1 or self.n_c < 1:
            raise ValueError("n_steps and n_c must be >= 1")
        eigs = tuple(float(x) for x in self.coupling_eigs)
        object.__setattr__(self, "coupling_eigs", eigs)

    @property
    def dim(self) -> int:
        return len(self.coupling_eigs)


@dataclass
class ProcessTensor:
    """Immutable chain of diagonal influence site tensors plus closure caps.

    sites[i] has shape (bonds[i], d^2, bonds[i+1]) and acts at step i+1;
    caps[n] (length bonds[n]) closes the chain after n steps.  bonds[0] =
    bonds[N] = 1.
    """

    sites: list
    caps: list
    dt: float
    d: int
    n_c: int
    svd_tol: float
    coupling_eigs: tuple
    build_hash: int
    converged_at: int | None = None
    build_seconds: float = 0.0

    @property
    def n_steps(self) -> int:
        return len(self.sites)

    @property
    def bonds(self) -> list:
        return [s.shape[0] for s in self.sites] + [self.sites[-1].shape[2]]

    def site_rank4(self, i: int) -> np.ndarray:
        """Site i as the full rank-4 (bond, row, col, bond) tensor."""
        a = self.sites[i]
        chi_l, dsq, chi_r = a.shape
        out = np.zeros((chi_l, dsq, dsq, chi_r), dtype=complex)
        idx = np.arange(dsq)
        out[:, idx, idx, :] = a
        return out


def _liouville_coupling(coupling_eigs) -> tuple:
    n = np.asarray(coupling_eigs, dtype=float)
    d_nu = (n[:, None] - n[None, :]).ravel()
    s_nu = (n[:, None] + n[None, :]).ravel()
    # extended with the dummy termination channel (d = s = 0)
    return np.append(d_nu, 0.0), np.append(s_nu, 0.0)


def build_process_tensor(kernel: InfluenceKernel, cfg: PTBuildConfig) -> ProcessTensor:
    """Deterministic finite-memory build of the influence-functional MPS.

    The window of the last n_c sites is kept left-canonical; each step zips
    the new comb of gates in right-to-left (optimal truncation against the
    right-canonical zipped part), re-truncates left-to-right, and emits the
    completed leftmost site.  Once consecutive emissions and windows agree to
    machine precision the bulk tensor is reused for the remaining steps.
    """
    if abs(kernel.dt - cfg.dt) > 1e-12:
        raise ValueError(f"kernel dt {kernel.dt} != config dt {cfg.dt}")
    if kernel.n_c != cfg.n_c:
        raise ValueError(f"kernel n_c {kernel.n_c} != config n_c {cfg.n_c}")
    t0 = time.monotonic()
    d = cfg.dim
    dsq = d * d
    p = dsq + 1  # physical dimension incl. dummy channel
    dummy = dsq
    n_steps, n_c, tol = cfg.n_steps, cfg.n_c, cfg.svd_tol

    d_ext, s_ext = _liouville_coupling(cfg.coupling_eigs)
    sec_vals = np.unique(d_ext)
    n_sec = sec_vals.size

    # gates[k][s, nu] = exp(-sec_vals[s] * (Re eta_k d_nu + i Im eta_k s_nu))
    x = (kernel.eta.real[:, None] * d_ext[None, :]
         + 1j * kernel.eta.imag[:, None] * s_ext[None, :])  # (n_c+1, P)
    gates = np.exp(-sec_vals[None, :, None] * x[:, None, :])  # (n_c+1, n_sec, P)
    i0 = np.exp(-d_ext * x[0])  # self gate, (P,)
    pin = (d_ext[None, :] == sec_vals[:, None]) * i0[None, :]  # (n_sec, P)

    frozen: list = []
    window: list = [i0.reshape(1, p, 1).astype(complex)]
    prev_emitted = None
    prev_window = None
    stable = 0
    converged_at = None

    for n in range(2, n_steps + 1):
        w = len(window)
        # --- zip the step-n comb right-to-left ---
        u, s, vh = svd_truncate(pin, tol, cfg.max_bond, context=f"(pin, step {n})")
        zipped = [vh.reshape(-1, p, 1)]
        carry = (u * s[None, :]).reshape(1, n_sec, -1)  # [b_old=1, sector, z]
        for i in range(w - 1, 0, -1):
            site = window[i]
            a_dim, _, b_dim = site.shape
            z_dim = carry.shape[2]
            t = site.reshape(a_dim * p, b_dim) @ carry.reshape(b_dim, n_sec * z_dim)
            t = t.reshape(a_dim, p, n_sec, z_dim).transpose(0, 2, 1, 3)
            t *= gates[w - i][None, :, :, None]
            u, s, vh = svd_truncate(
                t.reshape(a_dim * n_sec, p * z_dim), tol, cfg.max_bond,
                context=f"(zip, step {n}, site {i})")
            zipped.append(vh.reshape(-1, p, z_dim))
            carry = (u * s[None, :]).reshape(a_dim, n_sec, -1)
        # leftmost window site closes the sector index through its gate
        site = window[0]
        a_dim, _, b_dim = site.shape
        z_dim = carry.shape[2]
        closed = np.einsum("bsz,sv->bvz", carry, gates[w])
        t = np.einsum("avb,bvz->avz", site, closed)
        zipped.append(t)
        zipped.reverse()

        # --- left-to-right truncation pass, restoring left-canonical form ---
        new_window = []
        cur = zipped[0]
        for j in range(len(zipped) - 1):
            a_dim, _, z_dim = cur.shape
            u, s, vh = svd_truncate(cur.reshape(a_dim * p, z_dim), tol,
                                    cfg.max_bond, context=f"(sweep, step {n})")
            new_window.append(u.reshape(a_dim, p, -1))
            nxt = zipped[j + 1]
            cur = np.tensordot(s[:, None] * vh, nxt, axes=(1, 0))
        new_window.append(cur)
        window = new_window

        # Redistribute scale to an entry-scale-1 gauge.  The canonical form
        # concentrates the all-paths 2-norm (~sqrt(p) per step) in the
        # orthogonality center, which would overflow after ~900 steps and
        # defeat stationarity detection.  Per-site scalars leave both the
        # chain's contraction values and relative SVD truncation exact.
        for i in range(len(window) - 1):
            mu = np.max(np.abs(window[i]))
            if mu > 0:
                window[i] = window[i] / mu
                window[i + 1] = window[i + 1] * mu

        emitted = None
        if len(window) > n_c:
            emitted = window.pop(0)
            frozen.append(emitted)

        # --- stationarity detection: reuse the converged bulk tensor ---
        if emitted is not None and prev_emitted is not None:
            if (_stacks_equal([emitted], [prev_emitted])
                    and _stacks_equal(window, prev_window)):
                stable += 1
            else:
                stable = 0
            if stable >= 2 and n < n_steps:
                converged_at = n
                bulk = emitted
                n_bulk = n_steps - n
                sites = frozen + [bulk] * n_bulk + window
                break
        if emitted is not None:
            prev_emitted = emitted
            prev_window = [a.copy() for a in window]
    else:
        sites = frozen + window

    if len(sites) != n_steps:
        raise AssertionError(f"assembled {len(sites)} sites for {n_steps} steps")

    # caps from the dummy channel, right to left
    caps = [np.ones(1, dtype=complex)]
    for i in range(n_steps - 1, -1, -1):
        caps.append(sites[i][:, dummy, :] @ caps[-1])
    caps.reverse()

    # strip the dummy channel, preserving bulk aliasing
    stripped: dict = {}
    sites = [stripped.setdefault(id(a), a[:, :dsq, :]) for a in sites]

    for a in (sites[0], sites[-1], caps[0]):
        if not np.all(np.isfinite(a)):
            raise NumericalError("non-finite values in built process tensor")

    pt = ProcessTensor(
        sites=sites, caps=caps, dt=cfg.dt, d=d, n_c=n_c, svd_tol=cfg.svd_tol,
        coupling_eigs=cfg.coupling_eigs, build_hash=_build_hash(kernel, cfg),
        converged_at=converged_at, build_seconds=time.monotonic() - t0)
    log.info("built process tensor: N=%d, max bond %d, converged at %s, %.1fs",
             n_steps, max(pt.bonds), converged_at, pt.build_seconds)
    return pt


def _stacks_equal(a: list, b: list, rtol: float = 1e-12) -> bool:
    if b is None or len(a) != len(b):
        return False
    for x, y in zip(a, b):
        if x.shape != y.shape:
            return False
        scale = max(np.max(np.abs(x)), 1e-300)
        if np.max(np.abs(x - y)) > rtol * scale:
            return False
    return True


def _header_fields(kernel: InfluenceKernel, cfg: PTBuildConfig) -> bytes:
    return struct.pack(
        f"<diid{cfg.dim}d", cfg.dt, cfg.n_steps, cfg.n_c, cfg.svd_tol,
        *cfg.coupling_eigs)


def _build_hash(kernel: InfluenceKernel, cfg: PTBuildConfig) -> int:
    return fnv1a64(_header_fields(kernel, cfg) + kernel.eta.tobytes())


def pt_diagnostics(pt: ProcessTensor) -> dict:
    """Read-only summary: bond dimensions, footprint, convergence point."""
    unique = {id(s): s.nbytes for s in pt.sites}
    return {
        "n_steps": pt.n_steps,
        "bond_dims": pt.bonds,
        "max_bond": int(max(pt.bonds)),
        "n_unique_sites": len(unique),
        "memory_bytes_logical": int(sum(s.nbytes for s in pt.sites)),
        "memory_bytes_unique": int(sum(unique.values())),
        "converged_at": pt.converged_at,
        "build_seconds": pt.build_seconds,
        "build_hash": f"{pt.build_hash:016x}",
    }


# -- cache file format (.ptc) -------------------------------------------------

def pt_serialize(pt: ProcessTensor, path) -> None:
    """Write the .ptc cache: magic, version, JSON header, raw tensor payload.

    Tensors are complex128 stored as little-endian (re, im) float pairs in
    index order (bond_in, system_diag, bond_out); caps follow the sites.
    """
    header = {
        "format": "pulseforge-ptc",
        "version": FORMAT_VERSION,
        "dt": pt.dt,
        "d": pt.d,
        "n_c": pt.n_c,
        "svd_tol": pt.svd_tol,
        "n_steps": pt.n_steps,
        "coupling_eigs": list(pt.coupling_eigs),
        "bond_dims": pt.bonds,
        "build_hash": f"{pt.build_hash:016x}",
        "index_order": INDEX_ORDER,
        "converged_at": pt.converged_at,
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IQ", FORMAT_VERSION, len(blob)))
        fh.write(blob)
        for site in pt.sites:
            fh.write(np.ascontiguousarray(site, dtype="<c16").tobytes())
        for cap in pt.caps:
            fh.write(np.ascontiguousarray(cap, dtype="<c16").tobytes())


def pt_deserialize(path) -> ProcessTensor:
    """Read a .ptc cache; raises PTFormatError on malformed input."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise PTFormatError(f"{path}: bad magic {magic!r}")
        head = fh.read(12)
        if len(head) != 12:
            raise PTFormatError(f"{path}: truncated header")
        version, hlen = struct.unpack("<IQ", head)
        if version != FORMAT_VERSION:
            raise PTFormatError(f"{path}: unsupported version {version}")
        blob = fh.read(hlen)
        if len(blob) != hlen:
            raise PTFormatError(f"{path}: truncated header block")
        header = json.loads(blob.decode())
        d = header["d"]
        dsq = d * d
        bonds = header["bond_dims"]
        n_steps = header["n_steps"]
        if len(bonds) != n_steps + 1:
            raise PTFormatError(f"{path}: bond_dims length mismatch")
        sites = []
        for i in range(n_steps):
            count = bonds[i] * dsq * bonds[i + 1]
            raw = fh.read(16 * count)
            if len(raw) != 16 * count:
                raise PTFormatError(f"{path}: truncated site {i}")
            sites.append(np.frombuffer(raw, dtype="<c16").reshape(
                bonds[i], dsq, bonds[i + 1]).astype(complex))
        caps = []
        for n in range(n_steps + 1):
            raw = fh.read(16 * bonds[n])
            if len(raw) != 16 * bonds[n]:
                raise PTFormatError(f"{path}: truncated cap {n}")
            caps.append(np.frombuffer(raw, dtype="<c16").astype(complex))
        if fh.read(1):
            raise PTFormatError(f"{path}: trailing bytes")
    return ProcessTensor(
        sites=sites, caps=caps, dt=header["dt"], d=d, n_c=header["n_c"],
        svd_tol=header["svd_tol"], coupling_eigs=tuple(header["coupling_eigs"]),
        build_hash=int(header["build_hash"], 16),
        converged_at=header["converged_at"])


def ensure_compatible(pt: ProcessTensor, *, dt: float, d: int,
                      n_steps: int | None = None) -> None:
    """Refuse a cached PT that does not match the run configuration."""
    problems = []
    if abs(pt.dt - dt) > 1e-12:
        problems.append(f"dt {pt.dt} != run dt {dt}")
    if pt.d != d:
        problems.append(f"system dimension {pt.d} != run dimension {d}")
    if n_steps is not None and pt.n_steps < n_steps:
        problems.append(f"{pt.n_steps} steps < run's {n_steps}")
    if problems:
        raise PTCompatibilityError(
            "cached process tensor is incompatible: " + "; ".join(problems))
