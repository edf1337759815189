"""Pulse parameterizations, rotating-frame Hamiltonians, and per-step
Liouville propagators with analytic parameter-derivative stacks.

Conventions
-----------
* Times on the simulation grid run over [0, t_final]; pulse positions and
  carrier phases are referenced to the cluster center t_c, i.e. the drive of
  pulse j peaks at t_c + tau_j and its carrier phase is
  exp(-i [delta_j(t') t' + phi_j]) with t' = t - t_c.
* A linear chirp with coefficient lambda (ps^2) turns the transform-limited
  width sigma0 into the effective width sigma = sqrt(sigma0^2 +
  lambda^2/sigma0^2) and sweeps the detuning at rate a = lambda /
  (lambda^2 + sigma0^4): delta(t') = delta0 + (a/2) t'.
* Density matrices are vectorized row-major; a unitary u acts in Liouville
  space as kron(u, conj(u)).
* Basis ordering is (G, X) for dim=2 and (G, X, BX) for dim=3.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

ENVELOPE_CUTOFF = 1e-15  # relative envelope magnitude below which a pulse is inactive


@dataclass(frozen=True)
class Pulse:
    theta: float          # pulse area, rad
    sigma0: float         # transform-limited width, ps
    delta0: float         # (initial) detuning, rad/ps
    tau: float = 0.0      # delay relative to pulse 1, ps
    chirp_lambda: float = 0.0   # chirp coefficient, ps^2
    phase_phi: float = 0.0      # relative carrier phase, rad
    detuning_sign_tag: str = "red"

    def __post_init__(self):
        if self.sigma0 <= 0:
            raise ValueError(f"sigma0 must be > 0, got {self.sigma0}")
        if self.theta < 0:
            raise ValueError(f"theta must be >= 0, got {self.theta}")
        if self.detuning_sign_tag not in ("red", "blue"):
            raise ValueError(f"unknown detuning_sign_tag {self.detuning_sign_tag!r}")

    @property
    def sigma_eff(self) -> float:
        """Effective width under chirp; equals sigma0 when lambda = 0."""
        return float(np.sqrt(self.sigma0**2 + self.chirp_lambda**2 / self.sigma0**2))

    @property
    def chirp_rate(self) -> float:
        """Instantaneous frequency sweep rate a = lambda/(lambda^2 + sigma0^4)."""
        return self.chirp_lambda / (self.chirp_lambda**2 + self.sigma0**4)


@dataclass(frozen=True)
class PulseSequence:
    pulses: tuple
    chirp_enabled: bool = False

    def __post_init__(self):
        pulses = tuple(self.pulses)
        if not pulses:
            raise ValueError("need at least one pulse")
        if abs(pulses[0].tau) > 1e-12:
            raise ValueError("pulses[0].tau must be 0 (delays are relative to pulse 1)")
        object.__setattr__(self, "pulses", pulses)

    @property
    def n_pulses(self) -> int:
        return len(self.pulses)

    def free_parameters(self) -> list:
        """Ordered (pulse_index, field) pairs: 4*Np-1 entries, 5*Np-1 chirped.

        Per pulse: theta, sigma0, delta0, tau (except pulse 1), and
        chirp_lambda when chirping is enabled; phase_phi is never optimized.
        """
        fields = ["theta", "sigma0", "delta0", "tau"]
        if self.chirp_enabled:
            fields.append("chirp_lambda")
        out = []
        for j in range(self.n_pulses):
            for name in fields:
                if name == "tau" and j == 0:
                    continue
                out.append((j, name))
        return out

    def with_values(self, free_params: list, values) -> "PulseSequence":
        """New sequence with the listed free parameters replaced by values."""
        values = np.asarray(values, dtype=float)
        if values.shape != (len(free_params),):
            raise ValueError(f"expected {len(free_params)} values, got {values.shape}")
        updates: dict = {}
        for (j, name), v in zip(free_params, values):
            updates.setdefault(j, {})[name] = float(v)
        pulses = [replace(p, **updates.get(j, {}))
                  for j, p in enumerate(self.pulses)]
        return PulseSequence(tuple(pulses), chirp_enabled=self.chirp_enabled)

    def parameter_vector(self, free_params: list) -> np.ndarray:
        return np.array([getattr(self.pulses[j], name) for j, name in free_params])


@dataclass(frozen=True)
class SystemSpec:
    """Rotating-frame system: dim=2 rotates at omega_X - R_X, dim=3 at
    (E_BX - R_BX)/2; R_BX = 4 R_X by the n^2 polaron scaling."""

    dim: int
    polaron_shift_x: float       # R_X, rad/ps
    binding_energy: float = 0.0  # E_b, rad/ps (three-level only)
    pulse_center: float = 15.0   # t_c, ps

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")

    @property
    def polaron_shift_bx(self) -> float:
        return 4.0 * self.polaron_shift_x

    @property
    def coupling_eigs(self) -> tuple:
        return tuple(float(n) for n in range(self.dim))

    def bare_diagonal(self) -> np.ndarray:
        if self.dim == 2:
            return np.array([0.0, self.polaron_shift_x])
        r_bx = self.polaron_shift_bx
        return np.array([0.0, 0.5 * (self.binding_energy + r_bx), 0.5 * r_bx])


@dataclass(frozen=True)
class TimeGrid:
    dt: float
    n_steps: int

    def __post_init__(self):
        if self.dt <= 0 or self.n_steps < 1:
            raise ValueError("need dt > 0 and n_steps >= 1")

    @property
    def t_final(self) -> float:
        return self.dt * self.n_steps

    @property
    def times(self) -> np.ndarray:
        """The n_steps + 1 grid points 0, dt, ..., t_final."""
        return self.dt * np.arange(self.n_steps + 1)

    @classmethod
    def from_t_final(cls, dt: float, t_final: float) -> "TimeGrid":
        n = round(t_final / dt)
        if abs(n * dt - t_final) > 1e-9:
            raise ValueError(f"t_final {t_final} is not a multiple of dt {dt}")
        return cls(dt=dt, n_steps=int(n))


def _amplitude(p: Pulse, u, chirp_enabled: bool):
    """Real envelope amplitude at time u relative to the pulse's own center."""
    u = np.asarray(u, dtype=float)
    if chirp_enabled:
        sig = p.sigma_eff
        pref = p.theta / np.sqrt(2.0 * np.pi * p.sigma0 * sig)
    else:
        sig = p.sigma0
        pref = p.theta / (sig * np.sqrt(2.0 * np.pi))
    return pref * np.exp(-(u**2) / (2.0 * sig**2))


def _carrier_phase(p: Pulse, t, chirp_enabled: bool):
    """Phase delta(t) * t + phi with t relative to the cluster center."""
    t = np.asarray(t, dtype=float)
    phase = p.delta0 * t + p.phase_phi
    if chirp_enabled:
        phase = phase + 0.5 * p.chirp_rate * t**2
    return phase


def envelope(p: Pulse, t, chirp_enabled: bool = False):
    """Full complex drive of one pulse at cluster-relative time t (rad/ps)."""
    amp = _amplitude(p, np.asarray(t, dtype=float) - p.tau, chirp_enabled)
    return amp * np.exp(-1j * _carrier_phase(p, t, chirp_enabled))


def total_drive(seq: PulseSequence, t):
    """Sum of all pulse drives at cluster-relative time t."""
    return sum(envelope(p, t, seq.chirp_enabled) for p in seq.pulses)


def build_hamiltonian(spec: SystemSpec, seq: PulseSequence, t: float) -> np.ndarray:
    """Rotating-frame Hamiltonian at absolute grid time t (Hermitian d x d)."""
    return _hamiltonian_batch(spec, seq, np.asarray([t], dtype=float))[0]


def _hamiltonian_batch(spec: SystemSpec, seq: PulseSequence, times: np.ndarray) -> np.ndarray:
    tr = times - spec.pulse_center
    omega = total_drive(seq, tr)
    nt = times.size
    h = np.zeros((nt, spec.dim, spec.dim), dtype=complex)
    diag = spec.bare_diagonal()
    h[:, np.arange(spec.dim), np.arange(spec.dim)] = diag[None, :]
    half = 0.5 * omega
    h[:, 1, 0] = half
    h[:, 0, 1] = np.conj(half)
    if spec.dim == 3:
        h[:, 2, 1] = half
        h[:, 1, 2] = np.conj(half)
    return h


def _drive_derivative(p: Pulse, tr: np.ndarray, name: str, chirp_enabled: bool) -> np.ndarray:
    """Analytic derivative of this pulse's complex drive w.r.t. one field."""
    u = tr - p.tau
    omega = envelope(p, tr, chirp_enabled)
    if name == "theta":
        if p.theta > 0:
            return omega / p.theta
        unit = replace(p, theta=1.0)
        return envelope(unit, tr, chirp_enabled)
    if name == "delta0":
        return -1j * tr * omega
    if name == "tau":
        sig = p.sigma_eff if chirp_enabled else p.sigma0
        return omega * u / sig**2
    if name == "sigma0":
        if not chirp_enabled:
            s = p.sigma0
            return omega * (u**2 / s**3 - 1.0 / s)
        s0, lam = p.sigma0, p.chirp_lambda
        sig = p.sigma_eff
        dsig = (s0 - lam**2 / s0**3) / sig
        da = -4.0 * lam * s0**3 / (lam**2 + s0**4) ** 2
        damp_fac = -0.5 / s0 + (-0.5 / sig + u**2 / sig**3) * dsig
        return omega * (damp_fac - 0.5j * da * tr**2)
    if name == "chirp_lambda":
        if not chirp_enabled:
            return np.zeros_like(omega)
        s0, lam = p.sigma0, p.chirp_lambda
        sig = p.sigma_eff
        dsig = (lam / s0**2) / sig
        da = (s0**4 - lam**2) / (lam**2 + s0**4) ** 2
        damp_fac = (-0.5 / sig + u**2 / sig**3) * dsig
        return omega * (damp_fac - 0.5j * da * tr**2)
    raise ValueError(f"unknown free parameter field {name!r}")


@dataclass
class PropagatorSet:
    """Per-step Liouville propagators and their parameter derivatives.

    half_steps[i] is the Liouville form of exp(-i H(t_i) dt / 2) at the
    N + 1 grid points; merged[i] combines the adjacent halves around grid
    point i (full steps in the bulk, bare halves at the two edges), so the
    evolution reads merged[N] * site_N * ... * site_1 * merged[0] * rho0.

    deriv_stacks maps free-parameter index -> (lo, hi, stack) where
    stack[m] = d merged[lo + m] / d theta_a; steps where the pulse envelope
    is below 1e-15 of its peak are omitted (the derivative vanishes there).
    """

    half_steps: np.ndarray
    merged: np.ndarray
    deriv_stacks: dict
    free_params: list
    grid: TimeGrid

    @property
    def n_free(self) -> int:
        return len(self.free_params)


def _liouville(u: np.ndarray) -> np.ndarray:
    """Batched kron(u, conj(u)) for stacked (nt, d, d) unitaries."""
    nt, d, _ = u.shape
    out = np.einsum("nij,nkl->nikjl", u, u.conj())
    return out.reshape(nt, d * d, d * d)


def _phi_divided_difference(lam: np.ndarray) -> np.ndarray:
    """Divided-difference matrix Phi_kl = (e^lk - e^ll)/(lk - ll), diag e^lk."""
    nt, d = lam.shape
    diff = lam[:, :, None] - lam[:, None, :]
    expl = np.exp(lam)
    num = expl[:, :, None] - expl[:, None, :]
    small = np.abs(diff) < 1e-12
    phi = np.where(small, 0.5 * (expl[:, :, None] + expl[:, None, :]),
                   num / np.where(small, 1.0, diff))
    return phi


def build_propagator_sequence(spec: SystemSpec, seq: PulseSequence, grid: TimeGrid,
                              free_params: list | None = None) -> PropagatorSet:
    """Half-step and merged propagators plus analytic derivative stacks.

    Propagators come from the eigendecomposition of the (normal) Hamiltonian;
    the matrix-exponential directional derivative uses the equivalent
    divided-difference form V [(V' dA V) o Phi] V' of the augmented-block
    identity, which batches over all timesteps.
    """
    if free_params is None:
        free_params = seq.free_parameters()
    for j, name in free_params:
        if not np.isfinite(getattr(seq.pulses[j], name)):
            raise ValueError(f"non-finite parameter p{j + 1}.{name}")

    times = grid.times
    nt = times.size
    h = _hamiltonian_batch(spec, seq, times)
    w, v = np.linalg.eigh(h)
    vh = np.conj(np.swapaxes(v, 1, 2))

    def expm_from_eig(tau: float) -> np.ndarray:
        ph = np.exp(-1j * w * tau)
        return np.einsum("nij,nj,njk->nik", v, ph, vh)

    u_half = expm_from_eig(grid.dt / 2.0)
    u_full = expm_from_eig(grid.dt)
    half_l = _liouville(u_half)
    full_l = _liouville(u_full)
    merged = full_l.copy()
    merged[0] = half_l[0]
    merged[-1] = half_l[-1]

    tr = times - spec.pulse_center
    deriv_stacks: dict = {}
    for a, (j, name) in enumerate(free_params):
        pulse = seq.pulses[j]
        amp = np.abs(_amplitude(pulse, tr - pulse.tau, seq.chirp_enabled))
        peak = _amplitude(pulse, np.asarray(0.0), seq.chirp_enabled)
        active = np.nonzero(amp >= ENVELOPE_CUTOFF * max(peak, 1e-300))[0]
        if active.size == 0:
            deriv_stacks[a] = (0, 0, np.zeros((0, merged.shape[1], merged.shape[2]),
                                              dtype=complex))
            continue
        lo, hi = int(active[0]), int(active[-1]) + 1
        domega = _drive_derivative(pulse, tr[lo:hi], name, seq.chirp_enabled)
        dh = np.zeros((hi - lo, spec.dim, spec.dim), dtype=complex)
        dh[:, 1, 0] = 0.5 * domega
        dh[:, 0, 1] = 0.5 * np.conj(domega)
        if spec.dim == 3:
            dh[:, 2, 1] = 0.5 * domega
            dh[:, 1, 2] = 0.5 * np.conj(domega)

        taus = np.full(hi - lo, grid.dt)
        taus[lo + np.arange(hi - lo) == 0] = grid.dt / 2.0
        taus[lo + np.arange(hi - lo) == nt - 1] = grid.dt / 2.0
        lam = -1j * w[lo:hi] * taus[:, None]
        phi = _phi_divided_difference(lam)
        da = -1j * dh * taus[:, None, None]
        inner = np.einsum("nij,njk,nkl->nil", vh[lo:hi], da, v[lo:hi])
        du = np.einsum("nij,njk,nkl->nil", v[lo:hi], inner * phi, vh[lo:hi])
        u_used = np.where((np.arange(lo, hi) == 0) | (np.arange(lo, hi) == nt - 1)
                          )[0]
        u_base = u_full[lo:hi].copy()
        u_base[u_used] = u_half[lo + u_used]
        dmerged = (np.einsum("nij,nkl->nikjl", du, u_base.conj())
                   + np.einsum("nij,nkl->nikjl", u_base, du.conj()))
        dsq = spec.dim**2
        deriv_stacks[a] = (lo, hi, dmerged.reshape(hi - lo, dsq, dsq))

    return PropagatorSet(half_steps=half_l, merged=merged,
                         deriv_stacks=deriv_stacks, free_params=free_params,
                         grid=grid)
