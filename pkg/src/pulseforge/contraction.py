"""Forward contraction of system propagators against the process tensor and
the reverse (adjoint) sweep yielding exact gradients of linear final-state
functionals at a cost independent of the parameter count.

The contraction carries a (bond x d^2) environment-augmented state.  With
merged propagators p_0..p_N and PT sites K_1..K_N the final state is

    rho_f = p_N . cap_N . K_N . p_{N-1} . ... . K_1 . p_0 . rho_0,

each p acting on the system leg, each K on (bond, system).  The reverse
sweep propagates the cost covector through the same chain, and the
derivative with respect to p_n is the outer product of the stored left
environment (before p_n) with the right environment (after p_n).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .process_tensor import NumericalError, ProcessTensor, ensure_compatible
from .system import PropagatorSet, TimeGrid


@dataclass(frozen=True)
class EvaluationContext:
    pt: ProcessTensor
    rho0: np.ndarray  # (d, d) density matrix
    grid: TimeGrid

    def __post_init__(self):
        rho0 = np.asarray(self.rho0, dtype=complex)
        d = self.pt.d
        if rho0.shape != (d, d):
            raise ValueError(f"rho0 shape {rho0.shape} != ({d}, {d})")
        if abs(np.trace(rho0) - 1.0) > 1e-10:
            raise ValueError(f"rho0 must have unit trace, got {np.trace(rho0)}")
        if np.max(np.abs(rho0 - rho0.conj().T)) > 1e-10:
            raise ValueError("rho0 must be Hermitian")
        ensure_compatible(self.pt, dt=self.grid.dt, d=d, n_steps=self.grid.n_steps)
        object.__setattr__(self, "rho0", rho0)


@dataclass
class PropagationResult:
    rho_final: np.ndarray
    times: np.ndarray | None = None
    trajectory: np.ndarray | None = None  # (n_steps + 1, d, d)


@dataclass
class GradientRecord:
    value: float
    grad: np.ndarray  # real, length n_free
    rho_final: np.ndarray


def _check_props(ctx: EvaluationContext, props: PropagatorSet) -> int:
    n = ctx.grid.n_steps
    dsq = ctx.pt.d ** 2
    if props.merged.shape != (n + 1, dsq, dsq):
        raise ValueError(
            f"propagator set shape {props.merged.shape} does not match "
            f"grid/system ({n + 1}, {dsq}, {dsq})")
    return n


def _apply_site(site: np.ndarray, f: np.ndarray) -> np.ndarray:
    # f'[c, v] = sum_b site[b, v, c] f[b, v]
    return np.einsum("bvc,bv->cv", site, f)


def _apply_site_t(site: np.ndarray, w: np.ndarray) -> np.ndarray:
    # w'[b, v] = sum_c site[b, v, c] w[c, v]
    return np.einsum("bvc,cv->bv", site, w)


def propagate(ctx: EvaluationContext, props: PropagatorSet,
              record_trajectory: bool = False) -> PropagationResult:
    """Left-to-right contraction; cost linear in the number of steps."""
    n = _check_props(ctx, props)
    d = ctx.pt.d
    sites, caps = ctx.pt.sites, ctx.pt.caps
    f = (props.merged[0] @ ctx.rho0.ravel())[None, :]
    states = [ctx.rho0.copy()] if record_trajectory else None
    for step in range(1, n + 1):
        f = _apply_site(sites[step - 1], f)
        if not np.all(np.isfinite(f)):
            raise NumericalError(f"non-finite contraction state at step {step}")
        if record_trajectory:
            closed = caps[step] @ f
            states.append((props.half_steps[step] @ closed).reshape(d, d))
        if step < n:
            f = f @ props.merged[step].T
    rho_f = (props.merged[n] @ (caps[n] @ f)).reshape(d, d)
    if record_trajectory:
        states[-1] = rho_f
        return PropagationResult(rho_final=rho_f, times=ctx.grid.times,
                                 trajectory=np.array(states))
    return PropagationResult(rho_final=rho_f)


def expectation(rho: np.ndarray, target: np.ndarray) -> float:
    """<psi| rho |psi> for a normalized pure target state."""
    target = np.asarray(target, dtype=complex).ravel()
    norm = np.linalg.norm(target)
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"target state norm {norm} != 1")
    val = complex(np.conj(target) @ np.asarray(rho) @ target)
    if abs(val.imag) > 1e-12:
        raise NumericalError(f"expectation has imaginary residue {val.imag}")
    return float(val.real)


def fidelity_adjoint(target: np.ndarray) -> np.ndarray:
    """d^2 covector c with <psi|rho|psi> = c . vec(rho) (row-major vec)."""
    target = np.asarray(target, dtype=complex).ravel()
    return np.outer(np.conj(target), target).ravel()


def reverse_gradient(ctx: EvaluationContext, props: PropagatorSet,
                     cost_adjoint: np.ndarray) -> GradientRecord:
    """Forward pass with stored left environments, then one reverse sweep.

    The gradient with respect to every free parameter is assembled by
    contracting the per-step derivative matrices d p_n / d theta_a against
    G_n = (right environment) x (left environment); total cost is a small
    constant multiple of one forward pass.
    """
    n = _check_props(ctx, props)
    for a in range(props.n_free):
        if a not in props.deriv_stacks:
            raise ValueError(f"missing derivative stack for parameter {a}")
    sites, caps = ctx.pt.sites, ctx.pt.caps
    cost_adjoint = np.asarray(cost_adjoint, dtype=complex).ravel()

    # forward, storing the environment after each PT site
    f = (props.merged[0] @ ctx.rho0.ravel())[None, :]
    rho0_vec = ctx.rho0.ravel()
    left = [None] * (n + 1)
    for step in range(1, n + 1):
        f = _apply_site(sites[step - 1], f)
        left[step] = f
        if step < n:
            f = f @ props.merged[step].T
    if not np.all(np.isfinite(f)):
        raise NumericalError("non-finite state in forward pass")
    rho_f = (props.merged[n] @ (caps[n] @ f)).reshape(ctx.pt.d, ctx.pt.d)
    value = complex(cost_adjoint @ rho_f.ravel())

    # reverse sweep
    grads = np.zeros(props.n_free, dtype=complex)

    def accumulate(step: int, g_mat: np.ndarray) -> None:
        for a, (lo, hi, stack) in props.deriv_stacks.items():
            if lo <= step < hi:
                grads[a] += np.sum(stack[step - lo] * g_mat)

    w = caps[n][:, None] * cost_adjoint[None, :]
    accumulate(n, _outer_env(w, left[n]))
    for step in range(n - 1, 0, -1):
        w = w @ props.merged[step + 1]
        w = _apply_site_t(sites[step], w)
        accumulate(step, _outer_env(w, left[step]))
    w = w @ props.merged[1]
    w = _apply_site_t(sites[0], w)
    accumulate(0, _outer_env(w, rho0_vec[None, :]))

    if abs(value.imag) > 1e-9:
        raise NumericalError(f"cost has imaginary part {value.imag}")
    if np.max(np.abs(grads.imag)) > 1e-7 * max(1.0, np.max(np.abs(grads.real))):
        raise NumericalError("gradient has a large imaginary residue")
    return GradientRecord(value=float(value.real), grad=grads.real.copy(),
                          rho_final=rho_f)


def _outer_env(w: np.ndarray, left_env: np.ndarray) -> np.ndarray:
    # G[u, v] = sum_b w[b, u] left[b, v]
    return w.T @ left_env
