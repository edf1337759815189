"""Gradient-free warm-up (random search, differential evolution) and
box-constrained L-BFGS with a More-Thuente line search.

All routines MAXIMIZE the supplied objective; L-BFGS negates internally.
Box constraints are enforced by gradient projection: iterates are clipped
to the box, search directions come from the two-loop recursion on projected
gradients, and the line search walks the box-projected path.  Every routine
is deterministic for a fixed seed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Bounds:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lower/upper must be 1-D arrays of equal length")
        if not np.all(lo < hi):
            raise ValueError("need lower < upper elementwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.minimum(np.maximum(x, self.lower), self.upper)

    def contains(self, x: np.ndarray, atol: float = 0.0) -> bool:
        return bool(np.all(x >= self.lower - atol) and np.all(x <= self.upper + atol))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.lower + rng.random(self.dim) * (self.upper - self.lower)


@dataclass(frozen=True)
class OptimizerConfig:
    lbfgs_memory: int = 10
    initial_step: float = 1.0
    outer_iterations: int = 2
    inner_iterations: int = 100
    ls_sufficient_decrease: float = 1e-4
    ls_curvature: float = 0.9
    ls_max_evals: int = 30
    pg_tolerance: float = 1e-8
    curvature_skip: float = 1e-10
    warmup_kind: str = "random"      # {random, de, none}
    warmup_random_budget: int = 500
    de_population: int = 40
    de_generations: int = 25
    de_f: float = 0.8
    de_cr: float = 0.9
    rng_seed: int = 0


@dataclass
class RunResult:
    best_params: np.ndarray
    best_value: float
    gradient_norm_at_best: float
    trace: list                       # per-iteration dicts
    n_evaluations: int
    n_gradient_evaluations: int
    wall_seconds: float
    status: str
    config_hash: str = ""
    pt_hash: str = ""


# -- gradient-free warm-up ----------------------------------------------------

def random_search(cost, bounds: Bounds, budget: int, seed: int) -> RunResult:
    """Uniform sampling within the box; the draw stream is a deterministic
    function of the seed, so a larger budget reuses the identical prefix."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    t0 = time.monotonic()
    rng = np.random.default_rng(seed)
    best_x, best_v = None, -np.inf
    trace = []
    for i in range(budget):
        x = bounds.sample(rng)
        v = float(cost(x))
        if v > best_v:
            best_x, best_v = x, v
        trace.append({"iteration": i, "value": v, "best": best_v})
    return RunResult(best_params=best_x, best_value=best_v,
                     gradient_norm_at_best=np.nan, trace=trace,
                     n_evaluations=budget, n_gradient_evaluations=0,
                     wall_seconds=time.monotonic() - t0, status="budget exhausted")


def differential_evolution(cost, bounds: Bounds, config: OptimizerConfig,
                           seed: int) -> RunResult:
    """Classic rand/1/bin with clipping to the box; best-so-far is monotone."""
    npop = config.de_population
    if npop < 4:
        raise ValueError("population must be >= 4")
    t0 = time.monotonic()
    rng = np.random.default_rng(seed)
    dim = bounds.dim
    pop = np.array([bounds.sample(rng) for _ in range(npop)])
    vals = np.array([float(cost(x)) for x in pop])
    n_eval = npop
    trace = []
    for gen in range(config.de_generations):
        for i in range(npop):
            choices = [j for j in range(npop) if j != i]
            r1, r2, r3 = rng.choice(choices, size=3, replace=False)
            mutant = bounds.clip(pop[r1] + config.de_f * (pop[r2] - pop[r3]))
            cross = rng.random(dim) < config.de_cr
            cross[rng.integers(dim)] = True
            trial = np.where(cross, mutant, pop[i])
            v = float(cost(trial))
            n_eval += 1
            if v >= vals[i]:
                pop[i], vals[i] = trial, v
        best = int(np.argmax(vals))
        trace.append({"iteration": gen, "value": float(vals[best]),
                      "best": float(vals[best])})
    best = int(np.argmax(vals))
    return RunResult(best_params=pop[best].copy(), best_value=float(vals[best]),
                     gradient_norm_at_best=np.nan, trace=trace,
                     n_evaluations=n_eval, n_gradient_evaluations=0,
                     wall_seconds=time.monotonic() - t0, status="generations exhausted")


# -- More-Thuente line search -------------------------------------------------

def _cstep(stx, fx, dx, sty, fy, dy, stp, fp, dp, brackt, stpmin, stpmax):
    """Trial-step update (safeguarded cubic/quadratic interpolation)."""
    sgnd = dp * np.sign(dx) if dx != 0 else dp
    if fp > fx:
        theta = 3 * (fx - fp) / (stp - stx) + dx + dp
        s = max(abs(theta), abs(dx), abs(dp))
        gamma = s * np.sqrt(max((theta / s) ** 2 - (dx / s) * (dp / s), 0.0))
        if stp < stx:
            gamma = -gamma
        p = (gamma - dx) + theta
        q = ((gamma - dx) + gamma) + dp
        r = p / q
        stpc = stx + r * (stp - stx)
        stpq = stx + ((dx / ((fx - fp) / (stp - stx) + dx)) / 2.0) * (stp - stx)
        if abs(stpc - stx) < abs(stpq - stx):
            stpf = stpc
        else:
            stpf = stpc + (stpq - stpc) / 2.0
        brackt = True
    elif sgnd < 0.0:
        theta = 3 * (fx - fp) / (stp - stx) + dx + dp
        s = max(abs(theta), abs(dx), abs(dp))
        gamma = s * np.sqrt(max((theta / s) ** 2 - (dx / s) * (dp / s), 0.0))
        if stp > stx:
            gamma = -gamma
        p = (gamma - dp) + theta
        q = ((gamma - dp) + gamma) + dx
        r = p / q
        stpc = stp + r * (stx - stp)
        stpq = stp + (dp / (dp - dx)) * (stx - stp)
        stpf = stpc if abs(stpc - stp) > abs(stpq - stp) else stpq
        brackt = True
    elif abs(dp) < abs(dx):
        theta = 3 * (fx - fp) / (stp - stx) + dx + dp
        s = max(abs(theta), abs(dx), abs(dp))
        gamma = s * np.sqrt(max((theta / s) ** 2 - (dx / s) * (dp / s), 0.0))
        if stp > stx:
            gamma = -gamma
        p = (gamma - dp) + theta
        q = (gamma + (dx - dp)) + gamma
        r = p / q
        if r < 0.0 and gamma != 0.0:
            stpc = stp + r * (stx - stp)
        elif stp > stx:
            stpc = stpmax
        else:
            stpc = stpmin
        stpq = stp + (dp / (dp - dx)) * (stx - stp)
        if brackt:
            stpf = stpc if abs(stpc - stp) < abs(stpq - stp) else stpq
            if stp > stx:
                stpf = min(stp + 0.66 * (sty - stp), stpf)
            else:
                stpf = max(stp + 0.66 * (sty - stp), stpf)
        else:
            stpf = stpc if abs(stpc - stp) > abs(stpq - stp) else stpq
            stpf = min(max(stpf, stpmin), stpmax)
    else:
        if brackt:
            theta = 3 * (fp - fy) / (sty - stp) + dy + dp
            s = max(abs(theta), abs(dy), abs(dp))
            gamma = s * np.sqrt(max((theta / s) ** 2 - (dy / s) * (dp / s), 0.0))
            if stp > sty:
                gamma = -gamma
            p = (gamma - dp) + theta
            q = ((gamma - dp) + gamma) + dy
            r = p / q
            stpf = stp + r * (sty - stp)
        elif stp > stx:
            stpf = stpmax
        else:
            stpf = stpmin

    if fp > fx:
        sty, fy, dy = stp, fp, dp
    else:
        if sgnd < 0.0:
            sty, fy, dy = stx, fx, dx
        stx, fx, dx = stp, fp, dp
    stpf = min(max(stpf, stpmin), stpmax)
    return stx, fx, dx, sty, fy, dy, stpf, brackt


def more_thuente(eval_fg, f0: float, g0: float, stp: float,
                 ftol: float = 1e-4, gtol: float = 0.9, xtol: float = 1e-12,
                 stpmin: float = 1e-14, stpmax: float = 1e3,
                 maxfev: int = 30):
    """Strong-Wolfe line search (sufficient decrease ftol, curvature gtol).

    eval_fg(alpha) -> (f, dphi); f0, g0 are values at alpha = 0 with g0 < 0.
    Returns (alpha, f, dphi, n_evals, status); status 'converged' means both
    Wolfe conditions hold at alpha.
    """
    if g0 >= 0.0:
        raise ValueError("line search requires a descent direction")
    brackt = False
    stage = 1
    finit, ginit = f0, g0
    gtest = ftol * ginit
    width = stpmax - stpmin
    width1 = 2.0 * width
    stx, fx, dx = 0.0, finit, ginit
    sty, fy, dy = 0.0, finit, ginit
    stmin, stmax = 0.0, stp + 4.0 * stp
    nfev = 0
    best = (0.0, f0, g0)
    while True:
        stp = min(max(stp, stpmin), stpmax)
        f, g = eval_fg(stp)
        nfev += 1
        if f < best[1]:
            best = (stp, f, g)
        ftest = finit + stp * gtest
        if stage == 1 and f <= ftest and g >= 0.0:
            stage = 2
        if f <= ftest and abs(g) <= gtol * (-ginit):
            return stp, f, g, nfev, "converged"
        if nfev >= maxfev:
            return best[0], best[1], best[2], nfev, "maxfev"
        if brackt and (stmax - stmin) <= xtol * stmax:
            return best[0], best[1], best[2], nfev, "xtol"
        if stp >= stpmax and f <= ftest and g <= gtest:
            return stp, f, g, nfev, "stpmax"
        if stp <= stpmin and (f > ftest or g >= gtest):
            return best[0], best[1], best[2], nfev, "stpmin"

        if stage == 1 and f <= fx and f > ftest:
            fm, fxm, fym = f - stp * gtest, fx - stx * gtest, fy - sty * gtest
            gm, gxm, gym = g - gtest, dx - gtest, dy - gtest
            stx, fxm, gxm, sty, fym, gym, stp, brackt = _cstep(
                stx, fxm, gxm, sty, fym, gym, stp, fm, gm, brackt, stmin, stmax)
            fx, fy = fxm + stx * gtest, fym + sty * gtest
            dx, dy = gxm + gtest, gym + gtest
        else:
            stx, fx, dx, sty, fy, dy, stp, brackt = _cstep(
                stx, fx, dx, sty, fy, dy, stp, f, g, brackt, stmin, stmax)

        if brackt:
            if abs(sty - stx) >= 0.66 * width1:
                stp = stx + 0.5 * (sty - stx)
            width1 = width
            width = abs(sty - stx)
            stmin, stmax = min(stx, sty), max(stx, sty)
        else:
            stmin = stp + 1.1 * (stp - stx)
            stmax = stp + 4.0 * (stp - stx)


# -- projected L-BFGS ---------------------------------------------------------

def _projected_gradient(x, g, bounds: Bounds) -> np.ndarray:
    """Gradient with components pointing out of the box zeroed (min sense)."""
    pg = g.copy()
    at_lo = (x <= bounds.lower) & (g > 0)
    at_hi = (x >= bounds.upper) & (g < 0)
    pg[at_lo | at_hi] = 0.0
    return pg


def _two_loop(memory: list, pg: np.ndarray) -> np.ndarray:
    """L-BFGS two-loop recursion applied to the projected gradient."""
    q = pg.copy()
    alphas = []
    for s, y, rho in reversed(memory):
        a = rho * (s @ q)
        alphas.append(a)
        q -= a * y
    if memory:
        s, y, _ = memory[-1]
        q *= (s @ y) / (y @ y)
    for (s, y, rho), a in zip(memory, reversed(alphas)):
        b = rho * (y @ q)
        q += (a - b) * s
    return q


def lbfgs_box(cost_with_grad, x0: np.ndarray, bounds: Bounds,
              config: OptimizerConfig) -> RunResult:
    """Box-constrained L-BFGS maximizer (negates internally).

    Runs outer_iterations rounds of inner_iterations quasi-Newton steps;
    curvature memory is cleared between rounds.  A failed line search warm
    restarts (memory discarded) once per round before terminating.
    """
    t0 = time.monotonic()
    x = bounds.clip(np.asarray(x0, dtype=float))
    if not bounds.contains(x0, atol=1e-12):
        raise ValueError("x0 must lie within bounds")

    counts = {"f": 0, "g": 0}

    def fg(xv):
        counts["f"] += 1
        counts["g"] += 1
        v, grad = cost_with_grad(xv)
        return -float(v), -np.asarray(grad, dtype=float)

    f, g = fg(x)
    trace = []
    best_x, best_f = x.copy(), f
    status = "iterations exhausted"
    for outer in range(config.outer_iterations):
        memory: list = []
        restarted = False
        pg = _projected_gradient(x, g, bounds)
        for inner in range(config.inner_iterations):
            pg_norm = float(np.linalg.norm(pg))
            trace.append({"iteration": len(trace), "value": -f,
                          "grad_norm": pg_norm})
            if pg_norm < config.pg_tolerance:
                status = "converged"
                break
            d = -_two_loop(memory, pg)
            if d @ pg >= 0.0:
                memory.clear()
                d = -pg

            # line search along the box-projected path
            hits = np.concatenate([
                ((bounds.upper - x)[d > 0] / d[d > 0]),
                ((bounds.lower - x)[d < 0] / d[d < 0])])
            stpmax = float(np.max(hits)) if hits.size else 1e3
            stpmax = min(max(stpmax, 1e-12), 1e6)

            def eval_fg(alpha):
                xa = bounds.clip(x + alpha * d)
                fa, ga = fg(xa)
                free = ~(((xa <= bounds.lower) & (d < 0))
                         | ((xa >= bounds.upper) & (d > 0)))
                return fa, float(ga[free] @ d[free])

            dphi0 = float(g @ d)
            step0 = min(config.initial_step, stpmax) if memory else \
                min(config.initial_step, stpmax, 1.0 / max(pg_norm, 1.0))
            try:
                alpha, fa, _, _, ls_status = more_thuente(
                    eval_fg, f, dphi0, step0,
                    ftol=config.ls_sufficient_decrease,
                    gtol=config.ls_curvature, stpmax=stpmax,
                    maxfev=config.ls_max_evals)
            except (ValueError, FloatingPointError):
                alpha, fa, ls_status = 0.0, f, "error"

            if alpha <= 0.0 or fa >= f:
                if not restarted and memory:
                    memory.clear()
                    restarted = True
                    pg = _projected_gradient(x, g, bounds)
                    continue
                status = f"line search failed ({ls_status})"
                break

            x_new = bounds.clip(x + alpha * d)
            f_new, g_new = fg(x_new)
            pg_new = _projected_gradient(x_new, g_new, bounds)
            s = x_new - x
            y = pg_new - pg
            if s @ y > config.curvature_skip:
                memory.append((s, y, 1.0 / (s @ y)))
                if len(memory) > config.lbfgs_memory:
                    memory.pop(0)
            x, f, g, pg = x_new, f_new, g_new, pg_new
            if f < best_f:
                best_x, best_f = x.copy(), f
        if status == "converged":
            break

    pg_best = _projected_gradient(best_x, g, bounds)
    return RunResult(best_params=best_x, best_value=-best_f,
                     gradient_norm_at_best=float(np.linalg.norm(pg_best)),
                     trace=trace, n_evaluations=counts["f"],
                     n_gradient_evaluations=counts["g"],
                     wall_seconds=time.monotonic() - t0, status=status)
