"""Minimization of the assimilation cost over the initial state.

Nonlinear conjugate gradient (Polak-Ribiere with the update clamped at
zero) driven by the adjoint gradient, with a strong-Wolfe line search
(c1 = 1e-4, c2 = 0.1). Each line-search trial evaluates the cost and its
gradient together, since the curvature condition needs the slope anyway.

After a trial point satisfies the Wolfe conditions, the search makes one
opportunistic secant refinement toward the zero of the directional
derivative; on locally quadratic cost surfaces this lands on the exact
line minimum, which is what lets the optimizer drain a purely quadratic
cost to floating-point zero in a couple of iterations instead of creeping
down at the rate the Wolfe thresholds alone would allow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .adjoint import gradient
from .cost import AssimilationProblem, eval_j_bg, eval_total
from .errors import NumericalError

__all__ = [
    "OptimizerConfig",
    "OptimizationResult",
    "minimize",
    "LocalMinimumReport",
    "verify_local_minimum",
]

_C1 = 1e-4
_C2 = 0.1


@dataclass(frozen=True)
class OptimizerConfig:
    """Stopping rules and line-search budget for `minimize`.

    restart_period=None restarts conjugacy every 2*n_modes accepted
    iterations (the dimension of the optimization variable is 2*n_modes).
    """

    rel_grad_tol: float = 1e-4
    max_iters: int = 500
    max_line_search_evals: int = 40
    restart_period: int | None = None

    def __post_init__(self):
        if not 0.0 < self.rel_grad_tol < 1.0:
            raise ValueError(f"rel_grad_tol must lie in (0, 1), got {self.rel_grad_tol}")
        if self.max_iters < 1 or self.max_line_search_evals < 1:
            raise ValueError("max_iters and max_line_search_evals must be positive")
        if self.restart_period is not None and self.restart_period < 1:
            raise ValueError("restart_period must be positive (or None for the default)")


@dataclass
class OptimizationResult:
    """Outcome of one minimization run.

    j_history holds the starting cost followed by every accepted iterate's
    cost and is non-increasing; the companion histories are aligned with
    it (step_history[0] is 0 for the starting point).
    """

    x0_analysis: np.ndarray
    j_history: np.ndarray
    grad_norm_history: np.ndarray
    converged: bool
    iterations: int
    message: str = ""
    j_bg_history: np.ndarray = field(default_factory=lambda: np.zeros(0))
    j_obs_history: np.ndarray = field(default_factory=lambda: np.zeros(0))
    step_history: np.ndarray = field(default_factory=lambda: np.zeros(0))
    n_evals: int = 0

    @property
    def j_final(self) -> float:
        return float(self.j_history[-1])


class _LineSearchFailure(Exception):
    pass


def _wolfe_search(eval_fg, j0, dphi0, alpha0, max_evals):
    """Strong-Wolfe line search; returns (alpha, j, g, evals).

    eval_fg(alpha) -> (j, g, dphi) with j = +inf (g None) where the forward
    model diverges. Raises _LineSearchFailure when no acceptable step is
    found within max_evals evaluations.
    """
    evals = 0

    def take(alpha):
        nonlocal evals
        evals += 1
        return eval_fg(alpha)

    def zoom(a_lo, j_lo, d_lo, a_hi, j_hi):
        nonlocal evals
        while evals < max_evals:
            lo, hi = (a_lo, a_hi) if a_lo < a_hi else (a_hi, a_lo)
            width = hi - lo
            a = math.nan
            if math.isfinite(j_hi):
                # quadratic through (a_lo, j_lo, d_lo) and (a_hi, j_hi)
                denom = 2.0 * (j_hi - j_lo - d_lo * (a_hi - a_lo))
                if denom != 0.0:
                    a = a_lo - d_lo * (a_hi - a_lo) ** 2 / denom
            if not (math.isfinite(a) and lo + 0.05 * width < a < hi - 0.05 * width):
                a = 0.5 * (lo + hi)
            j_a, g_a, d_a = take(a)
            if not math.isfinite(j_a) or j_a > j0 + _C1 * a * dphi0 or j_a >= j_lo:
                a_hi, j_hi = a, j_a
            else:
                if abs(d_a) <= -_C2 * dphi0:
                    return a, j_a, g_a, d_a
                if d_a * (a_hi - a_lo) >= 0.0:
                    a_hi, j_hi = a_lo, j_lo
                a_lo, j_lo, d_lo = a, j_a, d_a
            if width < 1e-16 * max(1.0, abs(a_lo)):
                break
        raise _LineSearchFailure(f"zoom exhausted after {evals} evaluations")

    def polish(a, j_a, g_a, d_a):
        # one secant step toward dphi = 0; exact on quadratic cost surfaces
        if abs(d_a) <= 1e-3 * abs(dphi0) or evals >= max_evals:
            return a, j_a, g_a, d_a
        denom = dphi0 - d_a
        if denom == 0.0:
            return a, j_a, g_a, d_a
        a_s = a * dphi0 / denom
        if not (math.isfinite(a_s) and 0.1 * a <= a_s <= 10.0 * a):
            return a, j_a, g_a, d_a
        j_s, g_s, d_s = take(a_s)
        if (
            math.isfinite(j_s)
            and j_s <= j0 + _C1 * a_s * dphi0
            and abs(d_s) <= -_C2 * dphi0
            and j_s <= j_a
        ):
            return a_s, j_s, g_s, d_s
        return a, j_a, g_a, d_a

    def done(accepted):
        a, j_a, g_a, _ = polish(*accepted)
        return a, j_a, g_a, evals

    a_prev, j_prev, d_prev = 0.0, j0, dphi0
    alpha = alpha0
    first = True
    while evals < max_evals:
        j_a, g_a, d_a = take(alpha)
        if not math.isfinite(j_a) or j_a > j0 + _C1 * alpha * dphi0 or (not first and j_a >= j_prev):
            return done(zoom(a_prev, j_prev, d_prev, alpha, j_a))
        if abs(d_a) <= -_C2 * dphi0:
            return done((alpha, j_a, g_a, d_a))
        if d_a >= 0.0:
            return done(zoom(alpha, j_a, d_a, a_prev, j_prev))
        a_prev, j_prev, d_prev = alpha, j_a, d_a
        alpha = 2.0 * alpha
        first = False
        if alpha > 1e12:
            break
    raise _LineSearchFailure(f"no Wolfe point within {evals} evaluations")


def minimize(
    problem: AssimilationProblem,
    x_start: np.ndarray | None = None,
    config: OptimizerConfig | None = None,
    verbose: bool = False,
) -> OptimizationResult:
    """Minimize J over the initial state, starting from the background by default.

    Returns the best (last accepted) iterate. converged=True iff the
    gradient norm dropped below rel_grad_tol relative to its starting
    value; a failed line search returns the best iterate so far with
    converged=False and a diagnostic message.
    """
    cfg = config or OptimizerConfig()
    restart_every = cfg.restart_period or 2 * problem.params.n_modes
    x = np.array(
        problem.background.x0_bg if x_start is None else x_start, dtype=float, copy=True
    )

    rep = gradient(x, problem)
    j, g = rep.j_value, rep.grad
    if not math.isfinite(j):
        raise NumericalError("cost is non-finite at the starting point")
    n_evals = 1

    def split_cost(xv, jv):
        jb = eval_j_bg(xv, problem.background, problem.covariance)
        return jb, jv - jb

    jb, jo = split_cost(x, j)
    j_hist, gn_hist = [j], [float(np.linalg.norm(g))]
    jb_hist, jo_hist, step_hist = [jb], [jo], [0.0]
    g0_norm = gn_hist[0]
    converged = g0_norm == 0.0
    message = "gradient is zero at the starting point" if converged else ""
    iterations = 0
    d = -g
    alpha_prev = None
    dphi_prev = None

    for it in range(1, cfg.max_iters + 1):
        gn = float(np.linalg.norm(g))
        if gn <= cfg.rel_grad_tol * g0_norm:
            converged = True
            break
        dphi0 = float(g @ d)
        if dphi0 >= 0.0:  # not a descent direction: steepest-descent restart
            d = -g
            dphi0 = -gn * gn

        if alpha_prev is None:
            alpha0 = -2.0 * j / dphi0 if j > 0.0 else 1.0
        else:
            alpha0 = alpha_prev * dphi_prev / dphi0
        if not (math.isfinite(alpha0) and alpha0 > 0.0):
            alpha0 = 1.0
        alpha0 = min(max(alpha0, 1e-16), 1e10)

        def eval_fg(alpha, _d=d, _x=x):
            trial = _x + alpha * _d
            if not np.all(np.isfinite(trial)):
                return math.inf, None, math.nan
            try:
                r = gradient(trial, problem)
            except NumericalError:
                return math.inf, None, math.nan
            return r.j_value, r.grad, float(r.grad @ _d)

        try:
            alpha, j_new, g_new, ls_evals = _wolfe_search(
                eval_fg, j, dphi0, alpha0, cfg.max_line_search_evals
            )
        except _LineSearchFailure as exc:
            message = f"stopped at iteration {it}: {exc}"
            break
        n_evals += ls_evals

        x = x + alpha * d
        beta = max(0.0, float(g_new @ (g_new - g)) / float(g @ g))
        if it % restart_every == 0:
            beta = 0.0
        d = -g_new + beta * d
        g = g_new
        j = j_new
        iterations = it
        alpha_prev, dphi_prev = alpha, dphi0

        jb, jo = split_cost(x, j)
        j_hist.append(j)
        gn_hist.append(float(np.linalg.norm(g)))
        jb_hist.append(jb)
        jo_hist.append(jo)
        step_hist.append(alpha)
        if verbose:
            print(
                f"iter {it:4d}  J={j:.9e}  J_bg={jb:.3e}  J_obs={jo:.3e}  "
                f"|grad|={gn_hist[-1]:.3e}  step={alpha:.3e}"
            )
    else:
        gn = float(np.linalg.norm(g))
        if gn <= cfg.rel_grad_tol * g0_norm:
            converged = True
        else:
            message = f"max_iters={cfg.max_iters} reached"

    return OptimizationResult(
        x0_analysis=x,
        j_history=np.array(j_hist),
        grad_norm_history=np.array(gn_hist),
        converged=converged,
        iterations=iterations,
        message=message,
        j_bg_history=np.array(jb_hist),
        j_obs_history=np.array(jo_hist),
        step_history=np.array(step_hist),
        n_evals=n_evals,
    )


@dataclass(frozen=True)
class LocalMinimumReport:
    """J sampled on random probes in a ball around a candidate minimum."""

    j_center: float
    radius: float
    n_probes: int
    j_min: float
    j_mean: float
    j_max: float
    n_below_center: int

    @property
    def is_local_minimum(self) -> bool:
        return self.n_below_center == 0


def verify_local_minimum(
    x0_analysis: np.ndarray,
    problem: AssimilationProblem,
    radius: float,
    n_probes: int,
    seed: int = 0,
) -> LocalMinimumReport:
    """Probe J at random points within `radius` of x0_analysis.

    Flags (via n_below_center) any probe with a lower cost than the
    candidate, which would indicate the optimizer stopped short or a
    better minimum sits nearby.
    """
    if radius < 0.0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    if n_probes < 1:
        raise ValueError(f"n_probes must be >= 1, got {n_probes}")
    x0 = np.asarray(x0_analysis, dtype=float)
    j_center, _ = eval_total(x0, problem)
    rng = np.random.default_rng(seed)
    dim = x0.size
    js = np.zeros(n_probes)
    below = 0
    for i in range(n_probes):
        direction = rng.standard_normal(dim)
        norm = np.linalg.norm(direction)
        if norm == 0.0:
            direction[0] = 1.0
            norm = 1.0
        r = radius * rng.random() ** (1.0 / dim)
        js[i], _ = eval_total(x0 + (r / norm) * direction, problem)
        if js[i] < j_center:
            below += 1
    return LocalMinimumReport(
        j_center=float(j_center),
        radius=float(radius),
        n_probes=n_probes,
        j_min=float(js.min()),
        j_mean=float(js.mean()),
        j_max=float(js.max()),
        n_below_center=below,
    )
