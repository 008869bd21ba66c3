"""Time-stepping kernels: RK4 with delayed forcing, and its discrete adjoint.

The forward map and its exact transpose live here as plain loops over
float64 arrays so numba can compile them. Everything else in the package
treats these as black boxes: `rk4_delay_forward` produces the node states
and node slopes that define the piecewise-cubic continuous extension, and
`rk4_delay_adjoint` back-propagates cost sensitivities through exactly the
same arithmetic (including the Hermite weights of every delayed read), so
the returned gradient differentiates the discrete trajectory to machine
precision.

Grid conventions: step size dt, n_steps steps, and a delay of exactly
m_delay grid steps (tau = m_delay * dt, validated upstream). Stage times
then land either on grid nodes or on interval midpoints:

  - stage 1 of step n reads the delayed velocity at node n - m_delay,
  - stages 2 and 3 read the cubic-Hermite midpoint of interval
    [n - m_delay, n - m_delay + 1],
  - stage 4 reads node n - m_delay + 1.

The heat-release forcing switches on per step, method-of-steps style: all
four stages of step n are forced iff t_n >= tau (n >= m_delay). In
particular the step that *ends* exactly at tau is integrated with the
forcing off, so trajectories with t_end <= tau are bit-identical for any
heat-source strength, and no RK4 step ever straddles the switch-on
discontinuity. The stored node slope at t = tau itself is the forced
(right-limit) value, but only pressure components jump there and delayed
reads consume velocity components, whose slopes are continuous.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency normally
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


@njit(cache=True)
def _poly(u, a):
    # a1*u^5 + a2*u^4 + a3*u^3 + a4*u^2 + a5*u
    return ((((a[0] * u + a[1]) * u + a[2]) * u + a[3]) * u + a[4]) * u


@njit(cache=True)
def _poly_slope(u, a):
    return (((5.0 * a[0] * u + 4.0 * a[1]) * u + 3.0 * a[2]) * u + 2.0 * a[3]) * u + a[4]


@njit(cache=True)
def _rhs_fill(out, x, u, forcing, jpi, zeta, svec, coeffs, beta):
    # d(eta_j)/dt = jpi_j * mu_j ; d(mu_j)/dt = -jpi_j*eta_j - zeta_j*mu_j - 2 s_j q
    nm = jpi.shape[0]
    q2 = 2.0 * beta * _poly(u, coeffs) if forcing else 0.0
    for j in range(nm):
        out[j] = jpi[j] * x[nm + j]
        out[nm + j] = -jpi[j] * x[j] - zeta[j] * x[nm + j] - q2 * svec[j]


@njit(cache=True)
def _at_fill(out, y, jpi, zeta):
    # out = A^T y for the linear (unforced) part of the model
    nm = jpi.shape[0]
    for j in range(nm):
        out[j] = -jpi[j] * y[nm + j]
        out[nm + j] = jpi[j] * y[j] - zeta[j] * y[nm + j]


@njit(cache=True)
def _node_velocity(xs, k, cvec):
    # flame-base velocity sum_j c_j * eta_j at grid node k
    nm = cvec.shape[0]
    u = 0.0
    for j in range(nm):
        u += cvec[j] * xs[k, j]
    return u


@njit(cache=True)
def _mid_velocity(xs, ds, a, dt, cvec):
    # same, at the cubic-Hermite midpoint of interval [a, a+1]
    nm = cvec.shape[0]
    u = 0.0
    for j in range(nm):
        xm = 0.5 * (xs[a, j] + xs[a + 1, j]) + 0.125 * dt * (ds[a, j] - ds[a + 1, j])
        u += cvec[j] * xm
    return u


@njit(cache=True)
def rk4_delay_forward(x0, dt, n_steps, m_delay, jpi, zeta, svec, cvec, coeffs, beta):
    """Integrate the delayed Galerkin system over n_steps RK4 steps.

    Returns (states, slopes, diverged): node states and node time
    derivatives, each (n_steps+1, 2*nm), plus the index of the first step
    that produced a non-finite state (-1 if none; arrays are then only
    valid up to that step).
    """
    nm = jpi.shape[0]
    dim = 2 * nm
    xs = np.zeros((n_steps + 1, dim))
    ds = np.zeros((n_steps + 1, dim))
    for i in range(dim):
        xs[0, i] = x0[i]
    k1 = np.zeros(dim)
    k2 = np.zeros(dim)
    k3 = np.zeros(dim)
    k4 = np.zeros(dim)
    xstage = np.zeros(dim)
    diverged = -1
    for n in range(n_steps):
        forcing_n = n >= m_delay
        a = n - m_delay
        b = a + 1

        u1 = _node_velocity(xs, a, cvec) if forcing_n else 0.0
        _rhs_fill(k1, xs[n], u1, forcing_n, jpi, zeta, svec, coeffs, beta)
        for i in range(dim):
            ds[n, i] = k1[i]

        umid = _mid_velocity(xs, ds, a, dt, cvec) if forcing_n else 0.0
        for i in range(dim):
            xstage[i] = xs[n, i] + 0.5 * dt * k1[i]
        _rhs_fill(k2, xstage, umid, forcing_n, jpi, zeta, svec, coeffs, beta)
        for i in range(dim):
            xstage[i] = xs[n, i] + 0.5 * dt * k2[i]
        _rhs_fill(k3, xstage, umid, forcing_n, jpi, zeta, svec, coeffs, beta)

        u4 = _node_velocity(xs, b, cvec) if forcing_n else 0.0
        for i in range(dim):
            xstage[i] = xs[n, i] + dt * k3[i]
        _rhs_fill(k4, xstage, u4, forcing_n, jpi, zeta, svec, coeffs, beta)

        ok = True
        for i in range(dim):
            v = xs[n, i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            xs[n + 1, i] = v
            if not np.isfinite(v):
                ok = False
        if not ok:
            diverged = n
            break

    if diverged < 0:
        forcing_end = n_steps >= m_delay
        u_end = _node_velocity(xs, n_steps - m_delay, cvec) if forcing_end else 0.0
        _rhs_fill(ds[n_steps], xs[n_steps], u_end, forcing_end, jpi, zeta, svec, coeffs, beta)
    return xs, ds, diverged


@njit(cache=True)
def rk4_delay_adjoint(xs, ds, injections, dt, m_delay, jpi, zeta, svec, cvec, coeffs, beta):
    """Transpose of rk4_delay_forward applied to per-node cost sensitivities.

    `injections` is (n_steps+1, 2*nm): d(cost)/d(state) at each grid node
    (zero rows where the cost does not read the trajectory). Returns the
    gradient of the cost with respect to the initial state, excluding any
    direct dependence of the cost on x0 (the caller adds that term).

    The delayed reads make the reverse pass non-local: each midpoint read
    of interval [a, a+1] deposits transposed Hermite weights onto the
    states *and slopes* at nodes a and a+1, and each slope is itself stage
    1 of its own step, which is resolved when the sweep reaches that step.
    For m_delay == 1 the b-node of a midpoint read is the current step's
    own stage 1, so that deposit is routed straight into the local k1
    adjoint instead of the slope accumulator.
    """
    n_steps = xs.shape[0] - 1
    nm = jpi.shape[0]
    dim = 2 * nm
    xbar = injections.copy()
    dbar = np.zeros((n_steps + 1, dim))
    k1b = np.zeros(dim)
    k2b = np.zeros(dim)
    k3b = np.zeros(dim)
    k4b = np.zeros(dim)
    tmp = np.zeros(dim)
    for n in range(n_steps - 1, -1, -1):
        forcing_n = n >= m_delay
        a = n - m_delay
        b = a + 1

        u1 = _node_velocity(xs, a, cvec) if forcing_n else 0.0
        umid = _mid_velocity(xs, ds, a, dt, cvec) if forcing_n else 0.0
        u4 = _node_velocity(xs, b, cvec) if forcing_n else 0.0

        c6 = dt / 6.0
        c3 = dt / 3.0
        for i in range(dim):
            xb = xbar[n + 1, i]
            k1b[i] = c6 * xb + dbar[n, i]
            k2b[i] = c3 * xb
            k3b[i] = c3 * xb
            k4b[i] = c6 * xb
            xbar[n, i] += xb

        # stage 4: k4 = A(x_n + dt k3) + F(u4)
        _at_fill(tmp, k4b, jpi, zeta)
        for i in range(dim):
            xbar[n, i] += tmp[i]
            k3b[i] += dt * tmp[i]
        if forcing_n:
            g = 0.0
            for j in range(nm):
                g += svec[j] * k4b[nm + j]
            u4b = -2.0 * beta * _poly_slope(u4, coeffs) * g
            for j in range(nm):
                xbar[b, j] += u4b * cvec[j]

        # stage 3: k3 = A(x_n + dt/2 k2) + F(umid)
        _at_fill(tmp, k3b, jpi, zeta)
        for i in range(dim):
            xbar[n, i] += tmp[i]
            k2b[i] += 0.5 * dt * tmp[i]
        umidb = 0.0
        if forcing_n:
            g = 0.0
            for j in range(nm):
                g += svec[j] * k3b[nm + j]
            umidb += -2.0 * beta * _poly_slope(umid, coeffs) * g

        # stage 2: k2 = A(x_n + dt/2 k1) + F(umid)
        _at_fill(tmp, k2b, jpi, zeta)
        for i in range(dim):
            xbar[n, i] += tmp[i]
            k1b[i] += 0.5 * dt * tmp[i]
        if forcing_n:
            g = 0.0
            for j in range(nm):
                g += svec[j] * k2b[nm + j]
            umidb += -2.0 * beta * _poly_slope(umid, coeffs) * g
            # scatter the midpoint Hermite read onto nodes a and b
            for j in range(nm):
                w = umidb * cvec[j]
                xbar[a, j] += 0.5 * w
                xbar[b, j] += 0.5 * w
                dbar[a, j] += 0.125 * dt * w
            if b == n:
                for j in range(nm):
                    k1b[j] += -0.125 * dt * umidb * cvec[j]
            else:
                for j in range(nm):
                    dbar[b, j] += -0.125 * dt * umidb * cvec[j]

        # stage 1: k1 = A x_n + F(u1); k1 doubles as the stored node slope
        _at_fill(tmp, k1b, jpi, zeta)
        for i in range(dim):
            xbar[n, i] += tmp[i]
        if forcing_n:
            g = 0.0
            for j in range(nm):
                g += svec[j] * k1b[nm + j]
            u1b = -2.0 * beta * _poly_slope(u1, coeffs) * g
            for j in range(nm):
                xbar[a, j] += u1b * cvec[j]

    out = np.zeros(dim)
    for i in range(dim):
        out[i] = xbar[0, i]
    return out
