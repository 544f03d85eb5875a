"""Sharp Gagliardo-Nirenberg constant via Weinstein-quotient minimization.

The functional J(u) = |grad u|^2 |u|_{Lq}^{2 sigma} / int r^{-b}|u|^{2s+2}
(q the critical Lebesgue exponent) is scale and amplitude invariant; its
infimum over nonzero radial profiles is |V|_{Lq}^{2 sigma}/(sigma+1) for
the extremal profile V, giving the sharp constant directly.

Minimization is normalized gradient descent in the H1 (Sobolev) metric:
the raw weighted-L2 gradient is preconditioned by (I - Lap)^{-1} before
stepping, which makes the convergence rate mesh independent (the plain L2
flow stalls with conditioning ~ n^2).  Clamp at 0 every iterate, weighted
antitonic (radially nonincreasing) projection every 25 accepted steps,
backtracking halving line search.

The extremal profile is not smooth at the origin: balancing Lap V against
the singular weight forces V(r) ~ V(0) - c r^{2-b} near zero, a conical
peak for b = 1.  Minimizing sequences therefore sharpen the peak down to
the mesh scale, where face-difference quadrature slightly under-measures
the gradient, and the discrete minimum lands on a peak a few cells wide.
The minimum value is stationary and seed independent on a fixed grid but
sits below the continuum infimum by a resolution-limited margin, so the
reported constant 1/J is an upper bound on the sharp constant: the
inequality it certifies holds with margin, and campaign checks against it
are conservative.  The variational route avoids shooting on the elliptic
equation, whose zeroth-order term is itself nonlinear.

Stationarity is certified by the residual of the Euler-Lagrange equation
Lap u + c1 r^{-b} u^{2s+1} = c2 u^{q-1} with the multipliers c1, c2 the
quotient's own stationarity coefficients, evaluated without resampling.
A rescale onto the unit-coefficient normalization over the two-parameter
family a u(lambda x) is attempted for reporting convenience; when the
peak is too close to the mesh scale for resampling to survive, the raw
minimizer is returned instead (the rescale is rejected whenever it moves
the scale-invariant J by more than quadrature error).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import isotonic_regression

from .diagnostics import CheckReport, mass
from .grid import (
    RadialField, RadialGrid, apply_laplacian, grad_norm_sq, integrate,
    lebesgue_norm, weighted_potential,
)
from .params import PhysParams, _resample

__all__ = ["DegenerateField", "OptimizerOptions", "GroundStateResult",
           "weinstein_value", "minimize_weinstein", "gn_inequality_check",
           "farah_gn_check", "default_seed"]

POTENTIAL_FLOOR = 1e-300


class DegenerateField(ValueError):
    """Weinstein quotient undefined: the potential term vanished."""


@dataclass
class OptimizerOptions:
    max_iters: int = 20000
    step0: float = 0.1
    tolerance: float = 1e-8
    rearrange_every: int = 25
    patience: int = 3
    residual_tol: float = 1e-2  # stationarity residual bound for convergence


@dataclass
class GroundStateResult:
    profile: RadialField
    v_lsigmac: float
    gn_constant: float
    residual: float
    iterations: int
    j_value: float
    converged: bool
    message: str = ""


def weinstein_value(u: RadialField, p: PhysParams) -> float:
    pot = weighted_potential(u, p)
    if pot < POTENTIAL_FLOOR:
        raise DegenerateField(f"potential term {pot} below {POTENTIAL_FLOOR}")
    return grad_norm_sq(u) * lebesgue_norm(u, p.sigma_c) ** (2.0 * p.sigma) / pot


def default_seed(g: RadialGrid) -> RadialField:
    return RadialField(grid=g, values=np.exp(-g.r ** 2).astype(complex))


def _j_and_grad(vals: np.ndarray, g: RadialGrid, p: PhysParams):
    """J and its gradient in the weighted inner product, for real vals >= 0."""
    u = RadialField(grid=g, values=vals.astype(complex))
    G = grad_norm_sq(u)
    Q = integrate(vals ** p.sigma_c, g)          # |u|_q^q
    P = weighted_potential(u, p)
    if P < POTENTIAL_FLOOR or Q <= 0.0:
        raise DegenerateField("iterate collapsed to zero")
    S2s = Q ** (2.0 * p.sigma / p.sigma_c)       # |u|_q^{2 sigma}
    J = G * S2s / P
    gG = -2.0 * np.real(apply_laplacian(u))
    gS2s = 2.0 * p.sigma * Q ** ((2.0 * p.sigma - p.sigma_c) / p.sigma_c) * vals ** (p.sigma_c - 1.0)
    gP = (2.0 * p.sigma + 2.0) * g.r ** (-p.b) * vals ** (2.0 * p.sigma + 1.0)
    gJ = (gG * S2s + G * gS2s) / P - (G * S2s / P ** 2) * gP
    return J, gJ


def _antitonic(vals: np.ndarray, w: np.ndarray) -> np.ndarray:
    res = isotonic_regression(vals, weights=w, increasing=False)
    return np.clip(res.x, 0.0, None)


def _sobolev_precond(g: RadialGrid) -> np.ndarray:
    """Banded form of (I - Lap) for the H1 descent metric."""
    ab = np.zeros((3, g.n))
    ab[0, 1:] = -g.lap_upper
    ab[1, :] = 1.0 - g.lap_main
    ab[2, :-1] = -g.lap_lower
    return ab


def _el_coefficients(vals: np.ndarray, g: RadialGrid, p: PhysParams):
    """Multipliers of the Euler-Lagrange equation at a stationary point.

    Vanishing of the quotient gradient against u and against the dilation
    tangent pins both coefficients in closed form; no fitting involved.
    """
    u = RadialField(grid=g, values=vals.astype(complex))
    G = grad_norm_sq(u)
    P = weighted_potential(u, p)
    Q = integrate(vals ** p.sigma_c, g)
    if P < POTENTIAL_FLOOR or Q <= 0.0 or G <= 0.0:
        raise DegenerateField("EL coefficients of a vanishing profile")
    return (p.sigma + 1.0) * G / P, p.sigma * G / Q


def _stationarity_residual(vals: np.ndarray, g: RadialGrid, p: PhysParams) -> float:
    """Weighted residual of Lap u + c1 r^{-b}u^{2s+1} - c2 u^{q-1} = 0.

    c1, c2 are the closed-form multipliers, so this measures stationarity
    of the quotient itself and involves no resampling; normalized by the
    larger of the two nonlinear term norms.
    """
    c1, c2 = _el_coefficients(vals, g, p)
    u = RadialField(grid=g, values=vals.astype(complex))
    t_pot = c1 * g.r ** (-p.b) * vals ** (2.0 * p.sigma + 1.0)
    t_zero = c2 * vals ** (p.sigma_c - 1.0)
    resid_vec = np.real(apply_laplacian(u)) + t_pot - t_zero
    scale = max(math.sqrt(integrate(t_pot ** 2, g)),
                math.sqrt(integrate(t_zero ** 2, g)), POTENTIAL_FLOOR)
    return math.sqrt(integrate(resid_vec ** 2, g)) / scale


def _unit_el_residual(out: np.ndarray, g: RadialGrid, p: PhysParams) -> float:
    """Normalized residual of Lu + r^{-b}u^{2s+1} - u^{qc-1} = 0."""
    res_field = RadialField(grid=g, values=out.astype(complex))
    resid_vec = (np.real(apply_laplacian(res_field))
                 + g.r ** (-p.b) * out ** (2.0 * p.sigma + 1.0)
                 - out ** (p.sigma_c - 1.0))
    scale = math.sqrt(integrate(out ** (2.0 * (p.sigma_c - 1.0)), g))
    return math.sqrt(integrate(resid_vec ** 2, g)) / max(scale, POTENTIAL_FLOOR)


def _family_rescale(vals: np.ndarray, g: RadialGrid, p: PhysParams):
    """Rescale onto the elliptic equation over the (amplitude, dilation) family.

    Minimizes the unit-coefficient residual of a u(lam x) directly over
    (ln a, ln lam).  A closed-form solve exists (stationarity of the
    quotient fixes both coefficients), but inverting it amplifies
    convergence-level coefficient errors by the near-singular exponent
    matrix, so it only serves as a candidate start here.  The dilation is
    kept within a bounded window: far outside it the profile leaves the
    resolvable range and the discrete residual stops measuring anything.
    """
    from scipy.optimize import minimize as _minimize

    try:
        c1, c2 = _el_coefficients(vals, g, p)
    except DegenerateField:
        return vals, math.nan, "EL rescale degenerate", 0.0

    def transformed(ln_a: float, ln_lam: float) -> np.ndarray:
        out = math.exp(ln_a) * _resample(g, vals.astype(complex), math.exp(ln_lam)).real
        return np.clip(out, 0.0, None)

    def objective(x) -> float:
        if abs(x[0]) > 6.0 or abs(x[1]) > 1.5:
            return math.inf
        out = transformed(x[0], x[1])
        if not np.any(out > 0.0):
            return math.inf
        return _unit_el_residual(out, g, p)

    M = np.array([[2.0 * p.sigma, p.b - 2.0], [p.sigma_c - 2.0, -2.0]])
    closed = np.linalg.solve(M, [math.log(c1), math.log(c2)])
    closed = np.clip(closed, [-3.0, -1.2], [3.0, 1.2])
    start = min([np.zeros(2), closed], key=objective)
    fit = _minimize(objective, start, method="Nelder-Mead",
                    options={"maxiter": 400, "xatol": 1e-8, "fatol": 1e-12})
    x = fit.x if objective(fit.x) <= objective(start) else start
    out = _antitonic(transformed(x[0], x[1]), g.w)
    return out, _unit_el_residual(out, g, p), "", float(x[1])


def _descend(vals: np.ndarray, g: RadialGrid, p: PhysParams,
             opts: OptimizerOptions, budget: int, ab: np.ndarray):
    """Monotone backtracking line-search descent on the fine grid."""
    w = g.w
    J, gJ = _j_and_grad(vals, g, p)
    s = opts.step0
    accepted = 0
    flat_run = 0
    it = 0
    converged = False
    unorm = math.sqrt(float(np.sum(w * vals ** 2)))
    while it < budget:
        it += 1
        d = solve_banded((1, 1), ab, gJ)
        dnorm = math.sqrt(float(np.sum(w * d ** 2)))
        if dnorm == 0.0:
            converged = True
            break
        trial = np.clip(vals - (s * unorm / dnorm) * d, 0.0, None)
        try:
            Jt, gJt = _j_and_grad(trial, g, p)
        except DegenerateField:
            s *= 0.5
            continue
        if Jt < J:
            drop = (J - Jt) / J
            vals, J, gJ = trial, Jt, gJt
            accepted += 1
            s = min(s * 1.3, 1.0)
            unorm = math.sqrt(float(np.sum(w * vals ** 2)))
            if accepted % opts.rearrange_every == 0:
                mono = _antitonic(vals, w)
                try:
                    Jm, gJm = _j_and_grad(mono, g, p)
                except DegenerateField:
                    continue
                if Jm <= J:
                    vals, J, gJ = mono, Jm, gJm
            flat_run = flat_run + 1 if drop < opts.tolerance else 0
            if flat_run >= opts.patience:
                converged = True
                break
        else:
            s *= 0.5
            if s < 1e-15:
                converged = True
                break
    return vals, J, it, converged


def minimize_weinstein(p: PhysParams, g: RadialGrid, seed_profile: RadialField | None = None,
                       opts: OptimizerOptions | None = None) -> GroundStateResult:
    opts = opts or OptimizerOptions()
    if seed_profile is None:
        seed_profile = default_seed(g)
    vals = np.clip(np.real(seed_profile.values), 0.0, None)
    if not np.any(vals > 0.0):
        raise DegenerateField("seed profile has no positive part")
    ab = _sobolev_precond(g)
    vals, J, it, converged = _descend(vals, g, p, opts, opts.max_iters, ab)
    vals = _antitonic(vals, g.w)
    J = _j_and_grad(vals, g, p)[0]
    final_vals, resid, note, _ = _family_rescale(vals, g, p)
    try:
        J_final = _j_and_grad(final_vals, g, p)[0]
    except DegenerateField:
        final_vals, J_final, resid = vals, J, math.nan
        note = note or "EL rescale degenerate"
    # J is scale invariant up to quadrature, so a sane rescale moves it only
    # at discretization level; accept it only when it certifies (small
    # unit-coefficient residual), else fall back to the raw minimizer with
    # the multiplier-form stationarity residual, which needs no resampling
    if (not math.isfinite(J_final) or J_final > J * 1.02
            or not math.isfinite(resid) or resid > opts.residual_tol):
        final_vals, J_final = vals, J
        resid = _stationarity_residual(vals, g, p)
        if not note:
            note = "unit-coefficient rescale rejected; reporting raw minimizer"
    if math.isfinite(resid) and resid > opts.residual_tol:
        converged = False
        note = (note + "; " if note else "") + (
            f"stationarity residual {resid:.3e} above {opts.residual_tol:.1e}")
    j_min = min(J, J_final)
    v_lsig = ((p.sigma + 1.0) * j_min) ** (1.0 / (2.0 * p.sigma))
    return GroundStateResult(
        profile=RadialField(grid=g, values=final_vals.astype(complex)),
        v_lsigmac=v_lsig,
        gn_constant=1.0 / j_min,
        residual=resid,
        iterations=it,
        j_value=j_min,
        converged=converged,
        message=note if converged else (note + "; " if note else "") + "did not converge",
    )


def gn_inequality_check(u: RadialField, p: PhysParams,
                        gs: GroundStateResult) -> CheckReport:
    lhs = weighted_potential(u, p)
    rhs = gs.gn_constant * grad_norm_sq(u) * lebesgue_norm(u, p.sigma_c) ** (2.0 * p.sigma)
    if rhs == 0.0:
        ratio = 0.0 if lhs == 0.0 else math.inf
    else:
        ratio = lhs / rhs
    return CheckReport(name="gn_inequality", lhs=lhs, rhs=rhs, ratio=ratio,
                       passed=ratio <= 1.02, detail="ratio = lhs/rhs at the computed sharp constant")


def farah_gn_check(u: RadialField, p: PhysParams) -> CheckReport:
    lhs = weighted_potential(u, p)
    G = grad_norm_sq(u)
    M = mass(u)
    rhs = G ** (p.sigma * p.s_c + 1.0) * M ** (p.sigma * (1.0 - p.s_c))
    if rhs == 0.0:
        ratio = 0.0 if lhs == 0.0 else math.inf
    else:
        ratio = lhs / rhs
    return CheckReport(name="farah_gn", lhs=lhs, rhs=rhs, ratio=ratio,
                       passed=math.isfinite(ratio),
                       detail="witness for the gradient/mass monomial bound")
