"""Initial-condition recovery and error diagnostics.

The posterior mean of a fitted wave model is itself a solution of the wave
equation, so its state at t = 0 recovers the initial displacement and a
forward difference in t recovers the initial speed. Errors are measured by
Riemann-sum L^p norms on regular grids; the time-dependent stability bound

    ||w(.,t) - m(.,t)||_p <= |t| ||v0 - v0_hat||_p + ||u0 - u0_hat||_p
                             + C_p c |t| ||grad(u0 - u0_hat)||_p

is checked with C_p = 1 for p in {1, 2, inf} and C_p = 3 otherwise, the
pointwise gradient norm matching p.
"""

from __future__ import annotations

import math
from typing import Callable, Optional, Union

import numpy as np

from .core import ScalarField3D
from .fdtd import InitialCondition
from .gpr import FittedModel, kriging_mean
from .kernels import (
    WaveKernelModel,
    radial_single_convolution,
    radial_single_convolution_dt,
    wave_kernel_diag,
    wave_kernel_matrix,
)

__all__ = [
    "reconstruct_u0",
    "reconstruct_v0",
    "grid_lp_norm",
    "lp_relative_error",
    "check_lp_bound",
    "speed_mismatch_terms",
    "layout_coherence",
]

Pnorm = Union[int, float]


def _mean_on_grid(fm: FittedModel, grid: ScalarField3D, t: float) -> np.ndarray:
    nodes = grid.nodes()
    return kriging_mean(fm, nodes, np.full(len(nodes), float(t)))


def reconstruct_u0(fm: FittedModel, grid: ScalarField3D) -> ScalarField3D:
    """Posterior mean at t = 0 on the grid nodes (initial displacement)."""
    out = ScalarField3D.zeros(grid.origin, grid.spacing, grid.dims)
    out.data[...] = _mean_on_grid(fm, grid, 0.0).reshape(grid.dims)
    return out


def reconstruct_v0(fm: FittedModel, grid: ScalarField3D, dt_fd: float = 1e-7) -> ScalarField3D:
    """Initial speed via a forward difference of the posterior mean at t = 0."""
    if dt_fd <= 0:
        raise ValueError("dt_fd must be positive")
    out = ScalarField3D.zeros(grid.origin, grid.spacing, grid.dims)
    m0 = _mean_on_grid(fm, grid, 0.0)
    m1 = _mean_on_grid(fm, grid, dt_fd)
    out.data[...] = ((m1 - m0) / dt_fd).reshape(grid.dims)
    return out


def _as_p(p: Pnorm) -> float:
    p = float(p)
    if not (p >= 1.0):
        raise ValueError("p must be in [1, inf]")
    return p


def grid_lp_norm(values: np.ndarray, spacing: float, p: Pnorm) -> float:
    """Riemann-sum L^p norm with volume element spacing^3 (max norm for p = inf)."""
    p = _as_p(p)
    a = np.abs(np.asarray(values, dtype=float))
    if math.isinf(p):
        return float(a.max())
    return float((np.sum(a ** p) * spacing ** 3) ** (1.0 / p))


def lp_relative_error(approx: ScalarField3D, truth: ScalarField3D, p: Pnorm) -> float:
    """||approx - truth||_p / ||truth||_p on a shared grid."""
    if approx.dims != truth.dims or abs(approx.spacing - truth.spacing) > 1e-12 or np.any(
        approx.origin != truth.origin
    ):
        raise ValueError("approx and truth must share one grid")
    den = grid_lp_norm(truth.data, truth.spacing, p)
    if den == 0.0:
        raise ValueError("truth field has zero norm")
    return grid_lp_norm(approx.data - truth.data, truth.spacing, p) / den


def bound_constant(p: Pnorm) -> float:
    """Sphere-average pairing constant: 1 for p in {1, 2, inf}, else the generic 3."""
    p = _as_p(p)
    if math.isinf(p) or p in (1.0, 2.0):
        return 1.0
    return 3.0


def _pointwise_vector_norm(vecs: np.ndarray, p: Pnorm) -> np.ndarray:
    """Norm of each gradient vector; the index matches the outer L^p norm."""
    p = _as_p(p)
    if math.isinf(p):
        return np.max(np.abs(vecs), axis=0)
    if p == 1.0:
        return np.sum(np.abs(vecs), axis=0)
    return np.sqrt(np.sum(vecs * vecs, axis=0))


def check_lp_bound(
    v0_true: ScalarField3D,
    v0_hat: ScalarField3D,
    u0_true: ScalarField3D,
    u0_hat: ScalarField3D,
    t: float,
    p: Pnorm,
    c: float,
    solution_diff: Callable[[np.ndarray, float], np.ndarray],
    grad_u0_diff: Optional[np.ndarray] = None,
    slack: float = 1e-3,
) -> dict:
    """Evaluate both sides of the stability bound on a shared grid.

    solution_diff(nodes, t) must return w(., t) - m(., t) at the grid nodes,
    where w and m are the wave solutions launched by the true and approximate
    initial pairs. grad_u0_diff, shape (3, *dims), overrides the default
    central-difference gradient of u0_true - u0_hat. The satisfaction flag
    allows a relative slack for quadrature error on both sides.
    """
    grid = u0_true
    for f in (v0_true, v0_hat, u0_hat):
        if f.dims != grid.dims or abs(f.spacing - grid.spacing) > 1e-12:
            raise ValueError("all fields must share one grid")
    h = grid.spacing
    dv = v0_true.data - v0_hat.data
    du = u0_true.data - u0_hat.data
    if grad_u0_diff is None:
        grad_u0_diff = np.stack(np.gradient(du, h), axis=0)
    grad_u0_diff = np.asarray(grad_u0_diff, dtype=float)
    if grad_u0_diff.shape != (3,) + grid.dims:
        raise ValueError("grad_u0_diff must have shape (3, *dims)")

    cp = bound_constant(p)
    term_v = abs(t) * grid_lp_norm(dv, h, p)
    term_u = grid_lp_norm(du, h, p)
    term_grad = cp * c * abs(t) * grid_lp_norm(_pointwise_vector_norm(grad_u0_diff, p), h, p)
    rhs = term_v + term_u + term_grad

    diff = solution_diff(grid.nodes(), float(t))
    lhs = grid_lp_norm(np.asarray(diff, dtype=float), h, p)

    satisfied = lhs <= rhs * (1.0 + slack) + slack
    return {
        "t": float(t),
        "p": float(_as_p(p)),
        "C_p": cp,
        "lhs": lhs,
        "rhs": rhs,
        "term_v": term_v,
        "term_u": term_u,
        "term_grad": term_grad,
        "satisfied": bool(satisfied),
        "slack": float(slack),
    }


def speed_mismatch_terms(
    u0: InitialCondition,
    v0: InitialCondition,
    c_true: float,
    c_hat: float,
    t: float,
    grid: ScalarField3D,
    p: Pnorm,
) -> dict:
    """Norms of the extra terms a wrong speed injects into the solution error.

    Propagating the same initial pair at speeds c_true and c_hat and
    differencing isolates the speed contribution: the v part through the
    propagator difference and the u part through its time derivative. The
    terms are diagnostic; no inequality is asserted for them.
    """
    nodes = grid.nodes()
    h = grid.spacing

    def v_part(c):
        if v0.kind == "zero":
            return np.zeros(len(nodes))
        _, Fv, fv = v0.squared_profile()
        out = np.empty(len(nodes))
        for i, x in enumerate(nodes):
            out[i] = radial_single_convolution(x - v0.center, t, Fv, c, f=fv)
        return out

    def u_part(c):
        if u0.kind == "zero":
            return np.zeros(len(nodes))
        fu, _, fpu = u0.squared_profile()
        out = np.empty(len(nodes))
        for i, x in enumerate(nodes):
            out[i] = radial_single_convolution_dt(x - u0.center, t, fu, c, f_deriv=fpu)
        return out

    dv = v_part(c_true) - v_part(c_hat)
    du = u_part(c_true) - u_part(c_hat)
    return {
        "t": float(t),
        "p": float(_as_p(p)),
        "c_true": float(c_true),
        "c_hat": float(c_hat),
        "v_term": grid_lp_norm(dv, h, p),
        "u_deriv_term": grid_lp_norm(du, h, p),
        "total": grid_lp_norm(dv + du, h, p),
    }


def layout_coherence(model: WaveKernelModel, sensors, times) -> np.ndarray:
    """Per-pair maximum of |k_w| over all time pairs, scaled by the largest variance.

    Entry (i, j) near zero means sensors i and j contribute nearly orthogonal
    information; pairs whose light shells never overlap give exact zeros.
    """
    sensors = np.atleast_2d(np.asarray(sensors, dtype=float))
    times = np.asarray(times, dtype=float).reshape(-1)
    q, N = len(sensors), len(times)
    X = np.repeat(sensors, N, axis=0)
    T = np.tile(times, q)
    G = wave_kernel_matrix(X, T, X, T, model)
    scale = float(np.max(wave_kernel_diag(X, T, model)))
    if scale <= 0.0:
        raise ValueError("model variance vanishes on every sample; nothing to normalize by")
    C = np.empty((q, q))
    for i in range(q):
        for j in range(q):
            blk = G[i * N : (i + 1) * N, j * N : (j + 1) * N]
            C[i, j] = np.max(np.abs(blk)) / scale
    return C
