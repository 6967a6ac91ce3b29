"""Gram assembly, Cholesky fitting, kriging, and the marginal-likelihood objective.

The zero-mean GP posterior given flattened observations w at points Z is

    mean(z)    = k(Z, z)^T (K + lam I)^-1 w
    cov(z, z') = k(z, z') - k(Z, z)^T (K + lam I)^-1 k(Z, z')

and the (constant-free) negative log marginal likelihood is

    nlml = w^T (K + lam I)^-1 w + log det(K + lam I).

No jitter is ever added behind the caller's back; a Cholesky failure raises.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from .core import SensorDataset, flatten_observations, spacetime_points
from .kernels import WaveKernelModel, wave_kernel_diag, wave_kernel_matrix

__all__ = ["FittedModel", "assemble_gram", "fit", "nlml", "kriging_mean", "kriging_cov", "kriging_var"]

_BLOCK = 8192  # query-point block size for large kriging evaluations


@dataclass
class FittedModel:
    model: WaveKernelModel
    X: np.ndarray
    T: np.ndarray
    w: np.ndarray
    lam: float
    chol_lower: np.ndarray
    alpha: np.ndarray
    nlml: float


def assemble_gram(model: WaveKernelModel, X, T) -> np.ndarray:
    """Kernel Gram matrix at the points (X, T), exactly symmetric.

    The strict upper triangle is mirrored onto the lower one so that
    G == G.T holds bitwise.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    T = np.asarray(T, dtype=float).reshape(-1)
    G = wave_kernel_matrix(X, T, X, T, model)
    if not np.all(np.isfinite(G)):
        raise FloatingPointError("non-finite kernel value in Gram matrix")
    GU = np.triu(G)
    return GU + np.triu(G, 1).T


def _resolve_lam(model: WaveKernelModel, lam):
    if lam is not None:
        return float(lam)
    if model.theta is not None:
        return float(model.theta.lam)
    raise ValueError("lam not given and model carries no hyperparameters")


def fit(model: WaveKernelModel, dataset: SensorDataset, lam=None) -> FittedModel:
    """Factorize K + lam I and precompute the representer weights.

    lam defaults to model.theta.lam. Raises scipy's LinAlgError when the
    regularized Gram is not numerically positive definite (increase lam or
    rescale the model; nothing is added silently).
    """
    lam = _resolve_lam(model, lam)
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    X, T = spacetime_points(dataset)
    w = flatten_observations(dataset)
    G = assemble_gram(model, X, T)
    A = G + lam * np.eye(len(w))
    L = cholesky(A, lower=True, check_finite=False)
    alpha = cho_solve((L, True), w, check_finite=False)
    val = float(w @ alpha + 2.0 * np.sum(np.log(np.diag(L))))
    return FittedModel(
        model=model, X=X, T=T, w=w, lam=lam, chol_lower=L, alpha=alpha, nlml=val
    )


def nlml(model: WaveKernelModel, dataset: SensorDataset, lam=None) -> float:
    """Convenience wrapper: fit and return the marginal-likelihood objective."""
    return fit(model, dataset, lam=lam).nlml


def kriging_mean(fitted: FittedModel, X, T) -> np.ndarray:
    """Posterior mean at query points, evaluated in blocks."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    T = np.asarray(T, dtype=float).reshape(-1)
    out = np.empty(len(T))
    for i0 in range(0, len(T), _BLOCK):
        sl = slice(i0, i0 + _BLOCK)
        Kx = wave_kernel_matrix(fitted.X, fitted.T, X[sl], T[sl], fitted.model)
        out[sl] = Kx.T @ fitted.alpha
    return out


def kriging_cov(fitted: FittedModel, Xa, Ta, Xb=None, Tb=None) -> np.ndarray:
    """Posterior covariance matrix between two query sets (defaults to (Xa, Ta))."""
    Xa = np.atleast_2d(np.asarray(Xa, dtype=float))
    Ta = np.asarray(Ta, dtype=float).reshape(-1)
    if Xb is None:
        Xb, Tb = Xa, Ta
    else:
        Xb = np.atleast_2d(np.asarray(Xb, dtype=float))
        Tb = np.asarray(Tb, dtype=float).reshape(-1)
    Kab = wave_kernel_matrix(Xa, Ta, Xb, Tb, fitted.model)
    Ka = wave_kernel_matrix(fitted.X, fitted.T, Xa, Ta, fitted.model)
    Kb = wave_kernel_matrix(fitted.X, fitted.T, Xb, Tb, fitted.model)
    Va = solve_triangular(fitted.chol_lower, Ka, lower=True, check_finite=False)
    Vb = solve_triangular(fitted.chol_lower, Kb, lower=True, check_finite=False)
    return Kab - Va.T @ Vb


def kriging_var(fitted: FittedModel, X, T) -> np.ndarray:
    """Posterior variance at query points (diagonal of kriging_cov), blocked."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    T = np.asarray(T, dtype=float).reshape(-1)
    out = np.empty(len(T))
    for i0 in range(0, len(T), _BLOCK):
        sl = slice(i0, i0 + _BLOCK)
        prior = wave_kernel_diag(X[sl], T[sl], fitted.model)
        Kx = wave_kernel_matrix(fitted.X, fitted.T, X[sl], T[sl], fitted.model)
        V = solve_triangular(fitted.chol_lower, Kx, lower=True, check_finite=False)
        out[sl] = prior - np.sum(V * V, axis=0)
    return out