"""Derivative-free hyperparameter estimation over box constraints.

The marginal-likelihood surface is multimodal in (x0, c), so estimation runs
a budgeted local simplex search (Nelder-Mead with projection onto the box)
from Latin-hypercube starting points. The regularizer coordinate is searched
in log10 scale; everything else is linear. All randomness flows from one
integer seed, and starts run sequentially, so results are reproducible bit
for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize

from .core import Hyperparameters, SensorDataset
from .gpr import fit
from .kernels import WaveKernelModel

__all__ = [
    "SearchBox",
    "MultistartConfig",
    "LocalResult",
    "MultistartResult",
    "default_search_box",
    "latin_hypercube_unit",
    "local_minimize",
    "multistart_fit",
    "save_results_csv",
]


@dataclass(frozen=True)
class SearchBox:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lower/upper must be 1D arrays of equal length")
        if np.any(hi <= lo):
            raise ValueError("upper must exceed lower in every coordinate")

    @property
    def dim(self) -> int:
        return self.lower.size

    def clip(self, x):
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)


@dataclass(frozen=True)
class MultistartConfig:
    n_starts: int = 20
    seed: int = 0
    max_evals_per_start: int = 500
    x_tol: float = 1e-4


@dataclass
class LocalResult:
    x: np.ndarray
    value: float
    n_evals: int
    converged: bool


@dataclass
class MultistartResult:
    best_theta: Hyperparameters
    best_value: float
    best_start: int
    table: np.ndarray  # rows: start_id, objective value, theta vector
    locals: list


def default_search_box(parts: str) -> SearchBox:
    """Estimation hypercube for a given model family ('u', 'v', or 'uv').

    Single-part models: center in the unit cube, R in [0.03, 0.5],
    rho in [0.02, 2], sigma2 in [0.1, 5], c in [0.2, 0.8], lambda in [1e-8, 1].
    Two-part models narrow R to [0.05, 0.4] per part and lambda to
    [1e-8, 2e-2].
    """
    if parts in ("u", "v"):
        lo = [0, 0, 0, 0.03, 0.02, 0.1, 0.2, 1e-8]
        hi = [1, 1, 1, 0.50, 2.00, 5.0, 0.8, 1.0]
    elif parts == "uv":
        lo = [0, 0, 0, 0.05, 0.02, 0.1] + [0, 0, 0, 0.05, 0.02, 0.1] + [0.2, 1e-8]
        hi = [1, 1, 1, 0.40, 2.00, 5.0] + [1, 1, 1, 0.40, 2.00, 5.0] + [0.8, 2e-2]
    else:
        raise ValueError("parts must be 'u', 'v' or 'uv'")
    return SearchBox(np.array(lo, dtype=float), np.array(hi, dtype=float))


def latin_hypercube_unit(n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """n points in [0,1)^dim, one per axis-aligned slab along every dimension."""
    out = np.empty((n, dim))
    for d in range(dim):
        out[:, d] = (rng.permutation(n) + rng.uniform(size=n)) / n
    return out


def local_minimize(
    fun: Callable,
    x0,
    box: SearchBox,
    max_evals: int = 500,
    x_tol: float = 1e-4,
) -> LocalResult:
    """Budgeted Nelder-Mead descent inside a box.

    Candidate points are projected onto the box; non-finite objective values
    count as +inf so the simplex retreats from failures. Budget exhaustion
    returns the best point seen so far with converged=False. The returned
    value never exceeds fun(x0).
    """
    x0 = box.clip(x0)
    n_evals = 0

    def wrapped(x):
        nonlocal n_evals
        n_evals += 1
        v = fun(np.clip(x, box.lower, box.upper))
        return float(v) if np.isfinite(v) else np.inf

    res = minimize(
        wrapped,
        x0,
        method="Nelder-Mead",
        bounds=list(zip(box.lower, box.upper)),
        options={
            "maxfev": int(max_evals),
            "xatol": float(x_tol),
            "fatol": 1e-12,
            "adaptive": True,
        },
    )
    return LocalResult(
        x=box.clip(res.x), value=float(res.fun), n_evals=n_evals, converged=bool(res.success)
    )


def _search_transform(box: SearchBox):
    """Search-space transform: last coordinate (lambda) handled in log10."""
    lo = box.lower.copy()
    hi = box.upper.copy()
    lo[-1] = np.log10(lo[-1])
    hi[-1] = np.log10(hi[-1])
    tbox = SearchBox(lo, hi)

    def to_nat(y):
        x = np.array(y, dtype=float)
        x[-1] = 10.0 ** x[-1]
        return x

    return tbox, to_nat


def multistart_fit(
    dataset: SensorDataset,
    parts: str,
    box: Optional[SearchBox] = None,
    config: MultistartConfig = MultistartConfig(),
    objective: Optional[Callable] = None,
) -> MultistartResult:
    """Latin-hypercube multistart estimation of the kernel hyperparameters.

    parts selects the model family ('u', 'v', 'uv'); box defaults to
    default_search_box(parts). The objective is the marginal-likelihood
    value of the fitted model (Cholesky failures count as +inf). A custom
    objective(theta: Hyperparameters) -> float may be supplied for testing.

    Ties between starts are broken by the lowest start id, so identical
    (dataset, box, config) reproduce the same result exactly.
    """
    if box is None:
        box = default_search_box(parts)
    want = 2 + 6 * len(parts)
    if box.dim != want:
        raise ValueError(f"box dimension {box.dim} != {want} required for parts='{parts}'")
    if box.lower[-1] <= 0:
        raise ValueError("lambda lower bound must be positive (searched in log scale)")

    if objective is None:

        def objective(theta: Hyperparameters) -> float:
            model = WaveKernelModel.from_hyperparameters(theta)
            try:
                return fit(model, dataset).nlml
            except np.linalg.LinAlgError:
                return np.inf

    def fun_nat(vec) -> float:
        try:
            theta = Hyperparameters.from_vector(vec, parts)
        except ValueError:
            return np.inf
        return objective(theta)

    tbox, to_nat = _search_transform(box)
    rng = np.random.default_rng(config.seed)
    unit = latin_hypercube_unit(config.n_starts, tbox.dim, rng)
    starts = tbox.lower + unit * (tbox.upper - tbox.lower)

    rows, locs = [], []
    best = (np.inf, -1, None)
    for sid in range(config.n_starts):
        loc = local_minimize(
            lambda y: fun_nat(to_nat(y)),
            starts[sid],
            tbox,
            max_evals=config.max_evals_per_start,
            x_tol=config.x_tol,
        )
        x_nat = to_nat(loc.x)
        locs.append(LocalResult(x=x_nat, value=loc.value, n_evals=loc.n_evals, converged=loc.converged))
        rows.append(np.concatenate([[sid, loc.value], x_nat]))
        if loc.value < best[0]:
            best = (loc.value, sid, x_nat)
    if best[2] is None:
        raise RuntimeError("every start failed; check the dataset and the search box")
    theta = Hyperparameters.from_vector(best[2], parts)
    return MultistartResult(
        best_theta=theta,
        best_value=best[0],
        best_start=best[1],
        table=np.array(rows),
        locals=locs,
    )


def save_results_csv(result: MultistartResult, path) -> None:
    """Per-start results table: start_id, objective value, theta coordinates."""
    dim = result.table.shape[1] - 2
    header = "start_id,nlml," + ",".join(f"theta_{i}" for i in range(dim))
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in result.table:
            fh.write("%d," % int(row[0]) + ",".join("%.17g" % v for v in row[1:]) + "\n")
