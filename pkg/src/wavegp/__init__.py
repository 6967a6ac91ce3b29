"""Gaussian process regression with 3D wave-equation covariance kernels.

Submodules:

* core        -- datasets, fields, hyperparameter containers, CSV I/O
* kernels     -- propagated space-time covariances and quadrature oracles
* gpr         -- Gram assembly, Cholesky fitting, kriging, marginal likelihood
* hyperopt    -- box-constrained multistart hyperparameter estimation
* fdtd        -- leapfrog finite-difference simulator and sensor layouts
* pointsource -- mollified point-source signatures, rank-one likelihood, scans
* reconstruct -- initial-condition kriging, L^p errors and bounds, coherence
* cli         -- command line entry point (simulate, fit, reconstruct, locate,
                 kernel-eval, coherence)
"""

import importlib

__version__ = "0.1.0"

_SUBMODULES = (
    "core",
    "kernels",
    "gpr",
    "hyperopt",
    "fdtd",
    "pointsource",
    "reconstruct",
    "cli",
)

__all__ = [*_SUBMODULES, "__version__"]


def __getattr__(name):
    # Submodules load on first use. The CLI depends on this: BLAS thread caps
    # must reach the environment before numpy is first imported.
    if name in _SUBMODULES:
        module = importlib.import_module("." + name, __name__)
        globals()[name] = module
        return module
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(set(globals()) | set(_SUBMODULES))
