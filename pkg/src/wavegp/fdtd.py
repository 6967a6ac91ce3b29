"""Leapfrog finite-difference simulator on the unit cube with absorbing faces.

Second-order scheme for c^-2 w_tt = Lap(w) on a regular grid over [0,1]^3:

    w^{n+1} = 2 w^n - w^{n-1} + (c dt/dx)^2 Lap_h w^n      (7-point Laplacian)
    w^1     = w^0 + dt v0 + (dt^2 c^2 / 2) Lap_h w^0        (initial ramp)

subject to the CFL condition c dt/dx <= 1/sqrt(3). Boundaries use the
first-order absorbing update (one-way wave equation along the inward normal),
applied to faces first, then edges and corners with one-sided diagonal
neighbors. Sensors read the field by trilinear interpolation at a decimated
output rate.

Also here: initial-condition families (radial ring / raised cosine), their
exact free-space solutions for validation, maximin Latin-hypercube sensor
layouts, and observation noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import ScalarField3D, SensorDataset
from .kernels import radial_single_convolution, radial_single_convolution_dt

__all__ = [
    "FDTDConfig",
    "InitialCondition",
    "ring_cosine",
    "raised_cosine",
    "zero_ic",
    "make_ic",
    "grid_for",
    "simulate",
    "analytic_solution",
    "discrete_energy",
    "latin_hypercube_layout",
    "add_noise",
]


@dataclass(frozen=True)
class FDTDConfig:
    c: float = 0.5
    dx: float = 1.0 / 23.0
    dt: float = 1.0 / 200.0
    t_final: float = 1.5
    output_rate: float = 50.0

    def __post_init__(self):
        if min(self.c, self.dx, self.dt, self.t_final, self.output_rate) <= 0:
            raise ValueError("all FDTD parameters must be positive")
        if self.cfl > 1.0 / math.sqrt(3.0) + 1e-12:
            raise ValueError(
                f"CFL number c*dt/dx = {self.cfl:.4f} exceeds 1/sqrt(3); refine dt"
            )
        decim = 1.0 / (self.output_rate * self.dt)
        if abs(decim - round(decim)) > 1e-9:
            raise ValueError("output_rate must divide the step rate 1/dt")

    @property
    def cfl(self) -> float:
        return self.c * self.dt / self.dx

    @property
    def n_nodes(self) -> int:
        n = 1.0 / self.dx
        if abs(n - round(n)) > 1e-9:
            raise ValueError("1/dx must be an integer so the grid covers [0,1]")
        return int(round(n)) + 1


def grid_for(cfg: FDTDConfig) -> tuple:
    """(origin, spacing, dims) of the simulation grid."""
    n = cfg.n_nodes
    return np.zeros(3), cfg.dx, (n, n, n)


@dataclass(frozen=True)
class InitialCondition:
    """Radial profile about a center.

    kind 'ring_cosine':   A (1 + cos(2 pi (r - Rm)/(R2 - R1))) on R1 <= r <= R2,
                          Rm = (R1 + R2)/2; zero elsewhere. C^1, peak 2A at Rm.
    kind 'raised_cosine': A (1 + cos(pi r / R)) on r <= R; peak 2A at the center.
    kind 'zero':          identically zero.
    """

    kind: str
    center: np.ndarray = (0.0, 0.0, 0.0)
    amplitude: float = 0.0
    radii: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "radii", tuple(float(r) for r in self.radii))
        if self.kind == "ring_cosine":
            if len(self.radii) != 2 or not 0 < self.radii[0] < self.radii[1]:
                raise ValueError("ring_cosine needs radii (R1, R2) with 0 < R1 < R2")
        elif self.kind == "raised_cosine":
            if len(self.radii) != 1 or self.radii[0] <= 0:
                raise ValueError("raised_cosine needs radii (R,) with R > 0")
        elif self.kind != "zero":
            raise ValueError(f"unknown initial condition kind {self.kind!r}")

    def profile(self, r):
        """Radial profile p(r), vectorized."""
        r = np.asarray(r, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(r)
        A = self.amplitude
        if self.kind == "raised_cosine":
            (R,) = self.radii
            return np.where(r <= R, A * (1.0 + np.cos(math.pi * np.minimum(r, R) / R)), 0.0)
        R1, R2 = self.radii
        Rm = 0.5 * (R1 + R2)
        a = 2.0 * math.pi / (R2 - R1)
        inside = (r >= R1) & (r <= R2)
        return np.where(inside, A * (1.0 + np.cos(a * (np.clip(r, R1, R2) - Rm))), 0.0)

    def profile_deriv(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(r)
        A = self.amplitude
        if self.kind == "raised_cosine":
            (R,) = self.radii
            return np.where(
                r <= R, -A * (math.pi / R) * np.sin(math.pi * np.minimum(r, R) / R), 0.0
            )
        R1, R2 = self.radii
        Rm = 0.5 * (R1 + R2)
        a = 2.0 * math.pi / (R2 - R1)
        inside = (r >= R1) & (r <= R2)
        return np.where(inside, -A * a * np.sin(a * (np.clip(r, R1, R2) - Rm)), 0.0)

    def evaluate(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return self.profile(np.linalg.norm(pts - self.center, axis=-1))

    def gradient(self, points) -> np.ndarray:
        """Analytic gradient (both families have p'(0) = 0, so it is continuous)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        d = pts - self.center
        r = np.linalg.norm(d, axis=-1)
        rp = self.profile_deriv(r)
        rs = np.where(r > 0, r, 1.0)
        return (rp / rs)[:, None] * d

    def squared_profile(self):
        """(f, F, fp): profile, antiderivative, derivative in squared radius s = r^2.

        f(s) = p(sqrt(s)), F(s) = int_0^s f, used by the exact spherical-mean
        propagation formulas.
        """
        if self.kind == "zero":
            z = lambda s: np.zeros_like(np.asarray(s, dtype=float))
            return z, z, z
        A = self.amplitude

        def f(s):
            return self.profile(np.sqrt(np.maximum(np.asarray(s, dtype=float), 0.0)))

        if self.kind == "raised_cosine":
            (R,) = self.radii
            b = math.pi / R

            def F(s):
                W = np.minimum(np.sqrt(np.maximum(np.asarray(s, dtype=float), 0.0)), R)
                return 2.0 * A * (
                    0.5 * W * W + (W / b) * np.sin(b * W) + (np.cos(b * W) - 1.0) / (b * b)
                )

            def fp(s):
                s = np.asarray(s, dtype=float)
                w = np.sqrt(np.maximum(s, 0.0))
                small = w < 1e-12
                ws = np.where(small, 1.0, w)
                out = np.where(
                    w <= R,
                    np.where(
                        small, -A * b * b / 2.0, -A * b * np.sin(b * np.minimum(ws, R)) / (2.0 * ws)
                    ),
                    0.0,
                )
                return out

            return f, F, fp

        R1, R2 = self.radii
        Rm = 0.5 * (R1 + R2)
        a = 2.0 * math.pi / (R2 - R1)

        def F(s):
            W = np.clip(np.sqrt(np.maximum(np.asarray(s, dtype=float), 0.0)), R1, R2)
            # int_{R1}^{W} w (1 + cos(a (w - Rm))) dw, closed form; the cosine
            # antiderivative at R1 contributes the constant 1/a^2
            trig = (W / a) * np.sin(a * (W - Rm)) + np.cos(a * (W - Rm)) / (a * a) + 1.0 / (a * a)
            return 2.0 * A * (0.5 * (W * W - R1 * R1) + trig)

        def fp(s):
            s = np.asarray(s, dtype=float)
            w = np.sqrt(np.maximum(s, 0.0))
            inside = (w >= R1) & (w <= R2)
            ws = np.where(w > 0, w, 1.0)
            return np.where(inside, -A * a * np.sin(a * (np.clip(w, R1, R2) - Rm)) / (2.0 * ws), 0.0)

        return f, F, fp


def ring_cosine(center, R1: float, R2: float, amplitude: float) -> InitialCondition:
    return InitialCondition("ring_cosine", center, amplitude, (R1, R2))


def raised_cosine(center, R: float, amplitude: float) -> InitialCondition:
    return InitialCondition("raised_cosine", center, amplitude, (R,))


def zero_ic() -> InitialCondition:
    return InitialCondition("zero")


def make_ic(ic: InitialCondition, origin, spacing, dims) -> ScalarField3D:
    """Sample an initial condition onto a grid."""
    fld = ScalarField3D.zeros(origin, spacing, dims)
    fld.data[...] = ic.evaluate(fld.nodes()).reshape(dims)
    return fld


def analytic_solution(u0: InitialCondition, v0: InitialCondition, c: float, points, times) -> np.ndarray:
    """Exact free-space solution w(x, t) for radial initial data, shape (len(points), len(times)).

    w = (d/dt)(spherical mean) applied to u0 plus the spherical mean applied
    to v0, each about its own center.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    times = np.asarray(times, dtype=float).reshape(-1)
    out = np.zeros((len(pts), len(times)))
    fu, Fu, fpu = u0.squared_profile()
    fv, Fv, _ = v0.squared_profile()
    for i, x in enumerate(pts):
        du = x - u0.center
        dv = x - v0.center
        for j, t in enumerate(times):
            val = 0.0
            if u0.kind != "zero":
                val += radial_single_convolution_dt(du, t, fu, c, f_deriv=fpu)
            if v0.kind != "zero":
                val += radial_single_convolution(dv, t, Fv, c, f=fv)
            out[i, j] = val
    return out


def _laplacian(w: np.ndarray, dx: float) -> np.ndarray:
    lap = np.zeros_like(w)
    lap[1:-1, 1:-1, 1:-1] = (
        w[2:, 1:-1, 1:-1]
        + w[:-2, 1:-1, 1:-1]
        + w[1:-1, 2:, 1:-1]
        + w[1:-1, :-2, 1:-1]
        + w[1:-1, 1:-1, 2:]
        + w[1:-1, 1:-1, :-2]
        - 6.0 * w[1:-1, 1:-1, 1:-1]
    ) / (dx * dx)
    return lap


def _absorbing_update(new: np.ndarray, old: np.ndarray, cfg: FDTDConfig) -> None:
    """First-order one-way updates on faces, then edges, then corners (in place)."""

    def beta(scale):
        d = scale * cfg.dx
        return (cfg.c * cfg.dt - d) / (cfg.c * cfg.dt + d)

    b1 = beta(1.0)
    s = slice(1, -1)
    # faces: neighbor one node along the inward normal
    new[0, s, s] = old[1, s, s] + b1 * (new[1, s, s] - old[0, s, s])
    new[-1, s, s] = old[-2, s, s] + b1 * (new[-2, s, s] - old[-1, s, s])
    new[s, 0, s] = old[s, 1, s] + b1 * (new[s, 1, s] - old[s, 0, s])
    new[s, -1, s] = old[s, -2, s] + b1 * (new[s, -2, s] - old[s, -1, s])
    new[s, s, 0] = old[s, s, 1] + b1 * (new[s, s, 1] - old[s, s, 0])
    new[s, s, -1] = old[s, s, -2] + b1 * (new[s, s, -2] - old[s, s, -1])
    # edges: diagonal neighbor across the two clamped axes
    b2 = beta(math.sqrt(2.0))
    for ax in range(3):
        idx = [s, s, s]
        for ia in (0, -1):
            for ib in (0, -1):
                ja = 1 if ia == 0 else -2
                jb = 1 if ib == 0 else -2
                ii = list(idx)
                jj = list(idx)
                a1, a2 = [a for a in range(3) if a != ax]
                ii[a1], ii[a2] = ia, ib
                jj[a1], jj[a2] = ja, jb
                new[tuple(ii)] = old[tuple(jj)] + b2 * (new[tuple(jj)] - old[tuple(ii)])
    # corners: body-diagonal neighbor
    b3 = beta(math.sqrt(3.0))
    for ia in (0, -1):
        for ib in (0, -1):
            for ic in (0, -1):
                jn = tuple(1 if v == 0 else -2 for v in (ia, ib, ic))
                new[ia, ib, ic] = old[jn] + b3 * (new[jn] - old[ia, ib, ic])


def _trilinear(arr: np.ndarray, rel: np.ndarray) -> np.ndarray:
    hi = np.asarray(arr.shape) - 1
    i0 = np.minimum(rel.astype(int), hi - 1)
    f = rel - i0
    out = np.zeros(len(rel))
    for da in (0, 1):
        wa = f[:, 0] if da else 1.0 - f[:, 0]
        for db in (0, 1):
            wb = f[:, 1] if db else 1.0 - f[:, 1]
            for dc in (0, 1):
                wc = f[:, 2] if dc else 1.0 - f[:, 2]
                out += wa * wb * wc * arr[i0[:, 0] + da, i0[:, 1] + db, i0[:, 2] + dc]
    return out


def simulate(
    cfg: FDTDConfig,
    u0_field: ScalarField3D,
    v0_field: ScalarField3D,
    sensors,
    snapshots_out: Optional[dict] = None,
    snapshot_times=(),
) -> SensorDataset:
    """Run the leapfrog scheme and return noiseless sensor traces.

    Sensor readings are taken by trilinear interpolation every
    1/(output_rate dt) steps, n_out = round(t_final * output_rate) samples
    starting at t = 0. When snapshot_times is given, full fields at the
    nearest time steps are stored into snapshots_out (keyed by requested time).
    """
    origin, spacing, dims = grid_for(cfg)
    for name, fld in (("u0", u0_field), ("v0", v0_field)):
        if fld.dims != dims or abs(fld.spacing - spacing) > 1e-12 or np.any(fld.origin != origin):
            raise ValueError(f"{name} field grid does not match the FDTD configuration")
    sensors = np.atleast_2d(np.asarray(sensors, dtype=float))
    if np.any(sensors < 0.0) or np.any(sensors > 1.0):
        raise ValueError("sensors must lie inside the unit cube")
    rel = sensors / cfg.dx

    n_steps = int(round(cfg.t_final / cfg.dt))
    decim = int(round(1.0 / (cfg.output_rate * cfg.dt)))
    n_out = int(round(cfg.t_final * cfg.output_rate))
    times = np.arange(n_out) / cfg.output_rate
    values = np.zeros((len(sensors), n_out))

    snap_steps = {}
    for ts in snapshot_times:
        snap_steps[int(round(ts / cfg.dt))] = float(ts)

    w_prev = u0_field.data.copy()
    values[:, 0] = _trilinear(w_prev, rel)
    if 0 in snap_steps and snapshots_out is not None:
        snapshots_out[snap_steps[0]] = ScalarField3D(origin, spacing, dims, w_prev.copy())

    # first step from the initial speed (second-order ramp)
    w = w_prev + cfg.dt * v0_field.data + 0.5 * (cfg.c * cfg.dt) ** 2 * _laplacian(w_prev, cfg.dx)
    _absorbing_update(w, w_prev, cfg)

    out_idx = 1
    for step in range(1, n_steps + 1):
        if step % decim == 0 and out_idx < n_out and step * cfg.dt <= times[-1] + 1e-12:
            values[:, out_idx] = _trilinear(w, rel)
            out_idx += 1
        if snapshots_out is not None and step in snap_steps:
            snapshots_out[snap_steps[step]] = ScalarField3D(origin, spacing, dims, w.copy())
        if step == n_steps:
            break
        w_next = 2.0 * w - w_prev + (cfg.c * cfg.dt) ** 2 * _laplacian(w, cfg.dx)
        _absorbing_update(w_next, w, cfg)
        w_prev, w = w, w_next

    return SensorDataset(sensors=sensors, times=times, values=values)


def discrete_energy(w_old: np.ndarray, w_new: np.ndarray, cfg: FDTDConfig) -> float:
    """Two-level interior energy conserved by the leapfrog scheme (up to boundaries)."""
    dt, dx, c = cfg.dt, cfg.dx, cfg.c
    kin = np.sum(((w_new - w_old) / dt) ** 2)
    grad = 0.0
    for ax in range(3):
        d_new = np.diff(w_new, axis=ax) / dx
        d_old = np.diff(w_old, axis=ax) / dx
        grad += np.sum(d_new * d_old)
    return 0.5 * dx ** 3 * (kin / c ** 2 + grad)


def latin_hypercube_layout(
    q: int, lo=(0.2, 0.2, 0.2), hi=(0.8, 0.8, 0.8), seed: int = 0, n_restarts: int = 1000
) -> np.ndarray:
    """Maximin Latin-hypercube sensor positions in an axis-aligned box.

    Draws n_restarts LHS designs from the seed and keeps the one whose
    smallest pairwise distance is largest.
    """
    if q < 1:
        raise ValueError("q must be at least 1")
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    rng = np.random.default_rng(seed)
    best, best_score = None, -np.inf
    for _ in range(max(1, n_restarts)):
        pts = np.empty((q, 3))
        for d in range(3):
            pts[:, d] = (rng.permutation(q) + rng.uniform(size=q)) / q
        if q == 1:
            score = np.inf
        else:
            diff = pts[:, None, :] - pts[None, :, :]
            dist = np.sqrt(np.sum(diff * diff, axis=-1))
            score = np.min(dist[np.triu_indices(q, 1)])
        if score > best_score:
            best, best_score = pts, score
        if q == 1:
            break
    return lo + best * (hi - lo)


def add_noise(dataset: SensorDataset, sigma: float, seed: int = 0) -> SensorDataset:
    """Additive iid centered Gaussian noise; records noise_variance = sigma^2."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    rng = np.random.default_rng(seed)
    noisy = dataset.values + sigma * rng.standard_normal(dataset.values.shape)
    return SensorDataset(
        sensors=dataset.sensors.copy(),
        times=dataset.times.copy(),
        values=noisy,
        noise_variance=sigma * sigma,
    )
