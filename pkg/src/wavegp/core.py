"""Shared data containers and dataset I/O.

Conventions used across the package:

* space-time points are (x, t) with x in R^3, scalar t (t may be negative);
* sensor data lives on one common time grid, values[i, j] = reading of
  sensor i at times[j];
* flattened observation vectors are sensor-major: flat[i*N + j] = values[i, j].
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

__all__ = [
    "SpaceTimePoint",
    "SensorDataset",
    "ScalarField3D",
    "SourcePart",
    "Hyperparameters",
    "load_dataset",
    "save_dataset",
    "flatten_observations",
    "unflatten_observations",
    "spacetime_points",
]

DATASET_HEADER = "sensor_id,x,y,z,t,value"


@dataclass(frozen=True)
class SpaceTimePoint:
    """A point z = (x, t), x in R^3."""

    x: np.ndarray
    t: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.shape != (3,):
            raise ValueError("x must be a 3-vector")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", float(self.t))


@dataclass
class SensorDataset:
    """Readings of q fixed sensors on a shared time grid.

    sensors : (q, 3) array of positions
    times   : (N,) non-decreasing array
    values  : (q, N) array, values[i, j] at (sensors[i], times[j])
    noise_variance : known noise variance, or None when it is to be estimated
    """

    sensors: np.ndarray
    times: np.ndarray
    values: np.ndarray
    noise_variance: Optional[float] = None

    def __post_init__(self):
        self.sensors = np.atleast_2d(np.asarray(self.sensors, dtype=float))
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        q, n = self.values.shape
        if self.sensors.shape != (q, 3):
            raise ValueError(
                f"sensors shape {self.sensors.shape} inconsistent with values shape {self.values.shape}"
            )
        if self.times.shape != (n,):
            raise ValueError(
                f"times shape {self.times.shape} inconsistent with values shape {self.values.shape}"
            )
        if not np.all(np.isfinite(self.sensors)):
            raise ValueError("non-finite sensor coordinate")
        if not np.all(np.isfinite(self.times)):
            raise ValueError("non-finite time value")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite observation value")
        if np.any(np.diff(self.times) < 0):
            raise ValueError("times must be non-decreasing")
        if self.noise_variance is not None:
            self.noise_variance = float(self.noise_variance)
            if self.noise_variance < 0:
                raise ValueError("noise_variance must be nonnegative")

    @property
    def n_sensors(self) -> int:
        return self.sensors.shape[0]

    @property
    def n_times(self) -> int:
        return self.times.shape[0]


@dataclass
class ScalarField3D:
    """Scalar samples on a regular axis-aligned grid.

    Node (i, j, k) sits at origin + spacing * (i, j, k); data has shape dims.
    """

    origin: np.ndarray
    spacing: float
    dims: tuple
    data: np.ndarray

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=float)
        if self.origin.shape != (3,):
            raise ValueError("origin must be a 3-vector")
        self.spacing = float(self.spacing)
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")
        self.dims = tuple(int(d) for d in self.dims)
        if len(self.dims) != 3 or min(self.dims) < 1:
            raise ValueError("dims must be three positive integers")
        self.data = np.asarray(self.data, dtype=float)
        if self.data.shape != self.dims:
            raise ValueError(f"data shape {self.data.shape} != dims {self.dims}")

    @classmethod
    def zeros(cls, origin, spacing, dims) -> "ScalarField3D":
        dims = tuple(int(d) for d in dims)
        return cls(origin, spacing, dims, np.zeros(dims))

    def axes(self):
        """Per-axis node coordinates (three 1D arrays)."""
        return tuple(
            self.origin[a] + self.spacing * np.arange(self.dims[a]) for a in range(3)
        )

    def nodes(self) -> np.ndarray:
        """All node coordinates, shape (prod(dims), 3), C-order (k fastest)."""
        ax, ay, az = self.axes()
        xx, yy, zz = np.meshgrid(ax, ay, az, indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel(), zz.ravel()])

    def interpolate(self, points: np.ndarray) -> np.ndarray:
        """Trilinear interpolation at points (m, 3); points must lie in the grid box."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        rel = (pts - self.origin) / self.spacing
        hi = np.asarray(self.dims) - 1
        if np.any(rel < -1e-9) or np.any(rel > hi + 1e-9):
            raise ValueError("interpolation point outside grid box")
        rel = np.clip(rel, 0.0, np.asarray(hi, dtype=float))
        i0 = np.minimum(rel.astype(int), hi - 1)
        f = rel - i0
        out = np.zeros(len(pts))
        for da in (0, 1):
            wa = f[:, 0] if da else 1.0 - f[:, 0]
            for db in (0, 1):
                wb = f[:, 1] if db else 1.0 - f[:, 1]
                for dc in (0, 1):
                    wc = f[:, 2] if dc else 1.0 - f[:, 2]
                    out += (
                        wa
                        * wb
                        * wc
                        * self.data[i0[:, 0] + da, i0[:, 1] + db, i0[:, 2] + dc]
                    )
        return out

    def copy(self) -> "ScalarField3D":
        return replace(self, data=self.data.copy())


@dataclass
class SourcePart:
    """Radial-kernel block of a model: center, support radius, Matern scales."""

    x0: np.ndarray
    R: float
    rho: float
    sigma2: float

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float)
        if self.x0.shape != (3,):
            raise ValueError("x0 must be a 3-vector")
        for name in ("R", "rho", "sigma2"):
            v = float(getattr(self, name))
            setattr(self, name, v)
            if not v > 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class Hyperparameters:
    """Model hyperparameters: optional u-part and v-part, speed c, regularizer.

    The flat vector layout (used by the optimizer and the JSON files) is
    (x0_u, R_u, rho_u, sigma2_u, [x0_v, R_v, rho_v, sigma2_v,] c, lambda):
    dimension 8 with a single part, 14 with both.
    """

    c: float
    lam: float
    u_part: Optional[SourcePart] = None
    v_part: Optional[SourcePart] = None

    def __post_init__(self):
        self.c = float(self.c)
        self.lam = float(self.lam)
        if self.c <= 0:
            raise ValueError("c must be positive")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.u_part is None and self.v_part is None:
            raise ValueError("at least one of u_part, v_part must be present")

    @property
    def dimension(self) -> int:
        n_parts = (self.u_part is not None) + (self.v_part is not None)
        return 6 * n_parts + 2

    def to_vector(self) -> np.ndarray:
        vec = []
        for part in (self.u_part, self.v_part):
            if part is not None:
                vec.extend(part.x0)
                vec.extend([part.R, part.rho, part.sigma2])
        vec.extend([self.c, self.lam])
        return np.array(vec)

    @classmethod
    def from_vector(cls, vec, parts: str) -> "Hyperparameters":
        """parts: 'u', 'v', or 'uv' selects which blocks the vector carries."""
        return hyperparameters_from_vector(vec, parts)

    def to_json(self) -> str:
        doc = {}
        if self.u_part is not None:
            doc["x0_u"] = list(self.u_part.x0)
            doc["R_u"] = self.u_part.R
            doc["rho_u"] = self.u_part.rho
            doc["sigma2_u"] = self.u_part.sigma2
        if self.v_part is not None:
            doc["x0_v"] = list(self.v_part.x0)
            doc["R_v"] = self.v_part.R
            doc["rho_v"] = self.v_part.rho
            doc["sigma2_v"] = self.v_part.sigma2
        doc["c"] = self.c
        doc["lambda"] = self.lam
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Hyperparameters":
        doc = json.loads(text)
        u = v = None
        if "x0_u" in doc:
            u = SourcePart(doc["x0_u"], doc["R_u"], doc["rho_u"], doc["sigma2_u"])
        if "x0_v" in doc:
            v = SourcePart(doc["x0_v"], doc["R_v"], doc["rho_v"], doc["sigma2_v"])
        return cls(c=doc["c"], lam=doc["lambda"], u_part=u, v_part=v)


def _parts_of(theta: Hyperparameters) -> str:
    s = ""
    if theta.u_part is not None:
        s += "u"
    if theta.v_part is not None:
        s += "v"
    return s


def hyperparameters_from_vector(vec, parts: str) -> Hyperparameters:
    """Inverse of Hyperparameters.to_vector for a given part selection."""
    vec = np.asarray(vec, dtype=float)
    if parts not in ("u", "v", "uv"):
        raise ValueError("parts must be 'u', 'v' or 'uv'")
    need = 2 + 6 * len(parts)
    if vec.shape != (need,):
        raise ValueError(f"expected vector of length {need} for parts='{parts}'")
    blocks = {}
    off = 0
    for p in parts:
        blocks[p] = SourcePart(vec[off : off + 3], vec[off + 3], vec[off + 4], vec[off + 5])
        off += 6
    return Hyperparameters(
        c=vec[off], lam=vec[off + 1], u_part=blocks.get("u"), v_part=blocks.get("v")
    )


def flatten_observations(dataset: SensorDataset) -> np.ndarray:
    """Sensor-major flattening: flat[i*N + j] = values[i, j]."""
    return dataset.values.reshape(-1).copy()


def unflatten_observations(flat: np.ndarray, dataset: SensorDataset) -> np.ndarray:
    flat = np.asarray(flat, dtype=float)
    q, n = dataset.values.shape
    if flat.shape != (q * n,):
        raise ValueError(f"expected flat vector of length {q * n}")
    return flat.reshape(q, n)


def spacetime_points(dataset: SensorDataset) -> tuple:
    """(X, T) arrays of shape (q*N, 3) and (q*N,) in flattening order."""
    q, n = dataset.values.shape
    X = np.repeat(dataset.sensors, n, axis=0)
    T = np.tile(dataset.times, q)
    return X, T


def save_dataset(dataset: SensorDataset, path) -> None:
    """Write the CSV form (header sensor_id,x,y,z,t,value, 17 significant digits)."""
    with open(path, "w") as fh:
        fh.write(DATASET_HEADER + "\n")
        for i in range(dataset.n_sensors):
            sx, sy, sz = dataset.sensors[i]
            for j in range(dataset.n_times):
                fh.write(
                    "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n"
                    % (i, sx, sy, sz, dataset.times[j], dataset.values[i, j])
                )


def load_dataset(path, noise_variance: Optional[float] = None) -> SensorDataset:
    """Read a sensor CSV written by save_dataset (or compatible).

    Rows may appear in any order; they are grouped by sensor_id and sorted by
    time. All sensors must share one time grid and keep fixed coordinates.
    """
    with open(path) as fh:
        header = fh.readline().strip()
        if header.replace(" ", "") != DATASET_HEADER:
            raise ValueError(f"unexpected dataset header {header!r}")
        try:
            raw = np.loadtxt(fh, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise ValueError(f"malformed dataset row: {exc}") from exc
    if raw.size == 0:
        raise ValueError("empty dataset")
    if raw.shape[1] != 6:
        raise ValueError(f"expected 6 columns, got {raw.shape[1]}")
    if not np.all(np.isfinite(raw)):
        raise ValueError("non-finite observation value")
    ids = raw[:, 0]
    uniq = np.unique(ids)
    if not np.allclose(uniq, np.round(uniq)):
        raise ValueError("sensor_id must be integral")
    sensors, times_ref, values = [], None, []
    for sid in uniq:
        rows = raw[ids == sid]
        order = np.argsort(rows[:, 4], kind="stable")
        rows = rows[order]
        pos = rows[0, 1:4]
        if not np.all(rows[:, 1:4] == pos):
            raise ValueError(f"sensor {int(sid)} has inconsistent coordinates")
        t = rows[:, 4]
        if times_ref is None:
            times_ref = t
        elif t.shape != times_ref.shape or not np.all(t == times_ref):
            raise ValueError("non-uniform time grids across sensors")
        sensors.append(pos)
        values.append(rows[:, 5])
    return SensorDataset(
        sensors=np.array(sensors),
        times=times_ref,
        values=np.array(values),
        noise_variance=noise_variance,
    )
