"""Command line front end.

Subcommands: simulate, fit, reconstruct, locate, kernel-eval, coherence.

Configuration files are plain text, one dotted key per line::

    fdtd.c = 0.5            # comments run to end of line
    ic.u.kind = ring_cosine
    ic.u.center = 0.5 0.5 0.5

Values are numbers, words, or whitespace/comma separated number lists. Every
subcommand accepts ``--config`` (a file path, or ``preset:case1`` /
``preset:case2`` for the bundled test cases) plus repeatable
``--set key=value`` overrides; dedicated flags such as ``--seed`` win over
both. Each run writes ``<out>.manifest.json`` recording the resolved
configuration, its sha256, all seeds and package versions, so any output can
be regenerated bit for bit. Manifests carry no timestamps.

``--threads N`` caps BLAS worker pools. The flag is honoured from the raw
command line at import time because the cap only works if it reaches the
environment before numpy loads.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from importlib import resources

from . import __version__


def _apply_thread_cap(n: int) -> None:
    for var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
    ):
        os.environ[var] = str(n)


# Must run before any numpy import, hence at module import time.
if "numpy" not in sys.modules and "--threads" in sys.argv[:-1]:
    _raw = sys.argv[sys.argv.index("--threads") + 1]
    if _raw.isdigit() and int(_raw) > 0:
        _apply_thread_cap(int(_raw))


# ----------------------------------------------------------------- config

_MISSING = object()


class Config:
    """Flat table of dotted keys mapped to raw value strings."""

    def __init__(self, table=None):
        self.table = dict(table or {})

    def override(self, key, value):
        self.table[str(key).strip()] = str(value).strip()

    def has(self, key):
        return key in self.table

    def raw(self, key, default=_MISSING):
        if key in self.table:
            return self.table[key]
        if default is _MISSING:
            raise ValueError(f"missing config key {key!r}")
        return default

    def number(self, key, default=_MISSING):
        v = self.raw(key, default)
        if not isinstance(v, str):
            return None if v is None else float(v)
        try:
            return float(v)
        except ValueError:
            raise ValueError(f"config key {key!r}: expected a number, got {v!r}") from None

    def integer(self, key, default=_MISSING):
        v = self.number(key, default)
        if v is None:
            return None
        if v != int(v):
            raise ValueError(f"config key {key!r}: expected an integer, got {v}")
        return int(v)

    def word(self, key, default=_MISSING):
        v = self.raw(key, default)
        return v if v is None else str(v)

    def numbers(self, key, default=_MISSING):
        v = self.raw(key, default)
        if v is None:
            return None
        if not isinstance(v, str):
            return [float(x) for x in v]
        try:
            return [float(x) for x in v.replace(",", " ").split()]
        except ValueError:
            raise ValueError(f"config key {key!r}: expected numbers, got {v!r}") from None

    def triple(self, key, default=_MISSING):
        vals = self.numbers(key, default)
        if vals is None:
            return None
        if len(vals) != 3:
            raise ValueError(f"config key {key!r}: expected 3 numbers")
        return tuple(vals)


def parse_config_text(text: str) -> Config:
    table = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {line.strip()!r}")
        key, _, value = body.partition("=")
        key = key.strip()
        if not key:
            raise ValueError(f"config line {lineno}: empty key")
        table[key] = value.strip()
    return Config(table)


def load_config(spec) -> Config:
    """Read a config file; ``preset:<name>`` loads a bundled preset."""
    if spec is None:
        return Config()
    spec = str(spec)
    if spec.startswith("preset:"):
        name = spec.split(":", 1)[1]
        ref = resources.files("wavegp.presets").joinpath(name + ".cfg")
        if not ref.is_file():
            raise FileNotFoundError(f"no bundled preset {name!r}")
        return parse_config_text(ref.read_text())
    with open(spec) as fh:
        return parse_config_text(fh.read())


def _config_from_args(args) -> Config:
    cfg = load_config(getattr(args, "config", None))
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ValueError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        cfg.override(key, value)
    return cfg


# --------------------------------------------------------------- manifest


def config_sha256(cfg: Config) -> str:
    canon = "".join(f"{k} = {cfg.table[k]}\n" for k in sorted(cfg.table))
    return hashlib.sha256(canon.encode()).hexdigest()


def write_manifest(anchor_path, command, cfg, seeds, outputs):
    """Drop <anchor>.manifest.json next to the primary output."""
    import numpy
    import scipy

    manifest = {
        "command": command,
        "config": {k: cfg.table[k] for k in sorted(cfg.table)},
        "config_sha256": config_sha256(cfg),
        "seeds": {k: int(v) for k, v in sorted(seeds.items())},
        "versions": {
            "python": "%d.%d.%d" % sys.version_info[:3],
            "numpy": numpy.__version__,
            "scipy": scipy.__version__,
            "wavegp": __version__,
        },
        "outputs": sorted(str(p) for p in outputs),
    }
    path = str(anchor_path) + ".manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _write_field_csv(path, field):
    import numpy as np

    arr = np.column_stack([field.nodes(), field.data.reshape(-1)])
    np.savetxt(path, arr, fmt="%.17g", delimiter=",", header="x,y,z,value", comments="")


# --------------------------------------------------------------- simulate


def _initial_condition(cfg: Config, side: str):
    from . import fdtd

    kind = cfg.word(f"ic.{side}.kind", "zero")
    if kind == "zero":
        return fdtd.zero_ic()
    center = cfg.triple(f"ic.{side}.center")
    radii = cfg.numbers(f"ic.{side}.radii")
    amp = cfg.number(f"ic.{side}.amplitude", 1.0)
    if kind == "ring_cosine":
        if len(radii) != 2:
            raise ValueError(f"ic.{side}.radii: ring_cosine needs two radii")
        return fdtd.ring_cosine(center, radii[0], radii[1], amp)
    if kind == "raised_cosine":
        if len(radii) != 1:
            raise ValueError(f"ic.{side}.radii: raised_cosine needs one radius")
        return fdtd.raised_cosine(center, radii[0], amp)
    raise ValueError(f"ic.{side}.kind: unknown kind {kind!r}")


def _sensor_array(cfg: Config, layout_seed):
    import numpy as np

    from .fdtd import latin_hypercube_layout

    if cfg.has("sensors.positions"):
        flat = cfg.numbers("sensors.positions")
        if len(flat) % 3:
            raise ValueError("sensors.positions: expected a flat list of x y z triples")
        return np.asarray(flat, dtype=float).reshape(-1, 3)
    count = cfg.integer("sensors.count", 30)
    seed = layout_seed if layout_seed is not None else cfg.integer("sensors.layout_seed", 0)
    lo = cfg.triple("sensors.lo", (0.2, 0.2, 0.2))
    hi = cfg.triple("sensors.hi", (0.8, 0.8, 0.8))
    return latin_hypercube_layout(count, lo=lo, hi=hi, seed=seed)


def _fdtd_config(cfg: Config):
    from .fdtd import FDTDConfig

    return FDTDConfig(
        c=cfg.number("fdtd.c", 0.5),
        dx=cfg.number("fdtd.dx", 1.0 / 23.0),
        dt=cfg.number("fdtd.dt", 1.0 / 200.0),
        t_final=cfg.number("fdtd.t_final", 1.5),
        output_rate=cfg.number("fdtd.output_rate", 50.0),
    )


def _cmd_simulate(args):
    import numpy as np

    from .core import save_dataset
    from .fdtd import add_noise, grid_for, make_ic, simulate

    cfg = _config_from_args(args)
    sim = _fdtd_config(cfg)
    ic_u = _initial_condition(cfg, "u")
    ic_v = _initial_condition(cfg, "v")
    sensors = _sensor_array(cfg, args.layout_seed)

    sigma = args.noise_sigma
    if sigma is None:
        sigma = cfg.number("noise.sigma", 0.0)
    noise_seed = args.seed if args.seed is not None else cfg.integer("noise.seed", 0)

    engine = cfg.word("simulate.engine", "fdtd")
    outputs = [args.out]
    if engine == "fdtd":
        snap_times = []
        if args.snapshot_times:
            snap_times = [float(s) for s in args.snapshot_times.replace(",", " ").split()]
        snapshots = {} if snap_times else None
        origin, spacing, dims = grid_for(sim)
        dataset = simulate(sim, make_ic(ic_u, origin, spacing, dims),
                           make_ic(ic_v, origin, spacing, dims), sensors,
                           snapshots_out=snapshots, snapshot_times=snap_times)
        if snap_times:
            for ts, field in sorted(snapshots.items()):
                path = f"{args.snapshot_prefix}_t{ts:g}.csv"
                idx = np.indices(field.dims).reshape(3, -1).T
                arr = np.column_stack([idx, field.data.reshape(-1)])
                np.savetxt(path, arr, fmt=["%d", "%d", "%d", "%.17g"],
                           delimiter=",", header="i,j,k,value", comments="")
                outputs.append(path)
    elif engine == "analytic":
        if args.snapshot_times:
            raise ValueError("snapshots need simulate.engine = fdtd")
        from .core import SensorDataset
        from .fdtd import analytic_solution

        times = np.arange(int(round(sim.t_final * sim.output_rate))) / sim.output_rate
        values = analytic_solution(ic_u, ic_v, sim.c, sensors, times)
        dataset = SensorDataset(sensors=sensors, times=times, values=values,
                                noise_variance=0.0)
    else:
        raise ValueError(f"simulate.engine: unknown engine {engine!r}")

    if sigma > 0.0:
        dataset = add_noise(dataset, sigma, seed=noise_seed)
    save_dataset(dataset, args.out)

    write_manifest(args.out, "simulate", cfg,
                   {"noise": noise_seed,
                    "layout": args.layout_seed if args.layout_seed is not None
                    else cfg.integer("sensors.layout_seed", 0)},
                   outputs)
    q, n = dataset.values.shape
    print(f"wrote {args.out}: {q} sensors x {n} samples "
          f"(engine {engine}, noise sigma {sigma:g})")
    return 0


# -------------------------------------------------------------------- fit


def _cmd_fit(args):
    import numpy as np

    from .core import load_dataset
    from .hyperopt import (MultistartConfig, SearchBox, default_search_box,
                           multistart_fit, save_results_csv)

    cfg = _config_from_args(args)
    dataset = load_dataset(args.dataset)

    box = default_search_box(args.model)
    if cfg.has("fit.lower") or cfg.has("fit.upper"):
        lo = cfg.numbers("fit.lower", list(box.lower))
        hi = cfg.numbers("fit.upper", list(box.upper))
        box = SearchBox(np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))

    opts = MultistartConfig(n_starts=args.multistart, seed=args.seed,
                            max_evals_per_start=args.max_evals)
    result = multistart_fit(dataset, args.model, box=box, config=opts)

    with open(args.out, "w") as fh:
        fh.write(result.best_theta.to_json())
        fh.write("\n")
    outputs = [args.out]
    if args.results_csv:
        save_results_csv(result, args.results_csv)
        outputs.append(args.results_csv)

    write_manifest(args.out, "fit", cfg, {"multistart": args.seed}, outputs)
    print(f"wrote {args.out}: model {args.model}, nlml {result.best_value:.6f} "
          f"(best of {args.multistart} starts: id {result.best_start})")
    return 0


# ------------------------------------------------------------ reconstruct


def _load_theta(path):
    from .core import Hyperparameters

    with open(path) as fh:
        return Hyperparameters.from_json(fh.read())


def _recon_grid(cfg, args, theta):
    """Grid covering the fitted source: x0 +/- (R + 3 spacing) by default."""
    import numpy as np

    spacing = args.spacing if args.spacing is not None else cfg.number("recon.spacing", 0.01)
    if args.origin is not None or args.dims is not None:
        if args.origin is None or args.dims is None:
            raise ValueError("--origin and --dims must be given together")
        origin = tuple(float(s) for s in args.origin.replace(",", " ").split())
        dims = tuple(int(s) for s in args.dims.replace(",", " ").split())
        if len(origin) != 3 or len(dims) != 3:
            raise ValueError("--origin and --dims each need 3 values")
        return origin, spacing, dims
    if cfg.has("recon.origin") and cfg.has("recon.dims"):
        origin = cfg.triple("recon.origin")
        dims = tuple(int(v) for v in cfg.numbers("recon.dims"))
        return origin, spacing, dims
    part = theta.u_part if theta.u_part is not None else theta.v_part
    half = cfg.number("recon.halfwidth", part.R + 3.0 * spacing)
    m = int(round(half / spacing))
    origin = tuple(np.asarray(part.x0, dtype=float) - m * spacing)
    return origin, spacing, (2 * m + 1,) * 3


def _truth_fields(truth_cfg, grid):
    """Sample the configured initial conditions on the reconstruction grid."""
    from .fdtd import make_ic

    origin, spacing, dims = grid
    out = {}
    for side in ("u", "v"):
        if truth_cfg.word(f"ic.{side}.kind", "zero") == "zero":
            continue
        ic = _initial_condition(truth_cfg, side)
        out[side] = make_ic(ic, origin, spacing, dims)
    return out


def _cmd_reconstruct(args):
    import math

    from .core import ScalarField3D, load_dataset
    from .gpr import fit
    from .kernels import WaveKernelModel
    from .reconstruct import lp_relative_error, reconstruct_u0, reconstruct_v0

    cfg = _config_from_args(args)
    theta = _load_theta(args.theta)

    dataset = load_dataset(args.dataset)
    grid = _recon_grid(cfg, args, theta)
    origin, spacing, dims = grid
    grid_field = ScalarField3D.zeros(origin, spacing, dims)

    model = WaveKernelModel.from_hyperparameters(theta)
    fitted = fit(model, dataset)

    outputs = []
    fields = {}
    if theta.u_part is not None:
        fields["u"] = reconstruct_u0(fitted, grid_field)
        _write_field_csv(args.out_u, fields["u"])
        outputs.append(args.out_u)
    if theta.v_part is not None:
        fields["v"] = reconstruct_v0(fitted, grid_field)
        _write_field_csv(args.out_v, fields["v"])
        outputs.append(args.out_v)
    if not fields:
        raise ValueError("hyperparameters contain neither a u part nor a v part")

    if args.truth_config:
        truth = _truth_fields(load_config(args.truth_config), grid)
        errors = {}
        for side, field in fields.items():
            if side not in truth:
                continue
            errors[side] = {
                "e1": lp_relative_error(field, truth[side], 1),
                "e2": lp_relative_error(field, truth[side], 2),
                "einf": lp_relative_error(field, truth[side], math.inf),
            }
        errors_path = args.errors_out or "errors.json"
        with open(errors_path, "w") as fh:
            json.dump(errors, fh, indent=2, sort_keys=True)
            fh.write("\n")
        outputs.append(errors_path)
        for side, err in sorted(errors.items()):
            print(f"{side}0 relative errors: e1 {err['e1']:.4f} "
                  f"e2 {err['e2']:.4f} einf {err['einf']:.4f}")

    for zval in args.slice_z or []:
        import numpy as np

        for side, field in fields.items():
            k = int(round((zval - origin[2]) / spacing))
            if not 0 <= k < dims[2]:
                raise ValueError(f"--slice-z {zval:g} lies outside the grid")
            x, y, _ = field.axes()
            base = args.out_u if side == "u" else args.out_v
            path = f"{os.path.splitext(base)[0]}_z{zval:g}.csv"
            arr = np.column_stack([
                np.repeat(x, dims[1]),
                np.tile(y, dims[0]),
                field.data[:, :, k].reshape(-1),
            ])
            np.savetxt(path, arr, fmt="%.17g", delimiter=",", header="x,y,value",
                       comments="")
            outputs.append(path)

    anchor = args.out_u if "u" in fields else args.out_v
    write_manifest(anchor, "reconstruct", cfg, {}, outputs)
    ngrid = dims[0] * dims[1] * dims[2]
    print(f"reconstructed {' and '.join(sorted(fields))} on a "
          f"{dims[0]}x{dims[1]}x{dims[2]} grid ({ngrid} nodes)")
    return 0


# ------------------------------------------------------------------ locate


def _cmd_locate(args):
    import numpy as np

    from .core import load_dataset
    from .pointsource import MollifiedGreen, arrival_times, scan

    cfg = _config_from_args(args)
    dataset = load_dataset(args.dataset)

    c = cfg.number("locate.c", 0.5)
    radius = cfg.number("locate.R", 0.02)
    n = cfg.integer("locate.grid_n", 40)
    green = MollifiedGreen(c=c, R=radius)
    result = scan(
        dataset,
        green,
        origin=(0.0, 0.0, 0.0),
        spacing=1.0 / (n - 1),
        dims=(n, n, n),
        lam=cfg.number("locate.lam", None),
        threshold_quantile=cfg.number("locate.threshold_quantile", 0.005),
        objective=cfg.word("locate.objective", "nlml"),
    )

    _write_field_csv(args.out_scan, result.field)
    np.savetxt(args.out_levelset, result.level_set, fmt="%.17g", delimiter=",",
               header="x,y,z", comments="")
    write_manifest(args.out_scan, "locate", cfg, {},
                   [args.out_scan, args.out_levelset])

    x = result.argmin
    radii = c * arrival_times(dataset)
    print(f"argmin ({x[0]:.6f}, {x[1]:.6f}, {x[2]:.6f}) "
          f"objective {result.min_value:.6f} "
          f"(level set: {len(result.level_set)} nodes below {result.threshold_value:.6f})")
    print("sensor-sphere radii c*T_i: " + " ".join(f"{r:.4f}" for r in radii))
    return 0


# ------------------------------------------------------------- kernel-eval


def _cmd_kernel_eval(args):
    import numpy as np

    from .kernels import WaveKernelModel, wave_kernel

    theta = _load_theta(args.theta)
    model = WaveKernelModel.from_hyperparameters(theta)

    with open(args.pairs) as fh:
        header = fh.readline().strip().replace(" ", "")
    if header != "x,y,z,t,xp,yp,zp,tp":
        raise ValueError(f"{args.pairs}: expected header x,y,z,t,xp,yp,zp,tp, got {header!r}")
    raw = np.loadtxt(args.pairs, delimiter=",", skiprows=1, ndmin=2)
    if raw.shape[1] != 8:
        raise ValueError(f"{args.pairs}: expected 8 columns, got {raw.shape[1]}")

    values = np.array([
        wave_kernel((row[0:3], row[3]), (row[4:7], row[7]), model) for row in raw
    ])
    np.savetxt(args.out, np.column_stack([raw, values]), fmt="%.17g", delimiter=",",
               header="x,y,z,t,xp,yp,zp,tp,value", comments="")
    write_manifest(args.out, "kernel-eval", Config(), {}, [args.out])
    print(f"wrote {args.out}: {len(values)} kernel values")
    return 0


# --------------------------------------------------------------- coherence


def _cmd_coherence(args):
    import numpy as np

    from .core import load_dataset
    from .kernels import WaveKernelModel
    from .reconstruct import layout_coherence

    theta = _load_theta(args.theta)
    model = WaveKernelModel.from_hyperparameters(theta)
    dataset = load_dataset(args.dataset)

    matrix = layout_coherence(model, dataset.sensors, dataset.times)
    np.savetxt(args.out, matrix, fmt="%.17g", delimiter=",")
    write_manifest(args.out, "coherence", Config(), {}, [args.out])

    off = matrix - np.diag(np.diag(matrix))
    i, j = np.unravel_index(np.argmax(off), off.shape)
    print(f"wrote {args.out}: {matrix.shape[0]}x{matrix.shape[1]} coherence matrix, "
          f"max off-diagonal {off[i, j]:.6f} at sensors ({i}, {j})")
    return 0


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wavegp",
        description="Wave-equation Gaussian process toolkit.",
    )
    parser.add_argument("--threads", type=int, default=None,
                        help="cap BLAS worker threads")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                        help="cap BLAS worker threads")
    common.add_argument("--config", help="config file path or preset:<name>")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config key (repeatable)")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common],
                       help="run the forward model and write a dataset CSV")
    p.add_argument("--out", required=True, help="output dataset CSV")
    p.add_argument("--seed", type=int, help="noise seed (overrides noise.seed)")
    p.add_argument("--layout-seed", type=int,
                   help="sensor layout seed (overrides sensors.layout_seed)")
    p.add_argument("--noise-sigma", type=float,
                   help="noise standard deviation (overrides noise.sigma)")
    p.add_argument("--snapshot-times",
                   help="comma separated times at which to dump full-field snapshots")
    p.add_argument("--snapshot-prefix", default="snapshot",
                   help="path prefix for snapshot CSVs")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit", parents=[common],
                       help="estimate hyperparameters by multistart likelihood search")
    p.add_argument("--dataset", required=True, help="input dataset CSV")
    p.add_argument("--model", required=True, choices=("u", "v", "uv"),
                   help="which initial-condition parts to model")
    p.add_argument("--multistart", type=int, default=20, help="number of starts")
    p.add_argument("--seed", type=int, default=0, help="start-sampling seed")
    p.add_argument("--max-evals", type=int, default=500,
                   help="objective evaluations per start")
    p.add_argument("--out", required=True, help="output hyperparameter JSON")
    p.add_argument("--results-csv", help="optional per-start results table")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("reconstruct", parents=[common],
                       help="krige the initial conditions on a grid")
    p.add_argument("--dataset", required=True, help="input dataset CSV")
    p.add_argument("--theta", required=True, help="hyperparameter JSON from fit")
    p.add_argument("--out-u", default="u0.csv", help="output CSV for the u part")
    p.add_argument("--out-v", default="v0.csv", help="output CSV for the v part")
    p.add_argument("--spacing", type=float, help="grid spacing (default 0.01)")
    p.add_argument("--origin", help="grid origin as 'x,y,z' (with --dims)")
    p.add_argument("--dims", help="grid node counts as 'nx,ny,nz' (with --origin)")
    p.add_argument("--truth-config",
                   help="config whose ic.* keys give the true initial conditions; "
                        "enables the errors JSON")
    p.add_argument("--errors-out", help="path for the errors JSON (default errors.json)")
    p.add_argument("--slice-z", type=float, action="append",
                   help="write an x,y slice CSV at this z (repeatable)")
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("locate", parents=[common],
                       help="grid scan for a mollified point source")
    p.add_argument("--dataset", required=True, help="input dataset CSV")
    p.add_argument("--out-scan", default="scan.csv", help="objective field CSV")
    p.add_argument("--out-levelset", default="levelset.csv",
                   help="sub-threshold node CSV")
    p.set_defaults(func=_cmd_locate)

    p = sub.add_parser("kernel-eval", parents=[common],
                       help="evaluate the space-time kernel on point pairs")
    p.add_argument("--theta", required=True, help="hyperparameter JSON")
    p.add_argument("--pairs", required=True,
                   help="CSV with header x,y,z,t,xp,yp,zp,tp")
    p.add_argument("--out", required=True, help="output CSV (input plus value column)")
    p.set_defaults(func=_cmd_kernel_eval)

    p = sub.add_parser("coherence", parents=[common],
                       help="normalized cross-sensor kernel mass matrix")
    p.add_argument("--dataset", required=True,
                   help="dataset CSV supplying sensors and times")
    p.add_argument("--theta", required=True, help="hyperparameter JSON")
    p.add_argument("--out", required=True, help="output q x q CSV")
    p.set_defaults(func=_cmd_coherence)

    return parser


def _limit_loaded_blas(n: int) -> None:
    # Fallback when numpy is already up: env vars no longer apply.
    if "numpy" not in sys.modules:
        return
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return
    global _THREAD_LIMIT
    _THREAD_LIMIT = threadpool_limits(limits=n)


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    threads = getattr(args, "threads", None)
    if threads is not None:
        if threads < 1:
            print("error: --threads must be positive", file=sys.stderr)
            return 2
        _apply_thread_cap(threads)
        _limit_loaded_blas(threads)
    try:
        return int(args.func(args) or 0)
    except KeyboardInterrupt:
        raise
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main(argv=None) -> int:
    return run(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
