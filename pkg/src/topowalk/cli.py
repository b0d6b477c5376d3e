"""Command-line front end: every subcommand writes headered CSV plus a JSON
manifest that fully re-derives it.

Exit codes: 0 success, 2 usage/validation error, 3 numerical failure,
4 capacity refusal.
"""

from __future__ import annotations

import argparse
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import yaml

from . import baseline, bloch, experiments, spectral
from .errors import CapacityError, NumericalError, SeriesTooShortError
from .evolution import METRIC_COHERENT, METRIC_DENSITY, AngleField, evolve_record, search_time
from .io import RunManifest, parse_angle, write_csv
from .lattice import LatticeConfig, uniform_state

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_CAPACITY = 4

METRICS = (METRIC_DENSITY, METRIC_COHERENT)


class UsageError(ValueError):
    pass


def _angle(text: str) -> float:
    try:
        return parse_angle(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _sizes(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad size list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topowalk",
        description="Split-step quantum walk simulator with defect spectroscopy",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="YAML file with flag defaults")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--seed", type=int, default=0)

    def walker_angles(p, required=False):
        p.add_argument("--theta1", type=_angle, required=required, help="bulk angle (radians or e.g. 5pi/8)")
        p.add_argument("--theta2", type=_angle, required=required)

    def defect_angles(p):
        p.add_argument("--def-theta1", type=_angle, default=5 * np.pi / 8)
        p.add_argument("--def-theta2", type=_angle, default=np.pi / 2)

    p = sub.add_parser("evolve", help="defect-probability time series for one parameter point")
    common(p)
    p.add_argument("--L", type=int)
    p.add_argument("--steps", type=int, default=1000)
    walker_angles(p)
    defect_angles(p)
    p.add_argument("--metric", choices=METRICS, default=METRIC_DENSITY)

    p = sub.add_parser("sweep-walker", help="max localization probability over the bulk-angle grid")
    common(p)
    p.add_argument("--L", type=int)
    p.add_argument("--steps", type=int, default=1000)
    defect_angles(p)
    p.add_argument("--t1-min", type=_angle, default=-np.pi)
    p.add_argument("--t1-max", type=_angle, default=np.pi)
    p.add_argument("--t2-min", type=_angle, default=-np.pi)
    p.add_argument("--t2-max", type=_angle, default=np.pi)
    p.add_argument("--resolution", type=int, default=64)
    p.add_argument("--metric", choices=METRICS, default=METRIC_COHERENT)

    p = sub.add_parser("sweep-defect", help="defect-angle scan with overlap criteria")
    common(p)
    p.add_argument("--L", type=int)
    p.add_argument("--steps", type=int, default=1000)
    walker_angles(p, required=True)
    p.add_argument("--def-t1-min", type=_angle, default=0.0)
    p.add_argument("--def-t1-max", type=_angle, default=2 * np.pi)
    p.add_argument("--def-t1-res", type=int, default=33)
    p.add_argument("--def-t2-min", type=_angle, default=np.pi / 2)
    p.add_argument("--def-t2-max", type=_angle, default=np.pi / 2)
    p.add_argument("--def-t2-res", type=int, default=1)
    p.add_argument("--metric", choices=METRICS, default=METRIC_COHERENT)
    p.add_argument("--no-overlaps", action="store_true", help="skip the dense overlap curves")

    p = sub.add_parser("scaling", help="search time and peak probability vs system size")
    common(p)
    p.add_argument("--sizes", type=_sizes, default=[20, 28, 40, 56, 80, 112, 160])
    p.add_argument("--steps", type=int, default=1200)
    walker_angles(p, required=True)
    defect_angles(p)
    p.add_argument("--metric", choices=METRICS, default=METRIC_COHERENT)

    p = sub.add_parser("spectrum", help="eigensystem overlap report for the defected operator")
    common(p)
    p.add_argument("--L", type=int)
    walker_angles(p, required=True)
    defect_angles(p)

    p = sub.add_parser("dispersion", help="quasi-energy band over the momentum grid")
    common(p)
    walker_angles(p, required=True)
    p.add_argument("--k-resolution", type=int, default=128)

    p = sub.add_parser("gapmap", help="band gaps at 0 and pi over the bulk-angle grid")
    common(p)
    p.add_argument("--t1-min", type=_angle, default=-np.pi)
    p.add_argument("--t1-max", type=_angle, default=np.pi)
    p.add_argument("--t2-min", type=_angle, default=-np.pi)
    p.add_argument("--t2-max", type=_angle, default=np.pi)
    p.add_argument("--resolution", type=int, default=64)
    p.add_argument("--k-resolution", type=int, default=256)

    p = sub.add_parser("chern", help="Chern numbers of both bands over the bulk-angle grid")
    common(p)
    p.add_argument("--t1-min", type=_angle, default=-np.pi)
    p.add_argument("--t1-max", type=_angle, default=np.pi)
    p.add_argument("--t2-min", type=_angle, default=-np.pi)
    p.add_argument("--t2-max", type=_angle, default=np.pi)
    p.add_argument("--resolution", type=int, default=17)
    p.add_argument("--k-resolution", type=int, default=64)
    p.add_argument("--gap-threshold", type=float, default=1e-3)

    p = sub.add_parser("disorder", help="quenched-disorder ensemble at one parameter point")
    common(p)
    p.add_argument("--L", type=int)
    p.add_argument("--steps", type=int, default=1500)
    walker_angles(p)
    defect_angles(p)
    p.add_argument("--theta-dis", type=float, default=0.3)
    p.add_argument("--n-configs", type=int, default=20)
    p.add_argument("--target", choices=("topological", "non-topological"), default="topological")
    p.add_argument("--metric", choices=METRICS, default=METRIC_COHERENT)

    p = sub.add_parser("baseline", help="marked square-lattice walk with the classical curve")
    common(p)
    p.add_argument("--L", type=int)
    p.add_argument("--steps", type=int, default=1000)

    return parser


def _apply_config_file(parser: argparse.ArgumentParser, args: argparse.Namespace, argv: list[str]):
    """File values fill flags the user did not set explicitly."""
    if not args.config:
        return
    try:
        raw = yaml.safe_load(Path(args.config).read_text())
    except FileNotFoundError:
        raise UsageError(f"config file not found: {args.config}")
    except yaml.YAMLError as exc:
        raise UsageError(f"config file {args.config}: {exc}")
    if raw is None:
        return
    if not isinstance(raw, dict):
        raise UsageError(f"config file {args.config}: expected a mapping of keys to values")
    section = raw.get(args.subcommand, raw)
    if not isinstance(section, dict):
        raise UsageError(f"config section {args.subcommand!r} must be a mapping")
    valid = set(vars(args))
    explicit = {token.split("=")[0].lstrip("-").replace("-", "_") for token in argv if token.startswith("--")}
    for key, value in section.items():
        dest = str(key).replace("-", "_")
        if dest in ("config", "subcommand"):
            continue
        if dest not in valid:
            raise UsageError(f"unknown config key {key!r} for subcommand {args.subcommand!r}")
        if dest in explicit:
            continue
        current = getattr(args, dest)
        if isinstance(value, str) and isinstance(current, (float, type(None))):
            value = parse_angle(value)
        if dest == "out":
            value = Path(value)
        if dest == "sizes" and isinstance(value, str):
            value = _sizes(value)
        setattr(args, dest, value)


def _require(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise UsageError(f"missing required parameter --{name.replace('_', '-')}")


def _validate(args):
    if getattr(args, "L", None) is not None and args.L < 2:
        raise UsageError(f"L must be at least 2, got {args.L}")
    if getattr(args, "steps", None) is not None and args.steps < 0:
        raise UsageError(f"steps must be non-negative, got {args.steps}")
    if getattr(args, "resolution", None) is not None and args.resolution < 2:
        raise UsageError(f"resolution must be at least 2, got {args.resolution}")


def _angles_from(args, lat: LatticeConfig) -> AngleField:
    return AngleField(
        lat,
        args.theta1,
        args.theta2,
        defect_site=lat.center_site(),
        defect_theta1=args.def_theta1,
        defect_theta2=args.def_theta2,
    )


def _run_evolve(args, out: Path) -> list[Path]:
    _require(args, "L", "theta1", "theta2")
    lat = LatticeConfig(args.L)
    series = evolve_record(
        uniform_state(lat), args.steps, _angles_from(args, lat), lat.center_site(), metric=args.metric
    )
    path = out / "evolve.csv"
    write_csv(path, ["t", "p_def"], ((t, v) for t, v in enumerate(series.values)))
    return [path]


def _run_sweep_walker(args, out: Path) -> list[Path]:
    _require(args, "L")
    config = experiments.SweepConfig(
        L=args.L,
        n_steps=args.steps,
        defect_theta1=args.def_theta1,
        defect_theta2=args.def_theta2,
        theta1_range=(args.t1_min, args.t1_max),
        theta2_range=(args.t2_min, args.t2_max),
        resolution=args.resolution,
        metric=args.metric,
        seed=args.seed,
    )
    result = experiments.sweep_walker_grid(config)
    path = out / "sweep_walker.csv"
    write_csv(path, ["theta1", "theta2", "max_prob", "argmax_t", "search_time", "job"], result.rows())
    return [path]


def _run_sweep_defect(args, out: Path) -> list[Path]:
    _require(args, "L", "theta1", "theta2")
    result = experiments.sweep_defect_line(
        args.theta1,
        args.theta2,
        np.linspace(args.def_t1_min, args.def_t1_max, args.def_t1_res),
        np.linspace(args.def_t2_min, args.def_t2_max, args.def_t2_res),
        args.L,
        args.steps,
        metric=args.metric,
        with_overlaps=not args.no_overlaps,
    )
    path = out / "sweep_defect.csv"
    write_csv(
        path,
        ["def_theta1", "def_theta2", "max_prob", "argmax_t", "search_time", "w_top1", "w_top2"],
        result.rows(),
    )
    return [path]


def _run_scaling(args, out: Path) -> list[Path]:
    _require(args, "theta1", "theta2")
    rows = experiments.size_scaling_study(
        args.theta1, args.theta2, args.def_theta1, args.def_theta2,
        sizes=args.sizes, n_steps=args.steps, metric=args.metric,
    )
    path = out / "scaling.csv"
    write_csv(
        path,
        ["L", "n_sites", "search_time", "argmax_t", "max_prob"],
        ((r.L, r.n_sites, r.search_time, r.argmax_t, r.max_prob) for r in rows),
    )
    return [path]


def _run_spectrum(args, out: Path) -> list[Path]:
    _require(args, "L", "theta1", "theta2")
    if args.L > spectral.DENSE_CAP_L:
        raise CapacityError(f"spectrum needs L <= {spectral.DENSE_CAP_L}, got L={args.L}")
    lat = LatticeConfig(args.L)
    decomp = spectral.eigendecompose(spectral.build_step_matrix(_angles_from(args, lat)))
    table = spectral.overlap_products(decomp, lat, lat.center_site(), uniform_state(lat))
    path = out / "spectrum.csv"
    write_csv(
        path,
        ["index", "energy", "d_abs", "i_abs", "s", "pair_index"],
        (
            (n, decomp.eigenphases[n], abs(table.d[n]), abs(table.i[n]), table.s[n], int(decomp.pair_index[n]))
            for n in range(decomp.n_states)
        ),
    )
    return [path]


def _run_dispersion(args, out: Path) -> list[Path]:
    _require(args, "theta1", "theta2")
    k = 2 * np.pi * np.arange(args.k_resolution) / args.k_resolution
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    e, _ = bloch.quasi_energies(k1, k2, args.theta1, args.theta2)
    path = out / "dispersion.csv"
    write_csv(
        path,
        ["kappa1", "kappa2", "energy"],
        ((k1[i, j], k2[i, j], e[i, j]) for i in range(args.k_resolution) for j in range(args.k_resolution)),
    )
    return [path]


def _run_gapmap(args, out: Path) -> list[Path]:
    gm = bloch.gap_map(
        np.linspace(args.t1_min, args.t1_max, args.resolution),
        np.linspace(args.t2_min, args.t2_max, args.resolution),
        k_resolution=args.k_resolution,
    )
    path = out / "gapmap.csv"
    write_csv(
        path,
        ["theta1", "theta2", "gap0_min", "gap0_max", "gap_pi_min", "gap_pi_max"],
        (
            (gm.theta1[i], gm.theta2[j], gm.gap0_min[i, j], gm.gap0_max[i, j], gm.gap_pi_min[i, j], gm.gap_pi_max[i, j])
            for i in range(len(gm.theta1))
            for j in range(len(gm.theta2))
        ),
    )
    return [path]


def _run_chern(args, out: Path) -> list[Path]:
    t1s = np.linspace(args.t1_min, args.t1_max, args.resolution)
    t2s = np.linspace(args.t2_min, args.t2_max, args.resolution)

    def cell(t1, t2):
        try:
            plus = bloch.chern_number(t1, t2, "+", args.k_resolution, args.gap_threshold)
            minus = bloch.chern_number(t1, t2, "-", args.k_resolution, args.gap_threshold)
            return plus, minus
        except NumericalError:
            return None, None

    rows = []
    for t1 in t1s:
        for t2 in t2s:
            plus, minus = cell(t1, t2)
            rows.append((t1, t2, plus, minus))
    path = out / "chern.csv"
    write_csv(path, ["theta1", "theta2", "chern_plus", "chern_minus"], rows)
    return [path]


def _run_disorder(args, out: Path) -> list[Path]:
    _require(args, "L")
    if args.target == "topological":
        _require(args, "theta1", "theta2")
    config = experiments.DisorderConfig(
        theta_dis=args.theta_dis, n_configs=args.n_configs, seed=args.seed, target=args.target
    )
    result = experiments.disorder_ensemble(
        config,
        args.theta1 if args.theta1 is not None else 0.0,
        args.theta2 if args.theta2 is not None else 0.0,
        args.def_theta1,
        args.def_theta2,
        args.L,
        args.steps,
        metric=args.metric,
    )
    path = out / "disorder.csv"
    write_csv(path, ["t", "mean"] + [f"r{r:03d}" for r in range(args.n_configs)], result.rows())
    return [path]


def _run_baseline(args, out: Path) -> list[Path]:
    _require(args, "L")
    config = baseline.SquareWalkConfig(args.L, marked_site=(args.L // 2, args.L // 2))
    series = baseline.square_evolve_record(
        baseline.uniform_square_state(config), args.steps, config, config.marked_site
    )
    classical = baseline.classical_curve(config.n_sites, min(args.steps, config.n_sites))
    path = out / "baseline.csv"
    write_csv(
        path,
        ["t", "p_def", "p_classical"],
        (
            (t, series.values[t], classical.values[t] if t < len(classical.values) else None)
            for t in range(len(series.values))
        ),
    )
    return [path]


_RUNNERS = {
    "evolve": _run_evolve,
    "sweep-walker": _run_sweep_walker,
    "sweep-defect": _run_sweep_defect,
    "scaling": _run_scaling,
    "spectrum": _run_spectrum,
    "dispersion": _run_dispersion,
    "gapmap": _run_gapmap,
    "chern": _run_chern,
    "disorder": _run_disorder,
    "baseline": _run_baseline,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config_file(parser, args, argv)
        _validate(args)
        out = Path(args.out)
        started = datetime.now(timezone.utc).isoformat()
        t0 = time.time()
        outputs = _RUNNERS[args.subcommand](args, out)
        manifest = RunManifest(
            subcommand=args.subcommand,
            parameters={
                k: (str(v) if isinstance(v, Path) else list(v) if isinstance(v, (list, tuple)) else v)
                for k, v in vars(args).items()
                if k not in ("config", "subcommand", "out")
            },
            seed=args.seed,
            outputs=[str(p) for p in outputs],
            started_utc=started,
            duration_s=round(time.time() - t0, 3),
        )
        manifest.write(out / f"{args.subcommand.replace('-', '_')}_manifest.json")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (NumericalError, SeriesTooShortError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
