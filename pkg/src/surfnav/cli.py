"""Command-line interface: batch simulation runs, scenario validation, and
the singularity demo.

``simulate`` runs scenario files and writes, per run: a trajectory CSV, a
metrics CSV, a run manifest (itself a loadable scenario, so re-running it
reproduces every output byte for byte), and SVG charts of the monitored
quantities.  Exit codes: 0 success, 1 invalid scenario, 2 separation
violation during integration.
"""

from __future__ import annotations

import argparse
import csv
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .engine import run_simulation
from .errors import ScenarioError, SeparationViolationError
from .field import (
    FieldGains,
    higher_dim_gvf,
    lifted_field_terms,
    original_gvf_3d,
    parity_sign,
)
from .scenario import (
    build_config,
    build_initial_state,
    build_model,
    load_scenario,
    scenario_to_toml,
    validate_scenario,
    write_scenario,
)
from .surfaces import torus
from .svgplot import line_chart

__all__ = ["main", "run_scenario", "singularity_demo"]

TRAJECTORY_CSV = "trajectory.csv"
METRICS_CSV = "metrics.csv"
MANIFEST = "run_manifest.toml"


def _fmt(value):
    return repr(float(value))


def _write_trajectory_csv(path, result):
    n_records, n_robots, dim = result.x.shape
    header = (
        ["time", "robot_id"]
        + [f"x_{j + 1}" for j in range(dim)]
        + ["omega_1", "omega_2", "omega_hat_1", "omega_hat_2"]
    )
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for m in range(n_records):
            t = _fmt(result.times[m])
            for i in range(n_robots):
                writer.writerow(
                    [t, str(i)]
                    + [_fmt(v) for v in result.x[m, i]]
                    + [_fmt(v) for v in result.omega[m, i]]
                    + [_fmt(v) for v in result.omega_hat[m, i]]
                )


def _write_metrics_csv(path, result):
    header = ["time", "phi_max", "mean_offset", "min_sep", "max_neighbor_sep",
              "lyapunov", "eps_max"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for snap in result.snapshots:
            writer.writerow(
                [_fmt(snap.time), _fmt(snap.phi_max), _fmt(snap.mean_offset),
                 _fmt(snap.min_sep), _fmt(snap.max_neighbor_sep),
                 _fmt(snap.lyapunov), _fmt(snap.eps_max)]
            )


def _write_plots(out_dir, result, scenario):
    times = result.times
    line_chart(
        out_dir / "phi_max.svg", times, [result.phi_max],
        title="Largest surface-error component",
        xlabel="time", ylabel="max |phi|",
    )
    eps = np.stack([snap.eps for snap in result.snapshots])  # (M, N, 2)
    series = [eps[:, i, l] for i in range(eps.shape[1]) for l in (0, 1)]
    line_chart(
        out_dir / "eps.svg", times, series,
        title="Coordination residuals (both components, every robot)",
        xlabel="time", ylabel="eps",
    )
    line_chart(
        out_dir / "min_separation.svg", times, [result.min_sep],
        title="Minimum pairwise virtual-coordinate distance",
        xlabel="time", ylabel="min separation",
        guides=[(scenario.safe_radius, "safe radius"),
                (scenario.sensing_radius, "sensing radius")],
    )
    line_chart(
        out_dir / "lyapunov.svg", times, [result.lyapunov],
        title="Monitored energy",
        xlabel="time", ylabel="V",
    )


def run_scenario(scenario, out_dir, echo=print):
    """Run one scenario and write all artifacts into out_dir.

    Returns the SimulationResult.  Raises ScenarioError for invalid input
    and SeparationViolationError if the integration breaches the safe
    radius (artifacts written so far are left in place for inspection).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model = build_model(scenario)
    config = build_config(scenario, model)
    state = build_initial_state(scenario, model, config)

    manifest_path = out_dir / MANIFEST
    write_scenario(
        scenario, manifest_path,
        header=[f"surfnav {__version__} run manifest",
                f"rerun: surfnav simulate {MANIFEST} --out <dir>"],
    )
    echo(f"surfnav {__version__}: surface={model.name} robots={scenario.n_robots}"
         f" duration={scenario.duration:g} dt={scenario.dt:g}"
         f" record_every={scenario.record_every} seed={scenario.seed}"
         f" mode={scenario.estimator_mode}")
    echo(f"resolved manifest: {manifest_path}")

    result = run_simulation(config, model, state, scenario.duration,
                            scenario.dt, scenario.record_every)

    _write_trajectory_csv(out_dir / TRAJECTORY_CSV, result)
    _write_metrics_csv(out_dir / METRICS_CSV, result)
    _write_plots(out_dir, result, scenario)

    final = result.snapshots[-1]
    echo(f"final: phi_max={final.phi_max:.3e} eps_max={final.eps_max:.3e}"
         f" mean_offset={final.mean_offset:.3e} min_sep={final.min_sep:.4f}"
         f" V={final.lyapunov:.4f}")
    return result


def singularity_demo(samples=10000, seed=0, gain=1.0):
    """Contrast the unlifted field's singular points with the lifted field.

    On the unit sphere with traversal vector (0, 0, 1), the unlifted field
    vanishes where the surface normal is parallel to the traversal vector
    (the poles).  The lifted field on a torus, sampled at random states,
    never comes close to vanishing thanks to its constant trailing
    components.  Returns a report dict.
    """

    def sphere_phi(p):
        return p[0] ** 2 + p[1] ** 2 + p[2] ** 2 - 1.0

    def sphere_grad(p):
        return 2.0 * p

    m = np.array([0.0, 0.0, 1.0])
    best_norm = np.inf
    best_point = None
    thetas = np.linspace(0.0, np.pi, 91)
    azimuths = np.linspace(0.0, 2.0 * np.pi, 181)
    for theta in thetas:
        for az in azimuths:
            point = np.array(
                [np.sin(theta) * np.cos(az), np.sin(theta) * np.sin(az),
                 np.cos(theta)]
            )
            norm = float(np.linalg.norm(
                original_gvf_3d(sphere_phi, sphere_grad, m, gain, point)
            ))
            if norm < best_norm:
                best_norm = norm
                best_point = point

    model = torus(6.0, 2.0)
    gains = FieldGains(k=np.full(3, 0.6), c=1.0, m_tail=(-1.0, 1.0))
    rng = np.random.default_rng(seed)
    x = rng.uniform([-9.0, -9.0, -3.0], [9.0, 9.0, 3.0], size=(int(samples), 3))
    omega = rng.uniform(-2.0 * np.pi, 2.0 * np.pi, size=(int(samples), 2))
    terms = lifted_field_terms(model, gains.k, gains.m_tail, x, omega)
    sgn = parity_sign(model.dim_ambient)
    m1, m2 = gains.m_tail
    tail1 = sgn * m2 + terms.s1
    tail2 = -sgn * m1 + terms.s2
    norms = np.sqrt(
        np.sum(terms.u ** 2, axis=1) + tail1 ** 2 + tail2 ** 2
    )
    check = higher_dim_gvf(model, gains, np.concatenate([x[0], omega[0]]))
    assert abs(float(np.linalg.norm(check)) - float(norms[0])) < 1e-12

    return {
        "sphere_singular_point": best_point,
        "sphere_min_norm": best_norm,
        "lifted_samples": int(samples),
        "lifted_min_norm": float(norms.min()),
        "lifted_threshold": 0.1 * np.sqrt(2.0),
    }


def _resolve_out_dirs(paths, out_arg):
    if len(paths) == 1:
        return [Path(out_arg) if out_arg else None]
    root = Path(out_arg) if out_arg else Path(".")
    dirs = [root / Path(p).stem for p in paths]
    if len(set(dirs)) != len(dirs):
        raise ScenarioError(
            "scenario files in a batch must have distinct names so their"
            " output directories do not collide"
        )
    return dirs


def _load_with_overrides(path, args):
    scenario = load_scenario(path)
    if args.seed is not None:
        scenario.seed = int(args.seed)
    if args.duration is not None:
        scenario.duration = float(args.duration)
    if args.dt is not None:
        scenario.dt = float(args.dt)
    if args.mode is not None:
        scenario.estimator_mode = args.mode
    validate_scenario(scenario, origin=str(path))
    return scenario


def _run_one(payload):
    scenario, out_dir = payload
    run_scenario(scenario, out_dir)
    return str(out_dir)


def _cmd_simulate(args):
    jobs = []
    try:
        out_dirs = _resolve_out_dirs(args.scenario, args.out)
        for path, out_dir in zip(args.scenario, out_dirs):
            scenario = _load_with_overrides(path, args)
            jobs.append((scenario, out_dir or Path(scenario.output_dir)))
    except ScenarioError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1

    try:
        if int(args.jobs) > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=int(args.jobs)) as pool:
                for done in pool.map(_run_one, jobs):
                    print(f"completed: {done}")
        else:
            for payload in jobs:
                _run_one(payload)
    except SeparationViolationError as err:
        print(f"error: {err}", file=sys.stderr)
        print("hint: halve dt and re-run", file=sys.stderr)
        return 2
    except ScenarioError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    return 0


def _cmd_validate(args):
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(scenario_to_toml(scenario), end="")
    print(f"ok: {args.scenario}")
    return 0


def _cmd_demo_singularity(args):
    report = singularity_demo(samples=args.samples, seed=args.seed)
    point = report["sphere_singular_point"]
    print("unlifted field on the unit sphere, traversal vector (0, 0, 1):")
    print(f"  grid minimum |field| = {report['sphere_min_norm']:.3e}"
          f" at ({point[0]:.3f}, {point[1]:.3f}, {point[2]:.3f})")
    located = report["sphere_min_norm"] < 1e-9
    print(f"  singular point located: {'yes' if located else 'no'}")
    print(f"lifted field on the torus, {report['lifted_samples']} random states:")
    print(f"  minimum |field| = {report['lifted_min_norm']:.6f}"
          f" (threshold {report['lifted_threshold']:.6f})")
    ok = located and report["lifted_min_norm"] > report["lifted_threshold"]
    print("demo result:", "pass" if ok else "fail")
    return 0 if ok else 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="surfnav",
        description="Multi-robot surface navigation simulator",
    )
    parser.add_argument("--version", action="version",
                        version=f"surfnav {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one or more scenario files")
    sim.add_argument("scenario", nargs="+", help="scenario TOML file(s)")
    sim.add_argument("--out", help="output directory (root directory when"
                                   " several scenarios are given)")
    sim.add_argument("--seed", type=int, help="override the scenario seed")
    sim.add_argument("--duration", type=float, help="override the duration")
    sim.add_argument("--dt", type=float, help="override the step size")
    sim.add_argument("--mode", choices=["broadcast", "consensus"],
                     help="override the estimator mode")
    sim.add_argument("--jobs", type=int, default=1,
                     help="run this many scenarios concurrently")
    sim.set_defaults(func=_cmd_simulate)

    val = sub.add_parser("validate", help="validate a scenario file and echo"
                                          " the resolved configuration")
    val.add_argument("scenario")
    val.set_defaults(func=_cmd_validate)

    demo = sub.add_parser(
        "demo-singularity",
        help="locate a singular point of the unlifted field and sample the"
             " lifted field's minimum norm",
    )
    demo.add_argument("--samples", type=int, default=10000)
    demo.add_argument("--seed", type=int, default=0)
    demo.set_defaults(func=_cmd_demo_singularity)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
