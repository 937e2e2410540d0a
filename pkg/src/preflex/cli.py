"""Command line surface.

Subcommands:

* ``optimize`` - solve a scene, write the archive (front.csv), a sampled
  layout (layout.json), and a Pareto scatter figure.
* ``simulate`` - batch experiment with scripted users; writes delimited rows.
* ``replay``   - re-run a recorded session transcript and print its report.
* ``eval``     - summarize a results file: prints per-condition medians and
  writes summary.csv plus boxplot figures alongside it.
* ``serve``    - start the websocket adaptation service.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import statistics
import sys
from pathlib import Path

from . import figures
from .harness import (
    cross_replay,
    default_users,
    export_results,
    load_results,
    run_experiment,
)
from .objectives import Objective
from .preference import DEFAULT_TAU_LOWER, DEFAULT_TAU_UPPER
from .scene import resolve_scene
from .session import Mode, replay_transcript, report_json, start_session
from .solvers import SolverConfig

_MODES = [m.value for m in Mode]


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--pop", type=int, default=100, help="population size (default 100)")
    parser.add_argument("--gens", type=int, default=80, help="generations (default 80)")
    parser.add_argument("--tau-lower", type=float, default=DEFAULT_TAU_LOWER,
                        help="lower priority threshold (default 0.0)")
    parser.add_argument("--tau-upper", type=float, default=DEFAULT_TAU_UPPER,
                        help="upper priority threshold (default 0.2)")


def _parse_seeds(text: str) -> list[int]:
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(s) for s in text.split(",") if s]


def _config(args) -> SolverConfig:
    return SolverConfig(population_size=args.pop, generations=args.gens,
                        seed=getattr(args, "seed", 0))


def cmd_optimize(args) -> int:
    scene, ref = resolve_scene(args.scene)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    state = start_session(scene, Mode(args.mode), _config(args),
                          tau_lower=args.tau_lower, tau_upper=args.tau_upper, scene_ref=ref)
    archive = state.last_archive

    front_path = out_dir / "front.csv"
    with front_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        header = [obj.name.lower() for obj in Objective]
        for wid in scene.widget_ids:
            header += [f"{wid}.x", f"{wid}.y", f"{wid}.z"]
        writer.writerow(header)
        for sol in archive.solutions:
            row = list(sol.objectives)
            for wid in scene.widget_ids:
                row += list(sol.decision.positions[wid])
            writer.writerow(row)

    layout_path = out_dir / "layout.json"
    layout_path.write_text(json.dumps(
        {wid: list(pos) for wid, pos in sorted(state.current.positions.items())},
        indent=2, sort_keys=True,
    ))
    pair = tuple(int(j) for j in args.pair.split(","))
    scatter = figures.save_pareto_scatter(
        out_dir / "front.png",
        [("archive", archive.objectives_array(), None)],
        pair=pair,
    )
    print(f"scene={ref} mode={args.mode} seed={args.seed} archive={len(archive.solutions)}")
    print(f"wrote {front_path}, {layout_path}, {scatter}")
    return 0


def cmd_simulate(args) -> int:
    scene, ref = resolve_scene(args.scene)
    conditions = [Mode(c) for c in args.conditions.split(",") if c]
    users = default_users(args.users, moves_per_iteration=args.moves_per_iter,
                          sigma=args.sigma, max_iterations=args.iterations)
    result = run_experiment(
        scene, users, conditions, _parse_seeds(args.seeds), _config(args),
        tau_lower=args.tau_lower, tau_upper=args.tau_upper,
        scene_ref=ref, workers=args.workers,
    )
    if args.cross_replay:
        result = cross_replay(scene, result)
    out = export_results(result, args.out)
    print(f"wrote {len(result.rows)} rows to {out}")
    return 0


def cmd_replay(args) -> int:
    state, report = replay_transcript(args.transcript)
    print(report_json(report))
    return 0


def _median(values) -> float:
    values = [v for v in values if not math.isnan(v)]
    return statistics.median(values) if values else math.nan


def cmd_eval(args) -> int:
    rows = load_results(args.results)
    if not rows:
        print("no rows")
        return 1
    out_dir = Path(args.out_dir) if args.out_dir else Path(args.results).parent
    out_dir.mkdir(parents=True, exist_ok=True)

    conditions = sorted({row["condition"] for row in rows})
    metrics = ("moved_elements", "distance_all", "distance_high", "hypervolume", "iterations")
    summary = []
    for condition in conditions:
        sub = [row for row in rows if row["condition"] == condition]
        entry = {"condition": condition, "runs": len(sub)}
        for metric in metrics:
            entry[f"median_{metric}"] = _median([float(r[metric]) for r in sub])
        summary.append(entry)

    header = ["condition", "runs"] + [f"median_{m}" for m in metrics]
    summary_path = out_dir / "summary.csv"
    with summary_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for entry in summary:
            writer.writerow([entry[h] for h in header])

    print(f"{'condition':>14}  {'runs':>4}  " + "  ".join(f"{m:>18}" for m in metrics))
    for entry in summary:
        cells = "  ".join(f"{entry['median_' + m]:>18.6g}" for m in metrics)
        print(f"{entry['condition']:>14}  {entry['runs']:>4}  {cells}")

    written = [summary_path]
    for metric in ("distance_high", "distance_all", "hypervolume", "moved_elements"):
        written.append(figures.save_condition_boxplot(
            out_dir / f"{metric}_box.png", rows, metric,
            title=f"{metric} by condition",
        ))
    print("wrote " + ", ".join(str(p) for p in written))
    return 0


def cmd_serve(args) -> int:
    from .server import serve

    serve(args.bind, args.scenes, port=args.port,
          transcripts_dir=args.transcripts, studio_dir=args.studio)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="preflex",
                                     description="Preference-guided multi-objective layout adaptation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="solve a scene and export the Pareto archive")
    p.add_argument("--scene", required=True, help="fixture name or scene file path")
    p.add_argument("--mode", choices=_MODES, default=Mode.PARETO_SELECT.value)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pair", default="3,4", help="objective index pair for the scatter (default 3,4)")
    p.add_argument("--out-dir", default="out")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("simulate", help="batch experiment with scripted users")
    p.add_argument("--scene", required=True)
    p.add_argument("--users", type=int, default=1, help="number of simulated users")
    p.add_argument("--seeds", default="0..4", help="seed range a..b or comma list")
    p.add_argument("--conditions", default="pareto_select,preference",
                   help=f"comma list from {{{','.join(_MODES)}}}")
    p.add_argument("--iterations", type=int, default=2, help="user iterations per session")
    p.add_argument("--moves-per-iter", type=int, default=2, choices=(1, 2, 3))
    p.add_argument("--sigma", type=float, default=0.0, help="move noise std-dev (0 = greedy)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--cross-replay", action="store_true",
                   help="swap recorded moves between the two optimizer conditions")
    p.add_argument("--out", default="results.csv")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("replay", help="replay a session transcript")
    p.add_argument("--transcript", required=True)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("eval", help="summarize a results file and render figures")
    p.add_argument("--results", required=True)
    p.add_argument("--out-dir", default=None, help="defaults to the results file's directory")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="run the websocket adaptation service")
    p.add_argument("--scenes", default=None, help="directory of extra scene files")
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--bind", default=None, help="bind address (or $PREFLEX_BIND, default 127.0.0.1)")
    p.add_argument("--transcripts", default=None, help="directory for flushed session transcripts")
    p.add_argument("--studio", default=None, help="static directory with the layout studio build")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
