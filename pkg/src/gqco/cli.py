"""Command-line interface.

Subcommands: gen-problem, solve, train, expert-tune, bench, report, demo.
Outputs are JSON/CSV with the headers documented in the README. Exit codes:
0 on success, 2 on configuration errors (bad flags, configs, checkpoints),
3 on resource errors (e.g. brute force beyond the enumeration bound).
GQCO_THREADS caps torch intra-op parallelism.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .baselines import QAOAConfig, SAConfig, solve_brute, solve_qaoa, solve_sa, qaoa_optimize, qaoa_state
from .exceptions import ConfigurationError, GqcoError, ResourceError
from .graph import embed
from .harness import (
    BenchmarkSpec,
    failure_report,
    gqco_solve,
    load_problems,
    load_records,
    maxcut_demo,
    recompute_accuracy,
    run_benchmark,
    verify_records,
)
from .ising import IsingProblem, is_correct_solution, random_problem
from .model import ModelConfig, build_model, load_checkpoint
from .simulator import run_circuit, sample_shots
from .training import TrainConfig, Trainer, CurriculumState


def _apply_thread_cap():
    value = os.environ.get("GQCO_THREADS")
    if value:
        import torch

        torch.set_num_threads(max(1, int(value)))


def _load_problem(path: str) -> IsingProblem:
    try:
        return IsingProblem.from_json(Path(path).read_text())
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise ConfigurationError(f"cannot load problem from {path}: {exc}") from exc


def _write_json(data, out: str | None):
    text = json.dumps(data, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def cmd_gen_problem(args) -> int:
    problem = random_problem(args.n, rng_seed=args.seed)
    _write_json(problem.to_dict(), args.out)
    if args.dump_features:
        graph = embed(problem)
        prefix = Path(args.dump_features)
        with open(str(prefix) + ".nodes.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["node"] + [f"f{k}" for k in range(graph.node_features.shape[1])])
            for i, row in enumerate(graph.node_features):
                writer.writerow([i] + [format(v, ".17g") for v in row])
        with open(str(prefix) + ".edges.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["i", "j", "e0", "e1", "e2", "e3"])
            for (i, j), row in zip(graph.edge_index, graph.edge_features):
                writer.writerow([i, j] + [format(v, ".17g") for v in row])
    return 0


def _emit_histogram(state, shots: int, seed: int, path: str):
    hist = sample_shots(state, shots, np.random.default_rng(seed))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["basis", "count"])
        for basis in sorted(hist):
            writer.writerow([basis, hist[basis]])


def cmd_solve(args) -> int:
    problem = _load_problem(args.problem)
    state = None
    if args.solver == "brute":
        result = solve_brute(problem)
        payload = {"solver": "brute", "bits": result.bits, "energy": result.energy, "wall_time": result.wall_time}
    elif args.solver == "sa":
        cfg = SAConfig(sweeps=args.sweeps, T_start=args.t_start, T_end=args.t_end)
        result = solve_sa(problem, cfg, seed=args.seed)
        payload = {"solver": "sa", "bits": result.bits, "energy": result.energy, "wall_time": result.wall_time}
    elif args.solver == "qaoa":
        cfg = QAOAConfig(layers=args.layers, restarts=args.restarts, max_evaluations=args.max_evaluations)
        result = solve_qaoa(problem, cfg, seed=args.seed)
        payload = {"solver": "qaoa", "bits": result.bits, "energy": result.energy, "wall_time": result.wall_time}
        if args.histogram_out:
            angles, _ = qaoa_optimize(problem, cfg, seed=args.seed)
            state = qaoa_state(problem, angles[: args.layers], angles[args.layers :])
    else:  # gqco
        if not args.checkpoint:
            raise ConfigurationError("--checkpoint is required for the gqco solver")
        model = load_checkpoint(args.checkpoint)
        record = gqco_solve(
            problem, model, num_samples=args.num_samples, seed=args.seed, temperature=args.temperature
        )
        payload = {
            "solver": "gqco",
            "bits": record.bits,
            "energy": record.energy,
            "wall_time": record.wall_time,
            "num_samples": args.num_samples,
            "circuit": json.loads(record.circuit),
        }
        if args.histogram_out:
            from .circuits import Circuit

            state = run_circuit(Circuit.from_json(record.circuit, n=problem.n))
    payload["n"] = problem.n
    payload["correct"] = is_correct_solution(problem, payload["bits"])
    if args.histogram_out and state is not None:
        _emit_histogram(state, args.shots, args.seed, args.histogram_out)
    _write_json(payload, args.out)
    return 0


def _load_train_setup(path: str):
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot load config from {path}: {exc}") from exc
    try:
        model_cfg = ModelConfig(**data.get("model", {}))
        train_cfg = TrainConfig.from_dict(data.get("train", {}))
    except TypeError as exc:
        raise ConfigurationError(f"bad config fields: {exc}") from exc
    steps = int(data.get("steps", 1000))
    expert_sizes = tuple(data.get("expert_sizes", [3]))
    advance = bool(data.get("advance", True))
    return model_cfg, train_cfg, steps, expert_sizes, advance


def cmd_train(args) -> int:
    if args.resume:
        run_dir = Path(args.resume)
        config_path = run_dir / "config.json"
        state_path = run_dir / "state.json"
        if not config_path.exists() or not state_path.exists():
            raise ConfigurationError(f"{run_dir} is not a resumable run directory")
        stored = json.loads(config_path.read_text())
        state = json.loads(state_path.read_text())
        train_cfg = TrainConfig.from_dict(stored["train"])
        checkpoint = state.get("latest_checkpoint")
        if not checkpoint:
            raise ConfigurationError("run directory has no checkpoint to resume from")
        model = load_checkpoint(run_dir / "checkpoints" / checkpoint)
        trainer = Trainer(
            model,
            train_cfg,
            run_dir=run_dir,
            curriculum=CurriculumState(n_max=state["n_max"], phase=state["phase"]),
        )
        trainer.step_count = int(state["step"])
        steps = args.steps if args.steps is not None else 1000
        advance = True
    else:
        if not args.config or not args.out:
            raise ConfigurationError("train requires --config and --out (or --resume)")
        model_cfg, train_cfg, steps, expert_sizes, advance = _load_train_setup(args.config)
        if args.steps is not None:
            steps = args.steps
        model = build_model(model_cfg, expert_sizes=expert_sizes, seed=train_cfg.seed)
        trainer = Trainer(model, train_cfg, run_dir=args.out)
    trainer.run(steps, advance=advance)
    trainer.save_checkpoint("final")
    print(f"trained {steps} steps; run directory: {trainer.run_dir}")
    return 0


def cmd_expert_tune(args) -> int:
    model = load_checkpoint(args.checkpoint)
    train_cfg = TrainConfig.from_dict(json.loads(Path(args.config).read_text())["train"]) if args.config else TrainConfig()
    trainer = Trainer(
        model,
        train_cfg,
        run_dir=args.out,
        curriculum=CurriculumState(n_max=max(model.expert_sizes), phase="expert_tuning"),
    )
    trainer.expert_tune(args.n, args.steps)
    path = trainer.save_checkpoint(f"tuned_n{args.n}")
    print(f"expert {args.n} tuned for {args.steps} steps; checkpoint: {path}")
    return 0


def cmd_bench(args) -> int:
    spec = BenchmarkSpec.from_dict(json.loads(Path(args.spec).read_text())) if args.spec else BenchmarkSpec()
    model = load_checkpoint(args.checkpoint)
    result = run_benchmark(spec, model, out_dir=args.out)
    print(f"benchmarked {len(result.records)} solves into {args.out}")
    for row in result.accuracy_rows:
        print(
            f"n={row['n']} solver={row['solver']} parameter={row['parameter']} "
            f"accuracy={row['accuracy']:.3f} mean_wall_time={row['mean_wall_time']:.4g}s"
        )
    return 0


def cmd_report(args) -> int:
    run_dir = Path(args.run)
    if not (run_dir / "records.csv").exists():
        raise ConfigurationError(f"{run_dir} does not contain records.csv")
    records = load_records(run_dir)
    problems = load_problems(run_dir)
    replay_ok = verify_records(records, problems)
    rows = recompute_accuracy(records, problems)
    print(f"records: {len(records)}; replay check: {'ok' if replay_ok else 'FAILED'}")
    for row in rows:
        print(
            f"n={row['n']} solver={row['solver']} parameter={row['parameter']} "
            f"accuracy={row['accuracy']:.3f}"
        )
    model = load_checkpoint(args.checkpoint) if args.checkpoint else None
    incorrect = [r for r in records if r.solver == "gqco" and not r.correct]
    if model is not None:
        cases = failure_report(model, records, problems, out_dir=run_dir)
        print(f"failure report: {len(cases)} case(s) written to {run_dir / 'failures.json'}")
    elif incorrect:
        print(f"{len(incorrect)} incorrect generative solves; pass --checkpoint for the failure report")
    return 0 if replay_ok else 2


def cmd_demo(args) -> int:
    model = load_checkpoint(args.checkpoint)
    report = maxcut_demo(model, shot_budgets=tuple(args.shots), num_samples=args.num_samples, seed=args.seed, out_dir=args.out)
    print(json.dumps(asdict(report), indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gqco", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-problem", help="generate a random problem as JSON")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", type=str, default=None)
    g.add_argument("--dump-features", type=str, default=None, help="also dump graph feature CSVs to PREFIX.{nodes,edges}.csv")
    g.set_defaults(func=cmd_gen_problem)

    s = sub.add_parser("solve", help="solve one problem file")
    s.add_argument("--solver", choices=("gqco", "sa", "qaoa", "brute"), required=True)
    s.add_argument("--problem", type=str, required=True)
    s.add_argument("--checkpoint", type=str, default=None)
    s.add_argument("--num-samples", type=int, default=100)
    s.add_argument("--temperature", type=float, default=2.0)
    s.add_argument("--sweeps", type=int, default=1000)
    s.add_argument("--t-start", type=float, default=None)
    s.add_argument("--t-end", type=float, default=0.01)
    s.add_argument("--layers", type=int, default=1)
    s.add_argument("--restarts", type=int, default=5)
    s.add_argument("--max-evaluations", type=int, default=None)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--shots", type=int, default=1000)
    s.add_argument("--histogram-out", type=str, default=None)
    s.add_argument("--out", type=str, default=None)
    s.set_defaults(func=cmd_solve)

    t = sub.add_parser("train", help="run preference training")
    t.add_argument("--config", type=str, default=None)
    t.add_argument("--out", type=str, default=None)
    t.add_argument("--resume", type=str, default=None)
    t.add_argument("--steps", type=int, default=None)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("expert-tune", help="fine-tune one expert with shared weights frozen")
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--steps", type=int, required=True)
    e.add_argument("--checkpoint", type=str, required=True)
    e.add_argument("--config", type=str, default=None)
    e.add_argument("--out", type=str, default=None)
    e.set_defaults(func=cmd_expert_tune)

    b = sub.add_parser("bench", help="run the benchmark protocol")
    b.add_argument("--spec", type=str, default=None)
    b.add_argument("--checkpoint", type=str, required=True)
    b.add_argument("--out", type=str, required=True)
    b.set_defaults(func=cmd_bench)

    r = sub.add_parser("report", help="summarize a benchmark run directory")
    r.add_argument("--run", type=str, required=True)
    r.add_argument("--checkpoint", type=str, default=None)
    r.set_defaults(func=cmd_report)

    d = sub.add_parser("demo", help="run the weighted max-cut shot-budget demo")
    d.add_argument("--checkpoint", type=str, required=True)
    d.add_argument("--out", type=str, default=None)
    d.add_argument("--shots", type=int, nargs="+", default=[1, 10, 100, 1000])
    d.add_argument("--num-samples", type=int, default=100)
    d.add_argument("--seed", type=int, default=0)
    d.set_defaults(func=cmd_demo)

    return parser


def main(argv=None) -> int:
    _apply_thread_cap()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ResourceError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return 3
    except (ConfigurationError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except GqcoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
