"""Command-line interface: ``dynrep {simulate,fit,predict,eval,cluster}``.

Exit status is 0 on success, 2 on usage errors (bad flags or values) and 1
on runtime failures (unreadable input, training divergence, ...).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from .cluster import kmeans_euclidean, kmeans_functional
from .evaluation import (
    adjusted_rand_index,
    degree_trajectory,
    estimated_connectivity,
    run_link_holdout,
    run_timepoint_holdout,
    write_trajectory_csv,
)
from .model import EmbeddingModel, Penalties, predict_links
from .network import load_edge_list, write_edge_list
from .spline import default_num_basis, make_basis
from .synthesis import GeneratorSpec, generate
from .trainer import TrainConfig, cluster_at_time, fit


class UsageError(Exception):
    pass


def _fractions(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad fraction list {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("need at least one fraction")
    return vals


def _add_basis_args(p):
    p.add_argument("--D", type=int, default=None, help="number of basis functions (default: max(6, ceil(n/4)) capped at n)")
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--T", type=float, default=1.0, help="model time domain [0, T]")


def _add_fit_args(p):
    d = Penalties()
    c = TrainConfig()
    p.add_argument("--R", type=int, default=6)
    _add_basis_args(p)
    p.add_argument("--L-out", type=int, default=4)
    p.add_argument("--L-in", type=int, default=5)
    p.add_argument("--lambda-a0", type=float, default=d.lam_a0)
    p.add_argument("--lambda-a1", type=float, default=d.lam_a1)
    p.add_argument("--lambda-a2", type=float, default=d.lam_a2)
    p.add_argument("--lambda-b0", type=float, default=d.lam_b0)
    p.add_argument("--lambda-b1", type=float, default=d.lam_b1)
    p.add_argument("--lr-alpha", type=float, default=c.a_alpha)
    p.add_argument("--lr-beta", type=float, default=c.a_beta)
    p.add_argument("--max-iters", type=int, default=c.max_iters)
    p.add_argument("--tol", type=float, default=c.tol)
    p.add_argument("--kmeans-every", type=int, default=c.kmeans_every)
    p.add_argument("--restarts", type=int, default=c.kmeans_restarts)
    p.add_argument("--init-scale", type=float, default=c.init_scale)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--verbose", action="store_true")


def _train_config(args) -> TrainConfig:
    try:
        pen = Penalties(args.lambda_a0, args.lambda_b0, args.lambda_a1, args.lambda_b1, args.lambda_a2)
        return TrainConfig(
            penalties=pen,
            a_alpha=args.lr_alpha,
            a_beta=args.lr_beta,
            max_iters=args.max_iters,
            tol=args.tol,
            kmeans_restarts=args.restarts,
            kmeans_every=args.kmeans_every,
            seed=args.seed,
            init_scale=args.init_scale,
            verbose=args.verbose,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _basis_for(args, n_times: int):
    D = args.D if args.D is not None else default_num_basis(n_times, args.degree)
    try:
        return make_basis(args.T, D, args.degree)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _check_clusters(args, M: int):
    if args.R < 1:
        raise UsageError("--R must be at least 1")
    for flag, L in (("--L-out", args.L_out), ("--L-in", args.L_in)):
        if not 1 <= L <= M:
            raise UsageError(f"{flag} {L}: L exceeds M={M} or is not positive")


def _out_dir(args) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _dump_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def cmd_simulate(args) -> None:
    if args.M < 2 or args.n < 1:
        raise UsageError("--M must be at least 2 and --n at least 1")
    _check_clusters(args, args.M)
    basis = _basis_for(args, args.n)
    try:
        spec = GeneratorSpec(
            M=args.M, n=args.n, R=args.R, L_out=args.L_out, L_in=args.L_in,
            sigma_alpha=args.sigma_alpha, sigma_beta=args.sigma_beta,
            center_scale=args.center_scale, basis=basis, seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    sim = generate(spec)
    out = _out_dir(args)
    write_edge_list(sim.network, out / "network.csv")
    sim.truth.save(out / "truth_model.json")
    with (out / "labels.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node", "out", "in"])
        for lab, lo, li in zip(sim.truth.node_labels, sim.labels_out, sim.labels_in):
            w.writerow([lab, int(lo), int(li)])


def cmd_fit(args) -> None:
    config = _train_config(args)
    net = load_edge_list(args.input, T=args.T)
    _check_clusters(args, net.M)
    basis = _basis_for(args, net.n)
    model, report = fit(net, config, args.R, basis, args.L_out, args.L_in)
    out = _out_dir(args)
    model.save(out / "model.json")
    doc = report.to_dict()
    doc["config"] = config.to_dict()
    _dump_json(out / "report.json", doc)


def cmd_predict(args) -> None:
    model = EmbeddingModel.load(args.model)
    if not 0.0 <= args.t <= model.basis.T:
        raise UsageError(f"--t {args.t} outside the model domain [0, {model.basis.T}]")
    if not 0.0 < args.threshold <= 1.0:
        raise UsageError("--threshold must be in (0, 1]")
    pred, prob = predict_links(model, args.t, args.threshold)
    out = _out_dir(args)
    labels = model.node_labels
    with (out / "probabilities.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node", *labels])
        for lab, row in zip(labels, prob):
            w.writerow([lab, *(repr(float(x)) for x in row)])
    with (out / "edges.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["src", "dst", "probability"])
        for j, k in zip(*np.nonzero(pred)):
            w.writerow([labels[j], labels[k], repr(float(prob[j, k]))])


def cmd_eval(args) -> None:
    out_dir = Path(args.output_dir)
    if args.protocol == "trajectory":
        if not args.model:
            raise UsageError("--protocol trajectory requires --model")
        model = EmbeddingModel.load(args.model)
        net = load_edge_list(args.input, T=model.basis.T)
        grid = np.linspace(0.0, model.basis.T, args.grid_size)
        _out_dir(args)
        write_trajectory_csv(
            out_dir / "trajectory.csv",
            {
                "observed_degree": (net.times, degree_trajectory(net)),
                "estimated_connectivity": (grid, estimated_connectivity(model, grid)),
            },
        )
        return
    config = _train_config(args)
    if args.reps < 1:
        raise UsageError("--reps must be at least 1")
    if any(not 0.0 < f < 1.0 for f in args.fractions):
        raise UsageError("--fractions must lie in (0, 1)")
    net = load_edge_list(args.input, T=args.T)
    _check_clusters(args, net.M)
    basis = _basis_for(args, net.n)
    runner = run_link_holdout if args.protocol == "links" else run_timepoint_holdout
    table = runner(
        net, args.fractions, args.reps, config, args.seed,
        R=args.R, basis=basis, L_out=args.L_out, L_in=args.L_in,
        threshold=args.threshold, threads=max(1, args.threads),
    )
    _out_dir(args)
    table.write_csv(out_dir / "results.csv")
    table.write_summary_json(out_dir / "summary.json")
    for row in table.summary():
        print(f"{row['fraction']:g}\t{row['mean_f1']:.4f}\t{row['sd_f1']:.4f}")


def _read_truth_labels(path, column: str, order) -> np.ndarray:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = {r["node"]: r[column] for r in csv.DictReader(fh)}
    missing = [lab for lab in order if lab not in rows]
    if missing:
        raise ValueError(f"{path}: no label for node {missing[0]!r}")
    return np.array([rows[lab] for lab in order])


def cmd_cluster(args) -> None:
    model = EmbeddingModel.load(args.model)
    if not 1 <= args.L <= model.M:
        raise UsageError(f"--L {args.L}: L exceeds M={model.M} or is not positive")
    if args.mode == "dynamic":
        if args.t is None:
            raise UsageError("--mode dynamic requires --t")
        if not 0.0 <= args.t <= model.basis.T:
            raise UsageError(f"--t {args.t} outside the model domain [0, {model.basis.T}]")
        res = cluster_at_time(model, args.t, args.L, args.restarts, args.seed)
    elif args.mode == "static-out":
        res = kmeans_functional(model.gamma, model.basis.gram, args.L, args.restarts, args.seed)
    else:
        res = kmeans_euclidean(model.beta, args.L, args.restarts, args.seed)
    out = _out_dir(args)
    with (out / "clusters.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node", "cluster"])
        for lab, c in zip(model.node_labels, res.labels):
            w.writerow([lab, int(c)])
    summary = {"mode": args.mode, "L": args.L, "t": args.t, "objective": res.inertia}
    if args.labels:
        column = "in" if args.mode == "static-in" else "out"
        truth = _read_truth_labels(args.labels, column, model.node_labels)
        summary["ari"] = adjusted_rand_index(res.labels, truth)
        print(f"ari={summary['ari']:.6f}")
    _dump_json(out / "cluster_summary.json", summary)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dynrep", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a planted-cluster dynamic network")
    p.add_argument("--M", type=int, default=50)
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--R", type=int, default=6)
    _add_basis_args(p)
    p.add_argument("--L-out", type=int, default=4)
    p.add_argument("--L-in", type=int, default=5)
    p.add_argument("--sigma-alpha", type=float, default=0.25)
    p.add_argument("--sigma-beta", type=float, default=0.25)
    p.add_argument("--center-scale", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit embeddings to a time,src,dst edge list")
    p.add_argument("--input", required=True)
    p.add_argument("--output-dir", required=True)
    _add_fit_args(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="link probabilities at time t")
    p.add_argument("--model", "--input", dest="model", required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="holdout evaluation or degree trajectories")
    p.add_argument("--input", required=True)
    p.add_argument("--output-dir", required=True)
    p.add_argument("--protocol", choices=["links", "timepoints", "trajectory"], default="links")
    p.add_argument("--fractions", type=_fractions, default=[0.1, 0.2, 0.3, 0.4, 0.5])
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--model", help="fitted model (trajectory protocol)")
    p.add_argument("--grid-size", type=int, default=201)
    _add_fit_args(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("cluster", help="static or dynamic clustering of a fitted model")
    p.add_argument("--model", "--input", dest="model", required=True)
    p.add_argument("--mode", choices=["static-out", "static-in", "dynamic"], required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--labels", help="labels.csv with node,out,in columns; reports ARI")
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=cmd_cluster)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"dynrep {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"dynrep {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
