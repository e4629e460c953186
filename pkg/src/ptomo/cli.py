"""Command-line interface.

Subcommands cover the full workflow: hash-family search (hashgen),
schedule construction (plan), state preparation (prep), measurement
simulation (sample), state fitting (reconstruct), scoring (metrics),
and the two report paths (sweep, holdout) that write figures next to
their CSV output.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time


def _limit_threads(threads):
    if not threads:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(threads))
    try:
        from threadpoolctl import threadpool_limits

        threadpool_limits(limits=int(threads))
    except ImportError:
        pass


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.10g}"
    return value


def _write_csv(path, fieldnames, rows):
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(v) for k, v in row.items()})


def _read_plan(path, k=None):
    from ptomo.hashfam import MeasurementPlan
    from ptomo.pauli import read_observables

    observables = tuple(read_observables(path))
    n = len(observables[0])
    if k is None:
        k = min(o.weight for o in observables)
    return MeasurementPlan("file", n, k, observables)


def cmd_hashgen(args):
    from ptomo.hashfam import solve_cover, write_family

    start = time.perf_counter()
    family = solve_cover(args.n, args.k, mode=args.mode, seed=args.seed)
    elapsed = time.perf_counter() - start
    if args.out:
        write_family(args.out, family)
    rows = len(family.rows)
    print(f"n={args.n} k={args.k} mode={args.mode} rows={rows} "
          f"observables={3 + 6 * rows if args.k == 2 else 'see plan'} "
          f"seconds={elapsed:.2f}")
    if args.out:
        print(f"family written to {args.out}")
    return 0


def cmd_plan(args):
    from ptomo.hashfam import plan_from_family, read_family
    from ptomo.pauli import write_observables
    from ptomo.pipeline import build_plan

    if args.family:
        family = read_family(args.family)
        plan = plan_from_family(family)
    elif args.n is None:
        raise SystemExit("plan: --n is required unless --family is given")
    else:
        plan = build_plan(args.scheme, args.n, args.k, seed=args.seed)
    if args.out:
        write_observables(args.out, plan.observables)
        print(f"plan written to {args.out}")
    print(f"scheme={plan.kind} n={plan.n} k={plan.k} observables={plan.size}")
    return 0


def cmd_prep(args):
    import numpy as np

    from ptomo.circuits import circuit_to_json, design_w_circuit, read_tree
    from ptomo.pipeline import prepare_state

    state_cfg = {"kind": args.kind}
    if args.kind in ("vqe", "random_circuit", "dynamics"):
        state_cfg["seed"] = args.seed
    if args.kind == "random_circuit":
        state_cfg["depth"] = args.depth
    if args.kind == "vqe":
        state_cfg["layers"] = args.layers
    if args.kind == "dynamics":
        state_cfg["time"] = args.time
        state_cfg["initial"] = args.initial
        state_cfg["scale"] = args.scale
    tree = root = None
    if args.tree:
        tree, root = read_tree(args.tree)
        state_cfg["edges"] = [list(e) for e in tree.edges]
        state_cfg["root"] = root
    psi = prepare_state(state_cfg, args.n)
    np.save(args.out, psi)
    print(f"state kind={args.kind} n={args.n} saved to {args.out}")
    if args.circuit_out and args.kind == "w":
        if tree is None:
            from ptomo.circuits import BENCHMARK_TREES, ConnectivityTree

            if args.n in BENCHMARK_TREES:
                tree, root = BENCHMARK_TREES[args.n]
            else:
                tree = ConnectivityTree(
                    args.n, tuple((i, i + 1) for i in range(1, args.n)))
                root = 1
        circ = design_w_circuit(tree, root)
        with open(args.circuit_out, "w") as fh:
            fh.write(circuit_to_json(circ))
        print(f"circuit written to {args.circuit_out}")
    return 0


def cmd_sample(args):
    import numpy as np

    from ptomo.sampler import (ReadoutModel, apply_readout_noise, mitigate,
                               sample, write_records)

    state = np.load(args.state)
    plan = _read_plan(args.plan)
    records = sample(state, plan, args.shots, args.allocation, seed=args.seed)
    if args.p01 or args.p10:
        model = ReadoutModel.uniform(plan.n, args.p01, args.p10)
        records = [apply_readout_noise(r, model, seed=args.seed + 1 + i)
                   for i, r in enumerate(records)]
        if args.mitigate:
            records = [mitigate(r, model) for r in records]
    write_records(args.out, records)
    total = sum(r.shots for r in records)
    print(f"sampled shots={int(total)} observables={plan.size} "
          f"allocation={args.allocation} out={args.out}")
    return 0


def cmd_reconstruct(args):
    from ptomo.lps import TrainConfig, reconstruct, save_lps, write_loss_trace
    from ptomo.pipeline import merged_table
    from ptomo.sampler import read_records

    records = read_records(args.records)
    cfg = TrainConfig(loss=args.loss, chi=args.chi, mu=args.mu,
                      max_iters=args.iters, seed=args.seed,
                      init_noise=args.noise, engine=args.engine)
    data = merged_table(records, args.k) if args.loss == "mse" else records
    result = reconstruct(data, cfg)
    save_lps(args.out, result.lps)
    print(f"loss={args.loss} iterations={result.iterations} "
          f"final_loss={result.final_loss:.6g} converged={result.converged}")
    print(f"chain written to {args.out}")
    if args.trace_out:
        write_loss_trace(args.trace_out, result.loss_trace)
        print(f"loss trace written to {args.trace_out}")
    if args.fig_out:
        from ptomo.figures import save_loss_curves

        save_loss_curves(args.fig_out, {args.loss: result.loss_trace})
        print(f"figure written to {args.fig_out}")
    return 0


def _all_local_words(n, max_weight):
    import itertools

    from ptomo.pauli import PauliString

    out = []
    for weight in range(1, max_weight + 1):
        for sites in itertools.combinations(range(n), weight):
            for letters in itertools.product("XYZ", repeat=weight):
                word = ["I"] * n
                for pos, c in zip(sites, letters):
                    word[pos] = c
                out.append(PauliString("".join(word)))
    return out


def cmd_metrics(args):
    import numpy as np

    from ptomo.lps import load_lps, lps_to_dense
    from ptomo.metrics import (correlator_matrix, cosine_similarity,
                               hs_fidelity, log_negativity,
                               projection_from_state)
    from ptomo.pauli import DENSE_QUBIT_LIMIT

    lps = load_lps(args.lps)
    n = lps.n
    rows = []
    reference = None
    if args.state:
        reference = np.load(args.state)
    if n <= DENSE_QUBIT_LIMIT:
        rho = lps_to_dense(lps)
        if reference is not None:
            rows.append({"metric": "fidelity",
                         "value": hs_fidelity(reference, rho)})
        if args.cut:
            label = "-".join(str(q) for q in args.cut)
            rows.append({"metric": f"log_negativity_cut_{label}",
                         "value": log_negativity(rho, args.cut)})
            if reference is not None:
                rows.append({"metric": f"log_negativity_reference_{label}",
                             "value": log_negativity(reference, args.cut)})
    if reference is not None:
        words = _all_local_words(n, args.proj_k)
        cosine = cosine_similarity(projection_from_state(lps, words),
                                   projection_from_state(reference, words))
        rows.append({"metric": f"cosine_k{args.proj_k}", "value": cosine})
    for row in rows:
        print(f"{row['metric']}={_fmt(row['value'])}")
    if args.out:
        _write_csv(args.out, ["metric", "value"], rows)
        print(f"metrics written to {args.out}")
    if args.fig_out:
        from ptomo.figures import save_correlator_heatmaps

        recon_mat = correlator_matrix(lps, args.corr_op)
        ref_mat = (correlator_matrix(reference, args.corr_op)
                   if reference is not None else None)
        save_correlator_heatmaps(args.fig_out, recon_mat, ref_mat,
                                 op=args.corr_op)
        print(f"figure written to {args.fig_out}")
    return 0


def _load_experiment(path):
    from ptomo.pipeline import ExperimentConfig

    with open(path) as fh:
        raw = json.load(fh)
    wrapper = {k: v for k, v in raw.items()
               if k in ("budgets", "schemes", "replicates", "holdout",
                        "holdout_shots")}
    exp = raw.get("experiment", {k: v for k, v in raw.items()
                                 if k not in wrapper})
    return ExperimentConfig(**exp), wrapper


def cmd_sweep(args):
    from ptomo.pipeline import run_budget_sweep

    cfg, wrapper = _load_experiment(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    budgets = wrapper.get("budgets", [cfg.shots])
    schemes = wrapper.get("schemes", [cfg.scheme])
    replicates = int(wrapper.get("replicates", 1))
    rows = run_budget_sweep(cfg, budgets, schemes, replicates)
    fields = ["scheme", "shots", "replicate", "plan_size", "fidelity",
              "cosine", "iterations", "final_loss"]
    _write_csv(args.out, fields, rows)
    print(f"sweep rows={len(rows)} written to {args.out}")
    if args.fig_out:
        from ptomo.figures import save_fidelity_sweep

        save_fidelity_sweep(args.fig_out, rows)
        print(f"figure written to {args.fig_out}")
    return 0


def cmd_holdout(args):
    from ptomo.pipeline import run_holdout_validation

    cfg, wrapper = _load_experiment(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    holdout = args.holdout or int(wrapper.get("holdout", 5))
    holdout_shots = args.holdout_shots or int(wrapper.get("holdout_shots",
                                                          20_000))
    rows, res = run_holdout_validation(cfg, holdout, holdout_shots)
    _write_csv(args.out, ["observable", "tv_distance", "predicted",
                          "measured"], rows)
    mean_tv = sum(r["tv_distance"] for r in rows) / len(rows)
    print(f"holdout observables={len(rows)} mean_tv={mean_tv:.6g} "
          f"written to {args.out}")
    if res.fidelity is not None:
        print(f"train_fidelity={res.fidelity:.6g}")
    if args.fig_out:
        from ptomo.figures import save_holdout_scatter

        save_holdout_scatter(args.fig_out, rows)
        print(f"figure written to {args.fig_out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ptomo",
        description="Parallel-measurement quantum state tomography toolkit")
    parser.add_argument("--threads", type=int, default=0,
                        help="cap BLAS/OpenMP thread pools")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("hashgen", help="search for a small perfect hash family")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--mode", choices=["exact", "greedy"], default="exact")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_hashgen)

    p = sub.add_parser("plan", help="build a measurement schedule")
    p.add_argument("--scheme", choices=["pqst", "lqst", "fqst"],
                   default="pqst")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--family", help="hash family file to expand instead")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("prep", help="prepare a benchmark state")
    p.add_argument("--kind", choices=["w", "vqe", "random_circuit",
                                      "dynamics"], default="w")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--depth", type=int, default=8)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--time", type=float, default=0.1)
    p.add_argument("--initial", choices=["zero", "w"], default="zero")
    p.add_argument("--scale", type=float, default=1.0,
                   help="coupling magnitude for dynamics generators")
    p.add_argument("--tree", help="connectivity tree JSON for W designs")
    p.add_argument("--circuit-out")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_prep)

    p = sub.add_parser("sample", help="simulate projective measurements")
    p.add_argument("--state", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--shots", type=int, required=True)
    p.add_argument("--allocation", choices=["random", "round_robin"],
                   default="round_robin")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p01", type=float, default=0.0,
                   help="probability of reading 1 when the qubit is 0")
    p.add_argument("--p10", type=float, default=0.0,
                   help="probability of reading 0 when the qubit is 1")
    p.add_argument("--mitigate", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("reconstruct", help="fit a purified chain to records")
    p.add_argument("--records", required=True)
    p.add_argument("--loss", choices=["mse", "mle"], default="mse")
    p.add_argument("--k", type=int, default=2,
                   help="estimate locality for the mse table")
    p.add_argument("--chi", type=int, default=18)
    p.add_argument("--mu", type=int, default=2)
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=1e-2,
                   help="initialization noise scale")
    p.add_argument("--engine", choices=["auto", "dense", "tn"],
                   default="auto")
    p.add_argument("--out", required=True)
    p.add_argument("--trace-out")
    p.add_argument("--fig-out")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("metrics", help="score a reconstruction")
    p.add_argument("--lps", required=True)
    p.add_argument("--state", help="reference statevector (.npy)")
    p.add_argument("--proj-k", type=int, default=2)
    p.add_argument("--cut", type=int, nargs="+",
                   help="qubits on one side of the negativity cut")
    p.add_argument("--corr-op", choices=["X", "Y", "Z"], default="Y")
    p.add_argument("--out")
    p.add_argument("--fig-out")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("sweep", help="fidelity vs shot budget report")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--fig-out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("holdout", help="validate on withheld observables")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--holdout", type=int)
    p.add_argument("--holdout-shots", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--fig-out")
    p.set_defaults(func=cmd_holdout)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    _limit_threads(args.threads)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
