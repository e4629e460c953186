"""End-to-end experiment orchestration.

A single JSON-serializable config describes state preparation, the
measurement scheme, the shot budget, optional readout noise, and the
reconstruction settings.  Per-stage randomness is derived from one
master seed through a SeedSequence spawn tree, so any stage can be
replayed in isolation and whole sweeps are reproducible.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .circuits import BENCHMARK_TREES, CZ_PATTERN_6, ConnectivityTree, \
    design_w_circuit, random_circuit
from .hashfam import MeasurementPlan, plan_fqst, plan_lqst, plan_pqst
from .lps import LpsState, TrainConfig, TrainResult, lps_to_dense, reconstruct
from .metrics import cosine_similarity, hs_fidelity, projection_from_state, \
    projection_from_table
from .pauli import DENSE_QUBIT_LIMIT
from .sampler import ExpectationTable, ReadoutModel, ShotRecord, aggregate, \
    apply_readout_noise, mitigate, sample
from .simstate import build_hamiltonian, evolve, random_hamiltonian, simulate, \
    vqe_optimize, w_state, zero_state


@dataclass
class ExperimentConfig:
    n: int
    state: dict = field(default_factory=lambda: {"kind": "w"})
    scheme: str = "pqst"
    k: int = 2
    shots: int = 10_000
    allocation: str = "round_robin"
    loss: str = "mse"
    chi: int = 18
    mu: int = 2
    max_iters: int = 100
    init_noise: float = 1e-2
    readout: dict | None = None
    mitigate: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in ("pqst", "lqst", "fqst"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if "kind" not in self.state:
            raise ValueError("state config needs a 'kind'")


def config_to_json(cfg: ExperimentConfig) -> str:
    return json.dumps(asdict(cfg), indent=2, sort_keys=True)


def config_from_json(text: str) -> ExperimentConfig:
    return ExperimentConfig(**json.loads(text))


def _stage_seed(master: int, *path) -> int:
    """Stable per-stage integer seed from the master seed."""
    ss = np.random.SeedSequence([int(master), *[int(p) for p in path]])
    return int(ss.generate_state(1, dtype=np.uint64)[0] % (2 ** 63))


def prepare_state(state_cfg: dict, n: int) -> np.ndarray:
    """Build the true statevector named by a state config."""
    kind = state_cfg["kind"]
    if kind == "w":
        if "edges" in state_cfg:
            tree = ConnectivityTree(n, tuple(tuple(e) for e in state_cfg["edges"]))
            root = state_cfg.get("root", 1)
        elif n in BENCHMARK_TREES:
            tree, root = BENCHMARK_TREES[n]
        else:
            tree = ConnectivityTree(n, tuple((i, i + 1) for i in range(1, n)))
            root = 1
        return simulate(design_w_circuit(tree, root))
    if kind == "vqe":
        spec = random_hamiltonian(n, state_cfg.get("seed", 0))
        result = vqe_optimize(spec, state_cfg.get("layers", 2), CZ_PATTERN_6,
                              seed=state_cfg.get("optimizer_seed", 500),
                              restarts=state_cfg.get("restarts", 2))
        return result.state
    if kind == "random_circuit":
        circ = random_circuit(n, state_cfg.get("depth", 8),
                              state_cfg.get("seed", 0))
        return simulate(circ)
    if kind == "dynamics":
        spec = random_hamiltonian(n, state_cfg.get("seed", 0),
                                  state_cfg.get("scale", 1.0))
        h = build_hamiltonian(spec)
        initial = state_cfg.get("initial", "zero")
        psi0 = w_state(n) if initial == "w" else zero_state(n)
        return evolve(h, psi0, state_cfg.get("time", 0.1))
    raise ValueError(f"unknown state kind {kind!r}")


def build_plan(scheme: str, n: int, k: int, seed: int = 0) -> MeasurementPlan:
    if scheme == "pqst":
        return plan_pqst(n, k, seed=seed)
    if scheme == "lqst":
        return plan_lqst(n, k)
    if scheme == "fqst":
        return plan_fqst(n, allow_large=True)
    raise ValueError(f"unknown scheme {scheme!r}")


def merged_table(records: list[ShotRecord], k: int) -> ExpectationTable:
    """Estimates for every covered weight from 1 up to k in one table."""
    n = len(records[0].observable)
    out = ExpectationTable(n, k)
    for j in range(1, k + 1):
        part = aggregate(records, j)
        out.entries.update(part.entries)
        out.starved.extend(part.starved)
    return out


def collect_records(state, plan, cfg: ExperimentConfig) -> list[ShotRecord]:
    """Sample, then push through readout noise and optional mitigation."""
    records = sample(state, plan, cfg.shots, cfg.allocation,
                     seed=_stage_seed(cfg.seed, 1))
    if cfg.readout:
        model = ReadoutModel.uniform(cfg.n, cfg.readout.get("p01", 0.0),
                                     cfg.readout.get("p10", 0.0))
        noisy = [apply_readout_noise(r, model, seed=_stage_seed(cfg.seed, 2, i))
                 for i, r in enumerate(records)]
        records = [mitigate(r, model) for r in noisy] if cfg.mitigate else noisy
    return records


@dataclass
class TomographyResult:
    config: ExperimentConfig
    plan: MeasurementPlan
    records: list[ShotRecord]
    table: ExpectationTable
    train: TrainResult
    fidelity: float | None
    cosine: float | None

    @property
    def lps(self) -> LpsState:
        return self.train.lps


def run_tomography(cfg: ExperimentConfig, state: np.ndarray | None = None,
                   plan: MeasurementPlan | None = None) -> TomographyResult:
    """Full pipeline: prepare, schedule, sample, reconstruct, score."""
    if state is None:
        state = prepare_state(cfg.state, cfg.n)
    if plan is None:
        plan = build_plan(cfg.scheme, cfg.n, cfg.k, seed=cfg.seed)
    records = collect_records(state, plan, cfg)
    table = merged_table(records, cfg.k)
    train_cfg = TrainConfig(loss=cfg.loss, chi=cfg.chi, mu=cfg.mu,
                            max_iters=cfg.max_iters,
                            seed=_stage_seed(cfg.seed, 3),
                            init_noise=cfg.init_noise)
    data = table if cfg.loss == "mse" else records
    train = reconstruct(data, train_cfg)

    fidelity = cosine = None
    if cfg.n <= DENSE_QUBIT_LIMIT:
        fidelity = hs_fidelity(state, lps_to_dense(train.lps))
    if table.entries:
        words = tuple(sorted(table.entries))
        cosine = cosine_similarity(projection_from_state(train.lps, words),
                                   projection_from_state(state, words))
    return TomographyResult(cfg, plan, records, table, train, fidelity, cosine)


def run_budget_sweep(base: ExperimentConfig, budgets, schemes,
                     replicates: int = 1, state: np.ndarray | None = None):
    """Fidelity of each scheme at each shot budget, replicated over seeds.

    Returns one row dict per run, in deterministic order.
    """
    if state is None:
        state = prepare_state(base.state, base.n)
    rows = []
    for scheme in schemes:
        plan = build_plan(scheme, base.n, base.k, seed=base.seed)
        for shots in budgets:
            for rep in range(replicates):
                cfg = replace(base, scheme=scheme, shots=int(shots),
                              seed=_stage_seed(base.seed, 17, rep))
                res = run_tomography(cfg, state=state, plan=plan)
                rows.append({
                    "scheme": scheme,
                    "shots": int(shots),
                    "replicate": rep,
                    "plan_size": plan.size,
                    "fidelity": res.fidelity,
                    "cosine": res.cosine,
                    "iterations": res.train.iterations,
                    "final_loss": res.train.final_loss,
                })
    return rows


def run_holdout_validation(cfg: ExperimentConfig, holdout: int = 5,
                           holdout_shots: int = 20_000,
                           state: np.ndarray | None = None):
    """Train on part of the schedule, validate on withheld observables.

    Each withheld observable is measured fresh on the true state; the
    reconstructed state predicts its outcome distribution.  Rows report
    total-variation distance and both expectation values.
    """
    from .lps import lps_born_vector
    from .pauli import marginal_eigenvalue

    if state is None:
        state = prepare_state(cfg.state, cfg.n)
    plan = build_plan(cfg.scheme, cfg.n, cfg.k, seed=cfg.seed)
    if not 0 < holdout < plan.size:
        raise ValueError("holdout count must leave a nonempty training plan")
    rng = np.random.default_rng(_stage_seed(cfg.seed, 23))
    held_idx = sorted(rng.choice(plan.size, size=holdout, replace=False))
    held = [plan.observables[i] for i in held_idx]
    kept = tuple(o for i, o in enumerate(plan.observables)
                 if i not in set(held_idx))
    train_plan = MeasurementPlan(plan.kind, plan.n, plan.k, kept)

    res = run_tomography(cfg, state=state, plan=train_plan)
    held_plan = MeasurementPlan(plan.kind, plan.n, plan.k, tuple(held))
    held_records = sample(state, held_plan, holdout_shots * len(held),
                          allocation="round_robin",
                          seed=_stage_seed(cfg.seed, 29))
    rows = []
    for obs, rec in zip(held, held_records):
        pred = lps_born_vector(res.lps, obs)
        m = rec.shots
        emp = np.zeros_like(pred)
        for outcome, c in rec.counts.items():
            emp[int(outcome, 2)] = c / m
        tv = 0.5 * float(np.abs(pred - emp).sum())
        pred_eta = float(sum(
            p * marginal_eigenvalue(obs, obs, format(b, f"0{cfg.n}b"))
            for b, p in enumerate(pred)))
        meas_eta = float(sum(c * marginal_eigenvalue(obs, obs, o)
                             for o, c in rec.counts.items()) / m)
        rows.append({
            "observable": str(obs),
            "tv_distance": tv,
            "predicted": pred_eta,
            "measured": meas_eta,
        })
    return rows, res
