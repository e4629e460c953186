"""Projective measurement sampling, readout noise, and estimation.

A sampling run turns a measurement plan into shot records: per scheduled
observable, a histogram of outcome bitstrings drawn from the Born
distribution in that observable's eigenbasis.  Expectation values of
k-local observables are then estimated by pooling every record whose
parallel observable restricts to the local one, which is where parallel
schedules gain their shot efficiency.

The readout model is a tensor product of per-qubit column-stochastic
2x2 confusion matrices.  Mitigation restricts the full confusion matrix
to the observed outcomes, renormalizes its columns, inverts, and
projects the result back onto the probability simplex, mirroring
matrix-free measurement mitigation at small scale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .hashfam import MeasurementPlan
from .pauli import PauliString, is_restriction, parse_pauli
from .simstate import born_vector


@dataclass
class ShotRecord:
    """Outcome histogram of one scheduled observable.

    Counts are floats so mitigated records (real-weighted) share the
    type; raw sampling always produces integers.
    """

    observable: PauliString
    counts: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.observable)
        for outcome, c in self.counts.items():
            if len(outcome) != n or set(outcome) - {"0", "1"}:
                raise ValueError(f"bad outcome {outcome!r} for {self.observable}")
            if c < 0:
                raise ValueError(f"negative count for {outcome!r}")

    @property
    def shots(self) -> float:
        return float(sum(self.counts.values()))


@dataclass
class ReadoutModel:
    """Per-qubit confusion matrices; entry [read, true]."""

    matrices: list[np.ndarray]

    def __post_init__(self):
        for m in self.matrices:
            m = np.asarray(m, dtype=float)
            if m.shape != (2, 2) or np.any(m < 0):
                raise ValueError("each confusion matrix is 2x2 nonnegative")
            if not np.allclose(m.sum(axis=0), 1.0, atol=1e-9):
                raise ValueError("confusion matrix columns must sum to 1")

    @property
    def n(self) -> int:
        return len(self.matrices)

    @classmethod
    def uniform(cls, n: int, p01: float, p10: float) -> "ReadoutModel":
        """Same flip probabilities on every qubit: p01 = P(read 1 | true 0)."""
        m = np.array([[1.0 - p01, p10], [p01, 1.0 - p10]])
        return cls([m.copy() for _ in range(n)])


@dataclass
class Estimate:
    value: float
    shots: float
    stderr: float


@dataclass
class ExpectationTable:
    """Pooled estimates of local observables, plus any covered local that
    ended up with zero compatible shots (reported, never dropped)."""

    n: int
    k: int
    entries: dict[PauliString, Estimate] = field(default_factory=dict)
    starved: list[PauliString] = field(default_factory=list)


def allocate_shots(n_obs: int, total: int, allocation: str, rng) -> np.ndarray:
    """Shots per observable: uniformly random assignment or round robin."""
    if total <= 0:
        raise ValueError("total shots must be positive")
    if allocation == "random":
        return rng.multinomial(total, np.full(n_obs, 1.0 / n_obs))
    if allocation == "round_robin":
        base = total // n_obs
        out = np.full(n_obs, base, dtype=np.int64)
        out[: total % n_obs] += 1
        return out
    raise ValueError(f"unknown allocation {allocation!r}")


def sample(state: np.ndarray, plan: MeasurementPlan, total_shots: int,
           allocation: str = "random", seed: int = 0) -> list[ShotRecord]:
    """Draw projective measurement outcomes for every plan observable.

    Each observable gets its own RNG stream derived from (seed, index),
    so a record is reproducible regardless of the others.
    """
    rng = np.random.default_rng([seed, len(plan.observables)])
    per_obs = allocate_shots(len(plan.observables), total_shots, allocation, rng)
    records = []
    for idx, obs in enumerate(plan.observables):
        m = int(per_obs[idx])
        counts: dict[str, float] = {}
        if m > 0:
            p = born_vector(state, obs)
            draw = np.random.default_rng([seed, idx]).multinomial(m, p)
            n = len(obs)
            counts = {format(b, f"0{n}b"): float(c)
                      for b, c in enumerate(draw) if c}
        records.append(ShotRecord(obs, counts))
    return records


def apply_readout_noise(record: ShotRecord, model: ReadoutModel,
                        seed: int = 0) -> ShotRecord:
    """Flip each outcome bit independently per the confusion matrices."""
    n = len(record.observable)
    if model.n != n:
        raise ValueError("model size does not match record")
    rng = np.random.default_rng(seed)
    p_flip = np.array([[m[1, 0], m[0, 1]] for m in model.matrices])
    noisy: dict[str, float] = {}
    for outcome, c in sorted(record.counts.items()):
        c = int(round(c))
        bits = np.array([int(b) for b in outcome])
        flips = rng.random((c, n)) < p_flip[np.arange(n), bits][None, :]
        read = bits[None, :] ^ flips
        for row in read:
            key = "".join("1" if b else "0" for b in row)
            noisy[key] = noisy.get(key, 0.0) + 1.0
    return ShotRecord(record.observable, noisy)


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    rho = np.nonzero(u + (1.0 - css) / (np.arange(v.size) + 1) > 0)[0][-1]
    theta = (1.0 - css[rho]) / (rho + 1)
    return np.clip(v + theta, 0.0, None)


def mitigate(record: ShotRecord, model: ReadoutModel) -> ShotRecord:
    """Invert the readout model on the observed-outcome subspace."""
    outcomes = sorted(record.counts)
    if not outcomes:
        return ShotRecord(record.observable, {})
    m_shots = record.shots
    freq = np.array([record.counts[o] for o in outcomes]) / m_shots
    bits = np.array([[int(b) for b in o] for o in outcomes])
    n = len(record.observable)
    # confusion matrix restricted to observed bitstrings: product over
    # qubits of the per-qubit [read, true] entries
    sub = np.ones((len(outcomes), len(outcomes)))
    for q in range(n):
        mq = model.matrices[q]
        sub *= mq[np.ix_(bits[:, q], bits[:, q])]
    col = sub.sum(axis=0)
    col[col <= 0] = 1.0
    sub = sub / col
    try:
        sol = np.linalg.solve(sub, freq)
    except np.linalg.LinAlgError:
        sol, *_ = np.linalg.lstsq(sub, freq, rcond=None)
    if np.any(sol < 0):
        sol = _project_simplex(sol)
    counts = {o: float(v * m_shots) for o, v in zip(outcomes, sol) if v > 0}
    return ShotRecord(record.observable, counts)


def aggregate(records: list[ShotRecord], k: int) -> ExpectationTable:
    """Pool every compatible record into each covered k-local estimate.

    eta_i = (sum of signed counts) / (total compatible shots); the
    standard error is sqrt((1 - eta**2) / M) for M pooled shots.
    """
    if not records:
        raise ValueError("no records to aggregate")
    n = len(records[0].observable)
    import itertools

    locals_seen: dict[PauliString, list[ShotRecord]] = {}
    for rec in records:
        support = [q - 1 for q in rec.observable.support]
        for sub in itertools.combinations(support, k):
            word = ["I"] * n
            for pos in sub:
                word[pos] = rec.observable[pos]
            key = PauliString("".join(word))
            locals_seen.setdefault(key, []).append(rec)

    table = ExpectationTable(n, k)
    for local in sorted(locals_seen):
        num = 0.0
        den = 0.0
        support = [q - 1 for q in local.support]
        for rec in locals_seen[local]:
            for outcome, c in rec.counts.items():
                sign = 1.0
                for pos in support:
                    if outcome[pos] == "1":
                        sign = -sign
                num += sign * c
                den += c
        if den <= 0:
            table.starved.append(local)
            continue
        eta = num / den
        stderr = float(np.sqrt(max(0.0, 1.0 - eta * eta) / den))
        table.entries[local] = Estimate(float(eta), float(den), stderr)
    return table


def bootstrap_stderr(records: list[ShotRecord], local: PauliString,
                     resamples: int = 50, seed: int = 0) -> float:
    """Resample each compatible record's histogram and re-estimate."""
    rng = np.random.default_rng(seed)
    compat = [r for r in records
              if is_restriction(local, r.observable) and r.shots > 0]
    if not compat:
        raise ValueError(f"no compatible shots for {local}")
    support = [q - 1 for q in local.support]
    vals = []
    for _ in range(resamples):
        num = 0.0
        den = 0.0
        for rec in compat:
            outcomes = sorted(rec.counts)
            weights = np.array([rec.counts[o] for o in outcomes], dtype=float)
            m = int(round(weights.sum()))
            draw = rng.multinomial(m, weights / weights.sum())
            for o, c in zip(outcomes, draw):
                if not c:
                    continue
                sign = 1.0
                for pos in support:
                    if o[pos] == "1":
                        sign = -sign
                num += sign * c
                den += c
        vals.append(num / den)
    return float(np.std(vals, ddof=1))


def exact_records(state: np.ndarray, plan: MeasurementPlan,
                  shots_per_obs: float = 1.0) -> list[ShotRecord]:
    """Infinite-shot pseudo-records: counts equal Born probabilities."""
    records = []
    for obs in plan.observables:
        p = born_vector(state, obs)
        n = len(obs)
        counts = {format(b, f"0{n}b"): float(shots_per_obs * v)
                  for b, v in enumerate(p) if v > 1e-16}
        records.append(ShotRecord(obs, counts))
    return records


def write_records(path, records: list[ShotRecord]) -> None:
    """One JSON object per line: {"obs": ..., "counts": {...}}."""
    with open(path, "w") as fh:
        for rec in records:
            counts = {o: (int(c) if float(c).is_integer() else c)
                      for o, c in sorted(rec.counts.items())}
            fh.write(json.dumps({"obs": str(rec.observable),
                                 "counts": counts}) + "\n")


def read_records(path) -> list[ShotRecord]:
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            data = json.loads(line)
            records.append(ShotRecord(parse_pauli(data["obs"]),
                                      {o: float(c)
                                       for o, c in data["counts"].items()}))
    return records
