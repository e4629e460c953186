import numpy as np
import pytest

from ptomo.circuits import BENCHMARK_TREES, design_w_circuit
from ptomo.hashfam import MeasurementPlan, plan_lqst, plan_pqst
from ptomo.pauli import parse_pauli
from ptomo.sampler import (
    ReadoutModel,
    ShotRecord,
    aggregate,
    allocate_shots,
    apply_readout_noise,
    bootstrap_stderr,
    exact_records,
    mitigate,
    read_records,
    sample,
    write_records,
)
from ptomo.simstate import born_vector, exact_expectation, simulate, zero_state


def w6_state():
    tree, root = BENCHMARK_TREES[6]
    return simulate(design_w_circuit(tree, root))


def plan_of(*words):
    obs = tuple(parse_pauli(w) for w in words)
    return MeasurementPlan("custom", len(words[0]), 2, obs)


def test_eigenstate_is_deterministic():
    plan = plan_of("ZZZ")
    recs = sample(zero_state(3), plan, 100, seed=1)
    assert recs[0].counts == {"000": 100.0}


def test_plus_state_in_x_basis():
    plus = np.full(2, 1 / np.sqrt(2))
    recs = sample(plus, plan_of("X"), 50, seed=2)
    assert recs[0].counts == {"0": 50.0}


def test_plus_state_in_z_basis_is_unbiased():
    plus = np.full(2, 1 / np.sqrt(2))
    m = 40_000
    recs = sample(plus, plan_of("Z"), m, seed=3)
    ones = recs[0].counts.get("1", 0.0)
    # 5 sigma band around the fair-coin mean
    assert abs(ones - m / 2) < 5 * np.sqrt(m / 4)


def test_round_robin_allocation():
    rng = np.random.default_rng(0)
    out = allocate_shots(7, 23, "round_robin", rng)
    assert out.tolist() == [4, 4, 3, 3, 3, 3, 3]
    assert out.sum() == 23


def test_random_allocation_sums_and_varies():
    rng = np.random.default_rng(0)
    out = allocate_shots(5, 1000, "random", rng)
    assert out.sum() == 1000
    assert len(set(out.tolist())) > 1


def test_unknown_allocation_rejected():
    with pytest.raises(ValueError):
        allocate_shots(3, 10, "stripe", np.random.default_rng(0))


def test_records_are_reproducible_per_observable():
    state = w6_state()
    plan = plan_pqst(6, 2)
    a = sample(state, plan, 5000, allocation="round_robin", seed=7)
    b = sample(state, plan, 5000, allocation="round_robin", seed=7)
    assert all(x.counts == y.counts for x, y in zip(a, b))


def test_readout_noise_flip_rate():
    rec = ShotRecord(parse_pauli("ZZ"), {"00": 20_000.0})
    model = ReadoutModel.uniform(2, p01=0.1, p10=0.0)
    noisy = apply_readout_noise(rec, model, seed=11)
    assert noisy.shots == rec.shots
    flipped = sum(c * o.count("1") for o, c in noisy.counts.items())
    # 40k independent bits at p=0.1: 5 sigma band
    assert abs(flipped - 4000) < 5 * np.sqrt(40_000 * 0.1 * 0.9)


def test_mitigation_recovers_exact_distribution():
    # push an exact two-qubit distribution through the confusion map
    # analytically, then invert it
    p_true = {"00": 0.5, "11": 0.3, "01": 0.2}
    model = ReadoutModel.uniform(2, p01=0.04, p10=0.06)
    m = 1.0
    blurred: dict[str, float] = {}
    for o, w in p_true.items():
        for r0 in "01":
            for r1 in "01":
                f = (model.matrices[0][int(r0), int(o[0])]
                     * model.matrices[1][int(r1), int(o[1])])
                key = r0 + r1
                blurred[key] = blurred.get(key, 0.0) + w * f * m
    rec = mitigate(ShotRecord(parse_pauli("ZZ"), blurred), model)
    for o, w in p_true.items():
        assert rec.counts.get(o, 0.0) == pytest.approx(w, abs=1e-10)


def test_mitigation_reduces_total_variation():
    state = w6_state()
    plan = plan_of("ZZZZZZ")
    clean = sample(state, plan, 100_000, seed=5)[0]
    model = ReadoutModel.uniform(6, p01=0.03, p10=0.05)
    noisy = apply_readout_noise(clean, model, seed=6)
    fixed = mitigate(noisy, model)
    p = born_vector(state, plan.observables[0])

    def tv(rec):
        m = rec.shots
        return 0.5 * sum(
            abs(rec.counts.get(format(b, "06b"), 0.0) / m - p[b])
            for b in range(64))

    assert tv(fixed) < tv(noisy)


def test_mitigated_counts_stay_normalized():
    rec = ShotRecord(parse_pauli("XZ"), {"00": 70.0, "10": 30.0})
    model = ReadoutModel.uniform(2, p01=0.2, p10=0.1)
    out = mitigate(rec, model)
    assert sum(out.counts.values()) == pytest.approx(100.0)
    assert all(v >= 0 for v in out.counts.values())


def test_aggregate_matches_exact_expectations():
    state = w6_state()
    plan = plan_pqst(6, 2)
    table = aggregate(exact_records(state, plan), k=2)
    assert not table.starved
    for local, est in table.entries.items():
        assert est.value == pytest.approx(
            exact_expectation(state, local), abs=1e-12)
    # every weight-2 restriction of the schedule is estimated
    assert len(table.entries) == 135


def test_aggregate_pools_across_parents():
    # two parents share the ZIZ restriction; pooled shots add up
    recs = [
        ShotRecord(parse_pauli("ZZZ"), {"000": 60.0, "101": 40.0}),
        ShotRecord(parse_pauli("ZXZ"), {"000": 50.0, "100": 50.0}),
    ]
    table = aggregate(recs, k=2)
    est = table.entries[parse_pauli("ZIZ")]
    assert est.shots == 200.0
    # ZIZ signs: 000 -> +, 101 -> +, 100 -> -
    assert est.value == pytest.approx((60 + 40 + 50 - 50) / 200)


def test_aggregate_order_invariance():
    state = w6_state()
    plan = plan_pqst(6, 2)
    recs = sample(state, plan, 10_000, seed=9)
    fwd = aggregate(recs, k=2)
    rev = aggregate(list(reversed(recs)), k=2)
    assert fwd.entries.keys() == rev.entries.keys()
    for key in fwd.entries:
        assert fwd.entries[key].value == pytest.approx(rev.entries[key].value)


def test_aggregate_reports_starved_locals():
    recs = [
        ShotRecord(parse_pauli("XX"), {"00": 10.0}),
        ShotRecord(parse_pauli("XZ"), {}),
    ]
    table = aggregate(recs, k=2)
    assert parse_pauli("XZ") in table.starved
    assert parse_pauli("XX") in table.entries


def test_stderr_formula():
    recs = [ShotRecord(parse_pauli("Z"), {"0": 75.0, "1": 25.0})]
    est = aggregate(recs, k=1).entries[parse_pauli("Z")]
    assert est.value == pytest.approx(0.5)
    assert est.stderr == pytest.approx(np.sqrt((1 - 0.25) / 100))


def test_bootstrap_stderr_tracks_analytic():
    state = w6_state()
    plan = plan_pqst(6, 2)
    recs = sample(state, plan, 50_000, allocation="round_robin", seed=12)
    local = parse_pauli("ZZIIII")
    est = aggregate(recs, k=2).entries[local]
    boot = bootstrap_stderr(recs, local, resamples=80, seed=13)
    assert 0.5 * est.stderr < boot < 2.0 * est.stderr


def test_pooling_beats_dedicated_schedule():
    # under round robin, every local of the parallel schedule pools at
    # least as many shots as a one-observable-at-a-time schedule spends
    total = 27_000
    pq = plan_pqst(6, 2)
    lq = plan_lqst(6, 2)
    state = w6_state()
    pq_table = aggregate(
        sample(state, pq, total, allocation="round_robin", seed=1), k=2)
    lq_per_obs = total // lq.size
    assert all(est.shots >= lq_per_obs for est in pq_table.entries.values())


def test_sampled_histogram_passes_chi_square():
    scipy_stats = pytest.importorskip("scipy.stats")
    state = w6_state()
    obs = parse_pauli("ZZZZZZ")
    p = born_vector(state, obs)
    rec = sample(state, plan_of("ZZZZZZ"), 60_000, seed=21)[0]
    counts = np.array([rec.counts.get(format(b, "06b"), 0.0) for b in range(64)])
    keep = p > 1e-12
    stat, pval = scipy_stats.chisquare(
        counts[keep], 60_000 * p[keep] / p[keep].sum())
    assert pval > 0.001


def test_record_io_round_trip(tmp_path):
    state = w6_state()
    plan = plan_pqst(6, 2)
    recs = sample(state, plan, 3000, seed=4)
    path = tmp_path / "shots.jsonl"
    write_records(path, recs)
    back = read_records(path)
    assert len(back) == len(recs)
    for a, b in zip(recs, back):
        assert a.observable == b.observable
        assert a.counts == b.counts


def test_record_validation():
    with pytest.raises(ValueError):
        ShotRecord(parse_pauli("ZZ"), {"0": 3.0})
    with pytest.raises(ValueError):
        ShotRecord(parse_pauli("ZZ"), {"02": 3.0})
    with pytest.raises(ValueError):
        ShotRecord(parse_pauli("ZZ"), {"00": -1.0})
    with pytest.raises(ValueError):
        ReadoutModel([np.array([[0.5, 0.5], [0.4, 0.5]])])
