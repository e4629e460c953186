"""End-to-end acceptance checks, one test per numbered criterion.

Each test states its tolerance inline and asserts it; the pytest -v
line for the test is the pass/fail record of the criterion.  Reference
counts and the reference (9, 3) family are frozen here so regressions in
the generators cannot silently move the goalposts.
"""

import itertools
import time

import numpy as np
import pytest

from ptomo import (BENCHMARK_TREES, ConnectivityTree, HashFamily,
                   ReadoutModel, TrainConfig, aggregate, apply_readout_noise,
                   binary_expansion_family, born_vector, build_hamiltonian,
                   covered_locals, design_w_circuit, evolve,
                   exact_expectation, exact_records, hs_fidelity, is_perfect,
                   log_negativity, loss_and_gradient, lps_expectation,
                   lps_init, lps_to_dense, merged_table, mitigate,
                   plan_fqst, plan_from_family, plan_lqst, plan_pqst,
                   random_hamiltonian, reconstruct, sample, simulate,
                   solve_cover, to_density, w_state, zero_state)
from ptomo.hashfam import MeasurementPlan
from ptomo.pauli import PauliString, parse_pauli, pauli_matrix
from ptomo.sampler import ShotRecord

# frozen reference sizes and row counts for N = 6..12 (k indexed)
PLAN_SIZES_K2 = (21, 21, 21, 27, 27, 27, 27)
HASH_COUNTS = {
    2: (3, 3, 3, 4, 4, 4, 4),
    3: (3, 4, 4, 4, 5, 6, 10),
    4: (5, 6, 6, 8, 10, 13, 15),
}
REFERENCE_9_3 = (
    (0, 1, 0, 2, 0, 2, 2, 1, 1),
    (0, 1, 1, 0, 2, 2, 1, 2, 0),
    (2, 0, 1, 0, 0, 1, 2, 2, 1),
    (2, 2, 0, 0, 1, 2, 1, 0, 1),
)


def w_density(n):
    return to_density(w_state(n))


def single_plan(word):
    obs = PauliString(word)
    return MeasurementPlan("lqst", len(word), len(word), (obs,))


def test_criterion_01_observable_counts():
    """Plan sizes: k=2 counts, reference (9,3) -> 99, LQST/FQST closed forms."""
    t0 = time.time()
    sizes = tuple(len(plan_pqst(n, 2).observables) for n in range(6, 13))
    assert sizes == PLAN_SIZES_K2
    for n, size in zip(range(6, 13), sizes):
        assert size == 3 + 6 * int(np.ceil(np.log2(n)))

    fam = HashFamily(9, 3, REFERENCE_9_3)
    assert is_perfect(fam)
    assert len(plan_from_family(fam).observables) == 99

    assert len(plan_lqst(12, 2).observables) == 594
    assert len(plan_lqst(12, 3).observables) == 5940
    assert len(plan_fqst(6).observables) == 729
    assert time.time() - t0 < 10.0


def test_criterion_02_hash_family_sizes():
    """Solver families perfect, rows <= reference counts, == at k=2."""
    for idx, n in enumerate(range(6, 13)):
        fam = binary_expansion_family(n)
        assert is_perfect(fam)
        assert len(fam.rows) == HASH_COUNTS[2][idx]

    for idx, n in enumerate(range(6, 13)):
        t0 = time.time()
        fam = solve_cover(n, 3, mode="exact", seed=0)
        elapsed = time.time() - t0
        assert is_perfect(fam)
        assert len(fam.rows) <= HASH_COUNTS[3][idx]
        if n == 12:
            assert elapsed < 300.0

    for idx, n in enumerate(range(6, 10)):
        fam = solve_cover(n, 4, mode="exact", seed=0)
        assert is_perfect(fam)
        assert len(fam.rows) <= HASH_COUNTS[4][idx]


def test_criterion_03_coverage_equals_local_set():
    """Every PQST plan covers exactly the LQST local set (exhaustive)."""
    for n in range(6, 13):
        for k in (2, 3):
            plan = plan_pqst(n, k)
            covered = set(covered_locals(plan, k))
            full = set(plan_lqst(n, k).observables)
            missing = full - covered
            assert not missing, f"(n={n}, k={k}) misses {len(missing)} locals"
            assert covered == full


def test_criterion_04_w_circuits():
    """200 random trees + bundled trees hit the closed-form W state."""
    rng = np.random.default_rng(42)
    cases = []
    for _ in range(200):
        n = int(rng.integers(3, 11))
        edges = tuple((int(rng.integers(1, i)), i) for i in range(2, n + 1))
        root = int(rng.integers(1, n + 1))
        cases.append((ConnectivityTree(n, edges), root))
    cases.extend(BENCHMARK_TREES[n] for n in (6, 9, 12))
    for tree, root in cases:
        psi = simulate(design_w_circuit(tree, root))
        fid = abs(np.vdot(w_state(tree.n), psi)) ** 2
        assert fid > 1 - 1e-10

    from ptomo.circuits import w_gate_params
    params = w_gate_params(design_w_circuit(*BENCHMARK_TREES[6]))
    assert params[0] == 1 / 2
    assert params[1] == 2 / 3


def test_criterion_05_noiseless_reconstruction():
    """W6, PQST(6,3), 5e4 shots, mle, chi=18, <=100 iters: fid >= 0.97
    on at least 8 of 10 seeds, each well under the 600 s budget."""
    psi = w_state(6)
    ref = w_density(6)
    plan = plan_pqst(6, 3)
    passed = 0
    for seed in range(10):
        t0 = time.time()
        recs = sample(psi, plan, 50_000, seed=seed)
        res = reconstruct(recs, TrainConfig(loss="mle", chi=18, mu=2,
                                            max_iters=100, seed=seed))
        assert time.time() - t0 < 600.0
        assert res.iterations <= 100
        if hs_fidelity(lps_to_dense(res.lps), ref) >= 0.97:
            passed += 1
    assert passed >= 8


def test_criterion_06_sample_efficiency():
    """Mean PQST fidelity >= mean LQST fidelity at each shared budget,
    and pooled shot counts dominate LQST's for every covered local."""
    psi = w_state(6)
    ref = w_density(6)
    plans = {"pqst": plan_pqst(6, 2), "lqst": plan_lqst(6, 2)}
    for budget in (10_000, 30_000, 50_000):
        means = {}
        for scheme, plan in plans.items():
            fids = []
            for seed in range(10):
                recs = sample(psi, plan, budget,
                              allocation="round_robin", seed=seed)
                res = reconstruct(merged_table(recs, 2),
                                  TrainConfig(loss="mse", chi=18, mu=2,
                                              max_iters=100, seed=seed))
                fids.append(hs_fidelity(lps_to_dense(res.lps), ref))
            means[scheme] = float(np.mean(fids))
        assert means["pqst"] >= means["lqst"], (budget, means)

    budget = 10_000
    tables = {}
    for scheme, plan in plans.items():
        recs = sample(psi, plan, budget, allocation="round_robin", seed=0)
        tables[scheme] = merged_table(recs, 2)
    for word, est in tables["lqst"].entries.items():
        pooled = tables["pqst"].entries[word].shots
        assert pooled >= est.shots, (word, pooled, est.shots)


def test_criterion_07_estimator_oracle():
    """aggregate on exact pseudo-records == exact_expectation to 1e-12;
    sampled histograms pass chi-square versus Born at p > 0.001."""
    scipy_stats = pytest.importorskip("scipy.stats")
    psi = w_state(6)
    recs = exact_records(psi, plan_pqst(6, 2))
    for k in (1, 2):
        table = aggregate(recs, k)
        assert table.entries
        for word, est in table.entries.items():
            exact = exact_expectation(psi, word)
            assert abs(est.value - exact) < 1e-12

    for word, shots, seed in (("ZZZZZZ", 60_000, 21), ("XYZXYZ", 60_000, 5)):
        obs = parse_pauli(word)
        p = born_vector(psi, obs)
        rec = sample(psi, single_plan(word), shots, seed=seed)[0]
        counts = np.array([rec.counts.get(format(b, "06b"), 0.0)
                           for b in range(64)])
        keep = p > 1e-12
        assert counts[~keep].sum() == 0
        stat, pval = scipy_stats.chisquare(
            counts[keep], shots * p[keep] / p[keep].sum())
        assert pval > 0.001, (word, pval)


def test_criterion_08_lps_soundness():
    """Wirtinger gradients match finite differences to 1e-4; the dense
    form is Hermitian PSD to 1e-10; expectations match the dense oracle
    to 1e-10 over 200 random observables."""
    rng = np.random.default_rng(3)
    psi = rng.normal(size=8) + 1j * rng.normal(size=8)
    psi /= np.linalg.norm(psi)
    recs = exact_records(psi, plan_pqst(3, 2))
    table = merged_table(recs, 2)

    for loss, data in (("mse", table), ("mle", recs)):
        lps = lps_init(3, 4, 2, seed=11, noise=0.3)
        base, grads = loss_and_gradient(lps, data, loss=loss)
        h = 1e-5
        for _ in range(6):
            site = int(rng.integers(0, 3))
            idx = tuple(int(rng.integers(0, d))
                        for d in lps.tensors[site].shape)
            for part, phase in (("re", 1.0), ("im", 1j)):
                shifted = [t.copy() for t in lps.tensors]
                shifted[site][idx] += phase * h
                up, _ = loss_and_gradient(type(lps)(shifted), data, loss=loss)
                shifted[site][idx] -= 2 * phase * h
                dn, _ = loss_and_gradient(type(lps)(shifted), data, loss=loss)
                fd = (up - dn) / (2 * h)
                g = grads[site][idx]
                analytic = 2 * g.real if part == "re" else 2 * g.imag
                denom = max(abs(fd), abs(analytic), 1e-8)
                assert abs(fd - analytic) / denom < 1e-4

    lps = lps_init(5, 7, 2, seed=2, noise=0.4)
    rho = lps_to_dense(lps)
    assert np.max(np.abs(rho - rho.conj().T)) < 1e-10
    assert np.linalg.eigvalsh(rho).min() > -1e-10
    assert abs(np.trace(rho).real - 1.0) < 1e-10
    letters = np.array(list("IXYZ"))
    for _ in range(200):
        word = "".join(rng.choice(letters, size=5))
        if set(word) == {"I"}:
            continue
        obs = parse_pauli(word)
        dense_val = float(np.trace(rho @ pauli_matrix(obs)).real)
        assert abs(lps_expectation(lps, obs) - dense_val) < 1e-10


def test_criterion_09_mitigation_round_trip():
    """Tensor-product flips (<= 0.08) applied then mitigated leave the
    outcome distribution within total variation 0.02 at 1e5 shots."""

    def tv(rec, psi):
        n = len(rec.observable)
        p = born_vector(psi, rec.observable)
        emp = np.zeros(2 ** n)
        for o, c in rec.counts.items():
            emp[int(o, 2)] = c / rec.shots
        return 0.5 * float(np.abs(emp - p).sum())

    rng = np.random.default_rng(7)
    for n, words in ((4, ("XXXX", "ZZZZ", "XYZX", "YYZZ")),
                     (5, ("XXXXX", "ZZZZZ", "XYZXY", "ZXYYX"))):
        psi = w_state(n)
        p01 = rng.uniform(0.02, 0.08, n)
        p10 = rng.uniform(0.02, 0.08, n)
        model = ReadoutModel([np.array([[1 - a, b], [a, 1 - b]])
                              for a, b in zip(p01, p10)])
        plan = MeasurementPlan("pqst", n, n,
                               tuple(PauliString(w) for w in words))
        recs = sample(psi, plan, 100_000 * len(words),
                      allocation="round_robin", seed=11)
        for i, rec in enumerate(recs):
            noisy = apply_readout_noise(rec, model, seed=100 + i)
            fixed = mitigate(noisy, model)
            assert tv(fixed, psi) <= 0.02, rec.observable
            assert tv(fixed, psi) <= tv(noisy, psi)


def test_criterion_10_negativity_prediction():
    """Trivial metric identities are exact; the W9 reconstruction from
    noiseless parallel data reproduces closed-form log negativities of
    contiguous cuts within 0.05."""
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert hs_fidelity(to_density(bell), to_density(bell)) == pytest.approx(1.0)
    eye4 = np.eye(4) / 4
    assert hs_fidelity(eye4, eye4) == pytest.approx(1.0)
    assert log_negativity(to_density(bell), [1]) == pytest.approx(1.0)
    prod = to_density(zero_state(2))
    assert abs(log_negativity(prod, [1])) < 1e-10

    n = 9
    recs = exact_records(w_state(n), plan_pqst(n, 3))
    res = reconstruct(recs, TrainConfig(loss="mle", chi=18, mu=1,
                                        max_iters=400, seed=0))
    rho = lps_to_dense(res.lps)
    for cut_size in (1, 2, 4):
        cut = list(range(1, cut_size + 1))
        closed = np.log2(1 + 2 * np.sqrt(cut_size * (n - cut_size)) / n)
        got = log_negativity(rho, cut)
        assert abs(got - closed) <= 0.05, (cut, got, closed)


def test_criterion_11_dynamics_locality():
    """Scrambled 6-qubit evolution at t=0.1: k=3 tables reconstruct at
    >= 0.95 while k=2 stays below 0.9 (majority of 5 generator seeds),
    and the k=2 ceiling persists as sampled budgets grow."""
    n = 6
    plans = {2: plan_pqst(n, 2), 3: plan_pqst(n, 3)}
    wins = 0
    first_state = None
    for seed in range(5):
        h = build_hamiltonian(random_hamiltonian(n, seed, scale=5.0))
        psi = evolve(h, zero_state(n), 0.1)
        if seed == 0:
            first_state = psi
        ref = to_density(psi)
        fids = {}
        for k in (2, 3):
            recs = exact_records(psi, plans[k])
            res = reconstruct(merged_table(recs, k),
                              TrainConfig(loss="mse", chi=18, mu=2,
                                          max_iters=300, seed=0))
            fids[k] = hs_fidelity(lps_to_dense(res.lps), ref)
        if fids[3] >= 0.95 and fids[2] < 0.9:
            wins += 1
    assert wins >= 3, f"only {wins} of 5 seeds show the k=3 advantage"

    ref = to_density(first_state)
    for shots in (10_000, 100_000):
        recs = sample(first_state, plans[2], shots,
                      allocation="round_robin", seed=0)
        res = reconstruct(merged_table(recs, 2),
                          TrainConfig(loss="mse", chi=18, mu=2,
                                      max_iters=300, seed=0))
        assert hs_fidelity(lps_to_dense(res.lps), ref) < 0.9
