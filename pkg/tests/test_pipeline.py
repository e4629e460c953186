import json

import numpy as np
import pytest

from ptomo.metrics import hs_fidelity
from ptomo.pipeline import (
    ExperimentConfig,
    build_plan,
    config_from_json,
    config_to_json,
    merged_table,
    prepare_state,
    run_budget_sweep,
    run_holdout_validation,
    run_tomography,
)
from ptomo.sampler import exact_records
from ptomo.simstate import w_state, zero_state


def small_cfg(**over):
    base = dict(n=4, state={"kind": "w"}, scheme="pqst", k=2, shots=20_000,
                loss="mse", chi=6, mu=2, max_iters=60, seed=11)
    base.update(over)
    return ExperimentConfig(**base)


def test_config_json_round_trip():
    cfg = small_cfg(readout={"p01": 0.02, "p10": 0.05})
    back = config_from_json(config_to_json(cfg))
    assert back == cfg


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(n=4, scheme="qst")
    with pytest.raises(ValueError):
        ExperimentConfig(n=4, state={})


def test_prepare_state_kinds():
    w4 = prepare_state({"kind": "w"}, 4)
    assert hs_fidelity(w4, w_state(4)) == pytest.approx(1.0, abs=1e-10)
    chain = prepare_state({"kind": "w"}, 5)
    assert hs_fidelity(chain, w_state(5)) == pytest.approx(1.0, abs=1e-10)
    rc = prepare_state({"kind": "random_circuit", "depth": 4, "seed": 2}, 3)
    assert np.linalg.norm(rc) == pytest.approx(1.0)
    dyn = prepare_state({"kind": "dynamics", "seed": 1, "time": 0.0}, 3)
    assert np.allclose(dyn, zero_state(3))
    with pytest.raises(ValueError):
        prepare_state({"kind": "ghz"}, 3)


def test_prepare_state_custom_tree():
    psi = prepare_state({"kind": "w", "edges": [[1, 2], [2, 3]], "root": 2}, 3)
    assert hs_fidelity(psi, w_state(3)) == pytest.approx(1.0, abs=1e-10)


def test_build_plan_sizes():
    assert build_plan("pqst", 6, 2).size == 21
    assert build_plan("lqst", 6, 2).size == 135
    assert build_plan("fqst", 3, 2).size == 27


def test_merged_table_has_all_weights():
    recs = exact_records(w_state(4), build_plan("pqst", 4, 2))
    table = merged_table(recs, 2)
    weights = {w.weight for w in table.entries}
    assert weights == {1, 2}
    # every single-site and covered pair estimate is present
    assert len([w for w in table.entries if w.weight == 1]) == 12


def test_run_tomography_recovers_w4():
    res = run_tomography(small_cfg())
    assert res.fidelity is not None and res.fidelity > 0.9
    assert res.cosine is not None and res.cosine > 0.9
    assert res.train.iterations <= 60
    assert np.all(np.diff(res.train.loss_trace) <= 1e-12)


def test_run_tomography_is_deterministic():
    a = run_tomography(small_cfg())
    b = run_tomography(small_cfg())
    assert a.fidelity == b.fidelity
    assert a.train.loss_trace == b.train.loss_trace


def test_run_tomography_with_noise_and_mitigation():
    cfg = small_cfg(readout={"p01": 0.02, "p10": 0.03}, mitigate=True,
                    shots=30_000)
    res = run_tomography(cfg)
    assert res.fidelity > 0.85


def test_run_tomography_mle_path():
    cfg = small_cfg(loss="mle", shots=30_000, max_iters=80)
    res = run_tomography(cfg)
    assert res.fidelity > 0.9


def test_budget_sweep_rows():
    cfg = small_cfg(n=3, chi=4, shots=0, max_iters=40)
    rows = run_budget_sweep(cfg, budgets=[2_000, 8_000],
                            schemes=["pqst", "lqst"], replicates=2)
    assert len(rows) == 8
    assert {r["scheme"] for r in rows} == {"pqst", "lqst"}
    for row in rows:
        assert row["fidelity"] is not None
    # replicates at the same budget use different sampling seeds
    a, b = [r for r in rows if r["scheme"] == "pqst" and r["shots"] == 2_000]
    assert a["fidelity"] != b["fidelity"]


def test_holdout_validation_rows():
    # the likelihood loss keeps full histograms, so withheld parallel
    # observables are predicted tightly
    cfg = small_cfg(loss="mle", shots=30_000, max_iters=80)
    rows, res = run_holdout_validation(cfg, holdout=3, holdout_shots=4_000)
    assert len(rows) == 3
    for row in rows:
        assert 0 <= row["tv_distance"] <= 0.1
        assert abs(row["predicted"] - row["measured"]) < 0.1
    assert res.fidelity > 0.99


def test_holdout_bounds_checked():
    cfg = small_cfg()
    with pytest.raises(ValueError):
        run_holdout_validation(cfg, holdout=0)
