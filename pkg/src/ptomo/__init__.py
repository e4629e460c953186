"""Parallel-measurement state tomography toolkit.

Schedules few-observable parallel measurements through perfect hash
families, simulates projective sampling with optional readout noise,
and reconstructs states as locally purified tensor chains.
"""

from .circuits import (BENCHMARK_TREES, Circuit, ConnectivityTree, Gate,
                       circuit_from_json, circuit_to_json, design_w_circuit,
                       random_circuit, read_circuit, read_tree, vqe_ansatz,
                       write_circuit, write_tree)
from .hashfam import (HashFamily, MeasurementPlan, binary_expansion_family,
                      covered_locals, is_perfect, plan_fqst, plan_from_family,
                      plan_lqst, plan_pqst, read_family, solve_cover,
                      uncovered_subsets, write_family)
from .lps import (LpsState, TrainConfig, TrainResult, bond_dims,
                  evaluate_loss, load_lps, loss_and_gradient, lps_born_vector,
                  lps_expectation, lps_init, lps_to_dense, lps_trace,
                  purification_matrix, read_loss_trace, reconstruct, save_lps,
                  write_loss_trace)
from .metrics import (ProjectionVector, connected_correlator,
                      connected_correlator_from_tables, correlator_matrix,
                      cosine_similarity, hs_fidelity, log_negativity,
                      partial_transpose, projection_from_state,
                      projection_from_table)
from .pauli import (PauliExpansion, PauliString, dense_action, eigenvalue,
                    expansion_from_dense, expansion_to_dense,
                    marginal_eigenvalue, parse_pauli, pauli_matrix,
                    read_observables, write_observables)
from .pipeline import (ExperimentConfig, TomographyResult, build_plan,
                       collect_records, config_from_json, config_to_json,
                       merged_table, prepare_state, run_budget_sweep,
                       run_holdout_validation, run_tomography)
from .sampler import (Estimate, ExpectationTable, ReadoutModel, ShotRecord,
                      aggregate, allocate_shots, apply_readout_noise,
                      bootstrap_stderr, exact_records, mitigate, read_records,
                      sample, write_records)
from .simstate import (HamiltonianSpec, VqeResult, born_vector,
                       build_hamiltonian, evolve, exact_expectation,
                       ground_state, hamiltonian_from_json,
                       hamiltonian_to_json, random_hamiltonian, simulate,
                       to_density, vqe_optimize, w_state, zero_state)

__all__ = [
    "BENCHMARK_TREES", "Circuit", "ConnectivityTree", "Estimate",
    "ExperimentConfig", "ExpectationTable", "Gate", "HamiltonianSpec",
    "HashFamily", "LpsState", "MeasurementPlan", "PauliExpansion",
    "PauliString", "ProjectionVector", "ReadoutModel", "ShotRecord",
    "TomographyResult", "TrainConfig", "TrainResult", "VqeResult",
    "aggregate", "allocate_shots", "apply_readout_noise",
    "binary_expansion_family", "bond_dims", "bootstrap_stderr",
    "born_vector", "build_hamiltonian", "build_plan", "circuit_from_json",
    "circuit_to_json", "collect_records", "config_from_json",
    "config_to_json", "connected_correlator",
    "connected_correlator_from_tables", "correlator_matrix",
    "cosine_similarity", "covered_locals", "dense_action",
    "design_w_circuit", "eigenvalue", "evaluate_loss", "evolve",
    "exact_expectation", "exact_records", "expansion_from_dense",
    "expansion_to_dense", "ground_state", "hamiltonian_from_json",
    "hamiltonian_to_json", "hs_fidelity", "is_perfect", "load_lps",
    "log_negativity", "loss_and_gradient", "lps_born_vector",
    "lps_expectation", "lps_init", "lps_to_dense", "lps_trace",
    "marginal_eigenvalue", "merged_table", "mitigate", "parse_pauli",
    "partial_transpose", "pauli_matrix", "plan_fqst", "plan_from_family",
    "plan_lqst", "plan_pqst", "prepare_state", "projection_from_state",
    "projection_from_table", "purification_matrix", "random_circuit",
    "random_hamiltonian", "read_circuit", "read_family", "read_loss_trace",
    "read_observables", "read_records", "read_tree", "reconstruct",
    "run_budget_sweep", "run_holdout_validation", "run_tomography", "sample",
    "save_lps", "simulate", "solve_cover", "to_density", "uncovered_subsets",
    "vqe_ansatz", "vqe_optimize", "w_state", "write_circuit", "write_family",
    "write_loss_trace", "write_observables", "write_records", "write_tree",
    "zero_state",
]
