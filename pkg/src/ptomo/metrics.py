"""State-quality metrics: overlap fidelity, projection similarity,
connected correlators, and entanglement negativity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lps import LpsState, lps_expectation
from .pauli import PauliString
from .sampler import ExpectationTable
from .simstate import exact_expectation, to_density


def _as_density(state) -> np.ndarray:
    state = np.asarray(state)
    if state.ndim == 1:
        return to_density(state)
    if state.ndim == 2 and state.shape[0] == state.shape[1]:
        return state
    raise ValueError("expected a statevector or a square density matrix")


def hs_fidelity(a, b) -> float:
    """Normalized Hilbert-Schmidt overlap tr(r1 r2)/sqrt(tr r1^2 tr r2^2).

    Coincides with |<psi|phi>|^2 when both states are pure; against the
    maximally mixed state it decays as the inverse purity.
    """
    r1, r2 = _as_density(a), _as_density(b)
    num = float(np.einsum("ij,ji->", r1, r2).real)
    p1 = float(np.einsum("ij,ji->", r1, r1).real)
    p2 = float(np.einsum("ij,ji->", r2, r2).real)
    return num / np.sqrt(p1 * p2)


@dataclass(frozen=True)
class ProjectionVector:
    """Expectation values of a fixed observable list, in list order."""

    words: tuple[PauliString, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if len(self.words) != self.values.size:
            raise ValueError("words and values differ in length")


def _expectation_of(state, word: PauliString) -> float:
    if isinstance(state, LpsState):
        return lps_expectation(state, word)
    return exact_expectation(state, word)


def projection_from_state(state, words) -> ProjectionVector:
    words = tuple(words)
    return ProjectionVector(words, np.array([_expectation_of(state, w)
                                             for w in words]))


def projection_from_table(table: ExpectationTable, words=None) -> ProjectionVector:
    words = tuple(words) if words is not None else tuple(sorted(table.entries))
    missing = [w for w in words if w not in table.entries]
    if missing:
        raise ValueError(f"table lacks estimates for {missing[:3]}...")
    return ProjectionVector(words, np.array([table.entries[w].value
                                             for w in words]))


def cosine_similarity(a: ProjectionVector, b: ProjectionVector) -> float:
    if a.words != b.words:
        raise ValueError("projection vectors cover different observables")
    na, nb = np.linalg.norm(a.values), np.linalg.norm(b.values)
    if na == 0 or nb == 0:
        raise ValueError("zero projection vector")
    return float(a.values @ b.values / (na * nb))


def _pair_words(n, op_a, site_a, op_b, site_b):
    if site_a == site_b:
        raise ValueError("correlator sites must differ")
    for op in (op_a, op_b):
        if op not in "XYZ":
            raise ValueError(f"bad single-site operator {op!r}")
    word_a = ["I"] * n
    word_a[site_a - 1] = op_a
    word_b = ["I"] * n
    word_b[site_b - 1] = op_b
    word_ab = list(word_a)
    word_ab[site_b - 1] = op_b
    return (PauliString("".join(word_ab)), PauliString("".join(word_a)),
            PauliString("".join(word_b)))


def connected_correlator(state, op_a: str, site_a: int, op_b: str,
                         site_b: int, n: int | None = None) -> float:
    """<A_i B_j> - <A_i><B_j> for single-site operators (1-based sites)."""
    if n is None:
        if isinstance(state, LpsState):
            n = state.n
        else:
            arr = np.asarray(state)
            n = int(round(np.log2(arr.shape[0])))
    ab, a, b = _pair_words(n, op_a, site_a, op_b, site_b)
    return (_expectation_of(state, ab)
            - _expectation_of(state, a) * _expectation_of(state, b))


def connected_correlator_from_tables(
        pair_table: ExpectationTable, single_table: ExpectationTable,
        op_a: str, site_a: int, op_b: str, site_b: int):
    """Correlator and its propagated standard error from estimate tables."""
    ab, a, b = _pair_words(pair_table.n, op_a, site_a, op_b, site_b)
    try:
        e_ab = pair_table.entries[ab]
        e_a = single_table.entries[a]
        e_b = single_table.entries[b]
    except KeyError as exc:
        raise ValueError(f"no estimate for {exc.args[0]}") from None
    value = e_ab.value - e_a.value * e_b.value
    var = (e_ab.stderr ** 2
           + (e_b.value * e_a.stderr) ** 2
           + (e_a.value * e_b.stderr) ** 2)
    return value, float(np.sqrt(var))


def correlator_matrix(state, op: str, n: int | None = None) -> np.ndarray:
    """All-pairs connected correlators of one single-site operator."""
    if n is None:
        if isinstance(state, LpsState):
            n = state.n
        else:
            n = int(round(np.log2(np.asarray(state).shape[0])))
    out = np.zeros((n, n))
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            out[i - 1, j - 1] = out[j - 1, i - 1] = connected_correlator(
                state, op, i, op, j, n=n)
    return out


def partial_transpose(rho: np.ndarray, qubits) -> np.ndarray:
    """Transpose the listed 1-based qubits of a density matrix."""
    n = int(round(np.log2(rho.shape[0])))
    if rho.shape != (2 ** n, 2 ** n):
        raise ValueError("density matrix has non-power-of-two shape")
    t = rho.reshape((2,) * (2 * n))
    for q in qubits:
        if not 1 <= q <= n:
            raise ValueError(f"qubit {q} out of range")
        t = np.swapaxes(t, q - 1, n + q - 1)
    return t.reshape(2 ** n, 2 ** n)


def log_negativity(state, qubits) -> float:
    """log2 of the trace norm after partially transposing `qubits`."""
    rho = _as_density(state)
    pt = partial_transpose(rho, qubits)
    trace_norm = float(np.abs(np.linalg.eigvalsh(pt)).sum())
    return float(np.log2(trace_norm))
