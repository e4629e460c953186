"""Pauli-word algebra and expectation-value bookkeeping.

Conventions used throughout the package:

* An observable on N qubits is a word over ``I, X, Y, Z``; the leftmost
  letter acts on qubit 1.
* A measurement outcome is an N-bit string.  Bit ``b`` at position ``q``
  means the single-qubit Pauli measured on qubit ``q`` returned the
  eigenvalue ``(-1)**b``.  Qubit 1 is the most significant bit, so the
  integer index of an outcome string is just ``int(outcome, 2)``.
* A "parallel" observable contains no identity letter (every qubit is
  measured); a "local" observable pads its support with ``I``.

A density matrix decomposes as ``rho = 2**-N * sum_P pi_P P`` with real
coefficients ``pi_P = tr(P rho)``; ``pi`` of the all-identity word is 1
for a unit-trace state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LETTERS = "IXYZ"

SIGMA = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}

# dense helpers refuse to materialize anything beyond this many qubits
DENSE_QUBIT_LIMIT = 10

# rows are the eigenvectors (dagger) ordered by outcome bit, so applying
# one of these to a state expresses it in that letter's eigenbasis with
# bit b meaning eigenvalue (-1)**b
EIGENBASIS = {
    "X": np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0),
    "Y": np.array([[1.0, -1.0j], [1.0, 1.0j]], dtype=complex) / np.sqrt(2.0),
    "Z": np.eye(2, dtype=complex),
    # an I position is still read out; the device measures it in the
    # computational basis and estimators ignore the bit
    "I": np.eye(2, dtype=complex),
}


class PauliString(str):
    """A Pauli word; behaves as a plain string of letters I, X, Y, Z."""

    def __new__(cls, letters):
        s = str.__new__(cls, letters)
        if len(s) == 0:
            raise ValueError("empty Pauli string")
        bad = set(s) - set(LETTERS)
        if bad:
            raise ValueError(f"invalid Pauli letters {sorted(bad)!r} in {s!r}")
        return s

    @property
    def n_qubits(self) -> int:
        return len(self)

    @property
    def support(self) -> tuple[int, ...]:
        """1-based positions carrying a non-identity letter."""
        return tuple(q + 1 for q, c in enumerate(self) if c != "I")

    @property
    def weight(self) -> int:
        return len(self.support)

    def is_parallel(self) -> bool:
        return "I" not in self


def parse_pauli(text: str) -> PauliString:
    """Parse one observable, rejecting empty input and stray characters."""
    return PauliString(text.strip())


def check_outcome(outcome: str, n: int) -> None:
    if len(outcome) != n or set(outcome) - {"0", "1"}:
        raise ValueError(f"outcome {outcome!r} is not a {n}-bit string")


def eigenvalue(obs: PauliString, outcome: str) -> int:
    """Joint eigenvalue of a parallel observable for one outcome string.

    Equals the product of per-qubit eigenvalues ``(-1)**bit``, i.e. the
    parity of the outcome.
    """
    if not obs.is_parallel():
        raise ValueError(f"{obs} contains I; eigenvalue needs a parallel word")
    check_outcome(outcome, len(obs))
    return -1 if outcome.count("1") % 2 else 1


def is_restriction(local: PauliString, parent: PauliString) -> bool:
    """True when `parent` agrees with `local` on every non-I position."""
    if len(local) != len(parent):
        return False
    return all(a == "I" or a == b for a, b in zip(local, parent))


def marginal_eigenvalue(local: PauliString, parent: PauliString, outcome: str):
    """Eigenvalue of a local observable read off a parent's outcome.

    Returns the product of ``(-1)**bit`` over the support of `local`, or
    None when `parent` does not restrict to `local`.
    """
    check_outcome(outcome, len(parent))
    if not is_restriction(local, parent):
        return None
    sign = 1
    for c, b in zip(local, outcome):
        if c != "I" and b == "1":
            sign = -sign
    return sign


def dense_action(obs: PauliString) -> tuple[np.ndarray, np.ndarray]:
    """Sparse form of a Pauli word: ``P|b> = phase[b] |b ^ flip>``.

    Returns the permuted indices ``b ^ flip`` and the phases, both of
    length 2**N, using the qubit-1-is-MSB bit order.
    """
    n = len(obs)
    if n > DENSE_QUBIT_LIMIT + 2:
        raise ValueError(f"refusing dense action on {n} qubits")
    dim = 1 << n
    idx = np.arange(dim)
    flip = 0
    zmask = 0
    ny = 0
    for q, c in enumerate(obs):
        bit = 1 << (n - 1 - q)
        if c in "XY":
            flip |= bit
        if c in "ZY":
            zmask |= bit
        if c == "Y":
            ny += 1
    # parity of bits under zmask gives the (-1) factors; each Y adds an i
    par = idx & zmask
    par ^= par >> 16
    par ^= par >> 8
    par ^= par >> 4
    par ^= par >> 2
    par ^= par >> 1
    sign = 1.0 - 2.0 * (par & 1)
    phase = (1j**ny) * sign
    return idx ^ flip, phase


def pauli_matrix(obs: PauliString) -> np.ndarray:
    """Dense 2**N x 2**N matrix of a Pauli word (small N only)."""
    if len(obs) > DENSE_QUBIT_LIMIT:
        raise ValueError(f"refusing dense matrix on {len(obs)} qubits")
    perm, phase = dense_action(obs)
    dim = perm.size
    m = np.zeros((dim, dim), dtype=complex)
    m[perm, np.arange(dim)] = phase
    return m


@dataclass
class PauliExpansion:
    """Real coefficients pi_P of rho = 2**-N sum_P pi_P P."""

    n_qubits: int
    coefficients: dict[PauliString, float] = field(default_factory=dict)

    def __post_init__(self):
        for p, c in self.coefficients.items():
            if len(p) != self.n_qubits:
                raise ValueError(f"{p} has wrong length for n={self.n_qubits}")
            if abs(complex(c).imag) > 1e-9:
                raise ValueError(f"coefficient of {p} is not real: {c}")
        ident = PauliString("I" * self.n_qubits)
        if ident in self.coefficients:
            if abs(self.coefficients[ident] - 1.0) > 1e-6:
                raise ValueError("identity coefficient must be 1 for a state")


def expansion_to_dense(exp: PauliExpansion) -> np.ndarray:
    """Assemble the density matrix from its Pauli coefficients."""
    n = exp.n_qubits
    if n > DENSE_QUBIT_LIMIT:
        raise ValueError(f"refusing dense assembly on {n} qubits")
    dim = 1 << n
    rho = np.zeros((dim, dim), dtype=complex)
    cols = np.arange(dim)
    for p, c in exp.coefficients.items():
        perm, phase = dense_action(p)
        np.add.at(rho, (perm, cols), float(np.real(c)) * phase)
    return rho / dim


def expansion_from_dense(rho: np.ndarray) -> PauliExpansion:
    """All 4**N coefficients tr(P rho) of a small density matrix."""
    dim = rho.shape[0]
    n = int(round(np.log2(dim)))
    if n > 6:
        raise ValueError("full expansion only supported up to 6 qubits")
    import itertools

    coeffs = {}
    cols = np.arange(dim)
    for word in itertools.product(LETTERS, repeat=n):
        p = PauliString("".join(word))
        perm, phase = dense_action(p)
        val = np.sum(phase * rho[cols, perm])
        coeffs[p] = float(np.real(val))
    return PauliExpansion(n, coeffs)


def read_observables(path) -> list[PauliString]:
    """Read one observable per line, skipping blanks."""
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(parse_pauli(line))
    return out


def write_observables(path, observables) -> None:
    with open(path, "w") as fh:
        for obs in observables:
            fh.write(str(obs) + "\n")
