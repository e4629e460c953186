"""Circuit records and the state-preparation circuit designers.

Gates act on 1-based qubit indices; qubit 1 is the leftmost letter of an
observable and the most significant bit of basis states.  The gate set
is deliberately small: X, RX, RY, RZ, CZ, and the two-qubit excitation
splitter B(p) used to lay out W states on a connectivity tree.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

GATE_ARITY = {"X": 1, "RX": 1, "RY": 1, "RZ": 1, "CZ": 2, "B": 2}
GATE_PARAMS = {"X": 0, "RX": 1, "RY": 1, "RZ": 1, "CZ": 0, "B": 1}


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()

    def __post_init__(self):
        if self.name not in GATE_ARITY:
            raise ValueError(f"unknown gate {self.name!r}")
        if len(self.qubits) != GATE_ARITY[self.name]:
            raise ValueError(f"{self.name} expects {GATE_ARITY[self.name]} qubits")
        if len(self.params) != GATE_PARAMS[self.name]:
            raise ValueError(f"{self.name} expects {GATE_PARAMS[self.name]} params")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"repeated qubit in {self}")


@dataclass
class Circuit:
    n: int
    gates: list[Gate] = field(default_factory=list)

    def __post_init__(self):
        for g in self.gates:
            if any(not (1 <= q <= self.n) for q in g.qubits):
                raise ValueError(f"gate {g} addresses qubits outside 1..{self.n}")

    def add(self, name, qubits, params=()):
        g = Gate(name, tuple(qubits), tuple(float(p) for p in params))
        if any(not (1 <= q <= self.n) for q in g.qubits):
            raise ValueError(f"gate {g} addresses qubits outside 1..{self.n}")
        self.gates.append(g)


def b_gate_unitary(p: float) -> np.ndarray:
    """Splitter on |q1 q2>: keeps |10> with amplitude sqrt(p), moves the
    excitation to |01> with amplitude sqrt(1-p)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} outside [0, 1]")
    sp, sq = math.sqrt(p), math.sqrt(1.0 - p)
    return np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, sq, sp],
            [0.0, 0.0, sp, -sq],
            [0.0, 1.0, 0.0, 0.0],
        ],
        dtype=complex,
    )


def gate_matrix(gate: Gate) -> np.ndarray:
    if gate.name == "X":
        return np.array([[0, 1], [1, 0]], dtype=complex)
    if gate.name == "RX":
        t = gate.params[0] / 2.0
        return np.array(
            [[math.cos(t), -1j * math.sin(t)], [-1j * math.sin(t), math.cos(t)]],
            dtype=complex,
        )
    if gate.name == "RY":
        t = gate.params[0] / 2.0
        return np.array(
            [[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]], dtype=complex
        )
    if gate.name == "RZ":
        t = gate.params[0] / 2.0
        return np.diag([np.exp(-1j * t), np.exp(1j * t)]).astype(complex)
    if gate.name == "CZ":
        return np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)
    if gate.name == "B":
        return b_gate_unitary(gate.params[0])
    raise ValueError(f"unknown gate {gate.name!r}")


@dataclass(frozen=True)
class ConnectivityTree:
    """Undirected tree over qubits 1..n."""

    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if len(self.edges) != self.n - 1:
            raise ValueError(f"a tree on {self.n} nodes has {self.n - 1} edges")
        adj = self.adjacency()
        seen = {1}
        stack = [1]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        if len(seen) != self.n:
            raise ValueError("edge list is not a connected tree")

    def adjacency(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {q: [] for q in range(1, self.n + 1)}
        for a, b in self.edges:
            if not (1 <= a <= self.n and 1 <= b <= self.n) or a == b:
                raise ValueError(f"bad edge ({a}, {b})")
            adj[a].append(b)
            adj[b].append(a)
        return adj


# tree layouts of the bundled benchmark devices
BENCHMARK_TREES = {
    6: (ConnectivityTree(6, ((4, 3), (3, 1), (3, 2), (4, 5), (5, 6))), 4),
    9: (ConnectivityTree(9, ((1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7),
                            (7, 8), (7, 9))), 7),
    12: (ConnectivityTree(12, ((1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7),
                               (7, 8), (7, 9), (9, 10), (10, 11), (10, 12))), 7),
}

# entangler order of the six-qubit variational layer
CZ_PATTERN_6 = ((1, 2), (3, 4), (2, 3), (4, 5), (4, 6))


def design_w_circuit(tree: ConnectivityTree, root: int) -> Circuit:
    """Lay out a W state on a tree: excite the root, then walk the tree
    depth first (children in ascending index order), splitting off
    1/remaining of the amplitude into each subtree.

    At a node whose remaining amplitude must still feed c nodes, sending
    a subtree of s nodes down one branch uses B(p) with p = (c - s)/c,
    the fraction that stays behind.
    """
    if not (1 <= root <= tree.n):
        raise ValueError(f"root {root} outside 1..{tree.n}")
    adj = tree.adjacency()

    children: dict[int, list[int]] = {}
    size: dict[int, int] = {}
    order = []
    stack = [(root, 0)]
    while stack:
        node, parent = stack.pop()
        order.append(node)
        kids = sorted(v for v in adj[node] if v != parent)
        children[node] = kids
        for v in kids:
            stack.append((v, node))
    for node in reversed(order):
        size[node] = 1 + sum(size[v] for v in children[node])

    circ = Circuit(tree.n, [Gate("X", (root,))])

    def walk(node, avail):
        for child in children[node]:
            s = size[child]
            p = (avail - s) / avail
            circ.add("B", (node, child), (p,))
            avail -= s
            walk(child, s)

    walk(root, tree.n)
    return circ


def w_gate_params(circuit: Circuit) -> list[float]:
    """The splitter fractions of a W circuit, in application order."""
    return [g.params[0] for g in circuit.gates if g.name == "B"]


def vqe_ansatz(n: int, layers: int, theta, cz_pattern) -> Circuit:
    """Hardware-style layered ansatz: RX sublayer, CZ entanglers, RY
    sublayer per layer.  theta holds 2n angles per layer: the first n are
    the RY angles, the next n the RX angles (applied first)."""
    theta = np.asarray(theta, dtype=float)
    if theta.size != 2 * n * layers:
        raise ValueError(f"need {2 * n * layers} angles, got {theta.size}")
    circ = Circuit(n)
    for layer in range(layers):
        block = theta[2 * n * layer: 2 * n * (layer + 1)]
        for q in range(1, n + 1):
            circ.add("RX", (q,), (block[n + q - 1],))
        for a, b in cz_pattern:
            circ.add("CZ", (a, b))
        for q in range(1, n + 1):
            circ.add("RY", (q,), (block[q - 1],))
    return circ


def random_circuit(n: int, depth: int, seed: int) -> Circuit:
    """Brickwork of seeded random rotations and chain CZs."""
    rng = np.random.default_rng(seed)
    circ = Circuit(n)
    axes = ["RX", "RY", "RZ"]
    for layer in range(depth):
        for q in range(1, n + 1):
            name = axes[rng.integers(0, 3)]
            circ.add(name, (q,), (rng.uniform(0.0, 2.0 * math.pi),))
        start = 1 + layer % 2
        for a in range(start, n, 2):
            circ.add("CZ", (a, a + 1))
    return circ


def read_tree(path) -> tuple[ConnectivityTree, int]:
    with open(path) as fh:
        data = json.load(fh)
    tree = ConnectivityTree(int(data["n"]),
                            tuple((int(a), int(b)) for a, b in data["edges"]))
    return tree, int(data.get("root", 1))


def write_tree(path, tree: ConnectivityTree, root: int) -> None:
    with open(path, "w") as fh:
        json.dump({"n": tree.n, "root": root,
                   "edges": [list(e) for e in tree.edges]}, fh, indent=1)
        fh.write("\n")


def circuit_to_json(circuit: Circuit) -> str:
    ops = [{"op": g.name, "qubits": list(g.qubits), "params": list(g.params)}
           for g in circuit.gates]
    return json.dumps({"n": circuit.n, "gates": ops}, indent=1)


def circuit_from_json(text: str) -> Circuit:
    data = json.loads(text)
    gates = [Gate(d["op"], tuple(d["qubits"]), tuple(d.get("params", ())))
             for d in data["gates"]]
    return Circuit(int(data["n"]), gates)


def read_circuit(path) -> Circuit:
    with open(path) as fh:
        return circuit_from_json(fh.read())


def write_circuit(path, circuit: Circuit) -> None:
    with open(path, "w") as fh:
        fh.write(circuit_to_json(circuit))
        fh.write("\n")
