"""Hash families and measurement plans for parallel tomography.

A hash family on n qubits with k colors is a stack of rows, each row
assigning a color in {0..k-1} to every qubit.  The family is "perfect"
when every k-subset of qubits receives k distinct colors in at least one
row.  Each row then turns into parallel observables by mapping colors to
Pauli letters, and a perfect family guarantees that every k-local Pauli
word is the restriction of some scheduled observable.

Row counts are minimized with a set-cover search over canonical
colorings (first-occurrence color order, all k colors used): greedy with
randomized restarts supplies an incumbent and branch-and-bound tightens
it.  Two lower bounds close the search early: the counting bound
ceil(uncovered / best-row-coverage) and the labeling bound that any
perfect family must give all qubits distinct color vectors, so
k**rows >= n.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .pauli import PauliString

XYZ = "XYZ"


@dataclass(frozen=True)
class HashFamily:
    n: int
    k: int
    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if not (2 <= self.k <= self.n):
            raise ValueError(f"need 2 <= k <= n, got n={self.n} k={self.k}")
        for row in self.rows:
            if len(row) != self.n:
                raise ValueError(f"row {row} has length != n={self.n}")
            if any(not (0 <= c < self.k) for c in row):
                raise ValueError(f"row {row} has colors outside 0..{self.k - 1}")

    @property
    def n_rows(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class MeasurementPlan:
    """An ordered list of observables to schedule.

    kind is one of "pqst", "lqst", "fqst"; k is the locality the plan is
    built to cover (k = n for fqst).
    """

    kind: str
    n: int
    k: int
    observables: tuple[PauliString, ...]
    family: HashFamily | None = None

    def __post_init__(self):
        seen = set()
        for obs in self.observables:
            if len(obs) != self.n:
                raise ValueError(f"{obs} has wrong length for n={self.n}")
            if obs in seen:
                raise ValueError(f"duplicate observable {obs}")
            seen.add(obs)

    @property
    def size(self) -> int:
        return len(self.observables)


def binary_expansion_family(n: int) -> HashFamily:
    """The ceil(log2 n)-row two-color family from reflected binary labels.

    Qubit j receives the reflected-binary code of j-1 as its label; row i
    reads off digit i (most significant first).  Distinct qubits get
    distinct labels, so some row separates any pair.
    """
    if n < 2:
        raise ValueError("need at least two qubits")
    q = max(1, math.ceil(math.log2(n)))
    labels = [(j - 1) ^ ((j - 1) >> 1) for j in range(1, n + 1)]
    rows = tuple(
        tuple((lab >> (q - 1 - i)) & 1 for lab in labels) for i in range(q)
    )
    return HashFamily(n, 2, rows)


def _subsets(n: int, k: int) -> list[tuple[int, ...]]:
    return list(itertools.combinations(range(n), k))


def is_perfect(family: HashFamily) -> bool:
    return not uncovered_subsets(family, limit=1)


def uncovered_subsets(family: HashFamily, limit: int | None = None):
    """k-subsets (0-based) that no row colors injectively."""
    bad = []
    for sub in _subsets(family.n, family.k):
        for row in family.rows:
            colors = [row[j] for j in sub]
            if len(set(colors)) == family.k:
                break
        else:
            bad.append(sub)
            if limit is not None and len(bad) >= limit:
                return bad
    return bad


def _canonical_rows(n: int, k: int) -> list[tuple[int, ...]]:
    """Surjective colorings up to color relabeling (first use = next color)."""
    rows = []

    def rec(prefix, used):
        j = len(prefix)
        if j == n:
            if used == k:
                rows.append(tuple(prefix))
            return
        if used + (n - j) < k:
            return
        for c in range(min(used + 1, k)):
            prefix.append(c)
            rec(prefix, used + (1 if c == used else 0))
            prefix.pop()

    rec([], 0)
    return rows


def _coverage_masks(rows, n, k):
    """Per-row bitmask over the C(n,k) subsets each row colors injectively."""
    subs = np.array(_subsets(n, k))
    arr = np.array(rows, dtype=np.int8)
    picked = arr[:, subs]  # (m, nsub, k)
    picked.sort(axis=2)
    cov = np.all(np.diff(picked, axis=2) != 0, axis=2)  # (m, nsub)
    masks = []
    for row_cov in cov:
        mask = 0
        for e in np.flatnonzero(row_cov):
            mask |= 1 << int(e)
        masks.append(mask)
    return masks, subs.shape[0]


def _ilog_ceil(x: int, k: int) -> int:
    """Smallest r with k**r >= x."""
    r, v = 0, 1
    while v < x:
        v *= k
        r += 1
    return r


def _label_bound(rows_chosen, n, k):
    """Extra rows needed so every qubit ends with a distinct color vector."""
    groups: dict[tuple, int] = {}
    for j in range(n):
        key = tuple(row[j] for row in rows_chosen)
        groups[key] = groups.get(key, 0) + 1
    return _ilog_ceil(max(groups.values()), k)


def _greedy(masks, order, full, rng=None):
    chosen = []
    covered = 0
    ids = list(order)
    while covered != full:
        best_gain = -1
        best_ids = []
        for i in ids:
            gain = (masks[i] & ~covered).bit_count()
            if gain > best_gain:
                best_gain = gain
                best_ids = [i]
            elif gain == best_gain:
                best_ids.append(i)
        if best_gain <= 0:
            raise RuntimeError("candidate pool cannot cover all subsets")
        pick = best_ids[0] if rng is None else int(rng.choice(best_ids))
        chosen.append(pick)
        covered |= masks[pick]
    return chosen


def solve_cover(n: int, k: int, mode: str = "exact", seed: int = 0,
                node_budget: int = 60_000) -> HashFamily:
    """Search for a small perfect (n, k) hash family.

    mode "greedy" returns the plain greedy cover.  mode "exact" improves
    it with randomized restarts and branch-and-bound; the result is
    provably minimal whenever the counting or labeling bound meets the
    incumbent (always the case for k = 2), otherwise it is the best cover
    found within the node budget.
    """
    if not (2 <= k <= 4):
        raise ValueError("k must be 2, 3, or 4")
    if not (k <= n <= 12):
        raise ValueError("need k <= n <= 12")
    rows = _canonical_rows(n, k)
    masks, nsub = _coverage_masks(rows, n, k)
    full = (1 << nsub) - 1

    # dedupe rows with identical coverage
    seen: dict[int, int] = {}
    for i, m in enumerate(masks):
        if m and m not in seen:
            seen[m] = i
    ids = sorted(seen.values(), key=lambda i: -masks[i].bit_count())

    if mode == "greedy":
        chosen = _greedy(masks, ids, full)
        return HashFamily(n, k, tuple(rows[i] for i in chosen))
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")

    incumbent = _greedy(masks, ids, full)
    rng = np.random.default_rng(seed)
    for _ in range(40):
        trial = _greedy(masks, ids, full, rng=rng)
        if len(trial) < len(incumbent):
            incumbent = trial
    if k == 2:
        # the reflected-binary family meets the labeling bound outright
        canon = {_canonicalize(r) for r in binary_expansion_family(n).rows}
        bin_ids = sorted({seen[masks[rows.index(r)]] for r in canon})
        cov = 0
        for i in bin_ids:
            cov |= masks[i]
        if cov == full and len(bin_ids) < len(incumbent):
            incumbent = bin_ids

    max_gain = masks[ids[0]].bit_count()
    lb_root = max(math.ceil(nsub / max_gain), _ilog_ceil(n, k))
    best = list(incumbent)
    if len(best) > lb_root:
        best = _branch_and_bound(rows, masks, ids, n, k, nsub, full,
                                 best, lb_root, node_budget)
    return HashFamily(n, k, tuple(rows[i] for i in best))


def _canonicalize(row):
    relabel: dict[int, int] = {}
    out = []
    for c in row:
        if c not in relabel:
            relabel[c] = len(relabel)
        out.append(relabel[c])
    return tuple(out)


def _branch_and_bound(rows, masks, ids, n, k, nsub, full, incumbent, lb_root,
                      node_budget):
    coverers: list[list[int]] = [[] for _ in range(nsub)]
    for i in ids:
        m = masks[i]
        while m:
            low = m & -m
            coverers[low.bit_length() - 1].append(i)
            m ^= low
    max_gain = masks[ids[0]].bit_count()
    best = list(incumbent)
    nodes = 0

    def rec(chosen, covered):
        nonlocal best, nodes
        if covered == full:
            if len(chosen) < len(best):
                best = list(chosen)
            return
        if len(best) == lb_root:
            return
        nodes += 1
        if nodes > node_budget:
            return
        rem = nsub - covered.bit_count()
        count_lb = math.ceil(rem / max_gain)
        label_lb = _label_bound([rows[i] for i in chosen], n, k)
        if len(chosen) + max(count_lb, label_lb) >= len(best):
            return
        # branch on the uncovered subset with the fewest coverers
        pick = -1
        pick_len = None
        m = ~covered & full
        while m:
            low = m & -m
            e = low.bit_length() - 1
            if pick_len is None or len(coverers[e]) < pick_len:
                pick_len = len(coverers[e])
                pick = e
            m ^= low
        cands = sorted(coverers[pick],
                       key=lambda i: -(masks[i] & ~covered).bit_count())
        for i in cands:
            chosen.append(i)
            rec(chosen, covered | masks[i])
            chosen.pop()
            if len(best) == lb_root:
                return

    rec([], 0)
    return best


def plan_from_family(family: HashFamily) -> MeasurementPlan:
    """All color-to-letter assignments of each row, deduplicated."""
    seen = set()
    observables = []
    for row in family.rows:
        for letters in itertools.product(XYZ, repeat=family.k):
            word = PauliString("".join(letters[c] for c in row))
            if word not in seen:
                seen.add(word)
                observables.append(word)
    return MeasurementPlan("pqst", family.n, family.k, tuple(observables),
                           family)


def plan_pqst(n: int, k: int, mode: str = "exact", seed: int = 0) -> MeasurementPlan:
    if k == 2:
        return plan_from_family(binary_expansion_family(n))
    return plan_from_family(solve_cover(n, k, mode=mode, seed=seed))


def plan_lqst(n: int, k: int) -> MeasurementPlan:
    """Every k-local observable measured on its own: 3**k * C(n,k) settings."""
    observables = []
    for sub in itertools.combinations(range(n), k):
        for letters in itertools.product(XYZ, repeat=k):
            word = ["I"] * n
            for pos, c in zip(sub, letters):
                word[pos] = c
            observables.append(PauliString("".join(word)))
    return MeasurementPlan("lqst", n, k, tuple(observables))


def plan_fqst(n: int, allow_large: bool = False) -> MeasurementPlan:
    """All 3**n parallel observables; refuses n > 9 unless forced."""
    if n > 9 and not allow_large:
        raise ValueError(f"fqst on {n} qubits needs allow_large=True")
    observables = tuple(
        PauliString("".join(w)) for w in itertools.product(XYZ, repeat=n)
    )
    return MeasurementPlan("fqst", n, n, observables)


def covered_locals(plan: MeasurementPlan, k: int) -> list[PauliString]:
    """All weight-k observables that restrict from some plan observable."""
    seen = set()
    for obs in plan.observables:
        support = [q - 1 for q in obs.support]
        if len(support) < k:
            continue
        for sub in itertools.combinations(support, k):
            word = ["I"] * plan.n
            for pos in sub:
                word[pos] = obs[pos]
            w = "".join(word)
            seen.add(w)
    return [PauliString(w) for w in sorted(seen)]


def read_family(path) -> HashFamily:
    """Rows of k-ary digits, one row per line."""
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip().replace(" ", "")
            if line:
                rows.append(tuple(int(c) for c in line))
    if not rows:
        raise ValueError(f"no rows in {path}")
    n = len(rows[0])
    k = max(max(r) for r in rows) + 1
    return HashFamily(n, max(k, 2), tuple(rows))


def write_family(path, family: HashFamily) -> None:
    with open(path, "w") as fh:
        for row in family.rows:
            fh.write("".join(str(c) for c in row) + "\n")
