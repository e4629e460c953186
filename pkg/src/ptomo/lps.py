"""Locally purified state reconstruction by gradient descent.

The mixed-state ansatz is a chain of site tensors A_i with shape
(phys=2, bond_left, bond_right, kraus).  Contracting the bonds gives a
purification matrix M of shape 2^n x prod(kraus); the reconstructed
state is rho = M M^dag / tr(M M^dag), so positivity and unit trace hold
by construction at every step.

Two loss functions are supported:

- "mse": mean squared error between model expectations and an estimated
  expectation table over local observables.
- "mle": negative log-likelihood (in bits per shot) of measured outcome
  histograms, each outcome weighted by its multiplicity.

Two gradient engines compute identical values: a dense engine that
materializes M (small systems only) and a tensor-network engine whose
cost is polynomial in the qubit count.  Gradients follow the Wirtinger
convention, g = dL/d(conj A), so dL/d(Re A) = 2 Re g.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .pauli import DENSE_QUBIT_LIMIT, EIGENBASIS, SIGMA, PauliString, dense_action
from .sampler import ExpectationTable, ShotRecord

IDENTITY_2 = np.eye(2, dtype=complex)


@dataclass
class LpsState:
    """Site tensors of a locally purified chain."""

    tensors: list[np.ndarray]

    def __post_init__(self):
        if not self.tensors:
            raise ValueError("empty chain")
        self.tensors = [np.asarray(t, dtype=complex) for t in self.tensors]
        prev = 1
        for i, t in enumerate(self.tensors):
            if t.ndim != 4 or t.shape[0] != 2:
                raise ValueError(f"site {i}: expected (2, Dl, Dr, mu), got {t.shape}")
            if t.shape[1] != prev:
                raise ValueError(f"site {i}: left bond {t.shape[1]} != {prev}")
            prev = t.shape[2]
        if prev != 1:
            raise ValueError("right boundary bond must be 1")

    @property
    def n(self) -> int:
        return len(self.tensors)

    @property
    def chi(self) -> int:
        return max(t.shape[2] for t in self.tensors)

    @property
    def kraus_dims(self) -> tuple[int, ...]:
        return tuple(t.shape[3] for t in self.tensors)

    def copy(self) -> "LpsState":
        return LpsState([t.copy() for t in self.tensors])


def bond_dims(n: int, chi: int, mu: int) -> list[int]:
    """Interior bond sizes, capped by what either side can support."""
    full = [min(chi, (2 * mu) ** i, (2 * mu) ** (n - i)) for i in range(n + 1)]
    full[0] = full[n] = 1
    return full


def lps_init(n: int, chi: int = 18, mu: int = 2, seed: int = 0,
             noise: float = 1e-2) -> LpsState:
    """Identity-biased start: at zero noise the state is maximally mixed."""
    rng = np.random.default_rng(seed)
    bonds = bond_dims(n, chi, mu)
    tensors = []
    for i in range(n):
        dl, dr = bonds[i], bonds[i + 1]
        t = noise * (rng.standard_normal((2, dl, dr, mu))
                     + 1j * rng.standard_normal((2, dl, dr, mu)))
        t /= np.sqrt(2.0 * dl * dr * mu)
        for s in range(min(2, mu)):
            t[s, 0, 0, s] += 1.0 / np.sqrt(2.0)
        tensors.append(t)
    return LpsState(tensors)


# ---------------------------------------------------------------------------
# dense chain contraction (small systems)

def _prefix_chain(tensors):
    """pre[i] holds sites < i contracted: (2^i, bond_i, kraus^i)."""
    pre = [np.ones((1, 1, 1), dtype=complex)]
    for a in tensors:
        nxt = np.einsum("plu,slrk->psruk", pre[-1], a, optimize=True)
        p, s, r, u, k = nxt.shape
        pre.append(nxt.reshape(p * s, r, u * k))
    return pre


def _suffix_chain(tensors):
    """suf[i] holds sites >= i contracted: (2^(n-i), bond_i, kraus^(n-i))."""
    n = len(tensors)
    suf = [None] * (n + 1)
    suf[n] = np.ones((1, 1, 1), dtype=complex)
    for i in range(n - 1, -1, -1):
        nxt = np.einsum("slrk,qru->sqlku", tensors[i], suf[i + 1], optimize=True)
        s, q, l, k, u = nxt.shape
        suf[i] = nxt.reshape(s * q, l, k * u)
    return suf


def purification_matrix(lps: LpsState) -> np.ndarray:
    """M with rho = M M^dag / tr(M M^dag), shape 2^n x prod(kraus)."""
    if lps.n > DENSE_QUBIT_LIMIT:
        raise ValueError(f"refusing dense purification on {lps.n} qubits")
    pre = _prefix_chain(lps.tensors)[-1]
    return pre[:, 0, :]


def lps_to_dense(lps: LpsState) -> np.ndarray:
    """Trace-normalized density matrix (small systems only)."""
    m = purification_matrix(lps)
    rho = m @ m.conj().T
    return rho / np.trace(rho).real


def _site_grads_from_dense(tensors, g_m):
    """Convert dL/d(conj M) into per-site dL/d(conj A_i)."""
    n = len(tensors)
    pre = _prefix_chain(tensors)
    suf = _suffix_chain(tensors)
    grads = []
    for i, a in enumerate(tensors):
        _, dl, dr, mu = a.shape
        p, u = pre[i].shape[0], pre[i].shape[2]
        q, v = suf[i + 1].shape[0], suf[i + 1].shape[2]
        gr = g_m.reshape(p, 2, q, u, mu, v)
        x = np.einsum("psqukv,plu->sqkvl", gr, np.conj(pre[i]), optimize=True)
        grads.append(np.einsum("sqkvl,qrv->slrk", x, np.conj(suf[i + 1]),
                               optimize=True))
    return grads


# ---------------------------------------------------------------------------
# tensor-network sweeps: batched product-operator expectations

def _sweep_values(tensors, ops):
    """tr(rho_unnormalized * O_t) for a batch of product operators.

    ops has shape (T, n, 2, 2); entry [t, i] acts on site i with the
    bra index first.
    """
    env = np.ones((ops.shape[0], 1, 1), dtype=complex)
    for i, a in enumerate(tensors):
        t1 = np.einsum("tlm,alrk->tamrk", env, a, optimize=True)
        t2 = np.einsum("tba,tamrk->tbmrk", ops[:, i], t1, optimize=True)
        env = np.einsum("bmwk,tbmrk->trw", np.conj(a), t2, optimize=True)
    return env[:, 0, 0]


def _sweep_gradient(tensors, ops, weights):
    """Sum_t weights[t] * d tr(rho~ O_t)/d conj(A_i), one array per site."""
    n = len(tensors)
    prefixes = [np.ones((ops.shape[0], 1, 1), dtype=complex)]
    for i, a in enumerate(tensors[:-1]):
        t1 = np.einsum("tlm,alrk->tamrk", prefixes[i], a, optimize=True)
        t2 = np.einsum("tba,tamrk->tbmrk", ops[:, i], t1, optimize=True)
        prefixes.append(np.einsum("bmwk,tbmrk->trw", np.conj(a), t2,
                                  optimize=True))
    suffixes = [None] * n
    suffixes[n - 1] = np.ones((ops.shape[0], 1, 1), dtype=complex)
    for i in range(n - 1, 0, -1):
        a = tensors[i]
        u1 = np.einsum("trw,alrk->talwk", suffixes[i], a, optimize=True)
        u2 = np.einsum("tba,talwk->tblwk", ops[:, i], u1, optimize=True)
        suffixes[i - 1] = np.einsum("bmwk,tblwk->tlm", np.conj(a), u2,
                                    optimize=True)
    grads = []
    for i, a in enumerate(tensors):
        t1 = np.einsum("tlm,alrk->tamrk", prefixes[i], a, optimize=True)
        t2 = np.einsum("tba,tamrk->tbmrk", ops[:, i], t1, optimize=True)
        t2 *= weights[:, None, None, None, None]
        grads.append(np.einsum("tbmrk,trw->bmwk", t2, suffixes[i],
                               optimize=True))
    return grads


def _tn_values_chunked(tensors, ops, chunk):
    parts = [_sweep_values(tensors, ops[j:j + chunk])
             for j in range(0, ops.shape[0], chunk)]
    return np.concatenate(parts)


def _tn_gradient_chunked(tensors, ops, weights, chunk):
    grads = None
    for j in range(0, ops.shape[0], chunk):
        part = _sweep_gradient(tensors, ops[j:j + chunk], weights[j:j + chunk])
        grads = part if grads is None else [g + p for g, p in zip(grads, part)]
    return grads


def _identity_ops(n):
    return np.broadcast_to(IDENTITY_2, (1, n, 2, 2)).copy()


def lps_trace(lps: LpsState) -> float:
    return float(_sweep_values(lps.tensors, _identity_ops(lps.n))[0].real)


def lps_expectation(lps: LpsState, obs: PauliString) -> float:
    """tr(rho P) through the chain; never builds a 2^n object."""
    if len(obs) != lps.n:
        raise ValueError("observable length mismatch")
    ops = np.stack([SIGMA[c] for c in obs])[None].astype(complex)
    val = _sweep_values(lps.tensors, ops)[0].real
    return float(val / lps_trace(lps))


def _outcome_projector_from_row(row):
    return np.outer(np.conj(row), row)


def _outcome_projector(letter: str, bit: int) -> np.ndarray:
    return _outcome_projector_from_row(EIGENBASIS[letter][bit])


def lps_born_vector(lps: LpsState, obs: PauliString, chunk: int = 2048) -> np.ndarray:
    """Outcome distribution of measuring `obs`, computed by sweeps."""
    n = lps.n
    if len(obs) != n:
        raise ValueError("observable length mismatch")
    pis = np.stack([[_outcome_projector(c, b) for b in (0, 1)] for c in obs])
    idx = np.arange(2 ** n)
    bits = (idx[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1
    ops = pis[np.arange(n)[None, :], bits]
    vals = _tn_values_chunked(lps.tensors, ops, chunk).real
    p = np.clip(vals / lps_trace(lps), 0.0, None)
    return p / p.sum()


# ---------------------------------------------------------------------------
# losses

def _prepare_mse(n: int, table: ExpectationTable):
    words = sorted(table.entries)
    if not words:
        raise ValueError("expectation table is empty")
    if any(len(w) != n for w in words):
        raise ValueError("table words do not match qubit count")
    targets = np.array([table.entries[w].value for w in words])
    return words, targets


def _prepare_mle(n: int, records: list[ShotRecord]):
    """Per record: eigenbasis rotation rows, outcome indices, counts."""
    prepped = []
    total = 0.0
    for rec in records:
        if len(rec.observable) != n:
            raise ValueError("record length mismatch")
        if not rec.counts:
            continue
        outcomes = sorted(rec.counts)
        counts = np.array([rec.counts[o] for o in outcomes])
        bits = np.array([[int(b) for b in o] for o in outcomes])
        idx = np.array([int(o, 2) for o in outcomes])
        rots = [EIGENBASIS[c] for c in rec.observable]
        prepped.append((rots, bits, idx, counts))
        total += counts.sum()
    if not prepped:
        raise ValueError("no nonempty records")
    return prepped, total


def _grouped_kron(mats):
    """Fuse per-qubit 2x2 matrices into two half-register factors, so a
    product rotation becomes two large contractions instead of n small
    ones (the small ones are dominated by transpose copies)."""
    from functools import reduce

    split = len(mats) // 2
    hi = reduce(np.kron, mats[:split], np.eye(1, dtype=complex))
    lo = reduce(np.kron, mats[split:], np.eye(1, dtype=complex))
    return hi, lo


def _apply_grouped(hi, lo, m, adjoint=False):
    """Apply (hi kron lo) to the row index of m."""
    if adjoint:
        hi, lo = hi.conj().T, lo.conj().T
    m3 = m.reshape(hi.shape[0], lo.shape[0], -1)
    out = np.einsum("ij,kl,jlr->ikr", hi, lo, m3, optimize=True)
    return out.reshape(m.shape)


def _resolve_engine(engine: str, n: int) -> str:
    if engine == "auto":
        return "dense" if n <= DENSE_QUBIT_LIMIT else "tn"
    if engine not in ("dense", "tn"):
        raise ValueError(f"unknown engine {engine!r}")
    if engine == "dense" and n > DENSE_QUBIT_LIMIT:
        raise ValueError(f"dense engine is limited to {DENSE_QUBIT_LIMIT} qubits")
    return engine


class _Objective:
    """Loss/gradient evaluator with all data preparation done once."""

    def __init__(self, n, data, loss, engine, prob_clip, chunk):
        self.n = n
        self.kind = loss
        self.engine = _resolve_engine(engine, n)
        self.clip = prob_clip
        self.chunk = chunk
        if loss == "mse":
            words, self.targets = _prepare_mse(n, data)
            if self.engine == "dense":
                self.actions = [dense_action(w) for w in words]
            else:
                self.ops = np.stack([[SIGMA[c] for c in w]
                                     for w in words]).astype(complex)
        elif loss == "mle":
            prepped, self.total = _prepare_mle(n, data)
            if self.engine == "dense":
                self.groups = [(_grouped_kron(rots), idx, counts)
                               for rots, _bits, idx, counts in prepped]
            else:
                blocks = []
                counts_all = []
                for rots, bits, _idx, counts in prepped:
                    pis = np.stack([[_outcome_projector_from_row(rots[q][b])
                                     for b in (0, 1)] for q in range(n)])
                    blocks.append(pis[np.arange(n)[None, :], bits])
                    counts_all.append(counts)
                self.ops = np.concatenate(blocks)
                self.counts = np.concatenate(counts_all)
        else:
            raise ValueError(f"unknown loss {loss!r}")

    def __call__(self, tensors, with_grad=True):
        if self.kind == "mse":
            if self.engine == "dense":
                return self._dense_mse(tensors, with_grad)
            return self._tn_mse(tensors, with_grad)
        if self.engine == "dense":
            return self._dense_mle(tensors, with_grad)
        return self._tn_mle(tensors, with_grad)

    def _dense_mse(self, tensors, with_grad):
        m = _prefix_chain(tensors)[-1][:, 0, :]
        tau = float(np.vdot(m, m).real)
        rho = m @ m.conj().T
        cols = np.arange(2 ** self.n)
        vals = np.array([(phase * rho[cols, perm]).sum().real
                         for perm, phase in self.actions]) / tau
        resid = vals - self.targets
        nwords = resid.size
        loss = float(resid @ resid / nwords)
        if not with_grad:
            return loss, None
        g = 2.0 * resid / nwords
        kmat = np.zeros_like(rho)
        for gi, (perm, phase) in zip(g, self.actions):
            np.add.at(kmat, (perm, cols), gi * phase)
        g_m = (kmat @ m - float(g @ vals) * m) / tau
        return loss, _site_grads_from_dense(tensors, g_m)

    def _dense_mle(self, tensors, with_grad):
        m = _prefix_chain(tensors)[-1][:, 0, :]
        tau = float(np.vdot(m, m).real)
        loss = 0.0
        g_m = np.zeros_like(m) if with_grad else None
        ln2 = np.log(2.0)
        for (hi, lo), idx, counts in self.groups:
            rot = _apply_grouped(hi, lo, m)
            q = np.einsum("br,br->b", rot[idx].conj(),
                          rot[idx]).real / tau
            loss -= float(counts
                          @ np.log2(np.clip(q, self.clip, None))) / self.total
            if not with_grad:
                continue
            ratio = np.where(q > self.clip,
                             counts / np.clip(q, self.clip, None), 0.0)
            sel = np.zeros_like(rot)
            sel[idx] = ratio[:, None] * rot[idx]
            g_m -= (_apply_grouped(hi, lo, sel, adjoint=True)
                    - float(ratio @ q) * m) / (self.total * ln2 * tau)
        if not with_grad:
            return loss, None
        return loss, _site_grads_from_dense(tensors, g_m)

    def _tn_normalized_grads(self, tensors, vals, tau, dl_dv):
        """Gradient of L(values/tau); the trace term joins the batch."""
        full_ops = np.concatenate([self.ops, _identity_ops(self.n)])
        weights = np.concatenate([dl_dv / tau, [-(dl_dv @ vals) / tau]])
        return _tn_gradient_chunked(tensors, full_ops,
                                    weights.astype(complex), self.chunk)

    def _tn_mse(self, tensors, with_grad):
        tau = _sweep_values(tensors, _identity_ops(self.n))[0].real
        vals = _tn_values_chunked(tensors, self.ops, self.chunk).real / tau
        resid = vals - self.targets
        loss = float(resid @ resid / resid.size)
        if not with_grad:
            return loss, None
        g = 2.0 * resid / resid.size
        return loss, self._tn_normalized_grads(tensors, vals, tau, g)

    def _tn_mle(self, tensors, with_grad):
        tau = _sweep_values(tensors, _identity_ops(self.n))[0].real
        q = _tn_values_chunked(tensors, self.ops, self.chunk).real / tau
        loss = -float(self.counts
                      @ np.log2(np.clip(q, self.clip, None))) / self.total
        if not with_grad:
            return loss, None
        ratio = np.where(q > self.clip,
                         self.counts / np.clip(q, self.clip, None), 0.0)
        g = -ratio / (self.total * np.log(2.0))
        return loss, self._tn_normalized_grads(tensors, q, tau, g)


def loss_and_gradient(lps: LpsState, data, loss: str = "mse",
                      engine: str = "auto", prob_clip: float = 1e-12,
                      chunk: int = 1024, with_grad: bool = True):
    """Loss value and dL/d(conj A_i) per site; data matches the loss kind."""
    objective = _Objective(lps.n, data, loss, engine, prob_clip, chunk)
    return objective(lps.tensors, with_grad)


def evaluate_loss(lps: LpsState, data, loss: str = "mse",
                  engine: str = "auto", prob_clip: float = 1e-12) -> float:
    value, _ = loss_and_gradient(lps, data, loss, engine, prob_clip,
                                 with_grad=False)
    return value


# ---------------------------------------------------------------------------
# training loop

@dataclass
class TrainConfig:
    loss: str = "mse"
    chi: int = 18
    mu: int = 2
    max_iters: int = 100
    seed: int = 0
    init_noise: float = 1e-2
    step0: float = 1.0
    armijo: float = 1e-4
    backtrack: float = 0.5
    step_min: float = 1e-13
    tol: float = 1e-10
    prob_clip: float = 1e-12
    engine: str = "auto"
    chunk: int = 1024

    def __post_init__(self):
        if self.loss not in ("mse", "mle"):
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.chi < 1 or self.mu < 1:
            raise ValueError("chi and mu must be positive")


@dataclass
class TrainResult:
    lps: LpsState
    loss_trace: list[float] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.loss_trace) - 1

    @property
    def final_loss(self) -> float:
        return self.loss_trace[-1]


def _gnorm2(grads) -> float:
    return float(sum(np.vdot(g, g).real for g in grads))


def reconstruct(data, config: TrainConfig | None = None) -> TrainResult:
    """Fit an LPS to measured data by monotone gradient descent.

    `data` is an ExpectationTable for the mse loss or a list of
    ShotRecord for the mle loss.  Steps are sized by a Barzilai-Borwein
    estimate and backtracked until the Armijo condition holds, so the
    recorded loss trace never increases.
    """
    if config is None:
        config = TrainConfig()
    if config.loss == "mse":
        if not isinstance(data, ExpectationTable):
            raise TypeError("mse loss expects an ExpectationTable")
        n = data.n
    else:
        if not data:
            raise ValueError("mle loss expects shot records")
        n = len(data[0].observable)
    objective = _Objective(n, data, config.loss, config.engine,
                           config.prob_clip, config.chunk)

    def eval_lg(state, with_grad=True):
        return objective(state.tensors, with_grad)

    lps = lps_init(n, config.chi, config.mu, config.seed, config.init_noise)
    loss, grads = eval_lg(lps)
    trace = [loss]
    alpha = config.step0
    prev_flat = prev_gflat = None
    converged = False
    for _ in range(config.max_iters):
        gn2 = _gnorm2(grads)
        if gn2 <= 1e-24:
            converged = True
            break
        flat = np.concatenate([t.ravel() for t in lps.tensors])
        gflat = np.concatenate([g.ravel() for g in grads])
        if prev_flat is not None:
            s = flat - prev_flat
            y = gflat - prev_gflat
            denom = float(np.vdot(s, y).real)
            if denom > 0:
                alpha = min(float(np.vdot(s, s).real) / denom, 1e6)
            else:
                alpha = min(alpha * 4.0, 1e6)
        accepted = False
        while alpha >= config.step_min:
            cand = LpsState([t - alpha * g
                             for t, g in zip(lps.tensors, grads)])
            cand_loss, _ = eval_lg(cand, with_grad=False)
            if cand_loss <= loss - config.armijo * alpha * 2.0 * gn2:
                accepted = True
                break
            alpha *= config.backtrack
        if not accepted:
            converged = True
            break
        prev_flat, prev_gflat = flat, gflat
        lps = cand
        prev_loss = loss
        loss, grads = eval_lg(lps)
        trace.append(loss)
        if abs(prev_loss - loss) <= config.tol * max(1.0, abs(loss)):
            converged = True
            break
    return TrainResult(lps, trace, converged)


# ---------------------------------------------------------------------------
# persistence

def save_lps(path, lps: LpsState) -> None:
    arrays = {f"site_{i:03d}": t for i, t in enumerate(lps.tensors)}
    np.savez(path, **arrays)


def load_lps(path) -> LpsState:
    with np.load(path) as data:
        keys = sorted(k for k in data.files if k.startswith("site_"))
        return LpsState([data[k] for k in keys])


def write_loss_trace(path, trace) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "loss"])
        for i, v in enumerate(trace):
            writer.writerow([i, f"{v:.12g}"])


def read_loss_trace(path) -> list[float]:
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return [float(r[1]) for r in rows[1:]]
