"""Monte-Carlo simulation of superposition coding with binning.

A codebook has ``2^{k0}`` cloud centers ``x0^n(m0)`` drawn i.i.d. from
``p(x0)`` and, for each center, ``2^{k1}`` satellites ``x1^n(m0, m1)`` drawn
from ``p(x1|x0)``; the satellite symbols are the channel inputs.  The center
indices are split into ``2^{kc}`` consecutive bins of equal size.

Decoding follows the protocol: Receiver 1 estimates ``m0``, then ``m1`` given
its estimate of ``m0``, and forwards the bin index ``g`` of its ``m0``
estimate; Receiver 2 estimates ``m0`` inside bin ``g`` from its own output.
Receiver 2 scores a center by the averaged per-letter law
``sum_x1 p(x1|x0) W2(y|x1)`` rather than by the codebook.

Error events per trial (sent pair ``(m0, m1)``):

* ``E1``: the sent pair of words is not ``delta/2``-typical for ``p(x0, x1)``;
* ``E2``: Receiver 1's ``m0`` estimate is wrong;
* ``E3``: Receiver 1's ``m0`` estimate is right but its ``m1`` estimate is wrong;
* ``E4``: Receiver 2's ``m0`` estimate is wrong.

A trial is in error when ``E2``, ``E3`` or ``E4`` happens.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from . import jsonio
from .channels import BroadcastChannel
from .regions import ResourceGuardError

MAX_WORDS = 2 ** 20
CQ_MAX_N = 6
CQ_MAX_DIM = 2
DECODERS = ("ml", "jt", "pgm")


# ---------------------------------------------------------------------------
# codebook
# ---------------------------------------------------------------------------

@dataclass
class Codebook:
    pmf: np.ndarray  # p(x0, x1)
    n: int
    k0: int
    k1: int
    kc: int
    x0_words: np.ndarray  # (M0, n)
    x1_words: np.ndarray  # (M0, M1, n)
    seed: int
    requested: dict = field(default_factory=dict)

    @property
    def m0_count(self) -> int:
        return 2 ** self.k0

    @property
    def m1_count(self) -> int:
        return 2 ** self.k1

    @property
    def n_bins(self) -> int:
        return 2 ** self.kc

    @property
    def bin_size(self) -> int:
        return 2 ** (self.k0 - self.kc)

    @property
    def rates(self) -> tuple[float, float]:
        return self.k0 / self.n, self.k1 / self.n

    @property
    def c12(self) -> float:
        return self.kc / self.n

    def bin_of(self, m0) -> np.ndarray:
        return np.asarray(m0) // self.bin_size

    def bin_members(self, g: int) -> np.ndarray:
        return np.arange(g * self.bin_size, (g + 1) * self.bin_size)

    def to_dict(self) -> dict:
        return {
            "pmf": self.pmf.tolist(), "n": self.n, "k0": self.k0, "k1": self.k1, "kc": self.kc,
            "x0_words": self.x0_words.tolist(), "x1_words": self.x1_words.tolist(),
            "seed": self.seed, "requested": self.requested,
        }


def _floor_bits(rate: float, n: int) -> int:
    # a tiny allowance keeps exact multiples of 1/n (e.g. 0.5 at n = 6) intact
    return int(math.floor(rate * n + 1e-9))


def build_codebook(pmf: np.ndarray, n: int, r0: float, r1: float, c12: float, seed: int = 0) -> Codebook:
    """Random superposition codebook with ``2^{n C12}`` equal bins.

    Rates are rounded down to multiples of ``1/n`` (so they never leave a
    region they were chosen inside); the achieved values are
    ``codebook.rates`` and ``codebook.c12``.  A link faster than ``R0`` is
    capped at ``R0`` (one message per bin).
    """
    p = np.asarray(pmf, dtype=float)
    if p.ndim != 2 or np.any(p < -1e-12) or abs(p.sum() - 1) > 1e-9:
        raise ValueError("pmf must be a 2-D probability table p(x0, x1)")
    if n < 1:
        raise ValueError("block length must be positive")
    if min(r0, r1, c12) < 0:
        raise ValueError("rates must be nonnegative")
    p = np.clip(p, 0.0, None)
    p = p / p.sum()
    k0, k1 = _floor_bits(r0, n), _floor_bits(r1, n)
    kc = min(_floor_bits(c12, n), k0)
    words = 2 ** k0 + 2 ** (k0 + k1)
    if words > MAX_WORDS:
        raise ResourceGuardError(f"codebook needs {words} words (cap {MAX_WORDS})")
    rng = np.random.default_rng([seed, 0xC0DE])
    p0 = p.sum(axis=1)
    x0 = rng.choice(len(p0), size=(2 ** k0, n), p=p0)
    cond = np.divide(p, p0[:, None], out=np.full_like(p, 1.0 / p.shape[1]), where=p0[:, None] > 0)
    cdf = np.cumsum(cond, axis=1)
    u = rng.random(size=(2 ** k0, 2 ** k1, n))
    x1 = (u[..., None] > cdf[x0][:, None, :, :]).sum(axis=-1)
    x1 = np.minimum(x1, p.shape[1] - 1)
    return Codebook(p, n, k0, k1, kc, x0, x1, seed, {"R0": r0, "R1": r1, "C12": c12})


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

@dataclass
class SimReport:
    n: int
    trials: int
    rates: tuple[float, float]
    c12: float
    error_counts: dict
    errors: int
    decoder: str
    seed: int
    delta: float
    requested: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.errors <= self.trials:
            raise ValueError("error count out of range")

    @property
    def empirical_error(self) -> float:
        return self.errors / self.trials if self.trials else 0.0

    @property
    def event_rates(self) -> dict:
        return {k: v / self.trials for k, v in self.error_counts.items()}

    def union_bound_ok(self) -> bool:
        """Error rate at most the summed rates of E2, E3, E4 plus three sigma."""
        s = sum(self.event_rates[k] for k in ("E2", "E3", "E4"))
        pe = self.empirical_error
        sigma = math.sqrt(max(pe * (1 - pe), 1e-12) / max(self.trials, 1))
        return pe <= s + 3 * sigma

    def to_dict(self) -> dict:
        return {
            "type": "sim_report", "n": self.n, "trials": self.trials, "rates": list(self.rates),
            "C12": self.c12, "error_counts": self.error_counts, "errors": self.errors,
            "empirical_error": self.empirical_error, "decoder": self.decoder, "seed": self.seed,
            "delta": self.delta, "requested": self.requested,
        }

    def save(self, path: str | Path, extra: dict | None = None) -> None:
        jsonio.dump({**self.to_dict(), **(extra or {})}, path)


# ---------------------------------------------------------------------------
# typicality
# ---------------------------------------------------------------------------

def default_delta(n: int) -> float:
    return n ** (-1.0 / 3.0)


def _typical(counts: np.ndarray, n: int, law: np.ndarray, delta: float) -> np.ndarray:
    """Robust typicality of empirical counts (last axis) against ``law``."""
    freq = counts / n
    ok = np.abs(freq - law) <= delta * law + 1e-12
    return np.all(ok & ((law > 0) | (counts == 0)), axis=-1)


def _counts(index: np.ndarray, size: int) -> np.ndarray:
    return (index[..., None] == np.arange(size)).sum(axis=-2)


# ---------------------------------------------------------------------------
# classical simulation
# ---------------------------------------------------------------------------

def _kernels(bc: BroadcastChannel):
    k = np.asarray(bc.kernel, dtype=float)
    return k.sum(axis=2), k.sum(axis=1)


def _log(p):
    with np.errstate(divide="ignore"):
        return np.log(p)


def _pick(scores: np.ndarray, rng: np.random.Generator, decoder: str) -> int:
    """Index chosen from log-likelihood ``scores``; ``-1`` signals failure."""
    if not np.isfinite(scores).any():
        return -1
    if decoder == "ml":
        return int(np.argmax(scores))
    w = np.exp(scores - scores.max())
    return int(rng.choice(len(w), p=w / w.sum()))


def _classical_trial(cb: Codebook, w1, w2, lw1, lsig2, p, decoder, delta, rng, sig2):
    n = cb.n
    m0 = int(rng.integers(cb.m0_count))
    m1 = int(rng.integers(cb.m1_count))
    x0 = cb.x0_words[m0]
    x = cb.x1_words[m0, m1]
    cum1 = np.cumsum(w1[x], axis=1)
    cum2 = np.cumsum(w2[x], axis=1)
    u = rng.random((2, n))
    y1 = np.minimum((u[0][:, None] > cum1).sum(axis=1), w1.shape[1] - 1)
    y2 = np.minimum((u[1][:, None] > cum2).sum(axis=1), w2.shape[1] - 1)

    c0, c1 = p.shape
    e1 = not _typical(_counts(x0 * c1 + x, c0 * c1)[None], n, p.ravel(), delta / 2)[0]
    if decoder == "jt":
        ny1 = w1.shape[1]
        joint1 = (p[:, :, None] * w1[None, :, :]).ravel()
        idx = (cb.x0_words[:, None, :] * c1 + cb.x1_words) * ny1 + y1
        typ = _typical(_counts(idx, c0 * c1 * ny1), n, joint1, delta)
        cand0 = np.flatnonzero(typ.any(axis=1))
        m0_hat = int(cand0[0]) if len(cand0) == 1 else -1
        if m0_hat >= 0:
            cand1 = np.flatnonzero(typ[m0_hat])
            m1_hat = int(cand1[0]) if len(cand1) == 1 else -1
        else:
            m1_hat = -1
    else:
        ll = lw1[cb.x1_words, y1].sum(axis=-1)  # (M0, M1)
        s0 = logsumexp(ll, axis=1)
        m0_hat = _pick(s0, rng, decoder)
        m1_hat = _pick(ll[m0_hat], rng, decoder) if m0_hat >= 0 else -1

    e2 = m0_hat != m0
    e3 = (not e2) and m1_hat != m1
    if m0_hat < 0:
        e4 = True  # nothing is forwarded
    else:
        members = cb.bin_members(int(cb.bin_of(m0_hat)))
        if decoder == "jt":
            ny2 = w2.shape[1]
            joint2 = (p.sum(axis=1)[:, None] * sig2).ravel()
            idx = cb.x0_words[members] * ny2 + y2
            typ = np.flatnonzero(_typical(_counts(idx, c0 * ny2), n, joint2, delta))
            m0_tilde = int(members[typ[0]]) if len(typ) == 1 else -1
        else:
            s = lsig2[cb.x0_words[members], y2].sum(axis=-1)
            j = _pick(s, rng, decoder)
            m0_tilde = int(members[j]) if j >= 0 else -1
        e4 = m0_tilde != m0
    return e1, e2, e3, e4


def _classical_chunk(args):
    bc, cb, trial_ids, decoder, delta, seed = args
    w1, w2 = _kernels(bc)
    p = cb.pmf
    if w1.shape[0] < p.shape[1]:
        raise ValueError("pmf alphabet of X1 exceeds the channel input alphabet")
    w1, w2 = w1[: p.shape[1]], w2[: p.shape[1]]
    cond = np.divide(p, p.sum(axis=1, keepdims=True), out=np.zeros_like(p), where=p.sum(axis=1, keepdims=True) > 0)
    sig2 = cond @ w2  # Receiver 2's averaged law given x0
    lw1, lsig2 = _log(w1), _log(sig2)
    out = np.zeros((len(trial_ids), 4), dtype=bool)
    for i, t in enumerate(trial_ids):
        rng = np.random.default_rng([seed, int(t)])
        out[i] = _classical_trial(cb, w1, w2, lw1, lsig2, p, decoder, delta, rng, sig2)
    return out


def _run_trials(fn, payload, trials, workers, chunk=500):
    ids = np.arange(trials)
    tasks = [payload(ids[i:i + chunk]) for i in range(0, trials, chunk)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(fn, tasks))
    else:
        parts = [fn(t) for t in tasks]
    return np.concatenate(parts) if parts else np.zeros((0, 4), dtype=bool)


def _report(cb, flags, decoder, seed, delta):
    counts = {f"E{i + 1}": int(flags[:, i].sum()) for i in range(4)}
    errors = int((flags[:, 1] | flags[:, 2] | flags[:, 3]).sum())
    return SimReport(cb.n, len(flags), cb.rates, cb.c12, counts, errors, decoder, seed, delta, dict(cb.requested))


def simulate_classical(
    bc: BroadcastChannel,
    codebook: Codebook,
    trials: int,
    decoder: str = "ml",
    *,
    seed: int = 0,
    delta: float | None = None,
    workers: int = 1,
) -> SimReport:
    """Simulate the protocol over a classical broadcast channel.

    ``decoder`` is ``"ml"`` (likelihood maximization at each step),
    ``"jt"`` (unique joint typicality) or ``"pgm"`` (the square-root
    measurement of commuting states, i.e. sampling from the posterior).
    Trial ``t`` uses the random stream seeded by ``(seed, t)``.
    """
    if not bc.is_classical or bc.kernel is None:
        raise ValueError("simulate_classical needs a classical broadcast channel")
    if decoder not in DECODERS:
        raise ValueError(f"decoder must be one of {DECODERS}")
    delta = default_delta(codebook.n) if delta is None else delta
    flags = _run_trials(_classical_chunk, lambda ids: (bc, codebook, ids, decoder, delta, seed), trials, workers)
    return _report(codebook, flags, decoder, seed, delta)


# ---------------------------------------------------------------------------
# classical-quantum simulation
# ---------------------------------------------------------------------------

def _kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def _psd_power(a: np.ndarray, power: float, tol: float = 1e-12) -> np.ndarray:
    lam, v = np.linalg.eigh(a)
    keep = lam > tol
    lam_p = np.zeros_like(lam)
    lam_p[keep] = lam[keep] ** power
    return (v * lam_p) @ v.conj().T


def _pgm_roots(states: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Square roots of the square-root-measurement elements for ``states``."""
    s = sum(states)
    inv = _psd_power(s, -0.5)
    return [_psd_power(inv @ r @ inv, 0.5) for r in states]


@dataclass
class _CQDecoders:
    lam0: list  # roots of Lambda^0_{m0}
    lam1: list  # lam1[m0] = roots of Lambda^1_{.|m0}
    gam: list  # gam[g] = roots of Gamma over bin g


def _cq_decoders(bc: BroadcastChannel, cb: Codebook) -> _CQDecoders:
    d = bc.d_in
    eye = np.eye(d)
    outs = [bc.channel(np.outer(eye[x], eye[x])) for x in range(d)]
    rho1 = [_marg(o, bc.d1, bc.d2, 0) for o in outs]
    rho2 = [_marg(o, bc.d1, bc.d2, 1) for o in outs]
    p = cb.pmf
    cond = np.divide(p, p.sum(axis=1, keepdims=True), out=np.zeros_like(p), where=p.sum(axis=1, keepdims=True) > 0)
    sig2 = [sum(cond[x0, x] * rho2[x] for x in range(p.shape[1])) for x0 in range(p.shape[0])]

    words1 = [[_kron_all([rho1[x] for x in cb.x1_words[a, b]]) for b in range(cb.m1_count)]
              for a in range(cb.m0_count)]
    pair_roots = _pgm_roots([w for row in words1 for w in row])
    lam0 = []
    for a in range(cb.m0_count):
        el = sum(r @ r for r in pair_roots[a * cb.m1_count:(a + 1) * cb.m1_count])
        lam0.append(_psd_power(el, 0.5))
    lam1 = [_pgm_roots(words1[a]) for a in range(cb.m0_count)]
    gam = []
    for g in range(cb.n_bins):
        states = [_kron_all([sig2[x0] for x0 in cb.x0_words[m]]) for m in cb.bin_members(g)]
        gam.append(_pgm_roots(states))
    return _CQDecoders(lam0, lam1, gam)


def _marg(rho: np.ndarray, d1: int, d2: int, which: int) -> np.ndarray:
    r = rho.reshape(d1, d2, d1, d2)
    return np.einsum("ajbj->ab", r) if which == 0 else np.einsum("iaib->ab", r)


def _measure(m: np.ndarray, roots: Sequence[np.ndarray], side: int, rng) -> tuple[int, np.ndarray]:
    """Sample an outcome and the normalized post-measurement amplitude matrix.

    ``m[a, b]`` holds the amplitudes on ``B1^n x B2^n``; ``side`` selects the
    factor measured.  Outcome ``-1`` is the leftover (failure) element.
    """
    posts = [r @ m if side == 0 else m @ r.T for r in roots]
    probs = np.array([np.vdot(q, q).real for q in posts])
    rest = max(1.0 - probs.sum(), 0.0)
    allp = np.append(probs, rest)
    k = int(rng.choice(len(allp), p=allp / allp.sum()))
    if k == len(roots):
        return -1, m
    return k, posts[k] / math.sqrt(probs[k])


def _cq_chunk(args):
    bc, cb, dec, trial_ids, seed, delta, comps = args
    n = cb.n
    d1, d2 = bc.d1, bc.d2
    p = cb.pmf
    c1 = p.shape[1]
    out = np.zeros((len(trial_ids), 4), dtype=bool)
    for i, t in enumerate(trial_ids):
        rng = np.random.default_rng([seed, int(t)])
        m0 = int(rng.integers(cb.m0_count))
        m1 = int(rng.integers(cb.m1_count))
        x0 = cb.x0_words[m0]
        x = cb.x1_words[m0, m1]
        # unravel each per-use output into a randomly chosen pure component
        vecs = []
        for xi in x:
            w, v = comps[xi]
            k = int(rng.choice(len(w), p=w))
            vecs.append(v[:, k])
        psi = _kron_all([v.reshape(-1, 1) for v in vecs]).reshape((d1, d2) * n)
        order = tuple(range(0, 2 * n, 2)) + tuple(range(1, 2 * n, 2))
        m = psi.transpose(order).reshape(d1 ** n, d2 ** n)

        e1 = not _typical(_counts(x0 * c1 + x, p.size)[None], n, p.ravel(), delta / 2)[0]
        m0_hat, m = _measure(m, dec.lam0, 0, rng)
        m1_hat = -1
        if m0_hat >= 0:
            m1_hat, m = _measure(m, dec.lam1[m0_hat], 0, rng)
        e2 = m0_hat != m0
        e3 = (not e2) and m1_hat != m1
        if m0_hat < 0:
            e4 = True
        else:
            g = int(cb.bin_of(m0_hat))
            j, _ = _measure(m, dec.gam[g], 1, rng)
            e4 = j < 0 or int(cb.bin_members(g)[j]) != m0
        out[i] = (e1, e2, e3, e4)
    return out


def simulate_cq(
    bc: BroadcastChannel,
    codebook: Codebook,
    trials: int,
    *,
    seed: int = 0,
    delta: float | None = None,
    workers: int = 1,
) -> SimReport:
    """Simulate the protocol with basis-state inputs and quantum outputs.

    Receiver 1 applies the square-root measurement for the pairs
    ``(m0, m1)`` coarse-grained to ``m0``, then the one for ``m1`` given its
    ``m0`` estimate, on the post-measurement state (Kraus operators are the
    square roots of the elements).  Receiver 2 measures its bin with the
    square-root measurement of the averaged center states.  Mixed outputs
    are unravelled into pure components sampled per channel use, which leaves
    all outcome statistics unchanged.
    """
    if codebook.n > CQ_MAX_N or max(bc.d1, bc.d2) > CQ_MAX_DIM:
        raise ResourceGuardError(f"cq simulation limited to n <= {CQ_MAX_N} and output dims <= {CQ_MAX_DIM}")
    if codebook.pmf.shape[1] > bc.d_in:
        raise ValueError("pmf alphabet of X1 exceeds the channel input dimension")
    delta = default_delta(codebook.n) if delta is None else delta
    dec = _cq_decoders(bc, codebook)
    eye = np.eye(bc.d_in)
    comps = []
    for xi in range(bc.d_in):
        lam, v = np.linalg.eigh(bc.channel(np.outer(eye[xi], eye[xi])))
        keep = lam > 1e-12
        w = lam[keep] / lam[keep].sum()
        comps.append((w, v[:, keep]))
    flags = _run_trials(_cq_chunk, lambda ids: (bc, codebook, dec, ids, seed, delta, comps), trials, workers,
                        chunk=250)
    return _report(codebook, flags, "pgm", seed, delta)


def error_sweep_csv(reports: Sequence[SimReport]) -> str:
    lines = ["n,R0,R1,C12,trials,empirical_error"]
    lines += [f"{r.n},{r.rates[0]:.10g},{r.rates[1]:.10g},{r.c12:.10g},{r.trials},{r.empirical_error:.10g}"
              for r in reports]
    return "\n".join(lines) + "\n"
