"""Primitive relay bounds and conferencing-link rate accounting.

Receiver 1 only assists Receiver 2 through a one-way qubit link of capacity
``CQ12``.  Three single-letter quantities are computed for a broadcast channel
``N: A' -> B1 B2``:

* decode-forward (achievable)::

      DF = max_phi  I(A2>B2) + min(I(A1>B1), CQ12)

  over pure inputs ``phi_{A1 A2 A'}``;

* cutset (upper bound, evaluated at one channel use)::

      CS = max_rho  min(I(A T>B2) + CQ12, I(A>B1 B2))

  over pure ``rho_{A T A'}`` with ``T`` capped in dimension;

* entanglement-formation (achievable)::

      EF = max_{phi, F}  I(A>B1hat B2)   s.t.  E_F(B1hat | A B2 E) <= CQ12

  where ``F: B1 -> B1hat`` is a post-processing channel that Receiver 1
  simulates over the link and ``E`` is the channel environment.

Negative coherent informations are clipped at zero in the decode-forward
objective; a reference system with negative coherent information can be
discarded, so the clipped rate stays achievable.

The cutset and entanglement-formation expressions are regularized in their
exact form.  Both are evaluated at a single letter and carry the flag
``"single-letter evaluation of a regularized expression"``.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import _engine, _stiefel, jsonio
from .channels import BroadcastChannel, stinespring
from .entanglement import eof_numeric
from .regions import DEFAULT_TAUS, QuantumInputState

SINGLE_LETTER_FLAG = "single-letter evaluation of a regularized expression"
EOF_MARGIN = 2e-3
FEAS_TOL = 1e-6
PENALTY_SCHEDULE = (10.0, 100.0, 1000.0)


# ---------------------------------------------------------------------------
# conversions and links
# ---------------------------------------------------------------------------

def teleport_convert(c12: float) -> float:
    """Qubit rate of a classical link used with shared ebits (two bits per qubit)."""
    if c12 < 0:
        raise ValueError("rate must be nonnegative")
    return c12 / 2


def superdense_convert(cq12: float) -> float:
    """Classical rate of a qubit link used with shared ebits."""
    if cq12 < 0:
        raise ValueError("rate must be nonnegative")
    return 2 * cq12


@dataclass(frozen=True)
class ConferencingLink:
    """One-way link from Receiver 1 to Receiver 2.

    With ``entangled_decoders`` the receivers share unlimited ebits and the
    link's qubit rate is exactly half its bit rate.
    """

    classical_rate: float
    quantum_rate: float
    entangled_decoders: bool = False

    def __post_init__(self):
        if self.classical_rate < 0 or self.quantum_rate < 0:
            raise ValueError("link rates must be nonnegative")
        if self.entangled_decoders and self.quantum_rate != self.classical_rate / 2:
            raise ValueError("entangled decoders require CQ12 = C12/2")

    @classmethod
    def from_classical(cls, c12: float, entangled_decoders: bool = True) -> "ConferencingLink":
        return cls(c12, teleport_convert(c12) if entangled_decoders else 0.0, entangled_decoders)

    def to_dict(self) -> dict:
        return {"C12": self.classical_rate, "CQ12": self.quantum_rate,
                "entangled_decoders": self.entangled_decoders}


def repeater_chain(hops: Sequence[Any], links: Sequence[float] = ()) -> float:
    """Bottleneck throughput of ``hop0, link0, hop1, link1, ...``.

    A hop is a coherent information (a number or a mapping with key
    ``"coherent_info"``); negative hop values count as zero.  There must be
    exactly one link between consecutive hops.
    """
    if len(hops) == 0:
        raise ValueError("empty repeater chain")
    if len(links) != len(hops) - 1:
        raise ValueError(f"{len(hops)} hops need {len(hops) - 1} links, got {len(links)}")
    vals = [float(h["coherent_info"]) if isinstance(h, dict) else float(h) for h in hops]
    if any(c < 0 for c in links):
        raise ValueError("link rates must be nonnegative")
    out = max(vals[0], 0.0)
    for c, h in zip(links, vals[1:]):
        out = min(out, float(c), max(h, 0.0))
    return out


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------

@dataclass
class BoundResult:
    value: float
    witness: Any
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        w = self.witness
        if hasattr(w, "to_dict"):
            w = w.to_dict()
        return {"value": self.value, "witness": w, "details": self.details}


@dataclass
class EoFWitness:
    """Input purification and the Stinespring isometry of ``F: B1 -> B1hat``."""

    state: QuantumInputState
    f_isometry: np.ndarray
    b1hat_dim: int

    def to_dict(self) -> dict:
        return {"state": self.state.to_dict(), "f_isometry": jsonio.encode_matrix(self.f_isometry),
                "b1hat_dim": self.b1hat_dim}

    @classmethod
    def from_dict(cls, d: dict) -> "EoFWitness":
        return cls(QuantumInputState.from_dict(d["state"]), jsonio.decode_matrix(d["f_isometry"]),
                   int(d["b1hat_dim"]))


@dataclass
class RelayBounds:
    cq12: float
    cutset: float
    decode_forward: float
    eof_lower: float
    witnesses: dict
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.eof_lower < 0:
            raise ValueError("eof_lower must be nonnegative")

    @property
    def ordered(self) -> bool:
        return self.decode_forward <= self.cutset + 1e-6

    def to_dict(self) -> dict:
        return {
            "type": "relay_bounds",
            "cq12": self.cq12,
            "cutset": self.cutset,
            "decode_forward": self.decode_forward,
            "eof_lower": self.eof_lower,
            "witnesses": {k: (v.to_dict() if hasattr(v, "to_dict") else v) for k, v in self.witnesses.items()},
            "metadata": self.metadata,
        }


# ---------------------------------------------------------------------------
# pure-input maximization shared by decode-forward and cutset
# ---------------------------------------------------------------------------

_DF_TERMS = (("B1",), ("A1", "B1"), ("B2",), ("A2", "B2"))
_CS_TERMS = (("B2",), ("A", "T", "B2"), ("B1", "B2"), ("A", "B1", "B2"))


def _model(bc: BroadcastChannel, names, dims, terms):
    st = stinespring(bc.channel)
    return _engine.PureModel(st.isometry, tuple(names), tuple(dims), (bc.d1, bc.d2), st.env_dim, terms)


def _starts(seed: int, n: int, dim: int, tag: int) -> np.ndarray:
    out = np.empty((n, dim), dtype=complex)
    for r in range(n):
        rng = np.random.default_rng([seed, tag, r])
        z = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        out[r] = z / np.linalg.norm(z)
    return out


def decode_forward_value(i1: float, i2: float, cq12: float) -> float:
    """``max(I2, 0) + min(max(I1, 0), CQ12)``: direct flow plus what the link relays."""
    return max(i2, 0.0) + min(max(i1, 0.0), cq12)


def _df_objective(vals, cq12, tau):
    """Decode-forward value from ``[H(B1), H(A1B1), H(B2), H(A2B2)]``."""
    i1 = vals[:, 0] - vals[:, 1]
    i2 = vals[:, 2] - vals[:, 3]
    if tau is None:
        return np.maximum(i2, 0.0) + np.minimum(np.maximum(i1, 0.0), cq12), None
    p2, d2 = _engine.softplus(i2, tau)
    p1, d1 = _engine.softplus(i1, tau)
    m, w = _engine.softmin(np.stack([p1, np.full_like(p1, cq12)], axis=-1), tau)
    c1 = w[:, 0] * d1
    dv = np.stack([c1, -c1, d2, -d2], axis=-1)
    return p2 + m, dv


def _cs_objective(vals, cq12, tau):
    """Cutset value from ``[H(B2), H(ATB2), H(B1B2), H(AB1B2)]``."""
    cut1 = vals[:, 0] - vals[:, 1] + cq12
    cut2 = vals[:, 2] - vals[:, 3]
    both = np.stack([cut1, cut2], axis=-1)
    if tau is None:
        return np.maximum(both.min(axis=-1), 0.0), None
    m, w = _engine.softmin(both, tau)
    dv = np.stack([w[:, 0], -w[:, 0], w[:, 1], -w[:, 1]], axis=-1)
    return m, dv


def _maximize_pure(model, objective, starts, taus, maxiter):
    vec = starts[:, :, None]
    for tau in taus:

        def fg(u, tau=tau):
            vals, jac = model.values(u[..., 0])
            v, dv = objective(vals, tau)
            return -v, -np.einsum("st,std->sd", dv, jac)[..., None]

        vec, _, _ = _stiefel.minimize(fg, vec, maxiter=maxiter, gtol=1e-9, ftol=1e-12, patience=10)
    final = vec[..., 0]
    vals, _ = model.values(final, need_grad=False)
    value, _ = objective(vals, None)
    return final, vals, value


def decode_forward(
    bc: BroadcastChannel,
    cq12: float,
    *,
    ref_dims: Sequence[int] | None = None,
    restarts: int = 16,
    seed: int = 0,
    taus: Sequence[float] = DEFAULT_TAUS,
    maxiter: int = 300,
    warm_start: Sequence[QuantumInputState] | None = None,
) -> BoundResult:
    """Multi-start maximization of ``I(A2>B2) + min(I(A1>B1), CQ12)``."""
    if cq12 < 0:
        raise ValueError("CQ12 must be nonnegative")
    d = bc.d_in
    ref_dims = tuple(ref_dims) if ref_dims is not None else (d, d)
    model = _model(bc, ("A1", "A2"), ref_dims, _DF_TERMS)
    starts = _starts(seed, restarts, model.dim, 1)
    if warm_start:
        starts = np.concatenate([np.array([w.vector for w in warm_start]), starts])
    final, vals, value = _maximize_pure(model, lambda v, t: _df_objective(v, cq12, t), starts, taus, maxiter)
    return _df_result(final, vals, value, ref_dims, d, cq12, restarts, seed)


def _df_result(final, vals, value, ref_dims, d, cq12, restarts, seed):
    k = int(np.argmax(value))
    i1 = float(vals[k, 0] - vals[k, 1])
    i2 = float(vals[k, 2] - vals[k, 3])
    wit = QuantumInputState(final[k], ("A1", "A2"), ref_dims, d)
    return BoundResult(float(value[k]), wit, {"I1": i1, "I2": i2, "cq12": cq12,
                                              "restarts": restarts, "seed": seed})


def decode_forward_curve(bc: BroadcastChannel, cq_grid: Sequence[float], **kw) -> list[BoundResult]:
    """Decode-forward on a grid with witnesses pooled across grid points.

    For a fixed input the objective is nondecreasing in ``CQ12`` and constant
    once ``CQ12`` exceeds ``I(A1>B1)``; pooling therefore makes the curve
    nondecreasing and flat past the saturation point of its last witness.
    """
    runs = [decode_forward(bc, c, **kw) for c in cq_grid]
    pool = [r.witness for r in runs]
    d = bc.d_in
    ref_dims = pool[0].ref_dims
    model = _model(bc, ("A1", "A2"), ref_dims, _DF_TERMS)
    vecs = np.array([w.vector for w in pool])
    vals, _ = model.values(vecs, need_grad=False)
    out = []
    for c, r in zip(cq_grid, runs):
        value, _ = _df_objective(vals, c, None)
        res = _df_result(vecs, vals, value, ref_dims, d, c, r.details["restarts"], r.details["seed"])
        res.details["pooled"] = len(pool)
        out.append(res)
    return out


def cutset(
    bc: BroadcastChannel,
    cq12: float,
    *,
    t_dim: int = 4,
    ref_dim: int | None = None,
    restarts: int = 16,
    seed: int = 0,
    taus: Sequence[float] = DEFAULT_TAUS,
    maxiter: int = 300,
    warm_start: Sequence[np.ndarray] | None = None,
) -> BoundResult:
    """Single-letter ``max min(I(AT>B2) + CQ12, I(A>B1B2))`` over pure ``A T A'`` inputs."""
    if cq12 < 0:
        raise ValueError("CQ12 must be nonnegative")
    d = bc.d_in
    ref_dims = (ref_dim or d, t_dim)
    model = _model(bc, ("A", "T"), ref_dims, _CS_TERMS)
    starts = _starts(seed, restarts, model.dim, 2)
    if warm_start is not None and len(warm_start):
        starts = np.concatenate([np.asarray(warm_start), starts])
    final, vals, value = _maximize_pure(model, lambda v, t: _cs_objective(v, cq12, t), starts, taus, maxiter)
    k = int(np.argmax(value))
    cut1 = float(vals[k, 0] - vals[k, 1] + cq12)
    cut2 = float(vals[k, 2] - vals[k, 3])
    wit = QuantumInputState(final[k], ("A", "T"), ref_dims, d)
    return BoundResult(float(value[k]), wit, {
        "cut1": cut1, "cut2": cut2, "cq12": cq12, "t_dim": t_dim, "restarts": restarts, "seed": seed,
        "flags": [SINGLE_LETTER_FLAG, "heuristic cap on T"],
    })


# ---------------------------------------------------------------------------
# entanglement-formation lower bound
# ---------------------------------------------------------------------------

class _EoFProblem:
    """Penalized objective over ``(phi, W, V)``.

    ``phi``: input purification on ``A A'``; ``W``: isometry ``B1 -> B1hat G``
    (Stinespring of ``F``); ``V``: ``m x dim(G)`` isometry picking a pure-state
    decomposition of the state on ``B1hat | A B2 E`` (purified by ``G``).
    """

    def __init__(self, bc: BroadcastChannel, ref_dim: int, bhat: int):
        st = stinespring(bc.channel)
        self.v_n = st.isometry
        self.d = bc.d_in
        self.ref = ref_dim
        self.d1, self.d2, self.e = bc.d1, bc.d2, st.env_dim
        self.bhat = bhat
        self.g = bc.d1 * bhat
        self.m = self.g * self.g

    def shapes(self):
        return [(self.ref * self.d, 1), (self.bhat * self.g, self.d1), (self.m, self.g)]

    def tensors(self, phi, w):
        s = phi.shape[0]
        big_in = np.einsum("oi,sai->sao", self.v_n, phi.reshape(s, self.ref, self.d))
        big_in = big_in.reshape(s, self.ref, self.d1, self.d2, self.e)
        wt = w.reshape(s, self.bhat, self.g, self.d1)
        psi = np.einsum("shgb,sabce->sahgce", wt, big_in)  # A, B1hat, G, B2, E
        return big_in, wt, psi

    def evaluate(self, blocks, need_grad=True):
        phi, w, v = blocks
        s = phi.shape[0]
        big_in, wt, psi = self.tensors(phi[..., 0], w)
        f_hb, g_hb = _engine.reduced_entropy(psi, (1, 3), need_grad)  # H(B1hat B2)
        f_ahb, g_ahb = _engine.reduced_entropy(psi, (0, 1, 3), need_grad)  # H(A B1hat B2)
        coh = f_hb - f_ahb
        comp = np.einsum("skg,sahgce->skahce", v, psi)  # decomposition members
        flat = comp.reshape((s * self.m,) + comp.shape[2:])
        f_k, g_k = _engine.reduced_entropy(flat, (1,), need_grad)
        avg = f_k.reshape(s, self.m).sum(axis=1)
        if not need_grad:
            return coh, avg, None
        g_k = g_k.reshape(comp.shape)
        g_psi_coh = g_hb - g_ahb
        g_v = np.einsum("skahce,sahgce->skg", g_k, psi.conj())
        g_psi_avg = np.einsum("skg,skahce->sahgce", v.conj(), g_k)
        return coh, avg, (g_psi_coh, g_psi_avg, g_v, big_in, wt)

    def pull(self, g_psi, big_in, wt):
        """Gradients w.r.t. ``phi`` and ``W`` from a gradient w.r.t. ``psi``."""
        s = g_psi.shape[0]
        g_w = np.einsum("sahgce,sabce->shgb", g_psi, big_in.conj()).reshape(s, self.bhat * self.g, self.d1)
        g_big = np.einsum("shgb,sahgce->sabce", wt.conj(), g_psi).reshape(s, self.ref, -1)
        g_phi = np.einsum("oi,sao->sai", self.v_n.conj(), g_big).reshape(s, -1, 1)
        return g_phi, g_w

    def seeds(self):
        """Replacement ``F`` (output fixed, exactly separable) and identity ``F``."""
        out = []
        rep = np.zeros((self.bhat, self.g, self.d1))
        for b in range(self.d1):
            rep[0, b, b] = 1.0
        out.append(rep.reshape(self.bhat * self.g, self.d1))
        if self.bhat >= self.d1:
            ide = np.zeros((self.bhat, self.g, self.d1))
            for b in range(self.d1):
                ide[b, 0, b] = 1.0
            out.append(ide.reshape(self.bhat * self.g, self.d1))
        return out

    def density(self, phi, w) -> np.ndarray:
        """State on ``B1hat (A B2 E)`` as a matrix with ``B1hat`` first."""
        _, _, psi = self.tensors(phi[None], w[None])
        x = psi[0].transpose(1, 0, 3, 4, 2).reshape(-1, self.g)
        return x @ x.conj().T


def eof_lower(
    bc: BroadcastChannel,
    cq12: float,
    *,
    b1hat_dim: int | None = None,
    ref_dim: int | None = None,
    restarts: int = 6,
    seed: int = 0,
    maxiter: int = 300,
    eof_restarts: int = 16,
    margin: float = EOF_MARGIN,
) -> BoundResult:
    """Best certified ``I(A>B1hat B2)`` with ``E_F(B1hat | A B2 E) <= CQ12``.

    The constraint is enforced by an exterior quadratic penalty with weights
    10, 100, 1000 aimed at ``CQ12 - margin``.  Every candidate is then
    checked exactly: the decomposition found by the search is itself an upper
    bound on the EoF, and a separate EoF search with doubled restarts is run
    on the accepted witness.  Candidates that fail both are discarded.  The
    replacement post-processing (``B1hat`` fixed) is always feasible, so the
    result is at least ``max I(A>B2)`` over the explored inputs.
    """
    if cq12 < 0:
        raise ValueError("CQ12 must be nonnegative")
    bhat = b1hat_dim or bc.d1
    prob = _EoFProblem(bc, ref_dim or bc.d_in, bhat)
    unconstrained = cq12 >= np.log2(bhat)
    target = cq12 - margin
    shapes = prob.shapes()

    seeds_w = prob.seeds()
    n = restarts + len(seeds_w)
    blocks = []
    for k, shp in enumerate(shapes):
        arr = np.empty((n,) + shp, dtype=complex)
        for r in range(n):
            arr[r] = _stiefel.random_isometry(shp, np.random.default_rng([seed, 3, k, r]))
        blocks.append(arr)
    for j, w0 in enumerate(seeds_w):
        blocks[1][restarts + j] = w0

    def run(blocks, lam, free_w=True):
        def fg(us):
            coh, avg, parts = prob.evaluate(us)
            g_coh, g_avg, g_v, big_in, wt = parts
            excess = np.maximum(avg - target, 0.0) if not unconstrained else np.zeros_like(avg)
            f = -coh + lam * excess ** 2
            scale = 2 * lam * excess
            g_psi = -g_coh + scale[:, None, None, None, None, None] * g_avg
            g_phi, g_w = prob.pull(g_psi, big_in, wt)
            if not free_w:
                g_w = np.zeros_like(g_w)
            return f, [g_phi, g_w, scale[:, None, None] * g_v]

        out, _, _ = _stiefel.minimize_product(fg, blocks, maxiter=maxiter, gtol=1e-9, ftol=1e-12, patience=10)
        return out

    candidates = []
    # replacement F with only phi optimized: exactly separable, always feasible
    rep = [b[restarts:restarts + 1].copy() for b in blocks]
    candidates.append(run(rep, 0.0, free_w=False))
    if target > 0 or unconstrained:
        cur = blocks
        for lam in (PENALTY_SCHEDULE if not unconstrained else (0.0,)):
            cur = run(cur, lam)
        candidates.append(cur)
    cand = [np.concatenate([c[i] for c in candidates]) for i in range(3)]
    coh, avg, _ = prob.evaluate(cand, need_grad=False)

    order = np.argsort(-coh)
    chosen, check = None, None
    for k in order:
        if unconstrained:
            chosen, check = k, {"eof": None, "decomposition_average": float(avg[k]), "unconstrained": True}
            break
        rho = prob.density(cand[0][k, :, 0], cand[1][k])
        res = eof_numeric(rho, bhat, rho.shape[0] // bhat, n_starts=2 * eof_restarts,
                          rng=np.random.default_rng([seed, 4, int(k)]))
        bound = min(res.value, float(avg[k]))
        if bound <= cq12 + FEAS_TOL:
            chosen = k
            check = {"eof": res.value, "eof_converged": res.converged,
                     "decomposition_average": float(avg[k]), "unconstrained": False}
            break
    if chosen is None:  # unreachable in exact arithmetic: the replacement candidate has zero EoF
        raise RuntimeError("no feasible candidate found")
    phi = cand[0][chosen, :, 0]
    wit = EoFWitness(QuantumInputState(phi, ("A",), (prob.ref,), prob.d), cand[1][chosen], bhat)
    return BoundResult(max(float(coh[chosen]), 0.0), wit, {
        "coherent_info": float(coh[chosen]), "cq12": cq12, "b1hat_dim": bhat, "margin": margin,
        "penalty_schedule": list(PENALTY_SCHEDULE), "restarts": restarts, "seed": seed,
        "flags": [SINGLE_LETTER_FLAG], **check,
    })


# ---------------------------------------------------------------------------
# all three bounds
# ---------------------------------------------------------------------------

def relay_bounds(bc: BroadcastChannel, cq12: float, *, seed: int = 0, restarts: int = 16,
                 t_dim: int = 4, b1hat_dim: int | None = None, with_eof: bool = True) -> RelayBounds:
    df = decode_forward(bc, cq12, restarts=restarts, seed=seed)
    cs = cutset(bc, cq12, restarts=restarts, seed=seed, t_dim=t_dim)
    wit = {"decode_forward": df.witness, "cutset": cs.witness}
    ef_val = 0.0
    meta = {"seed": seed, "restarts": restarts, "t_dim": t_dim, "decode_forward": df.details,
            "cutset": cs.details, "flags": [SINGLE_LETTER_FLAG]}
    if with_eof:
        ef = eof_lower(bc, cq12, seed=seed, b1hat_dim=b1hat_dim)
        ef_val = ef.value
        wit["eof_lower"] = ef.witness
        meta["eof_lower"] = ef.details
    return RelayBounds(cq12, cs.value, df.value, ef_val, wit, meta)


def _bounds_task(args):
    bc, c, kw = args
    return relay_bounds(bc, c, **kw)


def relay_bounds_grid(bc: BroadcastChannel, cq_grid: Sequence[float], *, workers: int = 1, **kw) -> list[RelayBounds]:
    """Bounds per grid point; decode-forward witnesses are pooled across the grid."""
    tasks = [(bc, float(c), kw) for c in cq_grid]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            out = list(ex.map(_bounds_task, tasks))
    else:
        out = [_bounds_task(t) for t in tasks]
    d = bc.d_in
    model = _model(bc, ("A1", "A2"), (d, d), _DF_TERMS)
    vecs = np.array([b.witnesses["decode_forward"].vector for b in out])
    vals, _ = model.values(vecs, need_grad=False)
    for b in out:
        value, _ = _df_objective(vals, b.cq12, None)
        k = int(np.argmax(value))
        if value[k] > b.decode_forward:
            b.decode_forward = float(value[k])
            b.witnesses["decode_forward"] = QuantumInputState(vecs[k], ("A1", "A2"), (d, d), d)
            b.metadata["decode_forward"] = dict(b.metadata["decode_forward"], pooled=True,
                                                I1=float(vals[k, 0] - vals[k, 1]),
                                                I2=float(vals[k, 2] - vals[k, 3]))
    return out


def save_bounds(bounds: Sequence[RelayBounds], path: str | Path, extra: dict | None = None) -> None:
    payload = {"type": "relay_bounds_grid", "points": [b.to_dict() for b in bounds], **(extra or {})}
    jsonio.dump(payload, path)


def bounds_csv(bounds: Sequence[RelayBounds]) -> str:
    lines = ["cq12,cutset,decode_forward,eof_lower"]
    lines += [f"{b.cq12:.10g},{b.cutset:.10g},{b.decode_forward:.10g},{b.eof_lower:.10g}" for b in bounds]
    return "\n".join(lines) + "\n"
