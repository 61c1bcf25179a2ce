"""Rate regions of the broadcast channel with a conferencing link.

Classical messages (common message for both receivers at rate R0, private
message for receiver 1 at rate R1, classical link of capacity C12 from
receiver 1 to receiver 2) are described per input ensemble by

    R0      <= I(X0;B2) + C12
    R1      <= I(X1;B1|X0)
    R0 + R1 <= I(X0X1;B1)

and the region is the union over ensembles ``p(x0,x1), theta^{x0,x1}``.  Quantum
messages with a qubit link of capacity CQ12 use

    Q1      <= I(A1>B1)
    Q2      <= I(A2>B2) + CQ12
    Q1 + Q2 <= I(A1>B1) + I(A2>B2)

(inner bound) and, for the outer bound at one channel use,

    Q1 <= I(A1>B1),  Q2 <= I(A2 T>B2) + CQ12,  Q1 + Q2 <= I(A1>B1) + I(A2>B1B2).

Regions are computed by scalarization: for each weight ``mu`` the support
value ``max mu*R0 + (1-mu)*R1`` of a polytope is a minimum of three linear
forms in its bounds, which is smoothed (soft-min) and maximized by batched
Riemannian gradient ascent over all restarts at once.  The returned region is
the convex hull of the polytopes of all candidate inputs found.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import _engine, _stiefel, hull, jsonio
from .channels import BroadcastChannel, apply, stinespring
from .states import (
    DensityOperator,
    PureState,
    coherent_information,
    conditional_mutual_information,
    mutual_information,
)

DEFAULT_TAUS = (0.05, 0.01, 0.002)
TIE_BREAK = 1e-3


class ResourceGuardError(RuntimeError):
    pass


def lemma_caps(d: int) -> tuple[int, int]:
    """Sufficient alphabet sizes for the union over classical ensembles."""
    c0 = d * d + 2
    return c0, c0 * d * d + 1


def default_cards(d: int) -> tuple[int, int]:
    """Working alphabet sizes used unless overridden (well below the caps)."""
    return d + 1, d


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class InputEnsemble:
    """Joint pmf ``p(x0, x1)`` with pure input states ``theta^{x0,x1}``.

    ``states`` has shape ``(card0, card1, d)``; rows with zero probability keep
    an arbitrary unit vector.
    """

    pmf: np.ndarray
    states: np.ndarray
    enforce_caps: bool = True

    def __post_init__(self):
        p = np.asarray(self.pmf, dtype=float)
        s = np.asarray(self.states, dtype=complex)
        if p.ndim != 2 or s.shape[:2] != p.shape:
            raise ValueError("pmf must be (card0, card1) and states (card0, card1, d)")
        if np.any(p < -1e-15) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("pmf must be a probability distribution (sum within 1e-12)")
        norms = np.linalg.norm(s, axis=-1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValueError("ensemble states must be unit vectors")
        if self.enforce_caps:
            c0, c1 = lemma_caps(s.shape[2])
            if p.shape[0] > c0 or p.shape[1] > c1:
                raise ValueError(f"alphabet sizes {p.shape} exceed caps ({c0}, {c1})")
        object.__setattr__(self, "pmf", np.clip(p, 0.0, None))
        object.__setattr__(self, "states", s)

    @property
    def card0(self) -> int:
        return self.pmf.shape[0]

    @property
    def card1(self) -> int:
        return self.pmf.shape[1]

    @property
    def d(self) -> int:
        return self.states.shape[2]

    @classmethod
    def from_vector(cls, vec: np.ndarray, card0: int, card1: int, d: int, enforce_caps: bool = True) -> "InputEnsemble":
        psi = np.asarray(vec, dtype=complex).reshape(card0, card1, d)
        psi = psi / np.linalg.norm(psi)
        amp = np.linalg.norm(psi, axis=-1)
        p = amp**2
        p = p / p.sum()
        states = np.where(amp[..., None] > 1e-150, psi / np.maximum(amp, 1e-300)[..., None], 0.0)
        states[amp <= 1e-150, 0] = 1.0
        return cls(p, states, enforce_caps)

    def vector(self) -> np.ndarray:
        return (np.sqrt(self.pmf)[..., None] * self.states).ravel()

    def to_dict(self) -> dict:
        return {
            "type": "input_ensemble",
            "pmf": self.pmf.tolist(),
            "states": jsonio.encode_matrix(self.states),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InputEnsemble":
        return cls(np.asarray(d["pmf"]), jsonio.decode_matrix(d["states"]), enforce_caps=False)


@dataclass(frozen=True, eq=False)
class QuantumInputState:
    """Pure input on reference systems plus the channel input ``A'``.

    ``ref_names`` are e.g. ``("A1", "A2")`` or ``("T", "A1", "A2")``; the
    channel input is always last.
    """

    vector: np.ndarray
    ref_names: tuple[str, ...]
    ref_dims: tuple[int, ...]
    d_in: int

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=complex).ravel()
        if v.size != int(np.prod(self.ref_dims, dtype=int)) * self.d_in:
            raise ValueError("vector size does not match declared dimensions")
        n = np.linalg.norm(v)
        if abs(n - 1.0) > 1e-9:
            raise ValueError("input state must be normalized")
        object.__setattr__(self, "vector", v)
        object.__setattr__(self, "ref_names", tuple(self.ref_names))
        object.__setattr__(self, "ref_dims", tuple(int(d) for d in self.ref_dims))

    @property
    def labels(self) -> tuple[str, ...]:
        return self.ref_names + ("A'",)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.ref_dims + (self.d_in,)

    def pure(self) -> PureState:
        return PureState(self.vector, self.dims, self.labels)

    def density(self) -> DensityOperator:
        return self.pure().dm()

    def to_dict(self) -> dict:
        return {
            "type": "quantum_input",
            "vector": jsonio.encode_matrix(self.vector),
            "ref_names": list(self.ref_names),
            "ref_dims": list(self.ref_dims),
            "d_in": self.d_in,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QuantumInputState":
        return cls(jsonio.decode_matrix(d["vector"]), tuple(d["ref_names"]), tuple(d["ref_dims"]), int(d["d_in"]))


def _witness_from_dict(d: dict):
    if d["type"] == "input_ensemble":
        return InputEnsemble.from_dict(d)
    return QuantumInputState.from_dict(d)


@dataclass(frozen=True)
class RatePoint:
    x: float
    y: float
    witness: int


@dataclass(eq=False)
class RateRegion:
    """Convex, downward-closed rate region in the positive quadrant.

    ``hull`` holds counterclockwise vertices; ``bounds[i]`` are the three
    polytope right-hand sides of ``witnesses[i]``.
    """

    kind: str
    conferencing: float
    axes: tuple[str, str]
    hull: np.ndarray
    points: list[RatePoint]
    witnesses: list
    bounds: np.ndarray
    metadata: dict[str, Any] = field(default_factory=dict)

    def polygon(self):
        return hull.geometry(self.hull)

    def contains(self, point: Sequence[float], tol: float = 1e-9) -> bool:
        return hull.excess(np.array([point], dtype=float), self.hull) <= tol

    def support(self, direction: Sequence[float]) -> float:
        return hull.support(self.hull, direction)

    def max_along(self, axis: int) -> float:
        return float(self.hull[:, axis].max())

    def scaled(self, factor: float) -> "RateRegion":
        return RateRegion(
            self.kind, self.conferencing, self.axes, self.hull * factor,
            [RatePoint(p.x * factor, p.y * factor, p.witness) for p in self.points],
            self.witnesses, self.bounds * factor, dict(self.metadata),
        )

    def to_dict(self) -> dict:
        return {
            "schema": jsonio.SCHEMA,
            "type": "rate_region",
            "kind": self.kind,
            "conferencing": self.conferencing,
            "axes": list(self.axes),
            "hull": self.hull.tolist(),
            "points": [[p.x, p.y, p.witness] for p in self.points],
            "witnesses": [w.to_dict() for w in self.witnesses],
            "bounds": np.asarray(self.bounds).tolist(),
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RateRegion":
        if d.get("type") != "rate_region":
            raise ValueError("not a rate region document")
        return cls(
            d["kind"], float(d["conferencing"]), tuple(d["axes"]),
            np.asarray(d["hull"], dtype=float).reshape(-1, 2),
            [RatePoint(float(x), float(y), int(w)) for x, y, w in d["points"]],
            [_witness_from_dict(w) for w in d["witnesses"]],
            np.asarray(d["bounds"], dtype=float).reshape(-1, 3),
            d.get("metadata", {}),
        )

    def save(self, path) -> None:
        jsonio.dump(self.to_dict(), path)

    @classmethod
    def load(cls, path) -> "RateRegion":
        return cls.from_dict(jsonio.load(path))

    def to_csv(self) -> str:
        lines = [f"{self.axes[0]},{self.axes[1]}"]
        lines += [f"{x:.12g},{y:.12g}" for x, y in self.hull]
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# direct (generic) evaluation through density operators
# ---------------------------------------------------------------------------

def cq_state(ensemble: InputEnsemble, bc: BroadcastChannel) -> DensityOperator:
    """``sum p(x0,x1) |x0><x0| (x) |x1><x1| (x) N(theta^{x0,x1})`` on X0 X1 B1 B2."""
    if ensemble.d != bc.d_in:
        raise ValueError(f"ensemble dim {ensemble.d} != channel input dim {bc.d_in}")
    c0, c1 = ensemble.card0, ensemble.card1
    dout = bc.channel.d_out
    big = np.zeros((c0 * c1 * dout, c0 * c1 * dout), dtype=complex)
    for x0 in range(c0):
        for x1 in range(c1):
            th = ensemble.states[x0, x1]
            out = bc.channel(np.outer(th, th.conj()))
            k = x0 * c1 + x1
            big[k * dout:(k + 1) * dout, k * dout:(k + 1) * dout] = ensemble.pmf[x0, x1] * out
    dims = (c0, c1) + bc.channel.out_dims
    return DensityOperator(big, dims, ("X0", "X1", "B1", "B2"))


def eval_classical_point(ensemble: InputEnsemble, bc: BroadcastChannel, c12: float) -> dict:
    rho = cq_state(ensemble, bc)
    return {
        "bound_r0": mutual_information(rho, ["X0"], ["B2"]) + c12,
        "bound_r1": conditional_mutual_information(rho, ["X1"], ["B1"], ["X0"]),
        "bound_sum": mutual_information(rho, ["X0", "X1"], ["B1"]),
    }


def _output_state(state: QuantumInputState, bc: BroadcastChannel) -> DensityOperator:
    if state.d_in != bc.d_in:
        raise ValueError(f"input dim {state.d_in} != channel input dim {bc.d_in}")
    return apply(bc.channel, state.density(), on=["A'"])


def quantum_inner_point(state: QuantumInputState, bc: BroadcastChannel, cq12: float) -> dict:
    rho = _output_state(state, bc)
    i1 = coherent_information(rho, ["A1"], ["B1"])
    i2 = coherent_information(rho, ["A2"], ["B2"])
    return {"bound_q1": i1, "bound_q2": i2 + cq12, "bound_sum": i1 + i2, "I1": i1, "I2": i2}


def quantum_outer_point(state: QuantumInputState, bc: BroadcastChannel, cq12: float) -> dict:
    rho = _output_state(state, bc)
    a2t = ["A2", "T"] if "T" in state.ref_names else ["A2"]
    i1 = coherent_information(rho, ["A1"], ["B1"])
    j2 = coherent_information(rho, a2t, ["B2"])
    k = coherent_information(rho, ["A2"], ["B1", "B2"])
    kt = coherent_information(rho, a2t, ["B1", "B2"])
    return {"bound_q1": i1, "bound_q2": j2 + cq12, "bound_sum": i1 + k, "bound_sum_with_T": i1 + kt}


def corner_points(i1: float, i2: float, cq12: float, delta: float = 0.0) -> tuple[tuple[float, float], tuple[float, float]]:
    """The two rate pairs whose time sharing spans the inner-bound polytope face."""
    return (i1 - delta, i2 - delta), (i1 - cq12 - delta, i2 + cq12 - delta)


# ---------------------------------------------------------------------------
# scalarization
# ---------------------------------------------------------------------------

def support_rows(mu: float, form: str = "conf") -> np.ndarray:
    """Rows ``C`` with ``max_{R in P} mu*R0 + (1-mu)*R1 = min_k C[k] @ (a, b, c)``.

    ``form="conf"``:  P = {R0 <= a, R1 <= b, R0 + R1 <= c}.
    ``form="superposition"``:  P = {R0 <= a, R0 + R1 <= a + b, R0 + R1 <= c}.
    Valid when a, b, c >= 0 (LP duality; rows are the dual vertices).
    """
    nu = 1.0 - mu
    if form == "conf":
        if mu >= nu:
            return np.array([[mu, nu, 0.0], [mu - nu, 0.0, nu], [0.0, 0.0, mu]])
        return np.array([[mu, nu, 0.0], [0.0, nu - mu, mu], [0.0, 0.0, nu]])
    if form == "superposition":
        if mu >= nu:
            return np.array([[mu, nu, 0.0], [mu - nu, 0.0, nu], [mu, mu, 0.0], [0.0, 0.0, mu]])
        # repeated rows keep the row count fixed so weights can share a batch
        return np.array([[nu, nu, 0.0], [0.0, 0.0, nu], [0.0, 0.0, nu], [0.0, 0.0, nu]])
    raise ValueError(f"unknown form {form!r}")


def polytope(bounds: Sequence[float], form: str = "conf") -> np.ndarray:
    a, b, c = (max(float(v), 0.0) for v in bounds)
    if form == "conf":
        return hull.triangle_polytope(a, b, c)
    return hull.polytope_vertices([(1.0, 0.0, a), (1.0, 1.0, a + b), (1.0, 1.0, c)])


def weight_grid(n: int = 33) -> np.ndarray:
    """``n`` weights on [0, 1]; the endpoints carry a small tie-break weight
    on the other coordinate so flat Pareto segments are resolved."""
    mu = np.linspace(0.0, 1.0, n)
    mu[0], mu[-1] = TIE_BREAK, 1.0 - TIE_BREAK
    return mu


@dataclass
class _Problem:
    """Model + map from its raw values to the three polytope bounds."""

    model: Any
    lin: np.ndarray  # raw = values @ lin.T
    offset: np.ndarray  # added to bounds (e.g. C12 on the first)
    clip: tuple[bool, bool, bool]  # which raw quantities are clipped at zero
    combine: np.ndarray  # bounds = combine @ clipped_raw + offset
    form: str = "conf"

    def raw(self, vec, need_grad=True):
        vals, jac = self.model.values(vec, need_grad)
        raw = vals @ self.lin.T
        rjac = np.einsum("rt,std->srd", self.lin, jac) if need_grad else None
        return raw, rjac

    def bounds(self, raw: np.ndarray, tau: float | None):
        nr = raw.shape[-1]
        d = np.ones_like(raw)
        r = raw.copy()
        for i in range(nr):
            if self.clip[i]:
                if tau is None:
                    r[:, i] = np.maximum(raw[:, i], 0.0)
                else:
                    r[:, i], d[:, i] = _engine.softplus(raw[:, i], tau)
        b = r @ self.combine.T + self.offset
        db = self.combine[None] * d[:, None, :]
        return b, db


def _random_starts(seed: int, weight_index: int, n: int, dim: int) -> np.ndarray:
    out = np.empty((n, dim), dtype=complex)
    for r in range(n):
        rng = np.random.default_rng([seed, weight_index, r])
        z = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        out[r] = z / np.linalg.norm(z)
    return out


def _solve_chunk(args):
    problem, mus, weight_ids, restarts, seed, taus, maxiter, extra = args
    starts, rows = [], []
    for mu, wi in zip(mus, weight_ids):
        s = _random_starts(seed, wi, restarts, problem.model.dim)
        if extra is not None and len(extra):
            s = np.concatenate([extra, s])
        starts.append(s)
        rows.append(np.broadcast_to(support_rows(mu, problem.form), (len(s),) + support_rows(mu, problem.form).shape))
    vec = np.concatenate(starts)[:, :, None]
    rows = np.concatenate(rows)
    owner = np.concatenate([[wi] * len(s) for wi, s in zip(weight_ids, starts)])

    for tau in taus:

        def fg(us, idx, tau=tau):
            raw, rjac = problem.raw(us[0][..., 0])
            b, db = problem.bounds(raw, tau)
            lin = np.einsum("skj,sj->sk", rows[idx], b)
            val, w = _engine.softmin(lin, tau)
            coef = np.einsum("sk,skj,sjr->sr", w, rows[idx], db)
            g = np.einsum("sr,srd->sd", coef, rjac)
            return -val, [-g[..., None]]

        (vec,), _, _ = _stiefel.minimize_product(
            fg, [vec], maxiter=maxiter, gtol=1e-9, ftol=1e-12, patience=10, indexed=True
        )
    final = vec[..., 0]
    raw, _ = problem.raw(final, need_grad=False)
    b, _ = problem.bounds(raw, None)
    value = np.min(np.einsum("skj,sj->sk", rows, b), axis=-1)
    return final, raw, b, value, owner


def _run(problem: _Problem, mus, restarts, seed, taus, maxiter, workers=1, extra=None, chunk=11):
    """Optimize every (weight, restart) pair; chunks are fixed so the result
    does not depend on ``workers``."""
    ids = list(range(len(mus)))
    tasks = [
        (problem, list(mus[i:i + chunk]), ids[i:i + chunk], restarts, seed, tuple(taus), maxiter, extra)
        for i in range(0, len(mus), chunk)
    ]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_solve_chunk, tasks))
    else:
        results = [_solve_chunk(t) for t in tasks]
    return tuple(np.concatenate([r[i] for r in results]) for i in range(5))


def _assemble(kind, conferencing, axes, form, vecs, bounds, values, owner, mus, make_witness, metadata):
    polys = [polytope(b, form) for b in bounds]
    hv = hull.union_hull(polys)
    keep: set[int] = set()
    diag = []
    for wi, mu in enumerate(mus):
        idx = np.flatnonzero(owner == wi)
        if idx.size == 0:
            continue
        best = int(idx[np.argmax(values[idx])])
        keep.add(best)
        diag.append({
            "mu": float(mu),
            "value": float(values[best]),
            "restarts_within_1e-4": int(np.sum(values[idx] >= values[best] - 1e-4)),
            "n_restarts": int(idx.size),
        })
    # one witness per hull vertex (lowest index attaining it)
    owners = {}
    for i, poly in enumerate(polys):
        for v in poly:
            dist = np.linalg.norm(hv - v, axis=1)
            j = int(np.argmin(dist))
            if dist[j] < 1e-9 and j not in owners:
                owners[j] = i
    keep.update(owners.values())
    order = sorted(keep)
    witnesses = [make_witness(vecs[i]) for i in order]
    points = [RatePoint(float(v[0]), float(v[1]), n) for n, i in enumerate(order) for v in polys[i]]
    meta = dict(metadata)
    meta["diagnostics"] = diag
    meta["n_candidates"] = int(len(vecs))
    return RateRegion(kind, float(conferencing), axes, hv, points, witnesses, np.asarray(bounds)[order], meta)


def _opt_meta(n_weights, restarts, seed, taus, maxiter, **extra) -> dict:
    meta = {
        "optimizer": "batched Riemannian gradient ascent on soft-min scalarization",
        "n_weights": n_weights,
        "restarts": restarts,
        "seed": seed,
        "taus": list(taus),
        "maxiter": maxiter,
        "tie_break": TIE_BREAK,
    }
    meta.update(extra)
    return meta


def _pad_ensemble(ens: InputEnsemble, card0: int, card1: int) -> np.ndarray:
    if ens.card0 > card0 or ens.card1 > card1:
        raise ValueError("warm-start ensemble larger than working alphabet")
    psi = np.zeros((card0, card1, ens.d), dtype=complex)
    psi[: ens.card0, : ens.card1] = np.sqrt(ens.pmf)[..., None] * ens.states
    return psi.ravel()


def _ensemble_problem(bc: BroadcastChannel, c12: float, card0: int, card1: int, form: str) -> _Problem:
    model = _engine.EnsembleModel(bc.marginal1.kraus, bc.marginal2.kraus, card0, card1)
    return _Problem(model, np.eye(3), np.array([c12, 0.0, 0.0]), (False, False, False), np.eye(3), form)


def _resolve_cards(bc, card0, card1, enforce_caps):
    d = bc.d_in
    c0, c1 = default_cards(d)
    card0 = c0 if card0 in (None, "auto") else int(card0)
    card1 = c1 if card1 in (None, "auto") else int(card1)
    cap0, cap1 = lemma_caps(d)
    if enforce_caps and (card0 > cap0 or card1 > cap1):
        raise ValueError(f"alphabet sizes ({card0}, {card1}) exceed caps ({cap0}, {cap1})")
    return card0, card1


def _classical_candidates(bc, c12, card0, card1, n_weights, restarts, seed, taus, maxiter, workers, warm_start, form):
    problem = _ensemble_problem(bc, c12, card0, card1, form)
    extra = None
    if warm_start:
        extra = np.array([_pad_ensemble(w, card0, card1) for w in warm_start])
    mus = weight_grid(n_weights)
    vecs, raw, bounds, values, owner = _run(problem, mus, restarts, seed, taus, maxiter, workers, extra)
    return mus, vecs, raw, bounds, values, owner


def classical_region(
    bc: BroadcastChannel,
    c12: float,
    *,
    card0=None,
    card1=None,
    n_weights: int = 33,
    restarts: int = 8,
    seed: int = 0,
    taus: Sequence[float] = DEFAULT_TAUS,
    maxiter: int = 200,
    workers: int = 1,
    warm_start: Sequence[InputEnsemble] | None = None,
    enforce_caps: bool = True,
) -> RateRegion:
    """Classical conferencing region of ``bc`` (always tagged ``inner``).

    ``card0``/``card1`` default to ``(d + 1, d)``; values above the sufficient
    caps are rejected unless ``enforce_caps=False``.
    """
    if c12 < 0:
        raise ValueError("C12 must be nonnegative")
    card0, card1 = _resolve_cards(bc, card0, card1, enforce_caps)
    mus, vecs, raw, bounds, values, owner = _classical_candidates(
        bc, c12, card0, card1, n_weights, restarts, seed, taus, maxiter, workers, warm_start, "conf"
    )
    meta = _opt_meta(n_weights, restarts, seed, taus, maxiter, card0=card0, card1=card1,
                     capacity_single_letter=bool(bc.is_hadamard))
    d = bc.d_in
    return _assemble("inner", c12, ("R0", "R1"), "conf", vecs, bounds, values, owner, mus,
                     lambda v: InputEnsemble.from_vector(v, card0, card1, d, enforce_caps), meta)


def classical_region_sweep(bc: BroadcastChannel, c12_values: Sequence[float], **kw) -> list[RateRegion]:
    """Regions for several C12 values sharing one pool of candidate ensembles.

    The bounds of an ensemble depend on C12 only through the additive offset on
    the R0 bound, so every candidate found at any C12 is valid at all of them;
    pooling makes the regions nested exactly.
    """
    card0, card1 = _resolve_cards(bc, kw.pop("card0", None), kw.pop("card1", None), kw.get("enforce_caps", True))
    enforce = kw.pop("enforce_caps", True)
    opts = dict(n_weights=33, restarts=8, seed=0, taus=DEFAULT_TAUS, maxiter=200, workers=1, warm_start=None)
    opts.update(kw)
    pool_vec, pool_raw, runs = [], [], []
    for c12 in c12_values:
        mus, vecs, raw, _, _, owner = _classical_candidates(
            bc, c12, card0, card1, opts["n_weights"], opts["restarts"], opts["seed"], opts["taus"],
            opts["maxiter"], opts["workers"], opts["warm_start"], "conf",
        )
        runs.append((len(np.concatenate(pool_vec)) if pool_vec else 0, len(vecs), mus))
        pool_vec.append(vecs)
        pool_raw.append(raw)
    vecs = np.concatenate(pool_vec)
    raw = np.concatenate(pool_raw)
    d = bc.d_in
    regions = []
    for c12, (start, count, mus) in zip(c12_values, runs):
        bounds = raw + np.array([c12, 0.0, 0.0])
        rows = np.array([support_rows(m) for m in mus])
        owner = np.full(len(vecs), -1)
        owner[start:start + count] = np.repeat(np.arange(len(mus)), count // len(mus))
        values = np.full(len(vecs), -np.inf)
        own = np.arange(start, start + count)
        values[own] = np.min(np.einsum("skj,sj->sk", rows[owner[own]], bounds[own]), axis=-1)
        meta = _opt_meta(opts["n_weights"], opts["restarts"], opts["seed"], opts["taus"], opts["maxiter"],
                         card0=card0, card1=card1, capacity_single_letter=bool(bc.is_hadamard),
                         pooled_over_c12=list(map(float, c12_values)))
        regions.append(_assemble("inner", c12, ("R0", "R1"), "conf", vecs, bounds, values, owner, mus,
                                 lambda v: InputEnsemble.from_vector(v, card0, card1, d, enforce), meta))
    return regions


def no_conferencing_region(bc: BroadcastChannel, **kw) -> RateRegion:
    """Region without conferencing in its superposition-coding form

        R0 <= I(X0;B2),  R0 + R1 <= I(X0;B2) + I(X1;B1|X0),  R0 + R1 <= I(X0X1;B1),

    optimized by the same search; final bounds of every candidate are
    recomputed through :func:`eval_classical_point` (density operators).
    """
    card0, card1 = _resolve_cards(bc, kw.pop("card0", None), kw.pop("card1", None), kw.get("enforce_caps", True))
    enforce = kw.pop("enforce_caps", True)
    opts = dict(n_weights=33, restarts=8, seed=0, taus=DEFAULT_TAUS, maxiter=200, workers=1, warm_start=None)
    opts.update(kw)
    mus, vecs, _, _, _, owner = _classical_candidates(
        bc, 0.0, card0, card1, opts["n_weights"], opts["restarts"], opts["seed"], opts["taus"],
        opts["maxiter"], opts["workers"], opts["warm_start"], "superposition",
    )
    d = bc.d_in
    ens = [InputEnsemble.from_vector(v, card0, card1, d, enforce) for v in vecs]
    bounds = np.array([[e["bound_r0"], e["bound_r1"], e["bound_sum"]]
                       for e in (eval_classical_point(w, bc, 0.0) for w in ens)])
    rows = [support_rows(m, "superposition") for m in mus]
    values = np.array([np.min(rows[o] @ np.maximum(b, 0.0)) for o, b in zip(owner, bounds)])
    meta = _opt_meta(opts["n_weights"], opts["restarts"], opts["seed"], opts["taus"], opts["maxiter"],
                     card0=card0, card1=card1, form="superposition (no conferencing)",
                     evaluation="density-operator entropies")
    return _assemble("inner", 0.0, ("R0", "R1"), "superposition", vecs, bounds, values, owner, mus,
                     lambda v: InputEnsemble.from_vector(v, card0, card1, d, enforce), meta)


def product_ensemble(a: InputEnsemble, b: InputEnsemble) -> InputEnsemble:
    """Ensemble for two channel uses with independent symbols."""
    pmf = np.einsum("ij,kl->ikjl", a.pmf, b.pmf).reshape(a.card0 * b.card0, a.card1 * b.card1)
    st = np.einsum("ijd,kle->ikjlde", a.states, b.states).reshape(a.card0 * b.card0, a.card1 * b.card1, a.d * b.d)
    return InputEnsemble(pmf / pmf.sum(), st, enforce_caps=False)


def multi_letter_classical_region(bc: BroadcastChannel, c12: float, k: int = 1, **kw) -> RateRegion:
    """Region of ``bc^{(x)k}`` normalized per channel use (``k`` in {1, 2}).

    For ``k = 2`` the search is warm-started with product ensembles built from
    the single-letter witnesses, so the result contains the ``k = 1`` region.
    """
    if k not in (1, 2):
        raise ResourceGuardError("multi-letter evaluation supports k in {1, 2}")
    if k == 1:
        return classical_region(bc, c12, **kw)
    if bc.d_in > 2:
        raise ResourceGuardError("k = 2 requires channel input dimension <= 2")
    base = kw.pop("base_region", None) or classical_region(bc, c12, **kw)
    warm = [product_ensemble(w, w) for w in base.witnesses]
    card0 = max(default_cards(bc.d_in**2)[0], max(w.card0 for w in warm))
    card1 = max(default_cards(bc.d_in**2)[1], max(w.card1 for w in warm))
    opts = dict(kw)
    opts.update(card0=card0, card1=card1, warm_start=warm, enforce_caps=False)
    region = classical_region(bc.tensor_power(2), 2.0 * c12, **opts)
    out = region.scaled(0.5)
    out.conferencing = float(c12)
    out.metadata["letters"] = 2
    return out


# ---------------------------------------------------------------------------
# quantum regions
# ---------------------------------------------------------------------------

_INNER_TERMS = (("B1",), ("A1", "B1"), ("B2",), ("A2", "B2"))
_OUTER_TERMS = (("B1",), ("A1", "B1"), ("B2",), ("A2", "T", "B2"), ("B1", "B2"), ("A2", "B1", "B2"),
                ("A2", "T", "B1", "B2"))


def _pure_model(bc: BroadcastChannel, names, dims, terms):
    st = stinespring(bc.channel)
    return _engine.PureModel(st.isometry, tuple(names), tuple(dims), (bc.d1, bc.d2), st.env_dim, terms)


def _quantum_inner_problem(bc, cq12, ref_dims):
    model = _pure_model(bc, ("A1", "A2"), ref_dims, _INNER_TERMS)
    lin = np.array([[1.0, -1.0, 0.0, 0.0], [0.0, 0.0, 1.0, -1.0]])
    combine = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    return _Problem(model, lin, np.array([0.0, cq12, 0.0]), (True, True), combine)


def quantum_inner_region(
    bc: BroadcastChannel,
    cq12: float,
    *,
    ref_dims: Sequence[int] | None = None,
    n_weights: int = 33,
    restarts: int = 8,
    seed: int = 0,
    taus: Sequence[float] = DEFAULT_TAUS,
    maxiter: int = 200,
    workers: int = 1,
    warm_start: Sequence[QuantumInputState] | None = None,
) -> RateRegion:
    """Inner bound for quantum messages with a qubit link of capacity ``cq12``.

    Negative coherent informations are replaced by zero (the corresponding
    reference system can be discarded).  ``metadata["corners"]`` holds the two
    corner points of every stored witness, computed from unclipped values.
    """
    if cq12 < 0:
        raise ValueError("CQ12 must be nonnegative")
    d = bc.d_in
    ref_dims = tuple(ref_dims) if ref_dims is not None else (d, d)
    problem = _quantum_inner_problem(bc, cq12, ref_dims)
    extra = np.array([w.vector for w in warm_start]) if warm_start else None
    mus = weight_grid(n_weights)
    vecs, raw, bounds, values, owner = _run(problem, mus, restarts, seed, taus, maxiter, workers, extra)
    meta = _opt_meta(n_weights, restarts, seed, taus, maxiter, ref_dims=list(ref_dims))
    region = _assemble("inner", cq12, ("Q1", "Q2"), "conf", vecs, bounds, values, owner, mus,
                       lambda v: QuantumInputState(v, ("A1", "A2"), ref_dims, d), meta)
    corners = []
    for w in region.witnesses:
        r, _ = problem.raw(w.vector[None], need_grad=False)
        i1, i2 = float(r[0, 0]), float(r[0, 1])
        corners.append([list(c) for c in corner_points(i1, i2, cq12)])
    region.metadata["corners"] = corners
    return region


def _embed_t(state: QuantumInputState, t_dim: int) -> np.ndarray:
    if state.ref_names == ("T", "A1", "A2"):
        return state.vector
    e0 = np.zeros(t_dim)
    e0[0] = 1.0
    return np.kron(e0, state.vector)


def quantum_outer_region_single_letter(
    bc: BroadcastChannel,
    cq12: float,
    *,
    t_dim: int = 4,
    ref_dims: Sequence[int] | None = None,
    t_in_sum: bool = False,
    n_weights: int = 33,
    restarts: int = 8,
    seed: int = 0,
    taus: Sequence[float] = DEFAULT_TAUS,
    maxiter: int = 200,
    workers: int = 1,
    warm_start: Sequence[QuantumInputState] | None = None,
) -> RateRegion:
    """Outer bound evaluated at one channel use over pure ``T A1 A2 A'`` inputs.

    ``T`` is capped at ``t_dim``; with ``t_in_sum`` the sum bound uses
    ``I(A2 T>B1 B2)`` instead of ``I(A2>B1 B2)``.  The alternative sum bound of
    every stored witness is recorded either way.  Warm starts may be inner
    witnesses (embedded with ``T`` in a fixed pure state).
    """
    if cq12 < 0:
        raise ValueError("CQ12 must be nonnegative")
    d = bc.d_in
    ref_dims = tuple(ref_dims) if ref_dims is not None else (d, d)
    dims = (t_dim,) + ref_dims
    model = _pure_model(bc, ("T", "A1", "A2"), dims, _OUTER_TERMS)
    lin = np.array([
        [1.0, -1.0, 0, 0, 0, 0, 0],
        [0, 0, 1.0, -1.0, 0, 0, 0],
        [0, 0, 0, 0, 1.0, -1.0, 0],
        [0, 0, 0, 0, 1.0, 0, -1.0],
    ])
    csum = [1.0, 0.0, 0.0, 1.0] if t_in_sum else [1.0, 0.0, 1.0, 0.0]
    combine = np.array([[1.0, 0, 0, 0], [0, 1.0, 0, 0], csum])
    problem = _Problem(model, lin, np.array([0.0, cq12, 0.0]), (True, True, True, True), combine)
    extra = np.array([_embed_t(w, t_dim) for w in warm_start]) if warm_start else None
    mus = weight_grid(n_weights)
    vecs, raw, bounds, values, owner = _run(problem, mus, restarts, seed, taus, maxiter, workers, extra)
    meta = _opt_meta(
        n_weights, restarts, seed, taus, maxiter, ref_dims=list(ref_dims), t_dim=t_dim, t_in_sum=t_in_sum,
        flags=["heuristic cap on T", "single-letter evaluation of a regularized expression"],
    )
    region = _assemble("outer", cq12, ("Q1", "Q2"), "conf", vecs, bounds, values, owner, mus,
                       lambda v: QuantumInputState(v, ("T", "A1", "A2"), dims, d), meta)
    alt_csum = [1.0, 0.0, 1.0, 0.0] if t_in_sum else [1.0, 0.0, 0.0, 1.0]
    alt = []
    for w in region.witnesses:
        r, _ = problem.raw(w.vector[None], need_grad=False)
        rc = np.maximum(r[0], 0.0)
        alt.append([float(rc[0]), float(rc[1] + cq12), float(np.dot(alt_csum, rc))])
    region.metadata["alternative_sum_bound"] = "I(A2>B1B2)" if t_in_sum else "I(A2 T>B1B2)"
    region.metadata["alternative_bounds"] = alt
    region.metadata["alternative_hull"] = hull.union_hull([polytope(b) for b in alt]).tolist()
    return region
