"""Kraus channels, broadcast channels and their structural checks."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Sequence

import numpy as np
from scipy.optimize import least_squares

from . import _stiefel, jsonio
from .states import DensityOperator, permute_factors, trace_distance

TOL_TP = 1e-9
KRAUS_TRIM = 1e-10


class ChannelError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """CPTP map ``rho -> sum_j K_j rho K_j^H``; ``kraus`` has shape (n, d_out, d_in)."""

    kraus: np.ndarray
    in_dims: tuple[int, ...]
    out_dims: tuple[int, ...]
    in_labels: tuple[str, ...] = ("A",)
    out_labels: tuple[str, ...] = ("B",)

    def __post_init__(self):
        k = np.array(self.kraus, dtype=complex)
        if k.ndim == 2:
            k = k[None]
        k.setflags(write=False)
        object.__setattr__(self, "kraus", k)
        for name in ("in_dims", "out_dims"):
            object.__setattr__(self, name, tuple(int(d) for d in getattr(self, name)))
        for name in ("in_labels", "out_labels"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if len(self.in_dims) != len(self.in_labels) or len(self.out_dims) != len(self.out_labels):
            raise ChannelError("dims/labels length mismatch")
        if k.shape[1:] != (self.d_out, self.d_in):
            raise ChannelError(f"Kraus shape {k.shape[1:]} != ({self.d_out}, {self.d_in})")
        gram = np.einsum("koi,koj->ij", k.conj(), k)
        if np.max(np.abs(gram - np.eye(self.d_in))) > TOL_TP:
            raise ChannelError("Kraus operators are not trace preserving")

    @property
    def d_in(self) -> int:
        return int(np.prod(self.in_dims, dtype=int))

    @property
    def d_out(self) -> int:
        return int(np.prod(self.out_dims, dtype=int))

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        """Apply to a raw matrix (or a stack of them)."""
        return np.einsum("koi,...ij,kpj->...op", self.kraus, rho, self.kraus.conj())

    def adjoint(self, x: np.ndarray) -> np.ndarray:
        return np.einsum("koi,...op,kpj->...ij", self.kraus.conj(), x, self.kraus)

    def superop(self) -> np.ndarray:
        """Row-major vectorization: vec(N(rho)) = S @ vec(rho)."""
        return np.einsum("koi,kpj->opij", self.kraus, self.kraus.conj()).reshape(
            self.d_out**2, self.d_in**2
        )

    def choi(self) -> np.ndarray:
        """Choi matrix on (in, out) with unnormalized |Omega>."""
        return np.einsum("koi,kpj->iojp", self.kraus, self.kraus.conj()).reshape(
            self.d_in * self.d_out, self.d_in * self.d_out
        )

    def with_labels(self, in_labels=None, out_labels=None) -> "QuantumChannel":
        return QuantumChannel(
            self.kraus,
            self.in_dims,
            self.out_dims,
            tuple(in_labels) if in_labels else self.in_labels,
            tuple(out_labels) if out_labels else self.out_labels,
        )

    def to_dict(self) -> dict:
        return {
            "schema": jsonio.SCHEMA,
            "type": "quantum_channel",
            "kraus": [jsonio.encode_matrix(k) for k in self.kraus],
            "in_dims": list(self.in_dims),
            "out_dims": list(self.out_dims),
            "in_labels": list(self.in_labels),
            "out_labels": list(self.out_labels),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QuantumChannel":
        kraus = np.stack([jsonio.decode_matrix(k) for k in d["kraus"]])
        return cls(kraus, tuple(d["in_dims"]), tuple(d["out_dims"]), tuple(d["in_labels"]), tuple(d["out_labels"]))


@dataclass(frozen=True, eq=False)
class IsometricExtension:
    """``isometry`` maps the input into (output x environment), environment last."""

    isometry: np.ndarray
    env_dim: int
    out_dims: tuple[int, ...]


def trimmed(ch: QuantumChannel) -> QuantumChannel:
    """Minimal Kraus set (number of operators = Choi rank)."""
    n = ch.kraus.shape[0]
    stacked = ch.kraus.reshape(n, -1)
    _, s, vh = np.linalg.svd(stacked, full_matrices=False)
    keep = s > KRAUS_TRIM
    if not keep.any():
        keep[0] = True
    k = (s[keep, None] * vh[keep]).reshape(-1, ch.d_out, ch.d_in)
    return QuantumChannel(k, ch.in_dims, ch.out_dims, ch.in_labels, ch.out_labels)


def apply(ch: QuantumChannel, rho: DensityOperator, on: Sequence[str] | None = None) -> DensityOperator:
    """Apply ``ch`` to the whole of ``rho`` or to the factors named in ``on``.

    With ``on`` the untouched factors keep their order and the channel's output
    factors are appended after them.
    """
    if on is None:
        if rho.dim != ch.d_in:
            raise ChannelError(f"state dim {rho.dim} != channel input dim {ch.d_in}")
        out = ch(rho.matrix)
        return DensityOperator(0.5 * (out + out.conj().T), ch.out_dims, ch.out_labels)
    on = [on] if isinstance(on, str) else list(on)
    idx = [rho.index(s) for s in on]
    rest = [i for i in range(len(rho.dims)) if i not in idx]
    if int(np.prod([rho.dims[i] for i in idx], dtype=int)) != ch.d_in:
        raise ChannelError("dimension mismatch between targeted factors and channel input")
    m = permute_factors(rho.matrix, rho.dims, rest + idx)
    dr = int(np.prod([rho.dims[i] for i in rest], dtype=int))
    t = m.reshape(dr, ch.d_in, dr, ch.d_in)
    out = np.einsum("koi,aibj,kpj->aobp", ch.kraus, t, ch.kraus.conj())
    d = dr * ch.d_out
    out = out.reshape(d, d)
    dims = tuple(rho.dims[i] for i in rest) + ch.out_dims
    labels = tuple(rho.labels[i] for i in rest) + ch.out_labels
    return DensityOperator(0.5 * (out + out.conj().T), dims, labels)


def compose(after: QuantumChannel, before: QuantumChannel) -> QuantumChannel:
    if after.d_in != before.d_out:
        raise ChannelError("cannot compose: dimension mismatch")
    k = np.einsum("aob,cbi->acoi", after.kraus, before.kraus).reshape(-1, after.d_out, before.d_in)
    return trimmed(QuantumChannel(k, before.in_dims, after.out_dims, before.in_labels, after.out_labels))


def trace_out(ch: QuantumChannel, keep: Sequence[str]) -> QuantumChannel:
    """Channel followed by a partial trace onto the output factors in ``keep``."""
    keep = [keep] if isinstance(keep, str) else list(keep)
    ki = [ch.out_labels.index(s) for s in keep]
    di = [i for i in range(len(ch.out_dims)) if i not in ki]
    n = ch.kraus.shape[0]
    t = ch.kraus.reshape((n,) + ch.out_dims + (ch.d_in,))
    t = t.transpose([0] + [1 + i for i in di] + [1 + i for i in ki] + [len(ch.out_dims) + 1])
    dk = int(np.prod([ch.out_dims[i] for i in ki], dtype=int))
    dd = int(np.prod([ch.out_dims[i] for i in di], dtype=int))
    k = t.reshape(n * dd, dk, ch.d_in)
    return trimmed(
        QuantumChannel(k, ch.in_dims, tuple(ch.out_dims[i] for i in ki), ch.in_labels, tuple(ch.out_labels[i] for i in ki))
    )


def stinespring(ch: QuantumChannel) -> IsometricExtension:
    k = trimmed(ch).kraus
    n = k.shape[0]
    v = k.transpose(1, 0, 2).reshape(ch.d_out * n, ch.d_in)
    return IsometricExtension(v, n, ch.out_dims)


def complementary(ch: QuantumChannel, env_label: str = "E") -> QuantumChannel:
    k = trimmed(ch).kraus
    n = k.shape[0]
    comp = k.transpose(1, 0, 2)
    return trimmed(QuantumChannel(comp, ch.in_dims, (n,), ch.in_labels, (env_label,)))


def channel_from_isometry(v: np.ndarray, d_out: int, in_labels=("A",), out_labels=("B",)) -> QuantumChannel:
    env = v.shape[0] // d_out
    k = v.reshape(d_out, env, v.shape[1]).transpose(1, 0, 2)
    return QuantumChannel(k, (v.shape[1],), (d_out,), in_labels, out_labels)


def is_cptp(ch: QuantumChannel, tol: float = 1e-8) -> bool:
    gram = np.einsum("koi,koj->ij", ch.kraus.conj(), ch.kraus)
    return bool(np.max(np.abs(gram - np.eye(ch.d_in))) <= tol)


# ---------------------------------------------------------------------------
# point-to-point builders
# ---------------------------------------------------------------------------

def identity_channel(d: int, in_label: str = "A", out_label: str = "B") -> QuantumChannel:
    return QuantumChannel(np.eye(d)[None], (d,), (d,), (in_label,), (out_label,))


def replacement_channel(d_in: int, sigma: np.ndarray, in_label: str = "A", out_label: str = "B") -> QuantumChannel:
    """Discard the input and prepare ``sigma``."""
    lam, vec = np.linalg.eigh(sigma)
    ks = []
    for l, v in zip(lam, vec.T):
        if l > KRAUS_TRIM:
            for i in range(d_in):
                ks.append(np.sqrt(l) * np.outer(v, np.eye(d_in)[i]))
    return QuantumChannel(np.array(ks), (d_in,), (sigma.shape[0],), (in_label,), (out_label,))


def dephasing(p: float) -> QuantumChannel:
    z = np.diag([1.0, -1.0])
    return QuantumChannel(np.array([np.sqrt(1 - p) * np.eye(2), np.sqrt(p) * z]), (2,), (2,))


def random_channel(d_in: int, d_out: int, n_kraus: int, rng: np.random.Generator) -> QuantumChannel:
    v = _stiefel.random_isometry((d_out * n_kraus, d_in), rng)
    return channel_from_isometry(v, d_out)


# ---------------------------------------------------------------------------
# broadcast channels
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BroadcastChannel:
    """A channel ``A -> B1 B2`` together with its marginals and structural flags.

    ``degrading`` optionally carries a known map with
    ``marginal2 = degrading o marginal1`` (set by the Hadamard builders).
    """

    channel: QuantumChannel
    kind: str = "custom"
    params: dict[str, Any] = field(default_factory=dict)
    is_classical: bool = False
    is_hadamard: bool = False
    degrading: QuantumChannel | None = None
    kernel: np.ndarray | None = None
    marginal1: QuantumChannel = field(init=False)
    marginal2: QuantumChannel = field(init=False)

    def __post_init__(self):
        ch = self.channel
        if len(ch.out_dims) != 2:
            raise ChannelError("broadcast channel needs exactly two output factors")
        if ch.out_labels != ("B1", "B2"):
            object.__setattr__(self, "channel", ch.with_labels(out_labels=("B1", "B2")))
        object.__setattr__(self, "marginal1", trace_out(self.channel, ["B1"]))
        object.__setattr__(self, "marginal2", trace_out(self.channel, ["B2"]))

    @property
    def d_in(self) -> int:
        return self.channel.d_in

    @property
    def d1(self) -> int:
        return self.channel.out_dims[0]

    @property
    def d2(self) -> int:
        return self.channel.out_dims[1]

    def marginal(self, which: int) -> QuantumChannel:
        if which not in (1, 2):
            raise ValueError("which must be 1 or 2")
        return self.marginal1 if which == 1 else self.marginal2

    def tensor_power(self, k: int) -> "BroadcastChannel":
        """``N^{(x)k}`` with outputs regrouped as (B1^k, B2^k)."""
        if k == 1:
            return self
        kr = self.channel.kraus
        d1, d2, d = self.d1, self.d2, self.d_in
        out = kr
        for p in range(1, k):
            # out: (n, D1*D2, Din) with outputs grouped as (B1^p, B2^p)
            big = np.einsum("aoi,bpj->abopij", out, kr)
            na, nb = out.shape[0], kr.shape[0]
            big = big.reshape(na, nb, d1**p, d2**p, d1, d2, out.shape[2], d)
            big = big.transpose(0, 1, 2, 4, 3, 5, 6, 7)
            out = big.reshape(na * nb, d1 ** (p + 1) * d2 ** (p + 1), out.shape[2] * d)
        ch = QuantumChannel(out, (d**k,), (d1**k, d2**k), ("A",), ("B1", "B2"))
        kernel = None
        if self.kernel is not None:
            kernel = self.kernel
            for _ in range(k - 1):
                kern = np.einsum("xab,ycd->xyacbd", kernel, self.kernel)
                s = kern.shape
                kernel = kern.reshape(s[0] * s[1], s[2] * s[3], s[4] * s[5])
        return BroadcastChannel(
            trimmed(ch),
            kind=f"{self.kind}^{k}",
            params={"base": self.kind, "power": k, **self.params},
            is_classical=self.is_classical,
            is_hadamard=False,
            kernel=kernel,
        )

    def to_dict(self) -> dict:
        d = {
            "schema": jsonio.SCHEMA,
            "type": "broadcast_channel",
            "version": 1,
            "kind": self.kind,
            "params": self.params,
            "flags": {"is_classical": self.is_classical, "is_hadamard": self.is_hadamard},
            "channel": self.channel.to_dict(),
        }
        if self.degrading is not None:
            d["degrading"] = self.degrading.to_dict()
        if self.kernel is not None:
            d["kernel"] = np.asarray(self.kernel).tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BroadcastChannel":
        if d.get("type") != "broadcast_channel":
            raise ValueError("not a broadcast channel document")
        flags = d.get("flags", {})
        return cls(
            QuantumChannel.from_dict(d["channel"]),
            kind=d.get("kind", "custom"),
            params=d.get("params", {}),
            is_classical=bool(flags.get("is_classical", False)),
            is_hadamard=bool(flags.get("is_hadamard", False)),
            degrading=QuantumChannel.from_dict(d["degrading"]) if "degrading" in d else None,
            kernel=np.asarray(d["kernel"], dtype=float) if "kernel" in d else None,
        )

    def save(self, path) -> None:
        jsonio.dump(self.to_dict(), path)

    @classmethod
    def load(cls, path) -> "BroadcastChannel":
        return cls.from_dict(jsonio.load(path))


def _check_kernel(kernel: np.ndarray) -> np.ndarray:
    k = np.asarray(kernel, dtype=float)
    if k.ndim != 3:
        raise ChannelError("kernel must have shape (|X|, |Y1|, |Y2|)")
    if np.any(k < -1e-12) or np.max(np.abs(k.sum(axis=(1, 2)) - 1.0)) > 1e-9:
        raise ChannelError("kernel rows must be probability distributions")
    return np.clip(k, 0.0, None)


def classical_broadcast(kernel: np.ndarray) -> BroadcastChannel:
    """Kraus operators ``sqrt(P(y1,y2|x)) |y1,y2><x|``."""
    k = _check_kernel(kernel)
    nx, n1, n2 = k.shape
    ops = []
    for x in range(nx):
        for y1 in range(n1):
            for y2 in range(n2):
                if k[x, y1, y2] > 0:
                    op = np.zeros((n1 * n2, nx))
                    op[y1 * n2 + y2, x] = np.sqrt(k[x, y1, y2])
                    ops.append(op)
    ch = QuantumChannel(np.array(ops), (nx,), (n1, n2), ("A",), ("B1", "B2"))
    # physically degraded (X -> Y1 -> Y2) kernels are Hadamard channels
    p1 = k.sum(axis=2)
    cond = np.divide(k, p1[:, :, None], out=np.zeros_like(k), where=p1[:, :, None] > 0)
    degrading_kernel = np.zeros((n1, n2))
    markov = True
    for y1 in range(n1):
        rows = [cond[x, y1] for x in range(nx) if p1[x, y1] > 1e-12]
        if rows:
            degrading_kernel[y1] = rows[0]
            markov &= all(np.allclose(r, rows[0], atol=1e-9) for r in rows)
        else:
            degrading_kernel[y1] = np.full(n2, 1.0 / n2)
    degrading = _classical_map(degrading_kernel, "B1", "B2") if markov else None
    return BroadcastChannel(
        ch, kind="classical", params={"kernel": k.tolist()}, is_classical=True,
        is_hadamard=markov, degrading=degrading, kernel=k,
    )


def _classical_map(kernel: np.ndarray, in_label: str, out_label: str) -> QuantumChannel:
    ni, no = kernel.shape
    ops = []
    for i in range(ni):
        for o in range(no):
            if kernel[i, o] > 0:
                op = np.zeros((no, ni))
                op[o, i] = np.sqrt(kernel[i, o])
                ops.append(op)
    return QuantumChannel(np.array(ops), (ni,), (no,), (in_label,), (out_label,))


def bsc(p: float) -> np.ndarray:
    return np.array([[1 - p, p], [p, 1 - p]])


def bsc_cascade(p1: float, p2: float) -> BroadcastChannel:
    """X -> Y1 = X xor Z1 -> Y2 = Y1 xor Z2 (physically degraded binary BC)."""
    w1, w2 = bsc(p1), bsc(p2)
    kernel = np.einsum("xa,ab->xab", w1, w2)
    bc = classical_broadcast(kernel)
    return BroadcastChannel(
        bc.channel, kind="bsc_cascade", params={"p1": p1, "p2": p2}, is_classical=True,
        is_hadamard=bc.is_hadamard, degrading=bc.degrading, kernel=bc.kernel,
    )


def hadamard(povm: Sequence[np.ndarray], preps: Sequence[np.ndarray]) -> BroadcastChannel:
    """Measure ``povm`` (outcome goes to classical Y1), prepare ``preps[y]`` at B2."""
    povm = [np.asarray(m, dtype=complex) for m in povm]
    preps = [np.asarray(s, dtype=complex) for s in preps]
    if len(povm) != len(preps):
        raise ChannelError("need one preparation per POVM outcome")
    d = povm[0].shape[0]
    if np.max(np.abs(sum(povm) - np.eye(d))) > 1e-9:
        raise ChannelError("POVM elements must sum to identity")
    ny, d2 = len(povm), preps[0].shape[0]
    ops = []
    for y, (m, s) in enumerate(zip(povm, preps)):
        mu, mv = np.linalg.eigh(0.5 * (m + m.conj().T))
        sl, sv = np.linalg.eigh(0.5 * (s + s.conj().T))
        for a, va in zip(mu, mv.T):
            for b, vb in zip(sl, sv.T):
                if a > KRAUS_TRIM and b > KRAUS_TRIM:
                    out = np.kron(np.eye(ny)[y], vb)
                    ops.append(np.sqrt(a * b) * np.outer(out, va.conj()))
    ch = QuantumChannel(np.array(ops), (d,), (ny, d2), ("A",), ("B1", "B2"))
    deg = []
    for y, s in enumerate(preps):
        sl, sv = np.linalg.eigh(0.5 * (s + s.conj().T))
        for b, vb in zip(sl, sv.T):
            if b > KRAUS_TRIM:
                deg.append(np.sqrt(b) * np.outer(vb, np.eye(ny)[y]))
    degrading = QuantumChannel(np.array(deg), (ny,), (d2,), ("B1",), ("B2",))
    return BroadcastChannel(
        trimmed(ch), kind="hadamard", params={"n_outcomes": ny}, is_hadamard=True, degrading=degrading,
    )


def qubit_hadamard(eps: float = 0.1, overlap: float = 0.5) -> BroadcastChannel:
    """Noisy computational-basis measurement to Y1; B2 receives one of two
    pure states with real overlap ``overlap``."""
    m0 = np.diag([1 - eps, eps])
    m1 = np.eye(2) - m0
    c = np.sqrt((1 + overlap) / 2)
    s = np.sqrt((1 - overlap) / 2)
    v0, v1 = np.array([c, s]), np.array([c, -s])
    bc = hadamard([m0, m1], [np.outer(v0, v0), np.outer(v1, v1)])
    return BroadcastChannel(
        bc.channel, kind="qubit_hadamard", params={"eps": eps, "overlap": overlap},
        is_hadamard=True, degrading=bc.degrading,
    )


def _check_prob(*ps: float) -> None:
    for p in ps:
        if not 0.0 <= p <= 1.0:
            raise ChannelError(f"parameter {p} outside [0, 1]")


def qubit_dephasing_broadcast(p1: float, p2: float) -> BroadcastChannel:
    """Dephasing broadcast channel.

    B1 receives the input through a dephasing channel with flip probability
    ``p1``; B2 holds the corresponding environment state (the dephasing
    channel's Stinespring partner), further dephased with probability ``p2``.
    Receiver 2 is degraded with respect to Receiver 1.
    """
    _check_prob(p1, p2)
    overlap = 1.0 - 2.0 * p1
    c = np.sqrt((1 + overlap) / 2)
    s = np.sqrt((1 - overlap) / 2)
    env = [np.array([c, s]), np.array([c, -s])]
    v = np.zeros((4, 2))
    for x in range(2):
        v[:, x] = np.kron(np.eye(2)[x], env[x])
    z = np.diag([1.0, -1.0])
    post = [np.sqrt(1 - p2) * np.eye(4), np.sqrt(p2) * np.kron(np.eye(2), z)]
    ops = np.array([k @ v for k in post])
    ch = QuantumChannel(ops, (2,), (2, 2), ("A",), ("B1", "B2"))
    return BroadcastChannel(trimmed(ch), kind="dephasing_broadcast", params={"p1": p1, "p2": p2})


def erasure_broadcast(e1: float, e2: float) -> BroadcastChannel:
    """Qubit routed to B1 with probability ``1-e1``, to B2 with ``1-e2``,
    lost with probability ``e1+e2-1``; each output is a qutrit whose level 2
    flags erasure.  Requires ``e1 + e2 >= 1`` (no cloning)."""
    _check_prob(e1, e2)
    if e1 + e2 < 1.0 - 1e-12:
        raise ChannelError("erasure broadcast needs e1 + e2 >= 1")
    lost = max(0.0, e1 + e2 - 1.0)
    ops = []
    for i in range(2):
        k1 = np.zeros((9, 2))
        k2 = np.zeros((9, 2))
        k3 = np.zeros((9, 2))
        # |i> at B1, erasure flag at B2
        k1[i * 3 + 2, i] = np.sqrt(1 - e1)
        k2[2 * 3 + i, i] = np.sqrt(1 - e2)
        k3[2 * 3 + 2, i] = np.sqrt(lost)
        ops.extend([k1, k2, k3])
    # the three routes are coherent in the input index, so merge per route
    routes = [ops[0] + ops[3], ops[1] + ops[4], ops[2] + ops[5]]
    ch = QuantumChannel(np.array(routes), (2,), (3, 3), ("A",), ("B1", "B2"))
    return BroadcastChannel(trimmed(ch), kind="erasure_broadcast", params={"e1": e1, "e2": e2})


def amplitude_split(gamma: float) -> BroadcastChannel:
    """Beam-splitter style isometry |0> -> |00>, |1> -> sqrt(1-g)|10> + sqrt(g)|01>.

    Marginal 1 is amplitude damping with decay ``gamma``, marginal 2 its
    complement (decay ``1-gamma``).
    """
    _check_prob(gamma)
    v = np.zeros((4, 2))
    v[0, 0] = 1.0
    v[2, 1] = np.sqrt(1 - gamma)
    v[1, 1] = np.sqrt(gamma)
    ch = QuantumChannel(v[None], (2,), (2, 2), ("A",), ("B1", "B2"))
    return BroadcastChannel(ch, kind="amplitude_split", params={"gamma": gamma})


def from_marginals(first: QuantumChannel, sigma2: np.ndarray | None = None, receiver: int = 1) -> BroadcastChannel:
    """Route a point-to-point channel to one receiver; the other gets a fixed state."""
    sigma = np.array([[1.0]]) if sigma2 is None else np.asarray(sigma2, dtype=complex)
    ops = []
    lam, vec = np.linalg.eigh(sigma)
    for l, v in zip(lam, vec.T):
        if l > KRAUS_TRIM:
            for k in first.kraus:
                if receiver == 1:
                    ops.append(np.sqrt(l) * np.einsum("oi,p->opi", k, v).reshape(-1, first.d_in))
                else:
                    ops.append(np.sqrt(l) * np.einsum("p,oi->poi", v, k).reshape(-1, first.d_in))
    dims = (first.d_out, sigma.shape[0]) if receiver == 1 else (sigma.shape[0], first.d_out)
    ch = QuantumChannel(np.array(ops), first.in_dims, dims, ("A",), ("B1", "B2"))
    return BroadcastChannel(trimmed(ch), kind=f"route_to_{receiver}", params={})


def random_broadcast(d_in: int, d1: int, d2: int, n_kraus: int, rng: np.random.Generator) -> BroadcastChannel:
    v = _stiefel.random_isometry((d1 * d2 * n_kraus, d_in), rng)
    k = v.reshape(d1 * d2, n_kraus, d_in).transpose(1, 0, 2)
    ch = QuantumChannel(k, (d_in,), (d1, d2), ("A",), ("B1", "B2"))
    return BroadcastChannel(ch, kind="random", params={"n_kraus": n_kraus})


# ---------------------------------------------------------------------------
# degradedness search
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DegradedResult:
    found: bool
    residual: float
    certificate: QuantumChannel | None
    note: str

    def to_dict(self) -> dict:
        return {
            "found": self.found,
            "residual": self.residual,
            "certificate": self.certificate.to_dict() if self.certificate is not None else None,
            "note": self.note,
        }


def probe_states(d: int) -> np.ndarray:
    """Tomographically complete pure inputs: |i>, |i>+|j>, |i>+i|j>."""
    vecs = [np.eye(d)[i] for i in range(d)]
    for i in range(d):
        for j in range(i + 1, d):
            vecs.append((np.eye(d)[i] + np.eye(d)[j]) / np.sqrt(2))
            vecs.append((np.eye(d)[i] + 1j * np.eye(d)[j]) / np.sqrt(2))
    return np.array([np.outer(v, v.conj()) for v in vecs])


def degrading_residual(bc: BroadcastChannel, candidate: QuantumChannel) -> float:
    probes = probe_states(bc.d_in)
    s1 = bc.marginal1(probes)
    s2 = bc.marginal2(probes)
    return max(trace_distance(candidate(a), b) for a, b in zip(s1, s2))


def _isometry_of(kraus: np.ndarray, env: int) -> np.ndarray | None:
    if kraus.shape[0] > env:
        return None
    pad = np.zeros((env,) + kraus.shape[1:], dtype=complex)
    pad[: kraus.shape[0]] = kraus
    return pad.transpose(1, 0, 2).reshape(-1, kraus.shape[2])


def _degrading_search(sig, tau, d1, d2, k, starts, maxiter):
    """First-order descent over all starts, then a least-squares polish of the best.

    The zero-residual solutions are often degenerate (the map is only pinned
    down on the support of the marginal-1 outputs) and plain gradient descent
    creeps there sublinearly; Levenberg-Marquardt finishes the job.
    """

    def fg(v: np.ndarray):
        x = np.einsum("sai,nij,sbj->snab", v, sig, v.conj())
        y = np.einsum("snoepe->snop", x.reshape(x.shape[0], x.shape[1], d2, k, d2, k))
        dlt = y - tau[None]
        f = np.sum(np.abs(dlt) ** 2, axis=(1, 2, 3))
        dk = np.einsum("snop,ef->snoepf", dlt, np.eye(k)).reshape(x.shape)
        g = 2.0 * np.einsum("snab,sbi,nij->saj", dk, v, sig)
        return f, g

    v, f, _ = _stiefel.minimize(fg, starts, maxiter=maxiter, gtol=1e-12, ftol=0.0, patience=50)
    v0 = v[int(np.argmin(f))]
    half = v0.size

    def unpack(z):
        return _stiefel.retract(v0 + (z[:half] + 1j * z[half:]).reshape(v0.shape))

    def residuals(z):
        w = unpack(z)
        x = np.einsum("ai,nij,bj->nab", w, sig, w.conj()).reshape(-1, d2, k, d2, k)
        dl = (np.einsum("naebe->nab", x) - tau).ravel()
        return np.concatenate([dl.real, dl.imag])

    n_res = 2 * tau.size
    method = "lm" if n_res >= 2 * half else "trf"
    sol = least_squares(residuals, np.zeros(2 * half), method=method, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=4000)
    return unpack(sol.x)


def check_degraded(
    bc: BroadcastChannel,
    tol: float = 1e-6,
    n_starts: int = 8,
    seed: int | None = 0,
    env_dim: int | None = None,
    use_known: bool = True,
    maxiter: int = 300,
) -> DegradedResult:
    """Search for ``P`` with ``marginal2 = P o marginal1``.

    ``P`` is parameterized by its Stinespring isometry; the search minimizes
    the summed squared Frobenius discrepancy on a tomographically complete
    probe set and reports the worst-case trace distance as the residual.
    Known candidates (the identity when the marginals coincide, a stored
    degrading map) are tried first.  Without ``env_dim`` the environment
    dimension is escalated from small to ``d1*d2`` (enough for any map).
    A negative result only means the search did not find a map.
    """
    d1 = bc.marginal1.d_out
    d2 = bc.marginal2.d_out
    candidates = []
    if use_known and bc.degrading is not None and (bc.degrading.d_in, bc.degrading.d_out) == (d1, d2):
        candidates.append(bc.degrading.with_labels(("B1",), ("B2",)))
    if d1 == d2:
        candidates.append(identity_channel(d1, "B1", "B2"))
    best_res, best_cert = np.inf, None
    for cand in candidates:
        r = degrading_residual(bc, cand)
        if r < best_res:
            best_res, best_cert = r, cand
        if r <= tol:
            return DegradedResult(True, r, cand, "degrading map found")

    rng = np.random.default_rng(seed)
    probes = probe_states(bc.d_in)
    sig = bc.marginal1(probes)
    tau = bc.marginal2(probes)
    envs = [env_dim] if env_dim is not None else sorted({min(2, d1 * d2), d2, d1 * d2})
    for k in envs:
        starts = _stiefel.random_isometry((n_starts, d2 * k, d1), rng)
        extra = [_isometry_of(c.kraus, k) for c in candidates]
        extra = [e for e in extra if e is not None]
        if extra:
            starts = np.concatenate([np.array(extra), starts])
        v = _degrading_search(sig, tau, d1, d2, k, starts, maxiter)
        cert = channel_from_isometry(v, d2, in_labels=("B1",), out_labels=("B2",))
        r = degrading_residual(bc, cert)
        if r < best_res:
            best_res, best_cert = r, cert
        if r <= tol:
            return DegradedResult(True, r, cert, "degrading map found")
    return DegradedResult(
        False, float(best_res), None,
        "no degrading map found by numerical search (not a proof of non-degradedness)",
    )


# ---------------------------------------------------------------------------
# bundled test channels
# ---------------------------------------------------------------------------

BUNDLED = {
    "bsc_cascade": lambda: bsc_cascade(0.1, 0.2),
    "qubit_hadamard": lambda: qubit_hadamard(),
    "dephasing_broadcast": lambda: qubit_dephasing_broadcast(0.1, 0.1),
    "erasure_broadcast": lambda: erasure_broadcast(0.25, 0.75),
    "amplitude_split": lambda: amplitude_split(0.3),
}


def bundled_names() -> list[str]:
    return list(BUNDLED)


def bundled(name: str) -> BroadcastChannel:
    """Load one of the channels shipped in ``qbc/data``."""
    if name not in BUNDLED:
        raise KeyError(f"unknown bundled channel {name!r}; choose from {bundled_names()}")
    ref = resources.files("qbc") / "data" / f"{name}.json"
    return BroadcastChannel.from_dict(json.loads(ref.read_text()))
