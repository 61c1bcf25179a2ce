"""Batched entropic objectives with analytic gradients.

Everything here works on stacks of candidate inputs (leading axis ``S``) so
that many restarts and weights are optimized together.  Gradients follow the
convention ``df = 2 Re <g, dx>``, i.e. ``g = df/d conj(x)``.

The central identity: for an unnormalized PSD ``W`` put
``F(W) = Tr W * H(W / Tr W)``.  Then ``dF = Tr(G dW)`` with
``G = -log2(W / Tr W)``, so sums of ``p * H(state)`` terms never need the
probabilities separately.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .states import EIG_FLOOR, entropy_of_spectrum

TINY = 1e-300


def weighted_entropy(w: np.ndarray, need_grad: bool = True):
    """``F(W)`` and ``G = dF/dW`` for a stack of unnormalized PSD matrices."""
    lam, vec = np.linalg.eigh(w)
    lam = np.clip(lam, 0.0, None)
    tr = lam.sum(axis=-1)
    safe = np.where(tr > TINY, tr, 1.0)
    q = lam / safe[..., None]
    f = tr * entropy_of_spectrum(q)
    if not need_grad:
        return f, None
    logq = np.log2(np.maximum(q, EIG_FLOOR))
    g = -(vec * logq[..., None, :]) @ np.conj(np.swapaxes(vec, -1, -2))
    g = np.where((tr > TINY)[..., None, None], g, 0.0)
    return f, g


# ---------------------------------------------------------------------------
# classical-input ensembles  (psi[s, x0, x1, :] = sqrt(p(x0,x1)) theta^{x0,x1})
# ---------------------------------------------------------------------------

@dataclass
class EnsembleModel:
    """Values ``I(X0;B2), I(X1;B1|X0), I(X0X1;B1)`` of a joint ensemble.

    The ensemble is encoded as one unit vector ``psi`` of shape
    ``(card0, card1, d)`` whose blocks are ``sqrt(p) * theta``.
    """

    kraus1: np.ndarray
    kraus2: np.ndarray
    card0: int
    card1: int

    @property
    def d(self) -> int:
        return self.kraus1.shape[2]

    @property
    def dim(self) -> int:
        return self.card0 * self.card1 * self.d

    def _push(self, kraus, psi):
        phi = np.einsum("jod,sxyd->sxyjo", kraus, psi)
        w = np.einsum("sxyjo,sxyjp->sxyop", phi, phi.conj())
        return phi, w

    @staticmethod
    def _pull(kraus, x, phi):
        # sum_j K_j^H X K_j psi  with phi = K psi already formed
        return np.einsum("jod,sxyop,sxyjp->sxyd", kraus.conj(), x, phi)

    def values(self, vec: np.ndarray, need_grad: bool = True):
        s = vec.shape[0]
        psi = vec.reshape(s, self.card0, self.card1, self.d)
        phi1, w1 = self._push(self.kraus1, psi)
        phi2, w2 = self._push(self.kraus2, psi)
        f1n, g1n = weighted_entropy(w1, need_grad)
        f1x, g1x = weighted_entropy(w1.sum(axis=2), need_grad)
        f1a, g1a = weighted_entropy(w1.sum(axis=(1, 2)), need_grad)
        f2x, g2x = weighted_entropy(w2.sum(axis=2), need_grad)
        f2a, g2a = weighted_entropy(w2.sum(axis=(1, 2)), need_grad)
        sum1n = f1n.sum(axis=(1, 2))
        vals = np.stack([f2a - f2x.sum(axis=1), f1x.sum(axis=1) - sum1n, f1a - sum1n], axis=-1)
        if not need_grad:
            return vals, None
        x0 = g2a[:, None, None] - g2x[:, :, None]
        x1 = g1x[:, :, None] - g1n
        x2 = g1a[:, None, None] - g1n
        jac = np.stack(
            [self._pull(self.kraus2, np.broadcast_to(x0, w2.shape), phi2),
             self._pull(self.kraus1, x1, phi1),
             self._pull(self.kraus1, x2, phi1)],
            axis=1,
        )
        return vals, jac.reshape(s, 3, -1)


# ---------------------------------------------------------------------------
# pure inputs on reference systems + channel input
# ---------------------------------------------------------------------------

@dataclass
class PureModel:
    """Entropies of subsystems of ``(I_refs x V)|psi>``.

    ``isometry`` is the channel's Stinespring isometry with output ordered
    (B1, B2, E).  ``terms`` lists subsystem-name tuples; ``values`` returns the
    entropy of each.
    """

    isometry: np.ndarray
    ref_names: tuple[str, ...]
    ref_dims: tuple[int, ...]
    out_dims: tuple[int, int]
    env_dim: int
    terms: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        self.names = tuple(self.ref_names) + ("B1", "B2", "E")
        self.shape = tuple(self.ref_dims) + tuple(self.out_dims) + (self.env_dim,)
        self.d_in = self.isometry.shape[1]
        self.d_ref = int(np.prod(self.ref_dims, dtype=int))
        self._keeps = [tuple(self.names.index(t) for t in term) for term in self.terms]

    @property
    def dim(self) -> int:
        return self.d_ref * self.d_in

    def output(self, vec: np.ndarray) -> np.ndarray:
        s = vec.shape[0]
        psi = vec.reshape(s, self.d_ref, self.d_in)
        out = np.einsum("oi,sri->sro", self.isometry, psi)
        return out.reshape((s,) + self.shape)

    def values(self, vec: np.ndarray, need_grad: bool = True):
        s = vec.shape[0]
        big = self.output(vec)
        vals = np.empty((s, len(self.terms)))
        jac = np.empty((s, len(self.terms), self.dim), dtype=complex) if need_grad else None
        for t, keep in enumerate(self._keeps):
            f, gbig = reduced_entropy(big, keep, need_grad)
            vals[:, t] = f
            if need_grad:
                gbig = gbig.reshape(s, self.d_ref, -1)
                jac[:, t] = np.einsum("oi,sro->sri", self.isometry.conj(), gbig).reshape(s, -1)
        return vals, jac


def reduced_entropy(big: np.ndarray, keep: tuple[int, ...], need_grad: bool = True):
    """Entropy of the marginal on axes ``keep`` (batch axis excluded) of a
    stack of pure tensors ``big``, and its gradient w.r.t. ``conj(big)``."""
    s = big.shape[0]
    shape = big.shape[1:]
    rest = tuple(i for i in range(len(shape)) if i not in keep)
    perm = tuple(keep) + rest
    dk = int(np.prod([shape[i] for i in keep], dtype=int))
    dr = int(np.prod([shape[i] for i in rest], dtype=int))
    m = big.transpose((0,) + tuple(p + 1 for p in perm)).reshape(s, dk, dr)
    if dk <= dr:
        f, g = weighted_entropy(m @ np.conj(np.swapaxes(m, -1, -2)), need_grad)
        gm = g @ m if need_grad else None
    else:
        f, g = weighted_entropy(np.swapaxes(m, -1, -2) @ m.conj(), need_grad)
        gm = m @ np.swapaxes(g, -1, -2) if need_grad else None
    if not need_grad:
        return f, None
    inv = np.argsort(perm)
    gm = gm.reshape((s,) + tuple(shape[p] for p in perm)).transpose((0,) + tuple(i + 1 for i in inv))
    return f, gm


def softmin(values: np.ndarray, tau: float):
    """Smooth minimum along the last axis and its weights (sum to one)."""
    m = values.min(axis=-1, keepdims=True)
    e = np.exp(-(values - m) / tau)
    z = e.sum(axis=-1, keepdims=True)
    return m[..., 0] - tau * np.log(z[..., 0]), e / z


def softplus(x: np.ndarray, tau: float):
    """Smooth ``max(x, 0)`` and its derivative."""
    return tau * np.logaddexp(0.0, x / tau), 0.5 * (1.0 + np.tanh(0.5 * x / tau))
