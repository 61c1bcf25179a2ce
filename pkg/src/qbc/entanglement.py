"""Entanglement of formation.

Two routes are provided:

* ``concurrence`` -- the closed form for two qubits (Wootters).
* ``numeric`` -- minimum average marginal entropy over pure-state
  decompositions ``rho = sum_k |psi_k><psi_k|``.  A decomposition with ``m``
  members is ``psi_k = sum_j U[k, j] sqrt(lam_j) |e_j>`` for an ``m x r``
  isometry ``U``; the search runs multi-start descent on that isometry.

The numeric route returns the best value found, which is an upper bound on
the true EoF whether or not the search converged.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import _stiefel
from .states import EIG_FLOOR, DensityOperator, entropy_of_spectrum, permute_factors, vn_entropy

_SIGMA_Y2 = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))


@dataclass(frozen=True)
class EoFResult:
    value: float
    method: str
    converged: bool
    n_states: int

    @property
    def is_upper_bound(self) -> bool:
        """True when the value comes from the decomposition search."""
        return self.method == "numeric"

    def __float__(self) -> float:
        return self.value


def binary_entropy(p: float) -> float:
    return float(entropy_of_spectrum(np.array([p, 1.0 - p])))


def concurrence(rho: DensityOperator | np.ndarray) -> float:
    m = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho)
    if m.shape != (4, 4):
        raise ValueError("concurrence is defined for two-qubit states")
    tilde = _SIGMA_Y2 @ m.conj() @ _SIGMA_Y2
    lam = np.sqrt(np.clip(np.sort(np.linalg.eigvals(m @ tilde).real)[::-1], 0.0, None))
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def eof_from_concurrence(c: float) -> float:
    return binary_entropy(0.5 * (1.0 + np.sqrt(max(0.0, 1.0 - c * c))))


def _split(rho: DensityOperator, cut: Iterable[str]) -> tuple[np.ndarray, int, int]:
    cut = [cut] if isinstance(cut, str) else list(cut)
    a = sorted({rho.index(s) for s in cut})
    b = [i for i in range(len(rho.dims)) if i not in a]
    m = permute_factors(rho.matrix, rho.dims, a + b)
    da = int(np.prod([rho.dims[i] for i in a], dtype=int))
    return m, da, rho.dim // da


def _decomposition_objective(w: np.ndarray, da: int, db: int):
    """Average marginal entropy and its Euclidean gradient w.r.t. U."""
    wc = w.conj()
    swap = da > db

    def fg(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        s, m, _ = u.shape
        psi = np.einsum("dj,skj->skd", w, u)
        mats = psi.reshape(s, m, da, db)
        if swap:
            mats = np.swapaxes(mats, -1, -2)
        tau = mats @ np.conj(np.swapaxes(mats, -1, -2))
        lam, vec = np.linalg.eigh(tau)
        lam = np.clip(lam, 0.0, None)
        p = lam.sum(axis=-1)
        ps = np.where(p > 1e-300, p, 1.0)
        q = lam / ps[..., None]
        h = entropy_of_spectrum(q)
        f = np.sum(p * h, axis=-1)
        logq = np.log2(np.maximum(q, EIG_FLOOR))
        gmat = -(vec * logq[..., None, :]) @ np.conj(np.swapaxes(vec, -1, -2))
        grad_m = gmat @ mats
        if swap:
            grad_m = np.swapaxes(grad_m, -1, -2)
        grad_m = np.where((p > 1e-300)[..., None, None], grad_m, 0.0)
        gvec = grad_m.reshape(s, m, da * db)
        grad_u = np.einsum("dj,skd->skj", wc, gvec)
        return f, grad_u

    return fg


def eof_numeric(
    matrix: np.ndarray,
    da: int,
    db: int,
    n_starts: int = 32,
    n_states: int | None = None,
    rng: np.random.Generator | None = None,
    maxiter: int = 1500,
) -> EoFResult:
    """Decomposition search on a raw matrix whose first factor (dim ``da``) is the cut."""
    rng = np.random.default_rng() if rng is None else rng
    lam, vec = np.linalg.eigh(0.5 * (matrix + matrix.conj().T))
    keep = lam > EIG_FLOOR
    lam, vec = lam[keep], vec[:, keep]
    lam = lam / lam.sum()
    r = lam.size
    if r == 1:
        psi = vec[:, 0].reshape(da, db)
        v = float(vn_entropy(psi @ psi.conj().T))
        return EoFResult(max(v, 0.0), "pure", True, 1)
    m = r * r if n_states is None else max(int(n_states), r)
    w = vec * np.sqrt(lam)
    fg = _decomposition_objective(w, da, db)
    starts = _stiefel.random_isometry((n_starts, m, r), rng)
    # the spectral decomposition itself is one start
    starts[0] = np.eye(m, r)
    u, f, conv = _stiefel.minimize(fg, starts, maxiter=maxiter, gtol=1e-6, ftol=1e-9, patience=5)
    best = int(np.argmin(f))
    return EoFResult(max(float(f[best]), 0.0), "numeric", bool(conv[best]), m)


def entanglement_of_formation(
    rho: DensityOperator,
    cut: Iterable[str],
    method: str = "auto",
    n_starts: int = 32,
    n_states: int | None = None,
    seed: int | np.random.Generator | None = None,
    maxiter: int = 1500,
    full_output: bool = False,
):
    """EoF of ``rho`` across ``cut | rest``.

    ``method`` is ``"auto"`` (closed form for two qubits, search otherwise),
    ``"concurrence"`` or ``"numeric"``.  ``n_states`` caps the decomposition
    size (default ``rank**2``).
    """
    mat, da, db = _split(rho, cut)
    if method not in ("auto", "concurrence", "numeric"):
        raise ValueError(f"unknown method {method!r}")
    two_qubit = da == 2 and db == 2
    if method == "concurrence" or (method == "auto" and two_qubit):
        if not two_qubit:
            raise ValueError("concurrence route needs a 2x2 cut")
        res = EoFResult(eof_from_concurrence(concurrence(mat)), "concurrence", True, 4)
    else:
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        res = eof_numeric(mat, da, db, n_starts=n_starts, n_states=n_states, rng=rng, maxiter=maxiter)
    return res if full_output else res.value
