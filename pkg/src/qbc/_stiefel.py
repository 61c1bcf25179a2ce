"""Batched Riemannian gradient descent on (products of) complex Stiefel manifolds.

Minimizes independent objectives ``f_s(U_s)`` over isometries ``U_s`` (m x r,
``U^H U = I``) for a stack of starts at once.  A point may also be a tuple of
isometries of different shapes (a product manifold); the objective then
returns one gradient block per factor.  Steps use Barzilai-Borwein lengths with
Armijo backtracking and a polar retraction.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

FG = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


def herm(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))


def retract(x: np.ndarray) -> np.ndarray:
    w, _, vh = np.linalg.svd(x, full_matrices=False)
    return w @ vh


def random_isometry(shape: tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return retract(z)


def tangent(u: np.ndarray, g: np.ndarray) -> np.ndarray:
    uh = np.conj(np.swapaxes(u, -1, -2))
    return g - u @ herm(uh @ g)


def _inner(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.real(np.sum(np.conj(a) * b, axis=(-2, -1)))


def _sum_inner(a: Sequence[np.ndarray], b: Sequence[np.ndarray]) -> np.ndarray:
    return sum(_inner(x, y) for x, y in zip(a, b))


def minimize_product(
    fg: Callable[[list], tuple[np.ndarray, list]],
    u0: Sequence[np.ndarray],
    maxiter: int = 1000,
    gtol: float = 1e-8,
    ftol: float = 1e-13,
    patience: int = 20,
    indexed: bool = False,
) -> tuple[list, np.ndarray, np.ndarray]:
    """Product-manifold version of :func:`minimize`; ``u0`` is a list of stacks.

    With ``indexed=True`` the objective is called as ``fg(u, rows)`` where
    ``rows`` are the batch positions being evaluated (for objectives whose
    form differs per start).
    """
    n = len(u0[0])
    call = (lambda us, rows: fg(us, rows)) if indexed else (lambda us, rows: fg(us))
    u = [retract(b) for b in u0]
    f, g = call(u, np.arange(n))
    xi = [tangent(b, gb) for b, gb in zip(u, g)]
    gn = _sum_inner(xi, xi)
    step = 1.0 / np.maximum(np.sqrt(gn), 1e-12)
    active = np.sqrt(gn) > gtol
    stall = np.zeros(len(f), dtype=int)
    for _ in range(maxiter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        a = step[idx]
        accepted = np.zeros(idx.size, dtype=bool)
        u_new = [b[idx].copy() for b in u]
        g_new = [b[idx].copy() for b in g]
        f_new = f[idx].copy()
        for _ in range(40):
            todo = ~accepted
            if not todo.any():
                break
            j = idx[todo]
            trial = [retract(b[j] - a[todo, None, None] * x[j]) for b, x in zip(u, xi)]
            ft, gt = call(trial, j)
            ok = ft <= f[j] - 1e-4 * a[todo] * gn[j]
            sel = np.flatnonzero(todo)[ok]
            for blk in range(len(u)):
                u_new[blk][sel] = trial[blk][ok]
                g_new[blk][sel] = gt[blk][ok]
            f_new[sel] = ft[ok]
            accepted[sel] = True
            a[np.flatnonzero(todo)[~ok]] *= 0.5
        # starts whose line search failed are at a numerical floor
        active[idx[~accepted]] = False
        ok = idx[accepted]
        if ok.size == 0:
            continue
        sel = accepted
        xi_new = [tangent(b[sel], gb[sel]) for b, gb in zip(u_new, g_new)]
        s = [b[sel] - ub[ok] for b, ub in zip(u_new, u)]
        y = [xn - x[ok] for xn, x in zip(xi_new, xi)]
        sy = np.abs(_sum_inner(s, y))
        ss = _sum_inner(s, s)
        bb = np.where(sy > 1e-300, ss / np.maximum(sy, 1e-300), 2 * a[sel])
        rel = (f[ok] - f_new[sel]) <= ftol * np.maximum(1.0, np.abs(f[ok]))
        stall[ok] = np.where(rel, stall[ok] + 1, 0)
        for blk in range(len(u)):
            u[blk][ok] = u_new[blk][sel]
            g[blk][ok] = g_new[blk][sel]
            xi[blk][ok] = xi_new[blk]
        f[ok] = f_new[sel]
        gn[ok] = _sum_inner(xi_new, xi_new)
        step[ok] = np.clip(bb, 1e-8, 1e4)
        active[ok] = (np.sqrt(gn[ok]) > gtol) & (stall[ok] < patience)
    converged = (np.sqrt(gn) <= 1e-5) | (stall >= patience)
    return u, f, converged


def minimize(
    fg: FG,
    u0: np.ndarray,
    maxiter: int = 1000,
    gtol: float = 1e-8,
    ftol: float = 1e-13,
    patience: int = 20,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns ``(U, f, converged)`` for each start in the batch."""

    def fg_list(us):
        f, g = fg(us[0])
        return f, [g]

    u, f, conv = minimize_product(fg_list, [u0], maxiter=maxiter, gtol=gtol, ftol=ftol, patience=patience)
    return u[0], f, conv
