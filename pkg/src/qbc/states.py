"""Finite-dimensional density operators over labelled tensor factors.

All entropies are in bits.  Eigenvalues below ``EIG_FLOOR`` are treated as
exact zeros (``0 log 0 = 0``).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import unitary_group

from . import jsonio

TOL_HERM = 1e-10
TOL_TRACE = 1e-10
TOL_PSD = 1e-10
TOL_NORM = 1e-12
EIG_FLOOR = 1e-12


class InvalidStateError(ValueError):
    """Raised when a matrix is not a density operator within tolerance."""


def _check_factors(dims: Sequence[int], labels: Sequence[str], side: int) -> None:
    if len(dims) != len(labels):
        raise ValueError("dims and labels must have equal length")
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate labels {labels}")
    if int(np.prod(dims, dtype=int)) != side:
        raise ValueError(f"dims {tuple(dims)} do not multiply to {side}")


@dataclass(frozen=True, eq=False)
class DensityOperator:
    matrix: np.ndarray
    dims: tuple[int, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidStateError("density matrix must be square")
        _check_factors(self.dims, self.labels, m.shape[0])
        if np.max(np.abs(m - m.conj().T), initial=0.0) > TOL_HERM:
            raise InvalidStateError("matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > TOL_TRACE:
            raise InvalidStateError(f"trace {np.trace(m).real:.3g} != 1")
        if np.linalg.eigvalsh(m)[0] < -TOL_PSD:
            raise InvalidStateError("matrix is not positive semidefinite")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dims_of(self, labels: Iterable[str]) -> int:
        return int(np.prod([self.dims[self.index(s)] for s in labels], dtype=int))

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown subsystem label {label!r}; have {self.labels}") from None

    def relabel(self, mapping: dict[str, str]) -> "DensityOperator":
        return DensityOperator(self.matrix, self.dims, tuple(mapping.get(s, s) for s in self.labels))

    def to_dict(self) -> dict:
        return {
            "schema": jsonio.SCHEMA,
            "type": "density_operator",
            "dims": list(self.dims),
            "labels": list(self.labels),
            "matrix": jsonio.encode_matrix(self.matrix),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DensityOperator":
        return cls(jsonio.decode_matrix(d["matrix"]), tuple(d["dims"]), tuple(d["labels"]))


@dataclass(frozen=True, eq=False)
class PureState:
    vector: np.ndarray
    dims: tuple[int, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        v = np.array(self.vector, dtype=complex).ravel()
        v.setflags(write=False)
        object.__setattr__(self, "vector", v)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "labels", tuple(self.labels))
        _check_factors(self.dims, self.labels, v.size)
        if abs(np.linalg.norm(v) - 1.0) > TOL_NORM:
            raise InvalidStateError("state vector is not normalized")

    def dm(self) -> DensityOperator:
        return DensityOperator(np.outer(self.vector, self.vector.conj()), self.dims, self.labels)

    def to_dict(self) -> dict:
        return {
            "schema": jsonio.SCHEMA,
            "type": "pure_state",
            "dims": list(self.dims),
            "labels": list(self.labels),
            "vector": jsonio.encode_matrix(self.vector),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PureState":
        return cls(jsonio.decode_matrix(d["vector"]), tuple(d["dims"]), tuple(d["labels"]))


@dataclass(frozen=True)
class EntropyReport:
    value: float
    eigen_floor_hits: int

    def __float__(self) -> float:
        return self.value


# ---------------------------------------------------------------------------
# raw-array kernels (also used by the optimizers' hot loops)
# ---------------------------------------------------------------------------

def entropy_of_spectrum(eigs: np.ndarray) -> np.ndarray:
    """Shannon entropy in bits along the last axis, with the eigenvalue floor."""
    eigs = np.asarray(eigs, dtype=float)
    safe = np.where(eigs > EIG_FLOOR, eigs, 1.0)
    return -np.sum(np.where(eigs > EIG_FLOOR, eigs * np.log2(safe), 0.0), axis=-1)


def vn_entropy(matrix: np.ndarray) -> np.ndarray:
    """Von Neumann entropy of a (stack of) Hermitian matrices."""
    return entropy_of_spectrum(np.linalg.eigvalsh(matrix))


def ptrace(matrix: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Partial trace of a raw matrix; ``keep`` are factor indices (any order)."""
    n = len(dims)
    keep = list(keep)
    drop = [i for i in range(n) if i not in keep]
    t = np.asarray(matrix).reshape(tuple(dims) * 2)
    perm = keep + drop
    t = t.transpose(perm + [n + i for i in perm])
    dk = int(np.prod([dims[i] for i in keep], dtype=int))
    dd = int(np.prod([dims[i] for i in drop], dtype=int))
    t = t.reshape(dk, dd, dk, dd)
    return np.einsum("ajbj->ab", t)


def permute_factors(matrix: np.ndarray, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    n = len(dims)
    t = np.asarray(matrix).reshape(tuple(dims) * 2)
    t = t.transpose(list(order) + [n + i for i in order])
    d = int(np.prod(dims, dtype=int))
    return t.reshape(d, d)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def tensor(a: DensityOperator, b: DensityOperator) -> DensityOperator:
    return DensityOperator(np.kron(a.matrix, b.matrix), a.dims + b.dims, a.labels + b.labels)


def _indices(rho: DensityOperator, labels: Iterable[str]) -> list[int]:
    if isinstance(labels, str):
        labels = [labels]
    return [rho.index(s) for s in labels]


def partial_trace(rho: DensityOperator, keep: Iterable[str]) -> DensityOperator:
    """Reduce to the factors in ``keep``; factor order follows ``rho.labels``."""
    idx = sorted(set(_indices(rho, keep)))
    if len(idx) == len(rho.dims):
        return rho
    m = ptrace(rho.matrix, rho.dims, idx)
    return DensityOperator(m, tuple(rho.dims[i] for i in idx), tuple(rho.labels[i] for i in idx))


def reorder(rho: DensityOperator, labels: Sequence[str]) -> DensityOperator:
    order = _indices(rho, labels)
    if sorted(order) != list(range(len(rho.dims))):
        raise ValueError("reorder needs a permutation of all labels")
    m = permute_factors(rho.matrix, rho.dims, order)
    return DensityOperator(m, tuple(rho.dims[i] for i in order), tuple(rho.labels[i] for i in order))


def entropy(rho: DensityOperator) -> EntropyReport:
    eigs = np.linalg.eigvalsh(rho.matrix)
    if eigs[0] < -TOL_PSD:
        raise InvalidStateError("negative eigenvalue beyond slack")
    hits = int(np.sum(eigs <= EIG_FLOOR))
    return EntropyReport(float(entropy_of_spectrum(eigs)), hits)


def _H(rho: DensityOperator, labels: Iterable[str]) -> float:
    labels = list(labels)
    if not labels:
        return 0.0
    return float(vn_entropy(partial_trace(rho, labels).matrix))


def _disjoint(rho: DensityOperator, *parts: Iterable[str]) -> list[list[str]]:
    out = []
    seen: set[str] = set()
    for p in parts:
        p = [p] if isinstance(p, str) else list(p)
        for s in p:
            rho.index(s)
            if s in seen:
                raise ValueError(f"subsystem {s!r} appears in more than one part")
            seen.add(s)
        out.append(p)
    return out


def conditional_entropy(rho: DensityOperator, part_a: Iterable[str], part_b: Iterable[str]) -> float:
    a, b = _disjoint(rho, part_a, part_b)
    return _H(rho, a + b) - _H(rho, b)


def mutual_information(rho: DensityOperator, part_a: Iterable[str], part_b: Iterable[str]) -> float:
    a, b = _disjoint(rho, part_a, part_b)
    return _H(rho, a) + _H(rho, b) - _H(rho, a + b)


def conditional_mutual_information(
    rho: DensityOperator, part_a: Iterable[str], part_b: Iterable[str], given: Iterable[str]
) -> float:
    a, b, c = _disjoint(rho, part_a, part_b, given)
    return _H(rho, a + c) + _H(rho, b + c) - _H(rho, a + b + c) - _H(rho, c)


def coherent_information(rho: DensityOperator, part_a: Iterable[str], part_b: Iterable[str]) -> float:
    """I(A>B) = H(B) - H(AB)."""
    a, b = _disjoint(rho, part_a, part_b)
    return _H(rho, b) - _H(rho, a + b)


def trace_distance(rho: DensityOperator | np.ndarray, sigma: DensityOperator | np.ndarray) -> float:
    a = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho)
    b = sigma.matrix if isinstance(sigma, DensityOperator) else np.asarray(sigma)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    if isinstance(rho, DensityOperator) and isinstance(sigma, DensityOperator) and rho.dims != sigma.dims:
        raise ValueError(f"dimension mismatch {rho.dims} vs {sigma.dims}")
    return 0.5 * float(np.sum(np.linalg.svd(a - b, compute_uv=False)))


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def basis_state(i: int, d: int, label: str = "A") -> DensityOperator:
    m = np.zeros((d, d), dtype=complex)
    m[i, i] = 1.0
    return DensityOperator(m, (d,), (label,))


def maximally_mixed(d: int, label: str = "A") -> DensityOperator:
    return DensityOperator(np.eye(d) / d, (d,), (label,))


def maximally_entangled(d: int, labels: Sequence[str] = ("A", "B")) -> PureState:
    v = np.eye(d).ravel() / np.sqrt(d)
    return PureState(v, (d, d), tuple(labels))


def from_matrix(matrix: np.ndarray, dims: Sequence[int], labels: Sequence[str]) -> DensityOperator:
    """Symmetrize and renormalize a numerically noisy density matrix."""
    m = np.asarray(matrix, dtype=complex)
    m = 0.5 * (m + m.conj().T)
    return DensityOperator(m / np.trace(m).real, tuple(dims), tuple(labels))


def random_pure(dims: Sequence[int], labels: Sequence[str], rng: np.random.Generator) -> PureState:
    d = int(np.prod(dims, dtype=int))
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return PureState(v / np.linalg.norm(v), tuple(dims), tuple(labels))


def random_density(
    dims: Sequence[int], labels: Sequence[str], rng: np.random.Generator, rank: int | None = None
) -> DensityOperator:
    """Induced-measure random state (Ginibre with ``rank`` columns)."""
    d = int(np.prod(dims, dtype=int))
    k = d if rank is None else rank
    g = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    return from_matrix(g @ g.conj().T, dims, labels)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    return unitary_group.rvs(d, random_state=rng)
