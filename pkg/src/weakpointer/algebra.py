"""Finite-dimensional system algebra: observables, commuting pairs, weak values."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegeneracyResolutionFailed,
    InvalidState,
    NearOrthogonalSelection,
    NotCommuting,
)

HERMITIAN_TOL = 1e-12
UNIT_NORM_TOL = 1e-12
COMMUTATOR_TOL = 1e-10
EIGEN_RESIDUAL_TOL = 1e-9
ORTHONORMAL_TOL = 1e-10
DEFAULT_EPS_OVERLAP = 1e-10


def _max_abs(m) -> float:
    m = np.asarray(m)
    return float(np.max(np.abs(m))) if m.size else 0.0


def _frozen(arr) -> np.ndarray:
    arr = np.array(arr, dtype=complex)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Observable:
    """Hermitian operator on a ``dim``-dimensional system space."""

    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidState(f"observable must be a square matrix, got shape {m.shape}")
        if m.shape[0] < 2:
            raise InvalidState("observable dimension must be at least 2")
        if not np.all(np.isfinite(m)):
            raise InvalidState("observable has non-finite entries")
        dev = _max_abs(m - m.conj().T)
        if dev > HERMITIAN_TOL:
            raise InvalidState(f"observable is not Hermitian: ||M - M^H||_max = {dev:.3e}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, other: "Observable") -> np.ndarray:
        # products of commuting observables are Hermitian but we hand back the raw matrix
        return self.matrix @ other.matrix

    @classmethod
    def zeros(cls, dim: int) -> "Observable":
        return cls(np.zeros((dim, dim), dtype=complex))

    def is_zero(self, tol: float = HERMITIAN_TOL) -> bool:
        return _max_abs(self.matrix) <= tol


@dataclass(frozen=True, eq=False)
class SelectionPair:
    """Pre-selected state ``pre`` (|i>) and post-selected state ``post`` (|f>)."""

    pre: np.ndarray
    post: np.ndarray

    def __post_init__(self):
        pre, post = _frozen(self.pre), _frozen(self.post)
        for name, v in (("pre", pre), ("post", post)):
            if v.ndim != 1:
                raise InvalidState(f"{name} must be a vector")
            if not np.all(np.isfinite(v)):
                raise InvalidState(f"{name} has non-finite entries")
            n = np.linalg.norm(v)
            if abs(n - 1.0) > UNIT_NORM_TOL:
                raise InvalidState(f"{name} is not unit-norm (|v| = {n!r})")
        if pre.shape != post.shape:
            raise InvalidState("pre and post have different lengths")
        object.__setattr__(self, "pre", pre)
        object.__setattr__(self, "post", post)

    @property
    def dim(self) -> int:
        return self.pre.shape[0]

    @property
    def overlap(self) -> complex:
        """<f|i>"""
        return complex(np.vdot(self.post, self.pre))

    @classmethod
    def normalized(cls, pre, post) -> "SelectionPair":
        pre = np.asarray(pre, dtype=complex)
        post = np.asarray(post, dtype=complex)
        return cls(pre / np.linalg.norm(pre), post / np.linalg.norm(post))


@dataclass(frozen=True)
class WeakValueSet:
    a_w: complex
    b_w: complex
    a2_w: complex
    b2_w: complex
    ab_w: complex
    overlap: complex

    def as_dict(self) -> dict:
        return {
            "a_w": self.a_w,
            "b_w": self.b_w,
            "a2_w": self.a2_w,
            "b2_w": self.b2_w,
            "ab_w": self.ab_w,
            "overlap": self.overlap,
        }


@dataclass(frozen=True, eq=False)
class JointSpectrum:
    """Common eigenbasis of a commuting pair.

    ``vectors[:, k]`` is |k> with ``A|k> = a[k]|k>`` and ``B|k> = b[k]|k>``.
    """

    a: np.ndarray
    b: np.ndarray
    vectors: np.ndarray = field(repr=False)

    @property
    def eigenvalues(self) -> list[tuple[float, float]]:
        return [(float(x), float(y)) for x, y in zip(self.a, self.b)]

    def branch_weights(self, sel: SelectionPair) -> np.ndarray:
        """<f|k><k|i> for every joint eigenvector."""
        return (self.vectors.conj().T @ sel.pre) * (sel.post.conj() @ self.vectors)

    def branch_amplitudes(self, sel: SelectionPair) -> np.ndarray:
        """<k|i>"""
        return self.vectors.conj().T @ sel.pre


def _check_dims(*items) -> None:
    dims = {item.dim for item in items}
    if len(dims) != 1:
        raise InvalidState(f"dimension mismatch: {sorted(dims)}")


def commutator_norm(a: Observable, b: Observable) -> float:
    _check_dims(a, b)
    return _max_abs(a.matrix @ b.matrix - b.matrix @ a.matrix)


def assert_commuting(a: Observable, b: Observable) -> None:
    residual = commutator_norm(a, b)
    if residual > COMMUTATOR_TOL:
        raise NotCommuting(residual)


def _eigen_residual(m: np.ndarray, vecs: np.ndarray, vals: np.ndarray) -> float:
    return _max_abs(m @ vecs - vecs * vals[None, :])


def joint_eigendecomposition(
    a: Observable,
    b: Observable,
    rng: np.random.Generator | int | None = None,
    max_tries: int = 5,
) -> JointSpectrum:
    """Simultaneously diagonalize a commuting pair.

    Diagonalizes ``A + gamma*B`` for a random ``gamma`` in [0.5, 1.5] and reads
    the individual eigenvalues off the diagonal of each operator in that basis.
    A new ``gamma`` is drawn when the eigen-residuals exceed 1e-9, which only
    happens for an unlucky accidental degeneracy of the combination.
    """
    assert_commuting(a, b)
    rng = np.random.default_rng(rng)
    worst = np.inf
    for _ in range(max_tries):
        gamma = rng.uniform(0.5, 1.5)
        combo = a.matrix + gamma * b.matrix
        combo = 0.5 * (combo + combo.conj().T)
        _, vecs = np.linalg.eigh(combo)
        av = np.real(np.einsum("ik,ij,jk->k", vecs.conj(), a.matrix, vecs))
        bv = np.real(np.einsum("ik,ij,jk->k", vecs.conj(), b.matrix, vecs))
        worst = max(_eigen_residual(a.matrix, vecs, av), _eigen_residual(b.matrix, vecs, bv))
        if worst <= EIGEN_RESIDUAL_TOL:
            vecs = np.array(vecs)
            for arr in (av, bv, vecs):
                arr.setflags(write=False)
            return JointSpectrum(av, bv, vecs)
    raise DegeneracyResolutionFailed(
        f"joint eigen-residual {worst:.3e} above {EIGEN_RESIDUAL_TOL:.0e} after {max_tries} draws"
    )


def _checked_overlap(sel: SelectionPair, eps_overlap: float) -> complex:
    ov = sel.overlap
    if abs(ov) <= eps_overlap:
        raise NearOrthogonalSelection(abs(ov), eps_overlap)
    return ov


def _weak(matrix: np.ndarray, sel: SelectionPair, ov: complex) -> complex:
    return complex(np.vdot(sel.post, matrix @ sel.pre) / ov)


def weak_value(o: Observable | np.ndarray, sel: SelectionPair, eps_overlap: float = DEFAULT_EPS_OVERLAP) -> complex:
    """``<f|O|i> / <f|i>``."""
    m = o.matrix if isinstance(o, Observable) else np.asarray(o, dtype=complex)
    if m.shape != (sel.dim, sel.dim):
        raise InvalidState(f"operator shape {m.shape} does not match system dimension {sel.dim}")
    return _weak(m, sel, _checked_overlap(sel, eps_overlap))


def weak_value_set(
    a: Observable, b: Observable, sel: SelectionPair, eps_overlap: float = DEFAULT_EPS_OVERLAP
) -> WeakValueSet:
    _check_dims(a, b, sel)
    assert_commuting(a, b)
    ov = _checked_overlap(sel, eps_overlap)
    am, bm = a.matrix, b.matrix
    return WeakValueSet(
        a_w=_weak(am, sel, ov),
        b_w=_weak(bm, sel, ov),
        a2_w=_weak(am @ am, sel, ov),
        b2_w=_weak(bm @ bm, sel, ov),
        ab_w=_weak(am @ bm, sel, ov),
        overlap=ov,
    )
