"""System-pointer coupling, post-selection, and the evolution engines.

Three independent routes produce the conditional pointer state
``<f| U |i> psi0``:

* exact evolvers that use the joint eigenbasis of the commuting pair, so every
  branch is a rigid phase-space displacement of the initial mode,
* the second-order expansion of ``U`` in the coupling strength, and
* a dense matrix exponential of the full coupling Hamiltonian on
  ``system (x) grid`` (1D pointers only), used as an oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .algebra import (
    DEFAULT_EPS_OVERLAP,
    JointSpectrum,
    Observable,
    SelectionPair,
    assert_commuting,
    joint_eigendecomposition,
    weak_value_set,
)
from .errors import (
    IncompatibleDims,
    InvalidState,
    NearOrthogonalSelection,
    ShiftTooLarge,
    TooLargeForOracle,
)
from .pointer import GridWavefunction, PointerSpec, momentum_apply, position_apply, translate

TRANSLATION = "TranslationXY"
PHASE_SPACE = "PhaseSpace1D"
ORACLE_MAX_SIZE = 1024


@dataclass(frozen=True)
class CouplingSpec:
    """Integrated coupling strengths of an impulsive interaction.

    ``TranslationXY``: ``H = g(t) (A Px + B Py)`` with ``g = int g(t) dt``.
    ``PhaseSpace1D``: ``H = g_a(t) A (x) P + g_b(t) B (x) X``.
    """

    kind: str
    g: float | None = None
    g_a: float | None = None
    g_b: float | None = None

    def __post_init__(self):
        if self.kind == TRANSLATION:
            if self.g is None or self.g_a is not None or self.g_b is not None:
                raise InvalidState("TranslationXY coupling takes exactly one strength g")
            strengths = (self.g,)
        elif self.kind == PHASE_SPACE:
            if self.g is not None or self.g_a is None or self.g_b is None:
                raise InvalidState("PhaseSpace1D coupling takes exactly g_a and g_b")
            strengths = (self.g_a, self.g_b)
        else:
            raise InvalidState(f"unknown coupling kind {self.kind!r}")
        for s in strengths:
            if not math.isfinite(s):
                raise InvalidState("coupling strengths must be finite")

    @classmethod
    def translation(cls, g: float) -> "CouplingSpec":
        return cls(TRANSLATION, g=float(g))

    @classmethod
    def phase_space(cls, g_a: float, g_b: float) -> "CouplingSpec":
        return cls(PHASE_SPACE, g_a=float(g_a), g_b=float(g_b))

    def scaled(self, factor: float) -> "CouplingSpec":
        if self.kind == TRANSLATION:
            return CouplingSpec.translation(self.g * factor)
        return CouplingSpec.phase_space(self.g_a * factor, self.g_b * factor)

    def as_dict(self) -> dict:
        if self.kind == TRANSLATION:
            return {"kind": self.kind, "g": self.g}
        return {"kind": self.kind, "g_a": self.g_a, "g_b": self.g_b}


@dataclass(frozen=True, eq=False)
class JointPointerState:
    """Un-post-selected system (x) pointer state; ``amplitudes[j]`` pairs with system basis |j>."""

    spec: PointerSpec
    amplitudes: np.ndarray

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.spec.spacing ** self.spec.dims)

    def project(self, post: np.ndarray) -> GridWavefunction:
        """Conditional pointer amplitude ``<f|Psi>`` (unnormalized)."""
        return GridWavefunction(self.spec, np.tensordot(np.conj(post), self.amplitudes, axes=1))


@dataclass(frozen=True, eq=False)
class PostSelectedPointer:
    wavefunction: GridWavefunction
    overlap: complex
    w: float

    @classmethod
    def from_wavefunction(cls, phi: GridWavefunction, overlap: complex) -> "PostSelectedPointer":
        w = phi.norm_sq() / abs(overlap) ** 2
        return cls(phi, overlap, w)


def _overlap(sel: SelectionPair, eps_overlap: float) -> complex:
    ov = sel.overlap
    if abs(ov) <= eps_overlap:
        raise NearOrthogonalSelection(abs(ov), eps_overlap)
    return ov


def _check_system(a: Observable, b: Observable, sel: SelectionPair) -> None:
    if not (a.dim == b.dim == sel.dim):
        raise InvalidState(f"dimension mismatch: A {a.dim}, B {b.dim}, states {sel.dim}")
    assert_commuting(a, b)


def _check_translation_dims(b: Observable, spec: PointerSpec) -> None:
    if spec.dims == 1 and not b.is_zero():
        raise IncompatibleDims("a 1D pointer only supports TranslationXY with B = 0")


def _guard_shift(strength: float, eigs: np.ndarray, spec: PointerSpec, what: str = "shift") -> None:
    if eigs.size == 0:
        return
    reach = abs(strength) * float(np.max(np.abs(eigs)))
    limit = spec.grid_extent / 4.0
    if reach > limit:
        raise ShiftTooLarge(f"largest {what} {reach:.4g} exceeds grid_extent/4 = {limit:.4g}")


def _guard_kick(strength: float, eigs: np.ndarray, spec: PointerSpec) -> None:
    reach = abs(strength) * float(np.max(np.abs(eigs)))
    limit = spec.k_max / 4.0
    if reach > limit:
        raise ShiftTooLarge(f"largest momentum kick {reach:.4g} exceeds k_max/4 = {limit:.4g}")


def _eigs(o: Observable) -> np.ndarray:
    return np.linalg.eigvalsh(o.matrix)


# --- exact evolvers -----------------------------------------------------------------


def _assemble(spectrum: JointSpectrum, pre: np.ndarray, branches: list[np.ndarray], spec) -> JointPointerState:
    amps = spectrum.vectors.conj().T @ pre
    stacked = np.stack(branches) * amps.reshape((-1,) + (1,) * spec.dims)
    joint = np.tensordot(spectrum.vectors, stacked, axes=1)
    return JointPointerState(spec, joint)


def translation_joint_state(
    a: Observable, b: Observable, pre: np.ndarray, psi0: GridWavefunction, g: float, rng=None
) -> JointPointerState:
    """``exp(-i g (A Px + B Py)) |i> psi0`` before post-selection."""
    spec = psi0.spec
    spectrum = joint_eigendecomposition(a, b, rng=rng)
    branches = []
    for ak, bk in zip(spectrum.a, spectrum.b):
        shifts = (g * ak,) if spec.dims == 1 else (g * ak, g * bk)
        branches.append(translate(psi0.amplitudes, spec, shifts))
    return _assemble(spectrum, np.asarray(pre, dtype=complex), branches, spec)


def evolve_exact_translation(
    a: Observable,
    b: Observable,
    sel: SelectionPair,
    psi0: GridWavefunction,
    g: float,
    rng=None,
    eps_overlap: float = DEFAULT_EPS_OVERLAP,
) -> PostSelectedPointer:
    """Branch sum ``sum_k <f|k><k|i> psi0(x - g a_k, y - g b_k)`` with Fourier-exact shifts.

    A 1D pointer is accepted when ``B`` is identically zero.
    """
    _check_system(a, b, sel)
    _check_translation_dims(b, psi0.spec)
    _guard_shift(g, _eigs(a), psi0.spec)
    _guard_shift(g, _eigs(b), psi0.spec)
    ov = _overlap(sel, eps_overlap)
    joint = translation_joint_state(a, b, sel.pre, psi0, g, rng=rng)
    return PostSelectedPointer.from_wavefunction(joint.project(sel.post), ov)


def displace(amp: np.ndarray, spec: PointerSpec, alpha: float, beta: float) -> np.ndarray:
    """Apply ``exp(-i (alpha P + beta X))`` to a 1D amplitude.

    Factored as ``exp(-i alpha P) exp(-i beta X) exp(-i alpha beta / 2)``: the
    momentum ramp first, then the translation by ``alpha``. The sign of the scalar
    phase is pinned by the dense matrix-exponential oracle.
    """
    (x,) = spec.coordinates()
    ramped = amp * np.exp(-1j * beta * x) * np.exp(-0.5j * alpha * beta)
    return translate(ramped, spec, (alpha,))


def displacement_joint_state(
    a: Observable, b: Observable, pre: np.ndarray, psi0: GridWavefunction, g_a: float, g_b: float, rng=None
) -> JointPointerState:
    spec = psi0.spec
    spectrum = joint_eigendecomposition(a, b, rng=rng)
    branches = [
        displace(psi0.amplitudes, spec, g_a * ak, g_b * bk) for ak, bk in zip(spectrum.a, spectrum.b)
    ]
    return _assemble(spectrum, np.asarray(pre, dtype=complex), branches, spec)


def evolve_exact_displacement(
    a: Observable,
    b: Observable,
    sel: SelectionPair,
    psi0: GridWavefunction,
    g_a: float,
    g_b: float,
    rng=None,
    eps_overlap: float = DEFAULT_EPS_OVERLAP,
) -> PostSelectedPointer:
    """Exact evolution under ``g_a A (x) P + g_b B (x) X`` (simultaneous coupling), 1D pointer."""
    _check_system(a, b, sel)
    if psi0.spec.dims != 1:
        raise IncompatibleDims("PhaseSpace1D coupling needs a 1D pointer")
    _guard_shift(g_a, _eigs(a), psi0.spec)
    _guard_kick(g_b, _eigs(b), psi0.spec)
    ov = _overlap(sel, eps_overlap)
    joint = displacement_joint_state(a, b, sel.pre, psi0, g_a, g_b, rng=rng)
    return PostSelectedPointer.from_wavefunction(joint.project(sel.post), ov)


def evolve_exact(
    a: Observable,
    b: Observable,
    sel: SelectionPair,
    psi0: GridWavefunction,
    coupling: CouplingSpec,
    rng=None,
    eps_overlap: float = DEFAULT_EPS_OVERLAP,
) -> PostSelectedPointer:
    if coupling.kind == TRANSLATION:
        return evolve_exact_translation(a, b, sel, psi0, coupling.g, rng=rng, eps_overlap=eps_overlap)
    return evolve_exact_displacement(
        a, b, sel, psi0, coupling.g_a, coupling.g_b, rng=rng, eps_overlap=eps_overlap
    )


def joint_state(
    a: Observable, b: Observable, pre, psi0: GridWavefunction, coupling: CouplingSpec, rng=None
) -> JointPointerState:
    """Exact un-post-selected state for either coupling kind."""
    if coupling.kind == TRANSLATION:
        _check_translation_dims(b, psi0.spec)
        return translation_joint_state(a, b, pre, psi0, coupling.g, rng=rng)
    if psi0.spec.dims != 1:
        raise IncompatibleDims("PhaseSpace1D coupling needs a 1D pointer")
    return displacement_joint_state(a, b, pre, psi0, coupling.g_a, coupling.g_b, rng=rng)


# --- second-order expansion ------------------------------------------------------------


def evolve_perturbative(
    a: Observable,
    b: Observable,
    sel: SelectionPair,
    psi0: GridWavefunction,
    coupling: CouplingSpec,
    eps_overlap: float = DEFAULT_EPS_OVERLAP,
) -> PostSelectedPointer:
    """``<f|i> Z psi0`` with ``Z`` the expansion of ``<f|exp(-iH)|i>/<f|i>`` to second order.

    TranslationXY::

        Z = 1 - i g (A_w Px + B_w Py)
              - g^2/2 (A2_w Px^2 + B2_w Py^2) - g^2 AB_w Px Py

    PhaseSpace1D squares ``g_a A P + g_b B X`` keeping operator order; with
    ``AB = BA`` the cross term is ``g_a g_b AB_w (P X + X P)``.
    """
    _check_system(a, b, sel)
    spec = psi0.spec
    wv = weak_value_set(a, b, sel, eps_overlap=eps_overlap)
    psi = psi0.amplitudes

    def P(v, axis=0, n=1):
        return momentum_apply(v, spec, axis, n)

    def X(v, n=1):
        return position_apply(v, spec, 0, n)

    if coupling.kind == TRANSLATION:
        _check_translation_dims(b, spec)
        _guard_shift(coupling.g, _eigs(a), spec)
        _guard_shift(coupling.g, _eigs(b), spec)
        g = coupling.g
        z = psi - 1j * g * wv.a_w * P(psi) - 0.5 * g * g * wv.a2_w * P(psi, n=2)
        if spec.dims == 2:
            py = P(psi, axis=1)
            z = (
                z
                - 1j * g * wv.b_w * py
                - 0.5 * g * g * wv.b2_w * P(psi, axis=1, n=2)
                - g * g * wv.ab_w * P(py, axis=0)
            )
    else:
        if spec.dims != 1:
            raise IncompatibleDims("PhaseSpace1D coupling needs a 1D pointer")
        _guard_shift(coupling.g_a, _eigs(a), spec)
        _guard_kick(coupling.g_b, _eigs(b), spec)
        ga, gb = coupling.g_a, coupling.g_b
        z = (
            psi
            - 1j * (ga * wv.a_w * P(psi) + gb * wv.b_w * X(psi))
            - 0.5 * (ga * ga * wv.a2_w * P(psi, n=2) + gb * gb * wv.b2_w * X(psi, n=2))
            - 0.5 * ga * gb * wv.ab_w * (P(X(psi)) + X(P(psi)))
        )
    phi = GridWavefunction(spec, wv.overlap * z)
    return PostSelectedPointer.from_wavefunction(phi, wv.overlap)


# --- dense oracle ------------------------------------------------------------------------


def momentum_matrix(spec: PointerSpec) -> np.ndarray:
    """Dense 1D spectral-derivative operator ``F^-1 diag(k) F``."""
    n = spec.grid_points
    return np.fft.ifft(spec.wavenumbers[:, None] * np.fft.fft(np.eye(n), axis=0), axis=0)


def coupling_hamiltonian(a: Observable, b: Observable, spec: PointerSpec, coupling: CouplingSpec) -> np.ndarray:
    p = momentum_matrix(spec)
    if coupling.kind == TRANSLATION:
        return coupling.g * np.kron(a.matrix, p)
    x = np.diag(spec.axis).astype(complex)
    return coupling.g_a * np.kron(a.matrix, p) + coupling.g_b * np.kron(b.matrix, x)


def brute_force_evolve(
    a: Observable,
    b: Observable,
    sel: SelectionPair,
    psi0: GridWavefunction,
    coupling: CouplingSpec,
    eps_overlap: float = DEFAULT_EPS_OVERLAP,
) -> PostSelectedPointer:
    """Dense ``expm(-i H)`` on ``system (x) grid`` applied to ``|i> psi0``, projected on ``<f|``."""
    _check_system(a, b, sel)
    spec = psi0.spec
    if spec.dims != 1:
        raise IncompatibleDims("the dense oracle handles 1D pointers only")
    size = a.dim * spec.grid_points
    if size > ORACLE_MAX_SIZE:
        raise TooLargeForOracle(f"dim * grid_points = {size} exceeds {ORACLE_MAX_SIZE}")
    if coupling.kind == TRANSLATION:
        _check_translation_dims(b, spec)
    ov = _overlap(sel, eps_overlap)
    u = expm(-1j * coupling_hamiltonian(a, b, spec, coupling))
    psi = u @ np.kron(sel.pre, psi0.amplitudes)
    joint = JointPointerState(spec, psi.reshape(a.dim, spec.grid_points))
    return PostSelectedPointer.from_wavefunction(joint.project(sel.post), ov)


def evolve(
    method: str,
    a: Observable,
    b: Observable,
    sel: SelectionPair,
    psi0: GridWavefunction,
    coupling: CouplingSpec,
    rng=None,
    eps_overlap: float = DEFAULT_EPS_OVERLAP,
) -> PostSelectedPointer:
    """Dispatch on ``Exact`` / ``Perturbative`` / ``BruteForce``."""
    if method == "Exact":
        return evolve_exact(a, b, sel, psi0, coupling, rng=rng, eps_overlap=eps_overlap)
    if method == "Perturbative":
        return evolve_perturbative(a, b, sel, psi0, coupling, eps_overlap=eps_overlap)
    if method == "BruteForce":
        return brute_force_evolve(a, b, sel, psi0, coupling, eps_overlap=eps_overlap)
    raise InvalidState(f"unknown evolution method {method!r}")
