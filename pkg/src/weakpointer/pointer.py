"""Pointer wavefunctions on uniform periodic grids.

Conventions: hbar = 1, ``P = -i d/dx``, synthesis kernel ``exp(+ikx)`` (the numpy
FFT convention), 2D arrays are indexed ``[ix, iy]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.special import erfc, gammaincc

from .errors import (
    HermiticityViolation,
    IncompatibleDims,
    InvalidState,
    ModeNotContained,
    SpecMismatch,
    ZeroNorm,
)

CONTAINMENT_MASS_TOL = 1e-10
HERMITICITY_TOL = 1e-8
MAX_MOMENT_ORDER = 4


@dataclass(frozen=True)
class PointerSpec:
    """Pointer mode and the grid it is sampled on.

    The grid spans ``[-grid_extent, grid_extent)`` on each of ``dims`` axes with
    ``grid_points`` nodes per axis.
    """

    l: int = 0
    sigma: float = 1.0
    grid_points: int = 128
    grid_extent: float = 10.0
    dims: int = 2

    def __post_init__(self):
        if isinstance(self.l, bool) or int(self.l) != self.l:
            raise InvalidState(f"l must be an integer, got {self.l!r}")
        object.__setattr__(self, "l", int(self.l))
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise InvalidState(f"sigma must be positive, got {self.sigma!r}")
        n = self.grid_points
        if int(n) != n or n < 32 or (int(n) & (int(n) - 1)):
            raise InvalidState(f"grid_points must be a power of two >= 32, got {n!r}")
        object.__setattr__(self, "grid_points", int(n))
        if self.dims not in (1, 2):
            raise InvalidState(f"dims must be 1 or 2, got {self.dims!r}")
        if self.l != 0 and self.dims != 2:
            raise InvalidState("an OAM mode (l != 0) needs dims = 2")
        min_extent = 6.0 * self.sigma * math.sqrt(abs(self.l) + 1)
        if not (math.isfinite(self.grid_extent) and self.grid_extent >= min_extent):
            raise InvalidState(
                f"grid_extent {self.grid_extent!r} is below 6*sigma*sqrt(|l|+1) = {min_extent:.6g}"
            )

    @property
    def spacing(self) -> float:
        return 2.0 * self.grid_extent / self.grid_points

    @property
    def axis(self) -> np.ndarray:
        return -self.grid_extent + self.spacing * np.arange(self.grid_points)

    @property
    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.grid_points, d=self.spacing)

    @property
    def k_max(self) -> float:
        return np.pi / self.spacing

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.grid_points,) * self.dims

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Broadcastable coordinate arrays, one per axis."""
        x = self.axis
        if self.dims == 1:
            return (x,)
        return (x[:, None], x[None, :])

    def momenta(self) -> tuple[np.ndarray, ...]:
        k = self.wavenumbers
        if self.dims == 1:
            return (k,)
        return (k[:, None], k[None, :])

    def replace(self, **changes) -> "PointerSpec":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class GridWavefunction:
    spec: PointerSpec
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amp = np.array(self.amplitudes, dtype=complex)
        if amp.shape != self.spec.shape:
            raise SpecMismatch(f"amplitude shape {amp.shape} does not match grid {self.spec.shape}")
        if not np.all(np.isfinite(amp)):
            raise InvalidState("wavefunction has non-finite entries")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    @property
    def dx(self) -> float:
        return self.spec.spacing

    @property
    def cell(self) -> float:
        return self.spec.spacing ** self.spec.dims

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.cell)

    def momentum_norm_sq(self) -> float:
        """Norm computed from the discrete Fourier coefficients (Parseval)."""
        spectrum = np.fft.fftn(self.amplitudes)
        return float(np.sum(np.abs(spectrum) ** 2) * self.cell / self.amplitudes.size)

    def with_amplitudes(self, amplitudes) -> "GridWavefunction":
        return GridWavefunction(self.spec, amplitudes)

    def __mul__(self, scalar) -> "GridWavefunction":
        return self.with_amplitudes(self.amplitudes * scalar)

    __rmul__ = __mul__

    def __add__(self, other: "GridWavefunction") -> "GridWavefunction":
        _same_spec(self, other)
        return self.with_amplitudes(self.amplitudes + other.amplitudes)

    def __sub__(self, other: "GridWavefunction") -> "GridWavefunction":
        _same_spec(self, other)
        return self.with_amplitudes(self.amplitudes - other.amplitudes)


def _grid_key(spec: PointerSpec) -> tuple:
    return spec.dims, spec.grid_points, spec.grid_extent


def _same_spec(psi: GridWavefunction, phi: GridWavefunction) -> None:
    # only the lattice has to agree; l and sigma label the prepared mode
    if _grid_key(psi.spec) != _grid_key(phi.spec):
        raise SpecMismatch(f"grids differ: {psi.spec} vs {phi.spec}")


def normalization_constant(l: int, sigma: float) -> float:
    """``1 / sqrt(pi 2^(|l|+1) sigma^(2|l|+2) |l|!)`` for the 2D mode."""
    m = abs(int(l))
    return 1.0 / math.sqrt(math.pi * 2 ** (m + 1) * sigma ** (2 * m + 2) * math.factorial(m))


def tail_mass(spec: PointerSpec) -> float:
    """Analytic probability outside the grid (upper bound for 2D: outside the inscribed disk)."""
    r = spec.grid_extent / spec.sigma
    if spec.dims == 1:
        return float(erfc(r / math.sqrt(2.0)))
    # |psi|^2 radial density ~ r^(2|l|+1) exp(-r^2 / 2 sigma^2): a Gamma(|l|+1) tail in r^2/2sigma^2
    return float(gammaincc(abs(spec.l) + 1, 0.5 * r * r))


def make_lg_mode(spec: PointerSpec) -> GridWavefunction:
    """Sample the Laguerre-Gauss mode ``N (x + i sgn(l) y)^|l| exp(-(x^2+y^2)/4 sigma^2)``.

    For ``dims=1`` this is the Gaussian ``(2 pi sigma^2)^(-1/4) exp(-x^2 / 4 sigma^2)``.
    The samples are rescaled so that the discrete norm is exactly one.

    Raises
    ------
    ModeNotContained
        If more than 1e-10 of the analytic probability lies outside the grid.
    """
    mass = tail_mass(spec)
    if mass > CONTAINMENT_MASS_TOL:
        raise ModeNotContained(
            f"{mass:.2e} of the mode's probability lies outside |x| < {spec.grid_extent}"
            f" (limit {CONTAINMENT_MASS_TOL:.0e}); enlarge grid_extent"
        )
    s = spec.sigma
    if spec.dims == 1:
        (x,) = spec.coordinates()
        amp = (2.0 * np.pi * s * s) ** -0.25 * np.exp(-(x * x) / (4.0 * s * s))
    else:
        x, y = spec.coordinates()
        sgn = 1 if spec.l >= 0 else -1
        amp = (
            normalization_constant(spec.l, s)
            * (x + 1j * sgn * y) ** abs(spec.l)
            * np.exp(-(x * x + y * y) / (4.0 * s * s))
        )
    amp = np.asarray(amp, dtype=complex)
    amp = amp / math.sqrt(np.sum(np.abs(amp) ** 2) * spec.spacing ** spec.dims)
    return GridWavefunction(spec, amp)


def inner_product(psi: GridWavefunction, phi: GridWavefunction) -> complex:
    """Quadrature of ``conj(psi) * phi``."""
    _same_spec(psi, phi)
    return complex(np.vdot(psi.amplitudes, phi.amplitudes) * psi.cell)


# --- spectral primitives -----------------------------------------------------------

_AXIS = {"X": 0, "Y": 1, "Px": 0, "Py": 1}


def _axis_for(op: str, dims: int) -> int:
    ax = _AXIS[op]
    if ax >= dims:
        raise IncompatibleDims(f"operator {op} needs a 2D pointer")
    return ax


def momentum_apply(amp: np.ndarray, spec: PointerSpec, axis: int, power: int = 1) -> np.ndarray:
    """``P^power`` along one axis via forward FFT, multiplication by k, inverse FFT."""
    k = spec.wavenumbers
    shape = [1] * spec.dims
    shape[axis] = -1
    return np.fft.ifft(np.fft.fft(amp, axis=axis) * (k ** power).reshape(shape), axis=axis)


def position_apply(amp: np.ndarray, spec: PointerSpec, axis: int, power: int = 1) -> np.ndarray:
    return amp * spec.coordinates()[axis] ** power


def translate(amp: np.ndarray, spec: PointerSpec, shifts: Sequence[float]) -> np.ndarray:
    """Return ``psi(r - shift)`` using Fourier phase ramps (exact for band-limited data)."""
    spectrum = np.fft.fftn(amp)
    phase = np.zeros(spec.shape)
    for kk, s in zip(spec.momenta(), shifts):
        phase = phase + kk * s
    return np.fft.ifftn(spectrum * np.exp(-1j * phase))


def shift_wavefunction(psi: GridWavefunction, *shifts: float) -> GridWavefunction:
    if len(shifts) != psi.spec.dims:
        raise IncompatibleDims(f"expected {psi.spec.dims} shift components, got {len(shifts)}")
    return psi.with_amplitudes(translate(psi.amplitudes, psi.spec, shifts))


# --- meters ------------------------------------------------------------------------

_PRIMITIVES = ("X", "Y", "Px", "Py")


@dataclass(frozen=True)
class MeterObservable:
    """A pointer observable as a sum of coefficient * ordered operator products.

    ``terms`` holds ``(coefficient, ops)`` with ``ops`` written left to right as in
    the operator product, e.g. ``("X", "Px")`` is ``X Px`` (Px acts first).
    """

    tag: str
    terms: tuple[tuple[complex, tuple[str, ...]], ...]

    @property
    def needs_y(self) -> bool:
        return any(op in ("Y", "Py") for _, ops in self.terms for op in ops)

    @classmethod
    def monomial(cls, a: int, b: int, c: int, d: int) -> "MeterObservable":
        """Ordered monomial ``X^a Y^b Px^c Py^d``."""
        powers = (a, b, c, d)
        if any(int(p) != p or p < 0 for p in powers):
            raise InvalidState(f"monomial powers must be non-negative integers, got {powers}")
        ops = tuple(op for op, p in zip(_PRIMITIVES, powers) for _ in range(int(p)))
        return cls(f"custom({a},{b},{c},{d})", ((1.0, ops),))

    @classmethod
    def product(cls, *ops: str) -> "MeterObservable":
        for op in ops:
            if op not in _PRIMITIVES:
                raise InvalidState(f"unknown pointer operator {op!r}")
        return cls("".join(ops) or "I", ((1.0, tuple(ops)),))


_NAMED = {
    "X": ((1.0, ("X",)),),
    "Y": ((1.0, ("Y",)),),
    "X2": ((1.0, ("X", "X")),),
    "Y2": ((1.0, ("Y", "Y")),),
    "XY": ((1.0, ("X", "Y")),),
    "XPy": ((1.0, ("X", "Py")),),
    "YPx": ((1.0, ("Y", "Px")),),
    "SymXPx": ((0.5, ("X", "Px")), (0.5, ("Px", "X"))),
    "PX2": ((1.0, ("Px", "Px")),),
    "PY2": ((1.0, ("Py", "Py")),),
}

METER_TAGS = tuple(_NAMED)


def meter(tag) -> MeterObservable:
    """Look up a named meter, or build a custom monomial from a 4-sequence ``(a, b, c, d)``."""
    if isinstance(tag, MeterObservable):
        return tag
    if isinstance(tag, str):
        try:
            return MeterObservable(tag, _NAMED[tag])
        except KeyError:
            raise InvalidState(f"unknown meter {tag!r}; expected one of {METER_TAGS}") from None
    powers = tuple(tag)
    if len(powers) != 4:
        raise InvalidState(f"custom meter needs four powers (a, b, c, d), got {powers}")
    return MeterObservable.monomial(*powers)


def _apply_ops(amp: np.ndarray, spec: PointerSpec, ops: Iterable[str]) -> np.ndarray:
    out = amp
    for op in reversed(tuple(ops)):
        ax = _axis_for(op, spec.dims)
        if op in ("X", "Y"):
            out = position_apply(out, spec, ax)
        else:
            out = momentum_apply(out, spec, ax)
    return out


def apply_meter(psi: GridWavefunction, m) -> GridWavefunction:
    m = meter(m)
    if m.needs_y and psi.spec.dims != 2:
        raise IncompatibleDims(f"meter {m.tag} needs a 2D pointer")
    out = np.zeros(psi.spec.shape, dtype=complex)
    for coef, ops in m.terms:
        out = out + coef * _apply_ops(psi.amplitudes, psi.spec, ops)
    return psi.with_amplitudes(out)


def _raw_ratio(psi: GridWavefunction, m) -> complex:
    n = psi.norm_sq()
    if not n > 0:
        raise ZeroNorm("wavefunction has zero norm")
    return inner_product(psi, apply_meter(psi, m)) / n


def expectation(psi: GridWavefunction, m) -> float:
    """Normalized real expectation of a Hermitian (or symmetrized) meter."""
    ratio = _raw_ratio(psi, m)
    if abs(ratio.imag) > HERMITICITY_TOL:
        raise HermiticityViolation(
            f"<{meter(m).tag}> has imaginary part {ratio.imag:.3e}; meter is not Hermitian"
        )
    return ratio.real


def moment(psi: GridWavefunction, a: int, b: int, c: int, d: int) -> complex:
    """``<X^a Y^b Px^c Py^d>`` in exactly that operator order (complex in general)."""
    if a + b + c + d > MAX_MOMENT_ORDER:
        raise InvalidState(f"moment order {a + b + c + d} exceeds {MAX_MOMENT_ORDER}")
    return _raw_ratio(psi, MeterObservable.monomial(a, b, c, d))


def ordered_moment(psi: GridWavefunction, *ops: str) -> complex:
    """``<op_1 op_2 ... op_n>`` for an arbitrary operator word."""
    return _raw_ratio(psi, MeterObservable.product(*ops))


# --- text dump -----------------------------------------------------------------------


def dump_wavefunction(psi: GridWavefunction, path) -> None:
    """Write ``dims N L sigma l`` then one ``x [y] re im`` line per node."""
    spec = psi.spec
    lines = [f"{spec.dims} {spec.grid_points} {spec.grid_extent!r} {spec.sigma!r} {spec.l}"]
    x = spec.axis
    amp = psi.amplitudes
    if spec.dims == 1:
        for i, xi in enumerate(x):
            lines.append(f"{float(xi)!r} {float(amp[i].real)!r} {float(amp[i].imag)!r}")
    else:
        for i, xi in enumerate(x):
            for j, yj in enumerate(x):
                z = amp[i, j]
                lines.append(f"{float(xi)!r} {float(yj)!r} {float(z.real)!r} {float(z.imag)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_wavefunction(path) -> GridWavefunction:
    with open(path) as fh:
        dims, n, extent, sigma, l = fh.readline().split()
        spec = PointerSpec(l=int(l), sigma=float(sigma), grid_points=int(n),
                           grid_extent=float(extent), dims=int(dims))
        data = np.loadtxt(fh, ndmin=2)
    amp = (data[:, -2] + 1j * data[:, -1]).reshape(spec.shape)
    return GridWavefunction(spec, amp)
