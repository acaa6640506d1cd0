"""Closed-form second-order readouts and a dispatcher over all evaluation methods."""

from __future__ import annotations

from dataclasses import dataclass, field

from .algebra import DEFAULT_EPS_OVERLAP, Observable, SelectionPair, WeakValueSet, weak_value_set
from .dynamics import PHASE_SPACE, TRANSLATION, CouplingSpec, evolve, evolve_exact_displacement
from .errors import IncompatibleDims, NonpositiveW, UnsupportedCombination
from .pointer import MeterObservable, PointerSpec, expectation, make_lg_mode, meter

METHODS = ("ClosedForm", "Perturbative", "Exact", "BruteForce")
CLOSED_FORM_METERS = ("XY", "X2")


def formula_xy(wv: WeakValueSet, l: int, g: float, xy_initial: float = 0.0) -> float:
    """Joint-meter displacement as published for an OAM pointer::

        <XY>_f = <XY>_i + g^2/2 (Re AB_w + Re(conj(A_w) B_w))
                        + g^2/2 l (Im A2_w + Im B2_w)
    """
    g2 = 0.5 * g * g
    real_part = (wv.ab_w.real + (wv.a_w.conjugate() * wv.b_w).real)
    l_part = l * (wv.a2_w.imag + wv.b2_w.imag)
    return xy_initial + g2 * real_part + g2 * l_part


def formula_x2(wv: WeakValueSet, g: float, x2_initial: float, w: float) -> float:
    """Single-meter ``<X^2>_f`` for a Gaussian pointer, as published::

        [<X^2>_i + g^2/2 (|B_w|^2 - |A_w|^2 + Re A2_w - Re B2_w)] / W
    """
    if not w > 0:
        raise NonpositiveW(f"W must be positive, got {w!r}")
    bracket = abs(wv.b_w) ** 2 - abs(wv.a_w) ** 2 + wv.a2_w.real - wv.b2_w.real
    return (x2_initial + 0.5 * g * g * bracket) / w


@dataclass(frozen=True)
class ReadoutRequest:
    """``normalize_closed_form=None`` keeps each formula as printed (XY without W, X2 with W)."""

    meter: MeterObservable
    method: str = "Exact"
    normalize_closed_form: bool | None = None

    def __post_init__(self):
        object.__setattr__(self, "meter", meter(self.meter))
        if self.method not in METHODS:
            raise UnsupportedCombination(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.method == "ClosedForm" and self.meter.tag not in CLOSED_FORM_METERS:
            raise UnsupportedCombination(
                f"no closed form for meter {self.meter.tag}; only {CLOSED_FORM_METERS}"
            )

    def applies_w(self) -> bool:
        if self.normalize_closed_form is None:
            return self.meter.tag == "X2"
        return bool(self.normalize_closed_form)


@dataclass(frozen=True)
class MeterReading:
    value: float
    w: float
    method: str
    meta: dict = field(default_factory=dict)


def _meta(spec: PointerSpec, coupling: CouplingSpec) -> dict:
    meta = coupling.as_dict()
    meta.update(l=spec.l, sigma=spec.sigma)
    return meta


def readout(
    a: Observable,
    b: Observable,
    sel: SelectionPair,
    spec: PointerSpec,
    coupling: CouplingSpec,
    req: ReadoutRequest,
    rng=None,
    eps_overlap: float = DEFAULT_EPS_OVERLAP,
) -> MeterReading:
    psi0 = make_lg_mode(spec)
    m = req.meter
    if m.needs_y and spec.dims != 2:
        raise IncompatibleDims(f"meter {m.tag} needs a 2D pointer")
    meta = _meta(spec, coupling)

    if req.method != "ClosedForm":
        state = evolve(req.method, a, b, sel, psi0, coupling, rng=rng, eps_overlap=eps_overlap)
        return MeterReading(expectation(state.wavefunction, m), state.w, req.method, meta)

    if coupling.kind != TRANSLATION:
        raise UnsupportedCombination("closed forms exist only for the TranslationXY coupling")
    if m.tag == "X2" and spec.l != 0:
        raise UnsupportedCombination("the X2 closed form is stated for the Gaussian (l = 0) pointer")
    if m.tag == "XY" and spec.dims != 2:
        raise IncompatibleDims("XY needs a 2D pointer")
    wv = weak_value_set(a, b, sel, eps_overlap=eps_overlap)
    w = 1.0
    if req.applies_w():
        w = evolve("Exact", a, b, sel, psi0, coupling, rng=rng, eps_overlap=eps_overlap).w
    if m.tag == "XY":
        value = formula_xy(wv, spec.l, coupling.g, expectation(psi0, "XY")) / w
    else:
        value = formula_x2(wv, coupling.g, expectation(psi0, "X2"), w)
    return MeterReading(value, w, "ClosedForm", meta)


def imaginary_part_probe(
    a: Observable,
    sel: SelectionPair,
    spec: PointerSpec,
    g_a: float,
    g_b: float,
    b: Observable | None = None,
    rng=None,
) -> float:
    """Post-selected ``<(X Px + Px X)/2>`` under ``g_a A (x) P + g_b B (x) X`` (``B = A`` by default).

    The Gaussian initial pointer carries no position-momentum correlation, so the
    return value is the displacement of the symmetrized meter.
    """
    if spec.dims != 1 or spec.l != 0:
        raise IncompatibleDims("the imaginary-part probe uses a 1D Gaussian pointer (dims=1, l=0)")
    b = a if b is None else b
    state = evolve_exact_displacement(a, b, sel, make_lg_mode(spec), g_a, g_b, rng=rng)
    return expectation(state.wavefunction, "SymXPx")


__all__ = [
    "METHODS",
    "PHASE_SPACE",
    "TRANSLATION",
    "MeterReading",
    "ReadoutRequest",
    "formula_x2",
    "formula_xy",
    "imaginary_part_probe",
    "readout",
]
