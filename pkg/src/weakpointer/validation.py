"""Acceptance criteria A1-A7 evaluated on the built-in fixtures.

Each check returns a :class:`CriterionResult`; :func:`run_validation` prints one
PASS/FAIL line per criterion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np

from .algebra import Observable, SelectionPair, weak_value_set
from .dynamics import (
    CouplingSpec,
    brute_force_evolve,
    evolve_exact_displacement,
    evolve_exact_translation,
    evolve_perturbative,
)
from .pointer import METER_TAGS, PointerSpec, expectation, make_lg_mode
from .readout import formula_x2, formula_xy, imaginary_part_probe
from .scenario import Scenario, load_scenario

G_SCAN = (0.1, 0.05, 0.025, 0.0125)
ORDER3_SLOPE = 2.7
HALVING_RATIO = 6.0
# differences below this are rounding noise and count as zero in O(g^3) checks
NOISE_FLOOR = 1e-13


@dataclass
class CriterionResult:
    cid: str
    title: str
    passed: bool
    details: list[str] = field(default_factory=list)

    def line(self) -> str:
        return f"{self.cid} {'PASS' if self.passed else 'FAIL'}  {self.title}"


class Fixtures:
    """Lazy loader for the fixture scenarios shipped with the package."""

    def __init__(self, directory=None):
        self.directory = Path(directory) if directory else None
        self._cache: dict[str, Scenario] = {}

    def __getitem__(self, name: str) -> Scenario:
        if name not in self._cache:
            if self.directory is None:
                ref = resources.files("weakpointer") / "fixtures" / f"{name}.json"
                with resources.as_file(ref) as path:
                    self._cache[name] = load_scenario(path)
            else:
                self._cache[name] = load_scenario(self.directory / f"{name}.json")
        return self._cache[name]


def loglog_slope(gs, values) -> float:
    gs = np.asarray(gs, float)
    v = np.maximum(np.abs(np.asarray(values, float)), NOISE_FLOOR)
    return float(np.polyfit(np.log(gs), np.log(v), 1)[0])


def halving_ratios(values) -> list[float]:
    v = [max(abs(x), NOISE_FLOOR) for x in values]
    return [v[i] / v[i + 1] for i in range(len(v) - 1)]


def is_order3(gs, values) -> bool:
    if max(abs(v) for v in values) <= NOISE_FLOOR:
        return True
    return loglog_slope(gs, values) >= ORDER3_SLOPE


def _fmt(values) -> str:
    return "[" + ", ".join(f"{v:.3e}" for v in values) + "]"


def _exact_and_pert(sc: Scenario, g: float, spec: PointerSpec | None = None):
    psi0 = make_lg_mode(spec or sc.pointer)
    ex = evolve_exact_translation(sc.a, sc.b, sc.sel, psi0, g, rng=sc.seed)
    pt = evolve_perturbative(sc.a, sc.b, sc.sel, psi0, CouplingSpec.translation(g))
    return psi0, ex, pt


# --- A1 ---------------------------------------------------------------------------


def check_a1(fx: Fixtures) -> CriterionResult:
    sc = fx["qutrit"]
    res = CriterionResult("A1", "second-order truncation: |Exact - Perturbative| = O(g^3)", True)
    diffs = {"XY": [], "X2": []}
    for g in G_SCAN:
        _, ex, pt = _exact_and_pert(sc, g)
        for m in diffs:
            diffs[m].append(expectation(ex.wavefunction, m) - expectation(pt.wavefunction, m))
    for m, d in diffs.items():
        slope = loglog_slope(G_SCAN, d)
        ok = slope >= ORDER3_SLOPE
        res.passed &= ok
        res.details.append(f"{m}: |diff| {_fmt(np.abs(d))} slope {slope:.3f} (need >= {ORDER3_SLOPE})")
    return res


# --- A2 ---------------------------------------------------------------------------


def check_a2(fx: Fixtures, g: float = 0.05) -> CriterionResult:
    sc = fx["qutrit"]
    wv = weak_value_set(sc.a, sc.b, sc.sel)
    res = CriterionResult("A2", "l-dependent term of <XY>_f is affine in l with the published slope", True)
    ls = (0, 1, 2)
    xy = {}
    for l in ls + (-1,):
        spec = sc.pointer.replace(l=l)
        psi0 = make_lg_mode(spec)
        xy[l] = expectation(evolve_exact_translation(sc.a, sc.b, sc.sel, psi0, g, rng=sc.seed).wavefunction, "XY")
    predicted = 0.5 * g * g * (wv.a2_w.imag + wv.b2_w.imag)
    slope, intercept = np.polyfit(ls, [xy[l] for l in ls], 1)
    residual = max(abs(xy[l] - (intercept + slope * l)) for l in ls)
    slope_ok = abs(slope - predicted) <= 0.05 * abs(predicted)
    affine_ok = residual <= 0.05 * abs(predicted)
    res.details.append(f"<XY>_f(l=0,1,2) = {_fmt([xy[l] for l in ls])} at g={g}")
    res.details.append(f"fitted slope {slope:.6e} vs published {predicted:.6e} (5% band) -> {'ok' if slope_ok else 'off'}")
    res.details.append(f"affine residual {residual:.3e} (limit {0.05 * abs(predicted):.3e}) -> {'ok' if affine_ok else 'off'}")
    res.details.append(
        f"signed-l probe: <XY>(l=-1) - <XY>(l=0) = {xy[-1] - xy[0]:.6e}, "
        f"<XY>(l=1) - <XY>(l=0) = {xy[1] - xy[0]:.6e}"
    )

    # l = 0: the exact reading must follow the l-independent part to O(g^3)
    gaps, gaps_w = [], []
    spec0 = sc.pointer.replace(l=0)
    for gg in G_SCAN:
        psi0, ex, _ = _exact_and_pert(sc, gg, spec0)
        exact = expectation(ex.wavefunction, "XY")
        closed = formula_xy(wv, 0, gg, expectation(psi0, "XY"))
        gaps.append(exact - closed)
        gaps_w.append(exact - closed / ex.w)
    l0_ok = is_order3(G_SCAN, gaps)
    res.details.append(f"l=0 gap to l-independent part {_fmt(np.abs(gaps))} slope {loglog_slope(G_SCAN, gaps):.3f}")
    closer = ["no-W" if abs(a) <= abs(b) else "W" for a, b in zip(gaps, gaps_w)]
    res.details.append(f"l=0 variant tracking exact more closely per g {list(G_SCAN)}: {closer}")
    res.passed = bool(slope_ok and affine_ok and l0_ok)
    return res


# --- A3 ---------------------------------------------------------------------------


def check_a3(fx: Fixtures) -> CriterionResult:
    res = CriterionResult("A3", "Gaussian pointer: exact <X^2>_f matches the published closed form to O(g^3)", True)
    sc = fx["gaussian_x2"]
    wv = weak_value_set(sc.a, sc.b, sc.sel)
    delta = wv.a2_w.real - abs(wv.a_w) ** 2
    gaps = []
    for g in G_SCAN:
        psi0 = make_lg_mode(sc.pointer)
        ex = evolve_exact_translation(sc.a, sc.b, sc.sel, psi0, g, rng=sc.seed)
        closed = formula_x2(wv, g, expectation(psi0, "X2"), ex.w)
        gaps.append(expectation(ex.wavefunction, "X2") - closed)
    ratios = halving_ratios(gaps)
    gap_ok = all(r >= HALVING_RATIO for r in ratios)
    res.details.append(f"Re[A2_w] - |A_w|^2 = {delta:.4f}")
    res.details.append(f"|exact - formula_x2| {_fmt(np.abs(gaps))}, halving ratios {[round(r, 2) for r in ratios]}"
                       f" (need >= {HALVING_RATIO})")

    eig = fx["eigenstate_x2"]
    ewv = weak_value_set(eig.a, eig.b, eig.sel)
    shifts = []
    for g in G_SCAN:
        psi0 = make_lg_mode(eig.pointer)
        ex = evolve_exact_translation(eig.a, eig.b, eig.sel, psi0, g, rng=eig.seed)
        shifts.append(expectation(ex.wavefunction, "X2") - expectation(psi0, "X2"))
    eig_ok = is_order3(G_SCAN, shifts)
    res.details.append(
        f"eigenstate-like fixture (A_w = {ewv.a_w.real:.3f}, A2_w = {ewv.a2_w.real:.3f}): "
        f"<X^2>_f - <X^2>_i {_fmt(shifts)} slope {loglog_slope(G_SCAN, shifts):.3f} (need >= {ORDER3_SLOPE})"
    )
    res.passed = bool(gap_ok and eig_ok)
    return res


# --- A4 ---------------------------------------------------------------------------


def check_a4(fx: Fixtures, g: float = 0.2, tol: float = 1e-8) -> CriterionResult:
    res = CriterionResult("A4", "exact evolvers agree with the dense matrix-exponential oracle", True)
    for name in ("oracle_d2", "oracle_d3"):
        sc = fx[name]
        psi0 = make_lg_mode(sc.pointer)
        zero = Observable.zeros(sc.a.dim)
        ex = evolve_exact_translation(sc.a, zero, sc.sel, psi0, g, rng=sc.seed)
        bf = brute_force_evolve(sc.a, zero, sc.sel, psi0, CouplingSpec.translation(g))
        d_t = math.sqrt((ex.wavefunction - bf.wavefunction).norm_sq())
        ex = evolve_exact_displacement(sc.a, sc.b, sc.sel, psi0, g, g, rng=sc.seed)
        bf = brute_force_evolve(sc.a, sc.b, sc.sel, psi0, CouplingSpec.phase_space(g, g))
        d_d = math.sqrt((ex.wavefunction - bf.wavefunction).norm_sq())
        ok = d_t <= tol and d_d <= tol
        res.passed &= ok
        res.details.append(f"d={sc.a.dim}: translation {d_t:.2e}, displacement {d_d:.2e} (tol {tol:.0e})")
    return res


# --- A5 ---------------------------------------------------------------------------


def check_a5(fx: Fixtures) -> CriterionResult:
    res = CriterionResult("A5", "alternate coupling: SymXPx reading resolves Im[(A^2)_w] at order g^2", True)
    real, imag = fx["probe_real"], fx["probe_imag"]
    wr = weak_value_set(real.a, real.a, real.sel)
    wi = weak_value_set(imag.a, imag.a, imag.sel)
    delta = abs(wr.a2_w.imag - wi.a2_w.imag)
    same_aw = abs(wr.a_w - wi.a_w) <= 1e-12
    diffs = [
        imaginary_part_probe(imag.a, imag.sel, imag.pointer, g, g, rng=imag.seed)
        - imaginary_part_probe(real.a, real.sel, real.pointer, g, g, rng=real.seed)
        for g in G_SCAN
    ]
    slope = loglog_slope(G_SCAN, diffs)
    pair_ok = same_aw and delta >= 0.5 and abs(slope - 2.0) <= 0.2
    res.details.append(f"A_w equal: {same_aw}; Im[(A^2)_w] differs by {delta:.3f}")
    res.details.append(f"reading difference {_fmt(diffs)} slope {slope:.3f} (need 2 +/- 0.2)")

    eig = fx["probe_eigenstate"]
    ewv = weak_value_set(eig.a, eig.a, eig.sel)
    readings = [imaginary_part_probe(eig.a, eig.sel, eig.pointer, g, g, rng=eig.seed) for g in G_SCAN]
    real_ok = is_order3(G_SCAN, readings)
    res.details.append(
        f"all-real fixture (eigenstate, A_w = {ewv.a_w.real:.3f}): readings {_fmt(readings)}"
        f" slope {loglog_slope(G_SCAN, readings):.3f} (need >= {ORDER3_SLOPE})"
    )
    res.passed = bool(pair_ok and real_ok)
    return res


# --- A6 ---------------------------------------------------------------------------

A6_LS = (0, 1, 2, 3)
A6_SIGMAS = (0.5, 1.0, 2.0)


def a6_spec(l: int, sigma: float, grid_points: int = 128) -> PointerSpec:
    return PointerSpec(l=l, sigma=sigma, grid_points=grid_points,
                       grid_extent=10.0 * sigma * math.sqrt(abs(l) + 1), dims=2)


def check_a6(fx: Fixtures | None = None) -> CriterionResult:
    res = CriterionResult("A6", "pointer-grid fidelity of LG modes", True)
    worst = {"norm": 0.0, "x2": 0.0, "xy": 0.0, "refine": 0.0}
    for l in A6_LS:
        for s in A6_SIGMAS:
            coarse = make_lg_mode(a6_spec(l, s))
            fine = make_lg_mode(a6_spec(l, s, 256))
            worst["norm"] = max(worst["norm"], abs(coarse.norm_sq() - 1.0))
            target = (abs(l) + 1) * s * s
            for tag in ("X2", "Y2"):
                worst["x2"] = max(worst["x2"], abs(expectation(coarse, tag) - target))
            worst["xy"] = max(worst["xy"], abs(expectation(coarse, "XY")))
            for tag in METER_TAGS:
                worst["refine"] = max(worst["refine"], abs(expectation(coarse, tag) - expectation(fine, tag)))
    limits = {"norm": 1e-8, "x2": 1e-6, "xy": 1e-8, "refine": 1e-6}
    for key, lim in limits.items():
        ok = worst[key] <= lim
        res.passed &= ok
        res.details.append(f"max {key} error {worst[key]:.2e} (limit {lim:.0e})")
    return res


# --- A7 ---------------------------------------------------------------------------


def orthonormal_basis(dim: int, seed: int = 7) -> np.ndarray:
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    return q


def check_a7(fx: Fixtures, g: float = 0.3) -> CriterionResult:
    sc = fx["qutrit"]
    res = CriterionResult("A7", "probability bookkeeping over a complete post-selection basis", True)
    psi0 = make_lg_mode(sc.pointer)
    basis = orthonormal_basis(sc.a.dim)
    total = 0.0
    for j in range(sc.a.dim):
        sel = SelectionPair(sc.sel.pre, basis[:, j])
        st = evolve_exact_translation(sc.a, sc.b, sel, psi0, g, rng=sc.seed)
        total += st.w * abs(st.overlap) ** 2
    res.passed = abs(total - 1.0) <= 1e-8
    res.details.append(f"sum_f W_f |<f|i>|^2 = {total!r} at g={g}")
    return res


CRITERIA: dict[str, Callable[[Fixtures], CriterionResult]] = {
    "A1": check_a1,
    "A2": check_a2,
    "A3": check_a3,
    "A4": check_a4,
    "A5": check_a5,
    "A6": check_a6,
    "A7": check_a7,
}


def run_validation(only=None, fixtures_dir=None, out=print) -> list[CriterionResult]:
    """Run the selected criteria (all by default); print one line per criterion plus details."""
    ids = list(CRITERIA) if not only else [c.upper() for c in only]
    for cid in ids:
        if cid not in CRITERIA:
            raise KeyError(f"unknown criterion {cid!r}; expected one of {list(CRITERIA)}")
    fx = Fixtures(fixtures_dir)
    results = []
    for cid in ids:
        r = CRITERIA[cid](fx)
        results.append(r)
        if out:
            out(r.line())
            for d in r.details:
                out(f"    {d}")
    return results
