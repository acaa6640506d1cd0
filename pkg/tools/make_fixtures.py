"""Regenerate the JSON fixtures under src/weakpointer/fixtures/."""

import json
import re
from pathlib import Path

import numpy as np

from weakpointer.algebra import Observable, SelectionPair, weak_value_set
from weakpointer.dynamics import CouplingSpec
from weakpointer.pointer import PointerSpec
from weakpointer.scenario import scenario_document

OUT = Path(__file__).resolve().parents[1] / "src" / "weakpointer" / "fixtures"

QUTRIT_A = np.diag([0.0, 1.0, 2.0])
QUTRIT_B = np.diag([0.0, 2.0, 1.0])
POINTER_2D = PointerSpec(l=1, sigma=1.0, grid_points=128, grid_extent=12.0, dims=2)
POINTER_1D = PointerSpec(l=0, sigma=1.0, grid_points=128, grid_extent=12.0, dims=1)
POINTER_1D_SMALL = PointerSpec(l=0, sigma=1.0, grid_points=64, grid_extent=13.0, dims=1)


def unit(v):
    v = np.asarray(v, dtype=complex)
    return v / np.linalg.norm(v)


def qutrit_states():
    # generic complex pair with |<f|i>| close to 0.5
    rng = np.random.default_rng(20240611)
    while True:
        pre = unit(rng.normal(size=3) + 1j * rng.normal(size=3))
        post = unit(rng.normal(size=3) + 1j * rng.normal(size=3))
        if abs(abs(np.vdot(post, pre)) - 0.5) < 0.02:
            return pre, post


def random_commuting(d, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    h = 0.5 * (m + m.conj().T)
    h /= np.max(np.abs(np.linalg.eigvalsh(h)))
    b = h @ h - 0.5 * h
    b = 0.5 * (b + b.conj().T)
    pre = unit(rng.normal(size=d) + 1j * rng.normal(size=d))
    post = unit(rng.normal(size=d) + 1j * rng.normal(size=d))
    return h, b, pre, post


PAIR = re.compile(r"\[\s+(-?[\d.e+-]+),\s+(-?[\d.e+-]+)\s+\]")


def write(name, doc):
    text = PAIR.sub(r"[\1, \2]", json.dumps(doc, indent=1))
    (OUT / f"{name}.json").write_text(text + "\n")
    print("wrote", name)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    pre, post = qutrit_states()
    readouts = [
        {"meter": "XY", "method": "Exact"},
        {"meter": "XY", "method": "Perturbative"},
        {"meter": "XY", "method": "ClosedForm"},
        {"meter": "X2", "method": "Exact"},
        {"meter": "X2", "method": "Perturbative"},
    ]
    write("qutrit", scenario_document(QUTRIT_A, QUTRIT_B, pre, post, POINTER_2D,
                                      CouplingSpec.translation(0.1), readouts))
    wv = weak_value_set(Observable(QUTRIT_A), Observable(QUTRIT_B), SelectionPair(pre, post))
    print("qutrit weak values", wv)

    zero = np.zeros((3, 3))
    gauss = POINTER_2D.replace(l=0)
    write("gaussian_x2", scenario_document(QUTRIT_A, zero, pre, post, gauss, CouplingSpec.translation(0.1),
                                           [{"meter": "X2", "method": "Exact"},
                                            {"meter": "X2", "method": "ClosedForm"}]))
    e1 = np.array([0, 1, 0], dtype=complex)
    write("eigenstate_x2", scenario_document(QUTRIT_A, zero, e1, e1, gauss, CouplingSpec.translation(0.1),
                                             [{"meter": "X2", "method": "Exact"},
                                              {"meter": "X2", "method": "ClosedForm"}]))

    for d, seed in ((2, 2), (3, 3)):
        h, b, p, f = random_commuting(d, seed)
        write(f"oracle_d{d}", scenario_document(h, b, p, f, POINTER_1D_SMALL, CouplingSpec.phase_space(0.2, 0.2),
                                                [{"meter": "SymXPx", "method": "Exact"},
                                                 {"meter": "SymXPx", "method": "BruteForce"}]))

    # A = diag(-1, 0, 1) probes; with |i> uniform, <f|k><k|i> is proportional to conj(f_k)
    probe_a = np.diag([-1.0, 0.0, 1.0])
    uniform = unit([1, 1, 1])
    probe_readouts = [{"meter": "SymXPx", "method": "Exact"}]
    for name, weights in (("probe_real", [1, 2, 1]), ("probe_imag", [1, -1.2 + 1.6j, 1])):
        f = unit(np.conj(weights))
        write(name, scenario_document(probe_a, probe_a, uniform, f, POINTER_1D,
                                      CouplingSpec.phase_space(0.1, 0.1), probe_readouts))
    e3 = np.array([0, 0, 1], dtype=complex)
    write("probe_eigenstate", scenario_document(probe_a, probe_a, e3, e3, POINTER_1D,
                                                CouplingSpec.phase_space(0.1, 0.1), probe_readouts))


if __name__ == "__main__":
    main()
