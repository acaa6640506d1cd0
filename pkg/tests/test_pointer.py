import math

import numpy as np
import pytest

from weakpointer.errors import (
    HermiticityViolation,
    IncompatibleDims,
    InvalidState,
    ModeNotContained,
    SpecMismatch,
    ZeroNorm,
)
from weakpointer.pointer import (
    METER_TAGS,
    GridWavefunction,
    PointerSpec,
    apply_meter,
    dump_wavefunction,
    expectation,
    inner_product,
    load_wavefunction,
    make_lg_mode,
    meter,
    moment,
    normalization_constant,
    ordered_moment,
    shift_wavefunction,
)


def lg_spec(l, sigma=1.0, n=128):
    return PointerSpec(l=l, sigma=sigma, grid_points=n, grid_extent=10 * sigma * math.sqrt(abs(l) + 1), dims=2)


class TestSpec:
    def test_defaults_are_valid(self):
        PointerSpec()

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(grid_points=100),
            dict(grid_points=16),
            dict(sigma=0.0),
            dict(dims=3),
            dict(l=1, dims=1),
            dict(l=2, grid_extent=10.0),  # needs 6*sqrt(3) = 10.39
            dict(l=0.5),
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(InvalidState):
            PointerSpec(**{"grid_extent": 12.0, **kwargs})

    def test_grid(self):
        s = PointerSpec(grid_points=64, grid_extent=8.0, dims=1)
        assert s.spacing == 0.25
        assert s.axis[0] == -8.0 and s.axis[-1] == 8.0 - 0.25
        assert s.k_max == pytest.approx(np.pi / 0.25)


class TestNormalization:
    def test_gaussian(self):
        assert normalization_constant(0, 1.0) == pytest.approx(1 / math.sqrt(2 * math.pi))
        assert normalization_constant(0, 1.0) == pytest.approx(0.3989, abs=1e-4)

    @pytest.mark.parametrize("sigma", [0.3, 1.0, 2.5])
    def test_gaussian_general_sigma(self, sigma):
        assert normalization_constant(0, sigma) == pytest.approx(1 / (sigma * math.sqrt(2 * math.pi)))

    def test_l2(self):
        assert normalization_constant(2, 1.0) == pytest.approx(1 / math.sqrt(16 * math.pi))
        assert normalization_constant(-2, 1.0) == normalization_constant(2, 1.0)

    @pytest.mark.parametrize("l", [-3, -1, 0, 1, 2, 3])
    def test_quadrature_of_unnormalized_samples(self, l):
        # sample the analytic mode on a fine grid and integrate |psi|^2 directly
        s = 0.8
        x = np.linspace(-12, 12, 801)
        X, Y = np.meshgrid(x, x, indexing="ij")
        sgn = 1 if l >= 0 else -1
        psi = normalization_constant(l, s) * (X + 1j * sgn * Y) ** abs(l) * np.exp(-(X**2 + Y**2) / (4 * s * s))
        h = x[1] - x[0]
        assert np.sum(np.abs(psi) ** 2) * h * h == pytest.approx(1.0, abs=1e-10)


class TestModes:
    def test_gaussian_is_real_positive_and_centred(self, spec2d):
        psi = make_lg_mode(spec2d)
        assert np.all(psi.amplitudes.real > 0)
        assert np.all(psi.amplitudes.imag == 0)
        assert abs(expectation(psi, "X")) < 1e-14
        assert abs(expectation(psi, "Y")) < 1e-14

    def test_vortex_vanishes_at_origin(self):
        spec = lg_spec(1)
        psi = make_lg_mode(spec)
        i0 = spec.grid_points // 2
        assert spec.axis[i0] == 0.0
        assert psi.amplitudes[i0, i0] == 0

    @pytest.mark.parametrize("l", [-2, -1, 0, 1, 2, 3])
    def test_second_moments(self, l):
        # radial Gaussian integral: <r^2> = 2(|l|+1) sigma^2, split evenly between x and y
        psi = make_lg_mode(lg_spec(l, sigma=1.0))
        assert expectation(psi, "X2") == pytest.approx(abs(l) + 1, abs=1e-10)
        assert expectation(psi, "Y2") == pytest.approx(abs(l) + 1, abs=1e-10)

    def test_one_dimensional_gaussian(self, spec1d):
        psi = make_lg_mode(spec1d)
        assert psi.norm_sq() == pytest.approx(1.0, abs=1e-14)
        assert expectation(psi, "X2") == pytest.approx(1.0, abs=1e-12)
        x = spec1d.axis
        raw = (2 * np.pi) ** -0.25 * np.exp(-x * x / 4)
        assert np.allclose(psi.amplitudes, raw, atol=1e-12)

    def test_not_contained(self):
        # 6 sigma passes the extent check but leaves ~1.5e-8 of probability outside
        spec = PointerSpec(l=0, sigma=1.0, grid_points=64, grid_extent=6.0, dims=2)
        with pytest.raises(ModeNotContained):
            make_lg_mode(spec)

    def test_sign_of_l_is_conjugation(self):
        plus = make_lg_mode(lg_spec(2))
        minus = make_lg_mode(lg_spec(-2))
        assert np.allclose(plus.amplitudes, np.conj(minus.amplitudes), atol=1e-15)

    def test_wavefunction_is_immutable(self, spec2d):
        psi = make_lg_mode(spec2d)
        with pytest.raises(ValueError):
            psi.amplitudes[0, 0] = 1.0


class TestInnerProduct:
    def test_norm_and_linearity(self, spec2d):
        psi = make_lg_mode(spec2d)
        assert inner_product(psi, psi) == pytest.approx(1.0, abs=1e-14)
        assert inner_product(psi, 1j * psi) == pytest.approx(1j, abs=1e-14)
        assert inner_product(1j * psi, psi) == pytest.approx(-1j, abs=1e-14)

    def test_angular_orthogonality(self):
        spec = lg_spec(2)
        a = make_lg_mode(spec.replace(l=1))
        b = make_lg_mode(spec)
        assert abs(inner_product(a, b)) < 1e-8

    def test_spec_mismatch(self, spec2d):
        with pytest.raises(SpecMismatch):
            inner_product(make_lg_mode(spec2d), make_lg_mode(spec2d.replace(grid_extent=13.0)))

    def test_parseval(self):
        for l in (0, 1, 3):
            psi = make_lg_mode(lg_spec(l))
            assert psi.momentum_norm_sq() == pytest.approx(psi.norm_sq(), abs=1e-10)


class TestMeters:
    def test_position_parity(self, spec2d):
        psi = make_lg_mode(spec2d)
        xpsi = apply_meter(psi, "X").amplitudes
        # grid is symmetric about index N/2: x -> -x maps i -> N - i
        n = spec2d.grid_points
        idx = (n - np.arange(1, n)) % n
        assert np.allclose(xpsi[1:, :], -xpsi[idx, :], atol=1e-15)
        assert abs(inner_product(psi, apply_meter(psi, "X"))) < 1e-15

    def test_momentum_of_plane_wave_modulation(self, spec1d):
        k0 = 1.5
        psi0 = make_lg_mode(spec1d)
        psi = psi0.with_amplitudes(psi0.amplitudes * np.exp(1j * k0 * spec1d.axis))
        assert expectation(psi, (0, 0, 1, 0)) == pytest.approx(k0, abs=1e-6)

    def test_symmetrized_xp_vanishes_on_real_wavefunctions(self, spec1d):
        psi = make_lg_mode(spec1d)
        assert abs(expectation(psi, "SymXPx")) < 1e-12
        lumpy = psi.with_amplitudes(psi.amplitudes * (1 + 0.3 * spec1d.axis - 0.1 * spec1d.axis**2))
        assert abs(expectation(lumpy, "SymXPx")) < 1e-12

    def test_y_meter_needs_2d(self, spec1d):
        psi = make_lg_mode(spec1d)
        for tag in ("Y", "XY", "XPy", "PY2"):
            with pytest.raises(IncompatibleDims):
                apply_meter(psi, tag)

    def test_unknown_meter(self):
        with pytest.raises(InvalidState):
            meter("Z")
        with pytest.raises(InvalidState):
            meter((1, 2, 3))

    def test_non_hermitian_meter_is_flagged(self, spec1d):
        psi = make_lg_mode(spec1d)
        with pytest.raises(HermiticityViolation):
            expectation(psi, (1, 0, 1, 0))  # X P on a real Gaussian is i/2

    def test_zero_norm(self, spec1d):
        psi = GridWavefunction(spec1d, np.zeros(spec1d.shape))
        with pytest.raises(ZeroNorm):
            expectation(psi, "X")


class TestMoments:
    def test_normalization(self):
        psi = make_lg_mode(lg_spec(1))
        assert moment(psi, 0, 0, 0, 0) == pytest.approx(1.0)

    def test_gaussian_momentum_variance(self, spec2d):
        # Fourier transform of exp(-x^2/4s^2) is exp(-s^2 k^2): <P^2> = 1/(4 s^2)
        psi = make_lg_mode(spec2d)
        assert moment(psi, 0, 0, 2, 0) == pytest.approx(0.25, abs=1e-12)

    @pytest.mark.parametrize("l", [-1, 1, 2])
    def test_xy_vanishes(self, l):
        assert abs(moment(make_lg_mode(lg_spec(l)), 1, 1, 0, 0)) < 1e-12

    def test_order_limit(self, spec2d):
        with pytest.raises(InvalidState):
            moment(make_lg_mode(spec2d), 2, 2, 1, 0)

    @pytest.mark.parametrize("l", [0, 1, -1, 2])
    def test_reverse_order_is_conjugate(self, l):
        psi = make_lg_mode(lg_spec(l))
        assert ordered_moment(psi, "X", "Px") == pytest.approx(np.conj(ordered_moment(psi, "Px", "X")), abs=1e-8)
        assert ordered_moment(psi, "Y", "Py") == pytest.approx(np.conj(ordered_moment(psi, "Py", "Y")), abs=1e-8)

    def test_canonical_commutator(self):
        psi = make_lg_mode(lg_spec(1))
        comm = ordered_moment(psi, "X", "Px") - ordered_moment(psi, "Px", "X")
        assert comm == pytest.approx(1j, abs=1e-10)

    @pytest.mark.parametrize("l", [-2, -1, 0, 1, 2, 3])
    def test_orbital_angular_momentum(self, l):
        psi = make_lg_mode(lg_spec(l))
        lz = ordered_moment(psi, "X", "Py") - ordered_moment(psi, "Y", "Px")
        assert lz == pytest.approx(l, abs=1e-10)

    # continuum values at sigma = 1, from symbolic integration of the analytic modes
    SECOND_ORDER_XY_MOMENTS = {
        0: {"PxXYPy": 0.25, "PyXYPx": 0.25, "XYPxPx": 0, "XYPyPy": 0, "XYPxPy": -0.25},
        1: {"PxXYPy": 0.25, "PyXYPx": 0.25, "XYPxPx": -0.5j, "XYPyPy": 0.5j, "XYPxPy": -0.25},
        -1: {"PxXYPy": 0.25, "PyXYPx": 0.25, "XYPxPx": 0.5j, "XYPyPy": -0.5j, "XYPxPy": -0.25},
        2: {"PxXYPy": 0, "PyXYPx": 0, "XYPxPx": -1j, "XYPyPy": 1j, "XYPxPy": -0.5},
    }

    @pytest.mark.parametrize("l", sorted(SECOND_ORDER_XY_MOMENTS))
    def test_fourth_order_moments_match_symbolic_values(self, l):
        psi = make_lg_mode(lg_spec(l))
        for word, expected in self.SECOND_ORDER_XY_MOMENTS[l].items():
            ops = []
            i = 0
            while i < len(word):
                if word[i] == "P":
                    ops.append(word[i:i + 2])
                    i += 2
                else:
                    ops.append(word[i])
                    i += 1
            assert ordered_moment(psi, *ops) == pytest.approx(expected, abs=1e-9), word


class TestRefinementAndShift:
    @pytest.mark.parametrize("l", [0, 1, 3])
    def test_grid_refinement(self, l):
        coarse = make_lg_mode(lg_spec(l, n=128))
        fine = make_lg_mode(lg_spec(l, n=256))
        for tag in METER_TAGS:
            assert expectation(coarse, tag) == pytest.approx(expectation(fine, tag), abs=1e-6), tag

    @pytest.mark.parametrize("dx", [0.37, -1.2, 2.5])
    def test_translation_covariance(self, spec2d, dx):
        psi = make_lg_mode(spec2d)
        moved = shift_wavefunction(psi, dx, 0.0)
        assert expectation(moved, "X") == pytest.approx(dx, abs=1e-8)
        var0 = expectation(psi, "X2") - expectation(psi, "X") ** 2
        var1 = expectation(moved, "X2") - expectation(moved, "X") ** 2
        assert var1 == pytest.approx(var0, abs=1e-8)

    def test_shift_needs_one_component_per_axis(self, spec2d):
        with pytest.raises(IncompatibleDims):
            shift_wavefunction(make_lg_mode(spec2d), 1.0)


def test_dump_round_trip(tmp_path):
    for spec in (lg_spec(-1, n=32), PointerSpec(sigma=0.7, grid_points=32, grid_extent=7.0, dims=1)):
        psi = make_lg_mode(spec)
        path = tmp_path / f"psi{spec.dims}.txt"
        dump_wavefunction(psi, path)
        header = path.read_text().splitlines()[0].split()
        assert header == [str(spec.dims), str(spec.grid_points), repr(spec.grid_extent), repr(spec.sigma), str(spec.l)]
        back = load_wavefunction(path)
        assert back.spec == spec
        assert np.array_equal(back.amplitudes, psi.amplitudes)
