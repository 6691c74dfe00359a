"""Closed-form kernel determinant, numerators, and the reduced quadratic form."""

import cmath
import math

import mpmath as mp
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from squeezebell.errors import DegenerateKernelError, SingularLocusError
from squeezebell.kernel import (
    DEGENERACY_THRESHOLD,
    XiMatrix,
    _phase_fn,
    _xi_extended,
    amplitude_constant,
    kernel_coefficients,
    kernel_determinant,
    kernel_numerators,
    series_prefactor,
    xi_determinant,
    xi_matrix,
    xi_matrix_large_squeeze,
)
from squeezebell.oracle import build_M
from squeezebell.state import SqueezeParams, TransitionSpec, coeff_A

r_draw = st.floats(min_value=0.0, max_value=8.0)
angle_draw = st.floats(min_value=-math.pi, max_value=math.pi)

GENERIC_POINTS = [
    (1.1, 0.3, 0.7, 0.8, -0.4, 0.2),
    (2.0, -0.15, 1.3, 1.5, 0.55, -0.6),
    (0.4, 1.0, 0.0, 0.9, 0.1, 2.0),
]


def _spec(ra, pa, tha, rb, pb, thb):
    return TransitionSpec(a=SqueezeParams(ra, pa, tha), b=SqueezeParams(rb, pb, thb))


class TestPhaseFunction:
    @given(angle_draw)
    def test_conjugation_and_period(self, x):
        assert _phase_fn(-x) == _phase_fn(x).conjugate()
        assert abs(_phase_fn(x + math.pi) - _phase_fn(x)) < 1e-14

    def test_zero(self):
        assert _phase_fn(0.0) == 0.0


class TestDeterminant:
    def test_vacuum_closed_form(self):
        # Both snapshots in vacuum: f_M = -4 e^{2i dth} sin^2(dth).
        spec = _spec(0.0, 0.0, 0.7, 0.0, 0.0, 0.0)
        expected = -4.0 * cmath.exp(1.4j) * math.sin(0.7) ** 2
        assert kernel_determinant(spec) == pytest.approx(expected, rel=1e-14)

    def test_coincident_pair_vanishes_exactly(self):
        spec = _spec(1.3, 0.4, 0.9, 1.3, 0.4, 0.9)
        assert kernel_determinant(spec) == 0.0

    @given(
        st.floats(min_value=0.0, max_value=5.0),
        angle_draw,
        st.floats(min_value=0.0, max_value=5.0),
        angle_draw,
        angle_draw,
    )
    def test_exchange_conjugation(self, ra, pa, rb, pb, dth):
        # Swapping the two snapshots (which negates the angle difference)
        # conjugates the determinant.
        spec = _spec(ra, pa, dth, rb, pb, 0.0)
        f_ab = kernel_determinant(spec)
        f_ba = kernel_determinant(spec.swapped())
        assert abs(f_ba - f_ab.conjugate()) <= 1e-13 * max(1.0, abs(f_ab))

    @pytest.mark.parametrize("point", GENERIC_POINTS)
    def test_matches_explicit_system_determinant(self, point):
        # The LU determinant of the assembled 12x12 system equals the
        # closed form with no extra normalization.
        spec = _spec(*point)
        f_m = kernel_determinant(spec)
        det_big = build_M(spec).determinant()
        assert abs(det_big - f_m) <= 1e-13 * abs(f_m)

    def test_extended_precision_recomputation(self):
        # The closed form loses digits at high squeezing; pin the float
        # evaluation against the same expression in 40-digit arithmetic.
        ra, pa, rb, pb, dth = 5.0, -0.2, 0.2, 0.5, 0.9
        f_m = kernel_determinant(_spec(ra, pa, dth, rb, pb, 0.0))
        with mp.workdps(40):
            ta, tb = mp.tanh(ra), mp.tanh(rb)
            s = mp.sin
            ref = 4 * mp.exp(2j * mp.mpf(dth)) * (
                -s(dth) ** 2
                + s(2 * pa + dth) ** 2 * ta**2
                + s(2 * pb - dth) ** 2 * tb**2
                - 2 * s(2 * pa) * s(2 * pb) * ta * tb
                - s(2 * pa - 2 * pb + dth) ** 2 * ta**2 * tb**2
            )
            ref = complex(ref)
        assert abs(f_m - ref) <= 1e-12 * abs(ref)


class TestNumerators:
    def test_vacuum_values(self):
        dth = 0.6
        spec = _spec(0.0, 0.0, dth, 0.0, 0.0, 0.0)
        d1, d2, d3, d4 = kernel_numerators(spec)
        e2 = cmath.exp(2j * dth)
        assert d1 == pytest.approx(-e2 * _phase_fn(dth), abs=1e-15)
        assert d2 == 0.0
        assert d3 == pytest.approx(-4j * e2 * math.sin(dth), abs=1e-15)
        assert d4 == 0.0

    def test_coincident_all_vanish(self):
        spec = _spec(0.9, 0.0, 0.0, 0.9, 0.0, 0.0)
        assert all(abs(d) < 1e-15 for d in kernel_numerators(spec))
        # The accessor keeps working where the ratio assembly must refuse.
        with pytest.raises(DegenerateKernelError) as exc_info:
            kernel_coefficients(spec)
        assert exc_info.value.det_magnitude < DEGENERACY_THRESHOLD


class TestReducedForm:
    @given(
        st.floats(min_value=0.0, max_value=8.0),
        angle_draw,
        st.floats(min_value=0.0, max_value=8.0),
        angle_draw,
        angle_draw,
    )
    def test_convergence_conditions_hold_generically(self, ra, pa, rb, pb, dth):
        spec = _spec(ra, pa, dth, rb, pb, 0.0)
        try:
            xi = xi_matrix(spec)
        except DegenerateKernelError:
            assume(False)
        assert xi.converged
        assert all(v < 0.0 for v in xi.diagnostics)

    def test_vacuum_right_angle_finite(self):
        xi = xi_matrix(_spec(0.0, 0.0, math.pi / 2.0, 0.0, 0.0, 0.0))
        assert xi.converged
        assert all(math.isfinite(abs(v)) for v in (xi.xi11, xi.xi22, xi.xi12))

    def test_angle_difference_periodicity(self):
        base = _spec(1.2, 0.3, 0.8, 0.7, -0.2, 0.0)
        shifted = _spec(1.2, 0.3, 0.8 + 2.0 * math.pi, 0.7, -0.2, 0.0)
        x0, x1 = xi_matrix(base), xi_matrix(shifted)
        for u, v in ((x0.xi11, x1.xi11), (x0.xi22, x1.xi22), (x0.xi12, x1.xi12)):
            assert abs(u - v) <= 1e-12 * max(1.0, abs(u))

    def test_half_period_flips_coupling_only(self):
        base = _spec(1.2, 0.3, 0.8, 0.7, -0.2, 0.0)
        shifted = _spec(1.2, 0.3, 0.8 + math.pi, 0.7, -0.2, 0.0)
        x0, x1 = xi_matrix(base), xi_matrix(shifted)
        assert abs(x1.xi11 - x0.xi11) <= 1e-12 * abs(x0.xi11)
        assert abs(x1.xi22 - x0.xi22) <= 1e-12 * abs(x0.xi22)
        assert abs(x1.xi12 + x0.xi12) <= 1e-12 * abs(x0.xi12)

    def test_float_chain_matches_extended_precision(self):
        ra, pa, rb, pb, dth = 1.4, 0.25, 0.9, -0.35, 0.7
        xi = xi_matrix(_spec(ra, pa, dth, rb, pb, 0.0))
        e11, e22, e12 = _xi_extended(ra, pa, rb, pb, dth)
        assert abs(xi.xi11 - e11) <= 1e-12 * abs(e11)
        assert abs(xi.xi22 - e22) <= 1e-12 * abs(e22)
        assert abs(xi.xi12 - e12) <= 1e-12 * abs(e12)

    @pytest.mark.parametrize("point", GENERIC_POINTS)
    def test_squared_prefactor_identity(self, point):
        # det Xi * (passive-block determinant) * pi^4 cosh^4 r_a cosh^4 r_b
        # * (1 - e^{4i phi_a} tanh^2 r_a)(1 - e^{-4i phi_b} tanh^2 r_b)
        # * det(12x12 system) telescopes to 16 pi^4: every Gaussian layer
        # of the reduction must cancel for this to hold.
        spec = _spec(*point)
        kc = kernel_coefficients(spec)
        xi = xi_matrix(spec)
        ra, rb = spec.a.r, spec.b.r
        ta, tb = math.tanh(ra), math.tanh(rb)
        lhs = (
            xi_determinant(xi)
            * (kc.scrD1 * kc.scrDbar1 - kc.D4 * kc.D4)
            * math.pi**4
            * math.cosh(ra) ** 4
            * math.cosh(rb) ** 4
            * (1.0 - cmath.exp(4j * spec.a.varphi) * ta * ta)
            * (1.0 - cmath.exp(-4j * spec.b.varphi) * tb * tb)
            * build_M(spec).determinant()
        )
        assert abs(lhs / (16.0 * math.pi**4) - 1.0) <= 1e-8

    def test_shifted_entries_reference_wavefunction(self):
        spec = _spec(*GENERIC_POINTS[0])
        kc = kernel_coefficients(spec)
        expected = 0.5 + coeff_A(spec.b.r, spec.b.varphi) - kc.D1
        assert kc.scrD1 == expected


class TestLargeSqueezeAsymptote:
    def test_entries_at_unit_chi(self):
        # phi_a = pi/4, phi_b = -pi/4, dtheta = 0: zeta = 2i so chi = 1 and
        # the asymptotic entries are bare.
        spec = _spec(3.0, math.pi / 4.0, 0.0, 2.5, -math.pi / 4.0, 0.0)
        xi = xi_matrix_large_squeeze(spec)
        ua, ub = math.exp(-3.0), math.exp(-2.5)
        assert xi.xi11 == pytest.approx(-2.0 * ub * ub, rel=1e-13)
        assert xi.xi22 == pytest.approx(-2.0 * ua * ua, rel=1e-13)
        assert xi.xi12 == pytest.approx(2j * ua * ub, rel=1e-13)

    def test_schur_complement_collapses(self):
        # xi11 - xi12^2/xi22 = -4 u_b^2 identically for the asymptote.
        spec = _spec(4.0, 0.3, 0.4, 3.0, -0.1, 0.0)
        xi = xi_matrix_large_squeeze(spec)
        ub = math.exp(-3.0)
        schur = xi.xi11 - xi.xi12 * xi.xi12 / xi.xi22
        assert abs(schur.imag) <= 1e-15 * abs(schur)
        assert schur.real == pytest.approx(-4.0 * ub * ub, rel=1e-12)

    def test_approaches_full_form_moderate_squeezing(self):
        spec = _spec(8.0, 0.3, 0.4, 8.0, -0.1, 0.0)
        full = xi_matrix(spec)
        asym = xi_matrix_large_squeeze(spec)
        for u, v in (
            (full.xi11, asym.xi11),
            (full.xi22, asym.xi22),
            (full.xi12, asym.xi12),
        ):
            assert abs(u - v) <= 0.1 * abs(u)

    def test_approaches_full_form_deep_squeezing(self):
        spec = _spec(10.0, 0.3, 0.4, 10.0, -0.1, 0.0)
        full = xi_matrix(spec)
        asym = xi_matrix_large_squeeze(spec)
        for u, v in (
            (full.xi11, asym.xi11),
            (full.xi22, asym.xi22),
            (full.xi12, asym.xi12),
        ):
            assert abs(u - v) <= 1e-6 * abs(u)

    def test_singular_locus_rejected(self):
        spec = _spec(6.0, 0.0, 0.0, 6.0, 0.0, 0.0)
        with pytest.raises(SingularLocusError):
            xi_matrix_large_squeeze(spec)


class TestPrefactors:
    def _xi(self, xi11, xi22, xi12):
        return XiMatrix(
            xi11=xi11,
            xi22=xi22,
            xi12=xi12,
            converged=True,
            diagnostics=(-1.0, -1.0, -1.0, -1.0),
        )

    def test_amplitude_isotropic(self):
        xi = self._xi(-1.0, -1.0, 0.0)
        assert amplitude_constant(xi) == pytest.approx(
            1.0 / (4.0 * math.pi**2), abs=1e-16
        )

    def test_amplitude_imaginary_coupling(self):
        xi = self._xi(-1.0, -1.0, 0.5j)
        assert amplitude_constant(xi) == pytest.approx(
            math.sqrt(5.0) / (8.0 * math.pi**2), abs=1e-16
        )

    def test_series_prefactor_isotropic(self):
        xi = self._xi(-1.0, -1.0, 0.0)
        assert series_prefactor(xi) == pytest.approx(
            1.0 / math.sqrt(2.0 * math.pi), abs=1e-16
        )
