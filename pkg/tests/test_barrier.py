"""Tests for the barrier-top expansion and the asymptotic pseudopole lattice.

Expected values fall in three classes:
* closed-form identities of the potential peak (exact algebra);
* frozen reference numbers for the default parameter set, computed once
  from the chain-rule derivative ladder and cross-checked against finite
  differences of the tortoise-coordinate potential;
* structural laws (scaling covariance, mirror symmetry, eikonal limit)
  that hold independently of any particular parameter values.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from diracqnm.barrier import (
    DEFAULT_F2_FORM,
    MULTIPLICITY_CONVENTION,
    BarrierData,
    PseudopoleCoeffs,
    barrier_data,
    lattice,
    pseudopole,
)
from diracqnm.geometry import BlackHoleParams

REF = BlackHoleParams(mass=1.0, charge=0.5, lam=0.05)

# Frozen reference-case barrier data (mass=1, charge=0.5, lam=0.05),
# validated against central finite differences of the potential along the
# tortoise coordinate.
REF_R0 = 2.8228756555322954
REF_V0 = 0.023851688237601604
REF_V2 = -0.0010664132082903483
REF_V3 = 0.00013399013738885898
REF_V4 = 0.00019265999812123397
REF_Z0 = 0.15443991788913125
REF_OMEGA = 0.023091266837165392
REF_B02 = 0.5602037863459103
REF_B12 = 33.32354123460546
REF_E20 = -0.00044061264912015254


@pytest.fixture(scope="module")
def data() -> BarrierData:
    return barrier_data(REF)


@pytest.fixture(scope="module")
def coeffs(data: BarrierData) -> PseudopoleCoeffs:
    return PseudopoleCoeffs.from_barrier(data)


class TestBarrierData:
    def test_peak_location(self, data: BarrierData) -> None:
        assert data.r0 == pytest.approx(1.5 + math.sqrt(1.75), abs=1e-14)
        assert data.r0 == pytest.approx(REF_R0, abs=1e-13)

    def test_frozen_derivatives(self, data: BarrierData) -> None:
        assert data.V0 == pytest.approx(REF_V0, rel=1e-13)
        assert data.V2 == pytest.approx(REF_V2, rel=1e-12)
        assert data.V3 == pytest.approx(REF_V3, rel=1e-11)
        assert data.V4 == pytest.approx(REF_V4, rel=1e-11)

    def test_peak_is_squared_wave_speed(self, data: BarrierData) -> None:
        # The height of the centrifugal barrier equals alpha(x0)^2.
        assert data.z0 == pytest.approx(math.sqrt(data.V0), rel=1e-14)
        assert data.z0 == pytest.approx(REF_Z0, rel=1e-13)

    def test_curvature_frequency(self, data: BarrierData) -> None:
        assert data.V2 < 0.0
        assert data.omega == pytest.approx(math.sqrt(-data.V2 / 2.0), rel=1e-14)
        assert data.omega == pytest.approx(REF_OMEGA, rel=1e-13)

    def test_chargeless_closed_forms(self) -> None:
        # Without charge the peak sits at r0 = 3M and the barrier height
        # 1/27 - lam/3 coincides with the curvature frequency.
        lam = 0.05
        d = barrier_data(BlackHoleParams(mass=1.0, charge=0.0, lam=lam))
        assert d.r0 == pytest.approx(3.0, abs=1e-14)
        assert d.V0 == pytest.approx(1.0 / 27.0 - lam / 3.0, abs=1e-15)
        assert d.omega == pytest.approx(d.V0, rel=1e-12)

    def test_scaling_covariance(self) -> None:
        # (M, Q, lam) -> (sM, sQ, lam/s^2) rescales lengths by s, so the
        # k-th tortoise derivative of the potential carries s^(-2-k).
        s = 3.0
        d1 = barrier_data(REF)
        d2 = barrier_data(
            BlackHoleParams(mass=s * REF.mass, charge=s * REF.charge, lam=REF.lam / s**2)
        )
        assert d2.r0 == pytest.approx(s * d1.r0, rel=1e-13)
        assert d2.V0 == pytest.approx(d1.V0 / s**2, rel=1e-12)
        assert d2.V2 == pytest.approx(d1.V2 / s**4, rel=1e-12)
        assert d2.V3 == pytest.approx(d1.V3 / s**5, rel=1e-11)
        assert d2.V4 == pytest.approx(d1.V4 / s**6, rel=1e-11)


class TestPseudopoleCoeffs:
    def test_frozen_coefficients(self, coeffs: PseudopoleCoeffs) -> None:
        assert coeffs.z0 == pytest.approx(REF_Z0, rel=1e-13)
        assert coeffs.omega == pytest.approx(REF_OMEGA, rel=1e-13)
        assert coeffs.b02 == pytest.approx(REF_B02, rel=1e-10)
        assert coeffs.b12 == pytest.approx(REF_B12, rel=1e-10)
        assert coeffs.e20 == pytest.approx(REF_E20, rel=1e-10)

    def test_first_order_is_damping_string(self, coeffs: PseudopoleCoeffs) -> None:
        # f1 contributes the equally spaced damping ladder
        # -i omega (2k+1) / (2 z0), independent of the angular index.
        for k, expected in ((0, -0.07475809088988918), (1, -0.22427427266966754)):
            val = coeffs.f1(2 * k + 1)
            assert val.real == pytest.approx(0.0, abs=1e-18)
            assert val.imag == pytest.approx(expected, rel=1e-12)

    def test_f2_even_in_parity_index(self, coeffs: PseudopoleCoeffs) -> None:
        for m in (1, 3, 5):
            a = coeffs.f2(m, form="m_even")
            b = coeffs.f2(-m, form="m_even")
            assert a == b
            assert a.imag == 0.0

    def test_f2_forms_differ_at_second_order(self, coeffs: PseudopoleCoeffs) -> None:
        a = coeffs.f2(1, form="m_even")
        b = coeffs.f2(1, form="m_linear")
        assert abs(a - b) > 1e-3

    def test_unknown_form_rejected(self, coeffs: PseudopoleCoeffs) -> None:
        with pytest.raises(ValueError):
            coeffs.f2(1, form="cubic")


class TestPseudopole:
    def test_orders_nest(self, data: BarrierData, coeffs: PseudopoleCoeffs) -> None:
        n = 10.0  # two_l = 19
        p0 = pseudopole(data, coeffs, 0, 19, order=0)
        p1 = pseudopole(data, coeffs, 0, 19, order=1)
        p2 = pseudopole(data, coeffs, 0, 19, order=2)
        assert p0.value == pytest.approx(n * REF_Z0, rel=1e-13)
        assert p1.value - p0.value == pytest.approx(coeffs.f1(1), abs=1e-15)
        assert p2.value - p1.value == pytest.approx(
            coeffs.f2(1, form=DEFAULT_F2_FORM) / n, abs=1e-15
        )

    def test_frozen_samples_default_form(
        self, data: BarrierData, coeffs: PseudopoleCoeffs
    ) -> None:
        expected = {
            (0, 19): 1.5439719098048907 - 0.07475809088988918j,
            (0, 39): 3.088584723239414 - 0.07475809088988918j,
            (1, 19): 1.5416949456226587 - 0.22427427266966754j,
            (1, 39): 3.087446241148298 - 0.22427427266966754j,
        }
        for (k, two_l), value in expected.items():
            got = pseudopole(data, coeffs, k, two_l, order=2, f2_form="m_even").value
            assert got == pytest.approx(value, rel=1e-12)

    def test_frozen_samples_linear_form(
        self, data: BarrierData, coeffs: PseudopoleCoeffs
    ) -> None:
        got = pseudopole(data, coeffs, 0, 19, order=2, f2_form="m_linear").value
        assert got == pytest.approx(1.5441145583685336 - 0.32387852332884964j, rel=1e-12)

    def test_damping_below_axis(self, data: BarrierData, coeffs: PseudopoleCoeffs) -> None:
        for k in (0, 1, 2):
            for two_l in (9, 19, 39):
                q = pseudopole(data, coeffs, k, two_l, order=2)
                assert q.value.imag < 0.0

    def test_multiplicity_convention(
        self, data: BarrierData, coeffs: PseudopoleCoeffs
    ) -> None:
        assert MULTIPLICITY_CONVENTION == "two_l_minus_one"
        q = pseudopole(data, coeffs, 0, 19, order=2)
        assert q.multiplicity == 18
        assert q.two_l == 19
        assert q.l == pytest.approx(9.5)
        assert q.n == pytest.approx(10.0)

    def test_mirror_flag(self, data: BarrierData, coeffs: PseudopoleCoeffs) -> None:
        # A directly computed pseudopole lives in the right half plane;
        # its reflected partner appears only through the lattice and is
        # tagged by the mirror flag.
        q = pseudopole(data, coeffs, 1, 39, order=2)
        assert q.mirror is False
        lat = lattice(data, coeffs, two_l_values=[39], k_values=[1])
        assert len(lat) == 2
        left, right = lat
        assert right.mirror is False and left.mirror is True
        assert left.value == -right.value.conjugate()
        assert left.multiplicity == right.multiplicity == 38

    def test_order_gap_shrinks_like_inverse_n(
        self, data: BarrierData, coeffs: PseudopoleCoeffs
    ) -> None:
        # The order-2 correction scales as 1/n, so doubling n halves
        # the gap between consecutive orders.
        gaps = {}
        for two_l in (19, 39):
            p1 = pseudopole(data, coeffs, 0, two_l, order=1)
            p2 = pseudopole(data, coeffs, 0, two_l, order=2)
            gaps[two_l] = abs(p2.value - p1.value)
        assert gaps[39] / gaps[19] == pytest.approx(0.5, rel=1e-12)

    def test_scaling_covariance_default_form(self) -> None:
        # Resonances are inverse lengths: under (M, Q, lam) ->
        # (sM, sQ, lam/s^2) every order of the expansion must scale as 1/s.
        s = 3.0
        d1 = barrier_data(REF)
        c1 = PseudopoleCoeffs.from_barrier(d1)
        d2 = barrier_data(
            BlackHoleParams(mass=s * REF.mass, charge=s * REF.charge, lam=REF.lam / s**2)
        )
        c2 = PseudopoleCoeffs.from_barrier(d2)
        for order in (0, 1, 2):
            a = pseudopole(d1, c1, 1, 39, order=order, f2_form="m_even").value
            b = pseudopole(d2, c2, 1, 39, order=order, f2_form="m_even").value
            assert abs(b - a / s) / abs(a / s) < 1e-10

    def test_linear_form_breaks_scaling(self) -> None:
        # Regression guard: the alternate second-order form mixes terms of
        # different physical dimension, so it cannot scale as an inverse
        # length.  Document the failure instead of hiding it.
        s = 3.0
        d1 = barrier_data(REF)
        c1 = PseudopoleCoeffs.from_barrier(d1)
        d2 = barrier_data(
            BlackHoleParams(mass=s * REF.mass, charge=s * REF.charge, lam=REF.lam / s**2)
        )
        c2 = PseudopoleCoeffs.from_barrier(d2)
        a = pseudopole(d1, c1, 1, 39, order=2, f2_form="m_linear").value
        b = pseudopole(d2, c2, 1, 39, order=2, f2_form="m_linear").value
        assert abs(b - a / s) / abs(a / s) > 1.0

    def test_eikonal_limit_without_charge(self) -> None:
        # As lam -> 0 at zero charge, the first-order pseudopole divided by
        # n = l + 1/2 approaches (1 - i(2k+1)/(2l+1)) / sqrt(27), linearly
        # in lam with slope 4.5.
        errors = []
        for lam in (1e-3, 1e-4, 1e-5):
            d = barrier_data(BlackHoleParams(mass=1.0, charge=0.0, lam=lam))
            c = PseudopoleCoeffs.from_barrier(d)
            two_l = 39
            n = (two_l + 1) / 2
            for k in (0, 1):
                q = pseudopole(d, c, k, two_l, order=1)
                limit = (1.0 - 1j * (2 * k + 1) / (two_l + 1)) / math.sqrt(27.0)
                errors.append(abs(q.value / n - limit) / abs(limit))
        assert errors[0] == pytest.approx(4.510171e-3, rel=1e-4)
        assert errors[2] == pytest.approx(4.501013e-4, rel=1e-4)
        assert errors[4] == pytest.approx(4.500101e-5, rel=1e-4)
        assert errors[0] / errors[2] == pytest.approx(10.0, rel=3e-3)
        assert errors[2] / errors[4] == pytest.approx(10.0, rel=3e-4)

    @pytest.mark.parametrize(
        "k, two_l, order",
        [(-1, 19, 2), (0, 20, 2), (0, -3, 2), (0, 19, 3)],
    )
    def test_invalid_indices_rejected(
        self, data: BarrierData, coeffs: PseudopoleCoeffs, k: int, two_l: int, order: int
    ) -> None:
        with pytest.raises(ValueError):
            pseudopole(data, coeffs, k, two_l, order=order)


class TestLattice:
    def test_cardinality_and_order(
        self, data: BarrierData, coeffs: PseudopoleCoeffs
    ) -> None:
        two_ls = list(range(1, 20, 2))
        ks = [0, 1, 2]
        lat = lattice(data, coeffs, two_l_values=two_ls, k_values=ks)
        assert len(lat) == 2 * len(two_ls) * len(ks)
        reals = [q.value.real for q in lat]
        assert reals == sorted(reals)

    def test_mirror_closure(self, data: BarrierData, coeffs: PseudopoleCoeffs) -> None:
        lat = lattice(data, coeffs, two_l_values=[9, 19, 39], k_values=[0, 1])
        vals = np.array([q.value for q in lat])
        dist = np.abs(vals[:, None] - (-np.conj(vals))[None, :])
        assert float(np.max(np.min(dist, axis=1))) == 0.0
