"""Tests for the time-domain solver and ringdown analysis.

The integrator is validated against exact kernels (integer-cell
transport, pointwise rotation on constants, the Fourier-symbol matrix
exponential for constant coupling) before any black-hole run, and the
black-hole ringdown is compared against the frozen frequency-domain
resonances: the fitted dominant mode and local decay must match the
least-damped resonance, and the probe residual after subtracting a
resonance string must decay at the rate of the first string left out.
"""

from __future__ import annotations

import math
import struct
from types import SimpleNamespace

import numpy as np
import pytest
import scipy.linalg

from diracqnm import (
    Grid1D,
    SpinorField,
    cutoff_weights,
    evolve,
    expansion_residual,
    init_bump,
    load_snapshot,
    make_grid,
    ringdown_fit,
    save_snapshot,
    step,
)

# Frozen frequency-domain references (Newton-refined Wronskian zeros,
# cross-checked by the complex-scaled eigensolver to ~1e-12).
LAM_K0_N10 = 1.5439719304386275 - 0.07475414969402974j
LAM_K1_N10 = 1.541694965765096 - 0.22434991215595695j
LAM_K0_N20 = 3.0885847257659593 - 0.07475710624490343j


def free_op(n: float = 0.0, alpha: float = 0.0) -> SimpleNamespace:
    """Minimal operator stand-in: dirac kind with constant coupling."""
    return SimpleNamespace(
        is_dirac=True,
        coupling_sign=1,
        two_l=max(1, int(2 * n - 1)),
        n=n,
        tmap=SimpleNamespace(alpha_at_x=lambda x: alpha),
    )


def interior(grid: Grid1D, margin: float = 2.0) -> np.ndarray:
    x = grid.points()
    return (x > grid.x_min + margin) & (x < grid.x_max - margin)


class TestGrid:
    def test_validation(self):
        with pytest.raises(ValueError, match="at least 8"):
            Grid1D(x_min=0.0, x_max=1.0, N=4)
        with pytest.raises(ValueError, match="x_max"):
            Grid1D(x_min=1.0, x_max=0.0, N=64)

    def test_points_cached_and_uniform(self):
        g = Grid1D(x_min=-2.0, x_max=3.0, N=51)
        assert g.points() is g.points()
        assert g.dx == pytest.approx(0.1, abs=1e-15)
        assert np.allclose(np.diff(g.points()), g.dx, atol=1e-13)

    def test_make_grid_snaps_to_step_and_kills_coupling(self, make_op):
        from diracqnm.geometry import flow_profile

        op = make_op("dirac_minus", 19)
        g = make_grid(op, dx=0.1)
        assert g.dx == pytest.approx(0.1, abs=1e-12)
        # transparent boundaries need negligible coupling at both ends
        ends = flow_profile(
            op.params, np.array([g.x_min, g.x_max]), tmap=op.tmap
        )
        assert np.all(op.n * np.abs(ends.alpha) < 1e-10)
        # and the barrier top must be comfortably interior
        assert g.x_min < -50.0 and g.x_max > 50.0


class TestCutoffWeights:
    def test_plateau_taper_and_support(self):
        g = Grid1D(x_min=-20.0, x_max=20.0, N=401)
        w = cutoff_weights(g, -15.0, 15.0)
        x = g.points()
        assert np.all(w[(x > -14.7) & (x < 14.7)] == 1.0)
        assert np.all(w[(x < -15.0 - 1e-12) | (x > 15.0 + 1e-12)] == 0.0)
        edge = np.isclose(np.abs(x), 14.9)
        assert np.all((w[edge] > 0.0) & (w[edge] < 1.0))

    def test_rejects_empty_window(self):
        g = Grid1D(x_min=-20.0, x_max=20.0, N=401)
        with pytest.raises(ValueError, match="b > a"):
            cutoff_weights(g, 3.0, 3.0)


class TestInitBump:
    def test_unit_norm_and_exact_support(self):
        g = Grid1D(x_min=-30.0, x_max=30.0, N=601)
        f = init_bump(g, 2.0, 5.0)
        assert f.norm() == pytest.approx(1.0, abs=1e-12)
        x = g.points()
        outside = (x < 2.0 - 5.0 - 1e-12) | (x > 2.0 + 5.0 + 1e-12)
        assert np.all(f.u[outside] == 0.0)
        assert np.all(f.v[outside] == 0.0)
        assert abs(f.u[np.argmin(np.abs(x - 2.0))]) > 0.1

    def test_component_mix(self):
        g = Grid1D(x_min=-30.0, x_max=30.0, N=601)
        f = init_bump(g, 0.0, 5.0, component_mix=(1.0, 0.0))
        assert np.all(f.v == 0.0)
        assert f.norm() == pytest.approx(1.0, abs=1e-12)
        f2 = init_bump(g, 0.0, 5.0, component_mix=(1.0, 1j))
        assert np.allclose(f2.v, 1j * f2.u, atol=1e-15)

    def test_validation(self):
        g = Grid1D(x_min=-30.0, x_max=30.0, N=601)
        with pytest.raises(ValueError, match="width"):
            init_bump(g, 0.0, -1.0)
        with pytest.raises(ValueError, match="support"):
            init_bump(g, 28.0, 5.0)
        with pytest.raises(ValueError, match="mix"):
            init_bump(g, 0.0, 5.0, component_mix=(0.0, 0.0))

    def test_smoothness_at_support_edge(self):
        # squared-cosine taper: value, slope and curvature all vanish at
        # the support boundary, so grid-scale content stays negligible
        g = Grid1D(x_min=-30.0, x_max=30.0, N=6001)
        f = init_bump(g, 0.0, 5.0)
        x = g.points()
        i_edge = int(np.argmin(np.abs(x - 5.0)))
        d2 = np.abs(np.diff(f.u.real, 2))
        assert d2[i_edge - 1] < 5.0 * np.max(d2) * g.dx


class TestStep:
    def test_requires_dirac_kind(self, make_op):
        op = make_op("schrodinger_minus", 19)
        g = Grid1D(x_min=-10.0, x_max=10.0, N=64)
        f = SpinorField(grid=g, u=np.zeros(64, complex), v=np.zeros(64, complex))
        with pytest.raises(ValueError, match="dirac"):
            step(op, f, 0.1)

    def test_cfl_guard(self):
        g = Grid1D(x_min=-10.0, x_max=10.0, N=201)
        f = init_bump(g, 0.0, 3.0)
        with pytest.raises(ValueError, match="CFL"):
            step(free_op(), f, 2.0 * g.dx)

    def test_free_transport_is_exact_roll(self):
        g = Grid1D(x_min=-10.0, x_max=10.0, N=201)
        f = init_bump(g, 0.0, 3.0)
        out = step(free_op(), f, g.dx)
        assert np.max(np.abs(out.u - np.roll(f.u, 1))) < 1e-15
        assert np.max(np.abs(out.v - np.roll(f.v, -1))) < 1e-15

    def test_constant_coupling_rotates_constants_exactly(self):
        g = Grid1D(x_min=-10.0, x_max=10.0, N=201)
        q = 1 * 0.7  # coupling_sign * n * alpha
        op = free_op(n=1.0, alpha=0.7)
        ones = np.ones(g.N, complex)
        out = step(op, SpinorField(grid=g, u=ones, v=0 * ones), g.dx)
        phi = g.dx * q
        inner = interior(g, margin=0.5)
        assert np.max(np.abs(out.u[inner] - math.cos(phi))) < 1e-14
        assert np.max(np.abs(out.v[inner] + 1j * math.sin(phi))) < 1e-14

    def test_reversibility(self, make_op):
        op = make_op("dirac_minus", 19)
        g = make_grid(op, dx=0.1)
        f = init_bump(g, 0.0, 6.0)
        back = step(op, step(op, f, g.dx), -g.dx)
        assert np.max(np.abs(back.u - f.u)) < 1e-13
        assert np.max(np.abs(back.v - f.v)) < 1e-13

    def test_fractional_shift_exact_on_cubics(self):
        g = Grid1D(x_min=0.0, x_max=20.0, N=201)
        x = g.points()
        f = SpinorField(grid=g, u=(x / 10.0) ** 3 + 0j, v=np.zeros(g.N, complex))
        dt = 0.5 * g.dx
        out = step(free_op(), f, dt)
        inner = interior(g, margin=1.0)
        exact = ((x[inner] - dt) / 10.0) ** 3
        assert np.max(np.abs(out.u[inner] - exact)) < 1e-12

    def test_constant_coupling_matches_symbol_exponential(self):
        # plane wave under constant coupling: the Fourier symbol
        # [[xi, q], [q, -xi]] gives the exact propagator by expm
        dx = 1e-3
        g = Grid1D(x_min=-4.0, x_max=4.0, N=8001)
        x = g.points()
        xi, q, T = 1.0, 0.5, 2.0
        f = SpinorField(grid=g, u=np.exp(1j * xi * x), v=np.zeros(g.N, complex))
        op = free_op(n=1.0, alpha=q)
        steps = int(round(T / dx))
        for _ in range(steps):
            f = step(op, f, dx)
        sym = np.array([[xi, q], [q, -xi]], dtype=complex)
        uv = scipy.linalg.expm(-1j * sym * T) @ np.array([1.0, 0.0])
        mid = np.abs(x) < 1.0
        wave = np.exp(1j * xi * x[mid])
        assert np.max(np.abs(f.u[mid] - uv[0] * wave)) < 1e-6
        assert np.max(np.abs(f.v[mid] - uv[1] * wave)) < 1e-6


class TestEvolve:
    def test_boundary_coupling_invariant(self, make_op):
        op = make_op("dirac_minus", 19)
        g = Grid1D(x_min=-5.0, x_max=5.0, N=101)
        f = init_bump(g, 0.0, 3.0)
        with pytest.raises(ValueError, match="transparent-boundary"):
            evolve(op, f, 1.0, (-2.0, 2.0))

    def test_nan_abort(self):
        g = Grid1D(x_min=-10.0, x_max=10.0, N=201)
        u = np.zeros(g.N, complex)
        u[100] = np.nan
        f = SpinorField(grid=g, u=u, v=np.zeros(g.N, complex))
        with pytest.raises(RuntimeError, match="lost finiteness"):
            evolve(free_op(), f, 1.0, (-5.0, 5.0))

    def test_free_norm_conserved_until_outflow(self):
        g = Grid1D(x_min=-40.0, x_max=40.0, N=801)
        f = init_bump(g, 0.0, 5.0)
        trace = evolve(free_op(), f, 30.0, (-10.0, 10.0))
        assert np.max(np.abs(trace.global_norm - 1.0)) < 1e-10

    def test_trace_layout(self, ringdown_trace):
        trace = ringdown_trace(19)
        n = len(trace.times)
        assert trace.times[0] == 0.0
        assert trace.times[-1] == pytest.approx(100.0, abs=1e-9)
        assert trace.global_norm.shape == (n,)
        assert trace.local_norm.shape == (n,)
        assert trace.probe.shape == (n,)
        assert abs(trace.probe_x) <= 0.05 + 1e-12  # snapped to the grid
        assert trace.window_history.shape == (n, 2, len(trace.window_x))
        assert np.all(np.abs(trace.window_x) <= 15.0 + 1e-12)

    def test_norm_drift_tiny_before_outflow(self, ringdown_trace):
        trace = ringdown_trace(19)
        assert np.max(np.abs(trace.global_norm - trace.global_norm[0])) < 1e-10

    def test_local_norm_decays_monotonically_at_checkpoints(self, ringdown_trace):
        trace = ringdown_trace(19)
        vals = [
            trace.local_norm[np.argmin(np.abs(trace.times - t))]
            for t in (25.0, 40.0, 60.0, 80.0)
        ]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_local_decay_rate_matches_least_damped_mode(self, ringdown_trace):
        trace = ringdown_trace(19)
        m = (trace.times >= 45.0) & (trace.times <= 85.0)
        slope = np.polyfit(trace.times[m], np.log(trace.local_norm[m]), 1)[0]
        target = LAM_K0_N10.imag
        assert abs(slope - target) < 0.05 * abs(target)

    def test_snapshots_and_history_toggle(self, make_op):
        op = make_op("dirac_minus", 19)
        g = make_grid(op, dx=0.1)
        f = init_bump(g, 0.0, 6.0)
        trace, snaps = evolve(
            op, f, 5.0, (-15.0, 15.0),
            snapshot_times=[0.0, 2.5], keep_history=False,
        )
        assert trace.window_history is None and trace.window_x is None
        assert [t for t, _ in snaps] == [0.0, 2.5]
        assert snaps[1][1].norm() == pytest.approx(1.0, abs=1e-9)

    def test_probe_x_is_honored(self, make_op):
        op = make_op("dirac_minus", 19)
        g = make_grid(op, dx=0.1)
        f = init_bump(g, 0.0, 6.0)
        trace = evolve(op, f, 2.0, (-15.0, 15.0), probe_x=3.0, keep_history=False)
        assert abs(trace.probe_x - 3.0) <= 0.05 + 1e-12  # snapped to the grid


def synthetic_trace(lams, amps, T=60.0, dt=0.05, noise=0.0, seed=None):
    t = np.arange(0.0, T + dt / 2, dt)
    y = sum(a * np.exp(-1j * lam * t) for lam, a in zip(lams, amps))
    if noise:
        rng = np.random.default_rng(seed)
        y = y + noise * (rng.standard_normal(len(t)) + 1j * rng.standard_normal(len(t)))
    from diracqnm import EnergyTrace

    return EnergyTrace(
        times=t,
        global_norm=np.abs(y),
        local_norm=np.abs(y),
        window=(0.0, 1.0),
        probe=y,
        probe_x=0.0,
    )


class TestRingdownFit:
    def test_single_mode_recovery(self):
        lam = 1.0 - 0.1j
        t = np.arange(0.0, 40.0, 0.05)
        y = 0.3 * np.exp(-1j * lam * t)
        fit = ringdown_fit(y, 1, times=t)
        assert fit.order_used == 1
        assert abs(fit.modes[0].lam - lam) < 1e-10
        assert abs(fit.modes[0].amplitude - 0.3) < 1e-10
        assert fit.residual < 1e-12

    def test_two_modes_with_noise(self):
        lams = (1.0 - 0.1j, 0.6 - 0.3j)
        trace = synthetic_trace(lams, (1.0, 0.5), noise=1e-3, seed=7)
        fit = ringdown_fit(trace, 8, window=(0.0, 40.0))
        for lam in lams:
            best = min(fit.modes, key=lambda m: abs(m.lam - lam))
            assert abs(best.lam - lam) < 5e-3

    def test_order_auto_reduction_on_clean_signal(self):
        trace = synthetic_trace((1.0 - 0.1j, 0.6 - 0.3j), (1.0, 0.5))
        fit = ringdown_fit(trace, 6, window=(0.0, 40.0))
        assert fit.order_requested == 6
        assert fit.order_used == 2
        assert fit.residual < 1e-10

    def test_dominant_picks_largest_amplitude(self):
        trace = synthetic_trace((1.0 - 0.1j, 0.6 - 0.3j), (0.2, 0.9))
        fit = ringdown_fit(trace, 4, window=(0.0, 30.0))
        assert abs(fit.dominant().lam - (0.6 - 0.3j)) < 1e-8

    def test_validation(self):
        t = np.arange(0.0, 10.0, 0.1)
        y = np.exp(-1j * (1 - 0.1j) * t)
        with pytest.raises(ValueError, match="at least 1"):
            ringdown_fit(y, 0, times=t)
        with pytest.raises(ValueError, match="times are required"):
            ringdown_fit(y, 2)
        with pytest.raises(ValueError, match="too short"):
            ringdown_fit(y[:5], 2, times=t[:5])
        tt = t.copy()
        tt[3] += 0.03
        with pytest.raises(ValueError, match="uniformly"):
            ringdown_fit(y, 2, times=tt)
        with pytest.raises(ValueError, match="numerically zero"):
            ringdown_fit(np.zeros(64, complex), 2, times=np.arange(64) * 0.1)

    def test_black_hole_dominant_matches_least_damped_resonance(
        self, ringdown_trace
    ):
        fit = ringdown_fit(ringdown_trace(19), 10, window=(25.0, 90.0))
        lam = fit.dominant().lam
        if lam.real < 0:  # the mirror partner may carry the larger amplitude
            lam = -lam.conjugate()
        assert abs(lam.real - LAM_K0_N10.real) < 0.01 * abs(LAM_K0_N10.real)
        assert abs(lam.imag - LAM_K0_N10.imag) < 0.01 * abs(LAM_K0_N10.imag)

    def test_frequency_consistency_across_angular_momentum(self, ringdown_trace):
        # the n=20 run needs the finer step: splitting error grows as
        # (n dt)^2, so dx = 0.05 keeps it within the same 1% band
        fit = ringdown_fit(ringdown_trace(39, dx=0.05), 10, window=(25.0, 90.0))
        lam = fit.dominant().lam
        if lam.real < 0:
            lam = -lam.conjugate()
        assert abs(lam.real - LAM_K0_N20.real) < 0.01 * abs(LAM_K0_N20.real)
        assert abs(lam.imag - LAM_K0_N20.imag) < 0.01 * abs(LAM_K0_N20.imag)


class TestExpansionResidual:
    def test_synthetic_remainder_decays_at_first_omitted_rate(self):
        lams = (1.0 - 0.1j, 0.8 - 0.5j)
        trace = synthetic_trace(lams, (1.0, 0.7))
        slope = expansion_residual(trace, [lams[0]])
        assert abs(slope - (-0.5)) < 0.05

    def test_empty_list_gives_full_signal_slope(self):
        trace = synthetic_trace((1.0 - 0.1j, 0.8 - 0.5j), (1.0, 0.7))
        slope = expansion_residual(trace, [])
        assert abs(slope - (-0.1)) < 0.02

    def test_unmatched_resonance_is_an_error(self):
        trace = synthetic_trace((1.0 - 0.1j,), (1.0,))
        with pytest.raises(ValueError, match="no fitted counterpart"):
            expansion_residual(trace, [3.0 - 1.0j])

    def test_short_slope_window_is_an_error(self):
        trace = synthetic_trace((1.0 - 0.1j,), (1.0,))
        with pytest.raises(ValueError, match="too few samples"):
            expansion_residual(
                trace, [], fit_window=(0.0, 60.0), slope_window=(10.0, 10.1)
            )

    def test_black_hole_slope_ladder(self, ringdown_trace):
        # subtracting successive resonance strings must steepen the decay
        # to the rate of the first string left out
        trace = ringdown_trace(19)
        strings = [
            LAM_K0_N10,
            -LAM_K0_N10.conjugate(),
            LAM_K1_N10,
            -LAM_K1_N10.conjugate(),
        ]
        s_none = expansion_residual(trace, [])
        s_k0 = expansion_residual(trace, strings[:2])
        s_both = expansion_residual(trace, strings)
        assert abs(s_none - LAM_K0_N10.imag) < 0.01
        assert abs(s_k0 - LAM_K1_N10.imag) < 0.03
        assert s_both < 0.9 * LAM_K1_N10.imag
        assert s_both < s_k0 < s_none


class TestSnapshot:
    def test_roundtrip(self, tmp_path):
        g = Grid1D(x_min=-10.0, x_max=10.0, N=201)
        f = init_bump(g, 0.0, 4.0, component_mix=(1.0, 0.5j))
        path = tmp_path / "field.snap"
        save_snapshot(path, f, 12.5)
        t, dx, u, v = load_snapshot(path)
        assert t == 12.5
        assert dx == pytest.approx(g.dx, abs=1e-15)
        assert np.array_equal(u, f.u)
        assert np.array_equal(v, f.v)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.snap"
        path.write_bytes(b"NOTASNAP" + b"\0" * 64)
        with pytest.raises(ValueError, match="magic"):
            load_snapshot(path)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "short.snap"
        path.write_bytes(b"\0" * 10)
        with pytest.raises(ValueError, match="truncated"):
            load_snapshot(path)

    def test_payload_size_mismatch(self, tmp_path):
        g = Grid1D(x_min=-10.0, x_max=10.0, N=201)
        f = init_bump(g, 0.0, 4.0)
        path = tmp_path / "cut.snap"
        save_snapshot(path, f, 0.0)
        data = path.read_bytes()
        path.write_bytes(data[:-16])
        with pytest.raises(ValueError, match="size"):
            load_snapshot(path)


class TestConvergence:
    def test_second_order_in_time_step(self, make_op):
        op = make_op("dirac_minus", 19)

        def run(dx):
            n = round(430.0 / dx)
            grid = Grid1D(x_min=-140.0, x_max=290.0, N=n + 1)
            f = init_bump(grid, 0.0, 6.0)
            _, snaps = evolve(
                op, f, 30.0, (-15.0, 15.0),
                keep_history=False, snapshot_times=[30.0],
            )
            return grid, snaps[0][1]

        g_ref, f_ref = run(0.025)

        def err(g, f):
            stride = round(g.dx / g_ref.dx)
            du = f.u - f_ref.u[::stride]
            dv = f.v - f_ref.v[::stride]
            return math.sqrt(float(np.sum(np.abs(du) ** 2 + np.abs(dv) ** 2)) * g.dx)

        e_coarse = err(*run(0.2))
        e_fine = err(*run(0.1))
        ratio = e_coarse / e_fine
        assert 3.2 < ratio < 5.2
