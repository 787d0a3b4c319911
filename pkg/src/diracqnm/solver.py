"""Resonance location for the per-mode radial operators.

Two independent numerical routes are provided:

* Jost/Wronskian continuation — the outgoing solutions are integrated
  from the far ends of (possibly bent) tortoise contours with their
  asymptotic phases stripped, and resonances are the zeros of the
  2x2 solution determinant.  Straight-line continuation is restricted
  to a shallow strip below the real axis; bent contours rotate the ends
  into the holomorphy cone so that the outgoing data stays recessive,
  reaching any target with |arg lambda| below the rotation angle.
* complex-scaled spectral collocation (see :mod:`diracqnm._scaled`,
  re-exported here) — an independent eigenvalue route used to
  cross-check the Wronskian zeros and to reach targets outside the
  strip.

Operator conventions, with q(x) = s n alpha(x), n = l + 1/2, s = +-1:

* ``dirac_minus`` / ``dirac_plus``: first-order system
  -i sigma3 d/dx + q sigma1 with s = -1 / +1 (the two signs are
  unitarily equivalent via sigma3 conjugation, so their resonance sets
  coincide; both are exposed because the structural identities are
  stated for the pair);
* ``schrodinger_minus`` / ``schrodinger_plus``: -d^2/dx^2 + n^2 alpha^2
  + s n alpha', the supersymmetric partner potentials obtained by
  squaring the Dirac system.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import linear_sum_assignment

from .barrier import (
    DEFAULT_F2_FORM,
    PseudopoleCoeffs,
    barrier_data,
    pseudopole,
)
from .contours import APERTURE, BentLine, ContourTransport, tail_flow_rhs
from .geometry import (
    BlackHoleParams,
    PotentialProfile,
    TortoiseMap,
    alpha_decay_amplitudes,
    flow_profile,
)

__all__ = [
    "KINDS",
    "ContinuationError",
    "ModeOperator",
    "JostSolution",
    "RefineResult",
    "ResonanceEntry",
    "ResonanceList",
    "MatchResult",
    "UnionReport",
    "strip_depth",
    "mode_operator",
    "dirac_jost",
    "wronskian",
    "refine",
    "count_zeros",
    "k_guess_from_value",
    "string_resonances",
    "match_multisets",
    "verify_union",
]

KINDS = ("dirac_minus", "dirac_plus", "schrodinger_minus", "schrodinger_plus")

_SCALED_API = ("ContourSpec", "ScaledResult", "default_contour", "scaled_spectrum")
__all__ += list(_SCALED_API)


def __getattr__(name: str):
    # The eigensolver half lives in _scaled, which imports this module's
    # types; resolving it lazily keeps the public surface in one place
    # without a circular import.
    if name in _SCALED_API:
        from . import _scaled

        return getattr(_scaled, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")

_STRIP_MARGIN = 0.8          # fraction of min surface gravity kept as strip
_STRAIGHT_TIP = 1e-14        # coupling size at straight-line truncation
_BENT_TIP = 1e-11            # coupling size at bent-arm truncation
_BENT_PHI = 0.28             # default arm rotation, inside the cone
_BEND = 15.0                 # half-width of the real central segment
_RATE_FLOOR = 0.01           # minimal recession rate for bent continuation
_EDGE_SPLIT = 8              # forced initial subdivision of rectangle edges
_ODE_RTOL = 1e-12
_ODE_ATOL = 1e-13


class ContinuationError(RuntimeError):
    """The requested spectral parameter is outside the validity region
    of the analytic continuation being attempted."""


def strip_depth(horizons) -> float:
    """Depth of the straight-line continuation strip below the real
    axis: a fixed fraction of the smaller surface gravity."""
    return _STRIP_MARGIN * min(horizons.kappa_minus, abs(horizons.kappa_plus))


@dataclass(frozen=True)
class ModeOperator:
    """One radial operator at fixed angular mode.

    ``two_l`` is the doubled (odd) angular index, so n = (two_l + 1)/2;
    ``two_l = -1`` selects the free system (no coupling), used as a
    numerical control.  The sampled potential profile spans the range
    where the coupling exceeds the straight-line truncation tip.
    """

    kind: str
    two_l: int
    params: BlackHoleParams
    profile: PotentialProfile
    tmap: TortoiseMap
    amp_minus: float
    amp_plus: float
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def l(self) -> float:
        return 0.5 * self.two_l

    @property
    def n(self) -> float:
        return 0.5 * (self.two_l + 1)

    @property
    def coupling_sign(self) -> int:
        return -1 if self.kind.endswith("_minus") else +1

    @property
    def is_dirac(self) -> bool:
        return self.kind.startswith("dirac")

    @property
    def strip(self) -> float:
        return strip_depth(self.tmap.horizons)

    def with_kind(self, kind: str) -> "ModeOperator":
        if kind not in KINDS:
            raise ValueError(f"unknown operator kind {kind!r}")
        return replace(self, kind=kind, _cache=self._cache)

    def transport(self, line) -> ContourTransport:
        key = ("transport", line)
        hit = self._cache.get(key)
        if hit is None:
            hit = ContourTransport(self.params, line, self.tmap)
            self._cache[key] = hit
        return hit


def mode_operator(
    params: BlackHoleParams,
    kind: str,
    two_l: int,
    *,
    tip: float = _STRAIGHT_TIP,
    dx: float = 0.1,
) -> ModeOperator:
    """Build a radial operator with truncation ranges sized so that the
    coupling n*alpha falls below ``tip`` at both ends of the profile."""
    if kind not in KINDS:
        raise ValueError(f"unknown operator kind {kind!r}")
    if two_l < -1 or two_l % 2 == 0:
        raise ValueError("two_l must be an odd integer >= -1")
    tmap = TortoiseMap.build(params)
    amp_minus, amp_plus = alpha_decay_amplitudes(params, tmap=tmap)
    horizons = tmap.horizons
    n = 0.5 * (two_l + 1)
    if n == 0:
        x_minus = x_plus = 40.0
    else:
        x_minus = max(60.0, math.log(n * amp_minus / tip) / horizons.kappa_minus + 8.0)
        x_plus = max(60.0, math.log(n * amp_plus / tip) / abs(horizons.kappa_plus) + 8.0)
    count = int(round((x_minus + x_plus) / dx)) + 1
    grid = np.linspace(-x_minus, x_plus, count)
    profile = flow_profile(params, grid, tmap=tmap)
    return ModeOperator(
        kind=kind,
        two_l=two_l,
        params=params,
        profile=profile,
        tmap=tmap,
        amp_minus=amp_minus,
        amp_plus=amp_plus,
    )


# ---------------------------------------------------------------------------
# contour selection


def _straight_line(op: ModeOperator) -> BentLine:
    x = op.profile.x
    return BentLine(t_min=float(x[0]), t_max=float(x[-1]), bend=_BEND, phi=0.0)


def _recession_rate(lam: complex, phi: float) -> float:
    """Inward decay rate of the contamination mode on arms rotated by
    ``phi`` (signed like Re lambda): positive means the stripped
    outgoing data is recessive and the bent continuation is valid."""
    return abs(lam.real) * math.sin(abs(phi)) - max(0.0, -lam.imag) * math.cos(phi)


def _bent_line(
    op: ModeOperator, lams, *, phi: float | None = None, x_pad: float = 0.0
) -> BentLine:
    """Choose a bent contour able to carry the Jost data for every
    target in ``lams``: all targets must lie on one side of the
    imaginary axis, with |arg| under the arm rotation.  ``x_pad``
    lengthens both arms (truncation-stability probes)."""
    lams = [complex(z) for z in lams]
    signs = {1 if z.real > 0 else -1 if z.real < 0 else 0 for z in lams}
    if 0 in signs or len(signs) != 1:
        raise ContinuationError("continuation invalid: use scaled method")
    side = signs.pop()
    if phi is None:
        phi = _BENT_PHI
    phi = side * min(abs(phi), APERTURE)
    rate = min(_recession_rate(z, phi) for z in lams)
    if rate < _RATE_FLOOR:
        raise ContinuationError("continuation invalid: use scaled method")
    arm = 14.0 / rate + 5.0
    horizons = op.tmap.horizons
    cos_phi = math.cos(phi)
    if op.n > 0:
        re_plus = math.log(op.n * op.amp_plus / _BENT_TIP) / abs(horizons.kappa_plus)
        re_minus = math.log(op.n * op.amp_minus / _BENT_TIP) / horizons.kappa_minus
        arm_plus = max(arm, (re_plus - _BEND) / cos_phi, 10.0)
        arm_minus = max(arm, (re_minus - _BEND) / cos_phi, 10.0)
    else:
        arm_plus = arm_minus = max(arm, 10.0)
    return BentLine(
        t_min=-_BEND - arm_minus - x_pad,
        t_max=_BEND + arm_plus + x_pad,
        bend=_BEND,
        phi=phi,
    )


# ---------------------------------------------------------------------------
# stripped Jost integration


def _jost_rhs(op: ModeOperator, lam: complex, line, side: int):
    """RHS of the stripped outgoing system with the radius/wave-speed
    flow riding along: y = [c1, c2, sigma, log alpha]."""
    transport = op.transport(line)
    deriv = tail_flow_rhs(op.params, op.tmap.horizons, transport.ref_index(side))
    n = op.n
    s = op.coupling_sign
    dirac = op.is_dirac
    two_i_lam = 2j * lam

    def rhs(t, y):
        wp = line.wprime(t)
        dsig, dla, r = deriv(y[2], wp)
        alpha = cmath.exp(y[3])
        if dirac:
            q = s * n * alpha
            if side > 0:
                dc1 = -1j * wp * q * y[1]
                dc2 = 1j * wp * q * y[0] - two_i_lam * wp * y[1]
            else:
                dc1 = two_i_lam * wp * y[0] - 1j * wp * q * y[1]
                dc2 = 1j * wp * q * y[0]
        else:
            u_pot = (n * alpha) ** 2 + s * n * alpha * (dla / wp)
            dc1 = wp * y[1]
            if side > 0:
                dc2 = wp * (u_pot * y[0] - two_i_lam * y[1])
            else:
                dc2 = wp * (u_pot * y[0] + two_i_lam * y[1])
        return [dc1, dc2, dsig, dla]

    return rhs


def _jost_solve(
    op: ModeOperator,
    lam: complex,
    line,
    side: int,
    t_target: float,
    t_eval=None,
    rtol: float = _ODE_RTOL,
):
    """Integrate the stripped system from the ``side`` end of ``line``
    to ``t_target``; returns the solve_ivp result."""
    transport = op.transport(line)
    t_end, sigma_end, logalpha_end = transport.end_state(side)
    if side > 0:
        y0 = [1.0 + 0j, 0j, sigma_end, logalpha_end]
    else:
        y0 = [0j, 1.0 + 0j, sigma_end, logalpha_end] if op.is_dirac else [
            1.0 + 0j,
            0j,
            sigma_end,
            logalpha_end,
        ]
    sol = solve_ivp(
        _jost_rhs(op, lam, line, side),
        (t_end, t_target),
        np.asarray(y0, dtype=complex),
        method="DOP853",
        rtol=rtol,
        atol=_ODE_ATOL,
        t_eval=t_eval,
        dense_output=False,
    )
    if not sol.success:
        raise RuntimeError(
            f"Jost propagation failed at t={sol.t[-1]!r}: {sol.message}"
        )
    return sol


def _reduced_pair(op, lam, line, side, t_target, rtol=_ODE_RTOL):
    sol = _jost_solve(op, lam, line, side, t_target, rtol=rtol)
    return complex(sol.y[0, -1]), complex(sol.y[1, -1])


@dataclass(frozen=True)
class JostSolution:
    """Outgoing solution on the real axis, in the normalization
    f+ ~ (e^{i lam x}, 0) as x -> +inf, f- ~ (0, e^{-i lam x}) as
    x -> -inf (components are (value, derivative/partner) rows)."""

    lam: complex
    side: int
    x: np.ndarray
    components: np.ndarray  # shape (2, len(x))


def dirac_jost(
    op: ModeOperator,
    lam: complex,
    side: int,
    x_eval=None,
    *,
    rtol: float = _ODE_RTOL,
) -> JostSolution:
    """Outgoing Jost solution of the first-order system on the real
    axis, integrated from the ``side`` end toward 0 and evaluated on the
    requested grid (default: the profile grid on that side)."""
    if not op.is_dirac:
        raise ValueError("dirac_jost requires a dirac kind")
    if side not in (+1, -1):
        raise ValueError("side must be +1 or -1")
    lam = complex(lam)
    if lam.imag < -op.strip:
        raise ContinuationError("continuation invalid: use scaled method")
    line = _straight_line(op)
    if x_eval is None:
        x = op.profile.x
        x = x[x >= 0.0] if side > 0 else x[x <= 0.0]
    else:
        x = np.atleast_1d(np.asarray(x_eval, dtype=float))
        if x.size == 0:
            raise ValueError("empty evaluation grid")
        lo, hi = (0.0, line.t_max) if side > 0 else (line.t_min, 0.0)
        if x.min() < lo - 1e-12 or x.max() > hi + 1e-12:
            raise ValueError("evaluation grid outside the integration range")
    order = np.argsort(x)[::-1] if side > 0 else np.argsort(x)
    t_eval = x[order]
    t_target = float(t_eval[-1])
    sol = _jost_solve(op, lam, line, side, t_target, t_eval=t_eval, rtol=rtol)
    comp = np.empty((2, x.size), dtype=complex)
    comp[:, order] = sol.y[:2, :]
    phase = np.exp(1j * lam * x) if side > 0 else np.exp(-1j * lam * x)
    return JostSolution(lam=lam, side=side, x=x, components=comp * phase)


def wronskian(
    op: ModeOperator,
    lam: complex,
    *,
    x_eval: float = 0.0,
    phi: float | None = None,
    bent: bool = False,
    rtol: float = _ODE_RTOL,
) -> complex:
    """Wronskian of the outgoing pair, constant in the evaluation point.

    With ``bent=False`` (default) the integration runs on the real axis
    and ``lam`` must lie above the continuation strip; with ``bent=True``
    the contour arms rotate by ``phi`` (default 0.28) into the
    holomorphy cone, which is valid whenever |arg lam| stays under the
    rotation.  Free-coupling normalization: Dirac kinds give W = 1,
    Schrodinger kinds give W = -2 i lam.
    """
    lam = complex(lam)
    if abs(x_eval) >= _BEND:
        raise ValueError(f"evaluation point must satisfy |x| < {_BEND}")
    if bent:
        line = _bent_line(op, [lam], phi=phi)
    else:
        if lam.imag < -op.strip:
            raise ContinuationError("continuation invalid: use scaled method")
        line = _straight_line(op)
    a_plus, b_plus = _reduced_pair(op, lam, line, +1, x_eval, rtol=rtol)
    a_minus, b_minus = _reduced_pair(op, lam, line, -1, x_eval, rtol=rtol)
    if op.is_dirac:
        return a_plus * b_minus - b_plus * a_minus
    # Schrodinger: here (a, b) = (g, dg/dw) for f+ = g e^{+i lam w} and
    # (h, dh/dw) for f- = h e^{-i lam w}; the stripped phases cancel.
    g, gp = a_plus, b_plus
    h, hp = a_minus, b_minus
    return g * hp - gp * h - 2j * lam * g * h


# ---------------------------------------------------------------------------
# zero finding


@dataclass(frozen=True)
class RefineResult:
    lam: complex
    residual: float
    simple: bool
    iterations: int


def refine(
    op: ModeOperator,
    lam0: complex,
    *,
    tol: float = 1e-10,
    max_iter: int = 50,
    rtol: float = _ODE_RTOL,
    x_pad: float = 0.0,
) -> RefineResult:
    """Newton iteration on the Wronskian from a seed, with
    central-difference derivatives; the contour is fixed once from the
    seed so every evaluation shares one transported background."""
    lam = complex(lam0)
    if lam.real == 0.0:
        raise ContinuationError("continuation invalid: use scaled method")
    # Reserve recession margin for Newton movement around the seed.
    line = _bent_line(op, [lam, lam - 0.1j * abs(lam)], x_pad=x_pad)

    def w_eval(z: complex) -> complex:
        ap, bp = _reduced_pair(op, z, line, +1, 0.0, rtol=rtol)
        am, bm = _reduced_pair(op, z, line, -1, 0.0, rtol=rtol)
        if op.is_dirac:
            return ap * bm - bp * am
        return ap * bm - bp * am - 2j * z * ap * am

    w0 = w_eval(lam)
    w_scale = abs(w0)
    move = 0.0
    w_prime = 0j
    iterations = 0
    for iterations in range(1, max_iter + 1):
        h = 1e-6 * max(abs(lam), 1e-6)
        w_prime = (w_eval(lam + h) - w_eval(lam - h)) / (2.0 * h)
        if w_prime == 0:
            raise RuntimeError("no zero near seed")
        w_here = w_eval(lam) if iterations > 1 else w0
        delta = -w_here / w_prime
        lam += delta
        move = abs(lam - lam0)
        if not np.isfinite([lam.real, lam.imag]).all() or move > 0.5 * max(
            abs(lam0), 1.0
        ):
            raise RuntimeError("no zero near seed")
        if abs(delta) <= tol * max(abs(lam), 1e-300):
            break
    else:
        raise RuntimeError("no zero near seed")
    residual = abs(w_eval(lam))
    derivative_scale = w_scale / max(move, tol * abs(lam), 1e-300)
    simple = abs(w_prime) >= 1e-6 * derivative_scale
    return RefineResult(lam=lam, residual=residual, simple=simple, iterations=iterations)


def count_zeros(
    op: ModeOperator,
    rectangle,
    *,
    phi: float | None = None,
    rtol: float = _ODE_RTOL,
    max_nudge: int = 5,
) -> int:
    """Number of Wronskian zeros inside a rectangle in the closed lower
    half-plane, by the argument principle with adaptive boundary
    sampling.  Degenerate rectangles count zero; a zero too close to the
    boundary triggers an outward nudge (up to ``max_nudge`` times)."""
    re0, re1 = sorted((float(rectangle[0]), float(rectangle[1])))
    im0, im1 = sorted((float(rectangle[2]), float(rectangle[3])))
    if im1 > 1e-12:
        raise ValueError("rectangle must lie in the closed lower half-plane")
    if re1 - re0 <= 0.0 or im1 - im0 <= 0.0:
        return 0
    if re0 <= 0.0 and re1 >= 0.0:
        raise ContinuationError("continuation invalid: use scaled method")

    pad = 1e-5 * max(re1 - re0, im1 - im0)
    for attempt in range(max_nudge + 1):
        corners = [
            complex(re0, im0),
            complex(re1, im0),
            complex(re1, im1),
            complex(re0, im1),
        ]
        line = _bent_line(op, corners, phi=phi)

        cache: dict[complex, complex] = {}

        def w_eval(z: complex) -> complex:
            hit = cache.get(z)
            if hit is None:
                ap, bp = _reduced_pair(op, z, line, +1, 0.0, rtol=rtol)
                am, bm = _reduced_pair(op, z, line, -1, 0.0, rtol=rtol)
                hit = (
                    ap * bm - bp * am
                    if op.is_dirac
                    else ap * bm - bp * am - 2j * z * ap * am
                )
                cache[z] = hit
            return hit

        try:
            total = 0.0
            floor = None
            for a, b in zip(corners, corners[1:] + corners[:1]):
                # Pre-split every edge: the termination test below reads
                # phases mod 2 pi, so a long edge whose true turn is
                # near a multiple of 2 pi (two zeros passing close by)
                # would alias to "small" and never subdivide.
                for j in range(_EDGE_SPLIT):
                    lo = a + (b - a) * (j / _EDGE_SPLIT)
                    hi = a + (b - a) * ((j + 1) / _EDGE_SPLIT)
                    total += _edge_phase(w_eval, lo, hi)
            floor = min(abs(v) for v in cache.values())
            scale = max(abs(v) for v in cache.values())
            if floor < 1e-8 * scale:
                raise _BoundaryZero()
            winding = total / (2.0 * math.pi)
            k = round(winding)
            if abs(winding - k) > 0.2:
                raise RuntimeError(
                    f"winding number failed to settle: {winding!r}"
                )
            return int(k)
        except _BoundaryZero:
            if attempt == max_nudge:
                raise RuntimeError(
                    "zero pinned to the rectangle boundary after nudges"
                ) from None
            re0 -= pad
            re1 += pad
            im0 -= pad
            im1 = min(im1 + pad, 0.0)
    raise AssertionError("unreachable")


class _BoundaryZero(Exception):
    pass


def _edge_phase(w_eval, a: complex, b: complex, depth: int = 0) -> float:
    """Accumulated argument increment of W along segment [a, b],
    bisecting until each piece turns by less than 1 radian and the
    magnitude moves by less than a fixed ratio (a nearby zero makes the
    magnitude dip even when the endpoint phases alias)."""
    wa, wb = w_eval(a), w_eval(b)
    if wa == 0 or wb == 0:
        raise _BoundaryZero()
    turn = cmath.phase(wb / wa)
    ratio = abs(wb / wa)
    if abs(turn) <= 1.0 and 0.25 <= ratio <= 4.0:
        return turn
    if depth >= 28:
        raise RuntimeError("boundary sampling failed to resolve the phase")
    mid = 0.5 * (a + b)
    return _edge_phase(w_eval, a, mid, depth + 1) + _edge_phase(
        w_eval, mid, b, depth + 1
    )


# ---------------------------------------------------------------------------
# resonance bookkeeping


@dataclass(frozen=True)
class ResonanceEntry:
    lam: complex
    kind: str
    two_l: int
    k_guess: int | None
    method: str
    residual: float
    matched_pseudopole: complex | None = None
    simple: bool = True


@dataclass(frozen=True)
class ResonanceList:
    entries: tuple[ResonanceEntry, ...]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def values(self) -> np.ndarray:
        return np.array([e.lam for e in self.entries], dtype=complex)

    def validate(self, residual_tol: float = 1e-8) -> None:
        for e in self.entries:
            if e.lam.imag >= 0.0:
                raise ValueError(f"resonance {e.lam!r} not in the lower half-plane")
            if e.residual > residual_tol:
                raise ValueError(
                    f"resonance {e.lam!r} residual {e.residual:.3e} above "
                    f"{residual_tol:.1e}"
                )

    def in_window(self, re0, re1, im0, im1) -> "ResonanceList":
        kept = tuple(
            e
            for e in self.entries
            if re0 <= e.lam.real <= re1 and im0 <= e.lam.imag <= im1
        )
        return ResonanceList(entries=kept)


def k_guess_from_value(op: ModeOperator, lam: complex) -> int:
    """Ladder index inferred from the damping rate: the imaginary parts
    of the barrier-top strings sit near -(2k+1) omega / (2 z0)."""
    data = barrier_data(op.params)
    step = data.omega / (2.0 * data.z0)
    return max(0, int(round((-lam.imag / step - 1.0) / 2.0)))


def string_resonances(
    op: ModeOperator,
    k_values,
    *,
    seed_order: int = 2,
    f2_form: str = DEFAULT_F2_FORM,
    mirror: bool = False,
    tol: float = 1e-10,
) -> ResonanceList:
    """Resonances of the barrier-top string located by Newton refinement
    from the asymptotic pseudopole seeds; with ``mirror=True`` the
    reflected partners (negative real part) are located directly with an
    oppositely rotated contour rather than by conjugation."""
    data = barrier_data(op.params)
    coeffs = PseudopoleCoeffs.from_barrier(data)
    entries = []
    for k in k_values:
        seed = pseudopole(data, coeffs, k, op.two_l, order=seed_order, f2_form=f2_form)
        reference = pseudopole(data, coeffs, k, op.two_l, order=2, f2_form=f2_form)
        targets = [seed.value]
        if mirror:
            targets.append(-seed.value.conjugate())
        for target in targets:
            result = refine(op, target, tol=tol)
            entries.append(
                ResonanceEntry(
                    lam=result.lam,
                    kind=op.kind,
                    two_l=op.two_l,
                    k_guess=k_guess_from_value(op, result.lam),
                    method="jost",
                    residual=result.residual,
                    matched_pseudopole=(
                        reference.value
                        if target.real > 0
                        else -reference.value.conjugate()
                    ),
                    simple=result.simple,
                )
            )
    return ResonanceList(entries=tuple(entries))


@dataclass(frozen=True)
class MatchResult:
    pairs: tuple[tuple[complex, complex], ...]
    unmatched_left: tuple[complex, ...]
    unmatched_right: tuple[complex, ...]
    max_error: float

    @property
    def matched(self) -> bool:
        return not self.unmatched_left and not self.unmatched_right


def match_multisets(left, right, tol: float = 1e-6) -> MatchResult:
    """Optimal pairing of two multisets of complex numbers; pairs with
    distance above ``tol`` are reported as unmatched on both sides."""
    left = [complex(z) for z in left]
    right = [complex(z) for z in right]
    if not left or not right:
        return MatchResult(
            pairs=(),
            unmatched_left=tuple(left),
            unmatched_right=tuple(right),
            max_error=0.0,
        )
    cost = np.abs(
        np.subtract.outer(np.asarray(left, complex), np.asarray(right, complex))
    )
    rows, cols = linear_sum_assignment(cost)
    pairs = []
    used_l, used_r = set(), set()
    max_error = 0.0
    for i, j in zip(rows, cols):
        if cost[i, j] <= tol:
            pairs.append((left[i], right[j]))
            used_l.add(i)
            used_r.add(j)
            max_error = max(max_error, float(cost[i, j]))
    return MatchResult(
        pairs=tuple(pairs),
        unmatched_left=tuple(z for i, z in enumerate(left) if i not in used_l),
        unmatched_right=tuple(z for j, z in enumerate(right) if j not in used_r),
        max_error=max_error,
    )


@dataclass(frozen=True)
class UnionReport:
    """Structural identities between the four per-mode resonance sets
    on a common window: the two Schrodinger partners agree, the two
    Dirac signs agree, the deduplicated Dirac union reproduces the
    nonzero Schrodinger set, and the whole set is mirror closed."""

    p_minus_vs_p_plus: MatchResult
    d_minus_vs_d_plus: MatchResult
    union_vs_p: MatchResult
    mirror_closure: MatchResult

    @property
    def passed(self) -> bool:
        return (
            self.p_minus_vs_p_plus.matched
            and self.d_minus_vs_d_plus.matched
            and self.union_vs_p.matched
            and self.mirror_closure.matched
        )


def _dedup(values, tol: float):
    out: list[complex] = []
    for z in sorted((complex(v) for v in values), key=lambda z: (z.real, z.imag)):
        if not out or abs(z - out[-1]) > tol:
            out.append(z)
    return out


def verify_union(two_l: int, lists: dict, tol: float = 1e-6) -> UnionReport:
    """Check the resonance-set identities between the four operator
    kinds; ``lists`` maps each kind to a ResonanceList or a sequence of
    complex values computed on a common window."""

    def vals(kind: str):
        entry = lists[kind]
        seq = entry.values() if isinstance(entry, ResonanceList) else entry
        return [complex(z) for z in seq if abs(complex(z)) > 10 * tol]

    pm, pp = vals("schrodinger_minus"), vals("schrodinger_plus")
    dm, dp = vals("dirac_minus"), vals("dirac_plus")
    union = _dedup(dm + dp, tol)
    everything = _dedup(pm + pp + dm + dp, tol)
    mirrored = [-z.conjugate() for z in everything]
    return UnionReport(
        p_minus_vs_p_plus=match_multisets(pm, pp, tol),
        d_minus_vs_d_plus=match_multisets(dm, dp, tol),
        union_vs_p=match_multisets(pm, union, tol),
        mirror_closure=match_multisets(everything, mirrored, tol),
    )
