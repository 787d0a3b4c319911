"""Integration contours in the complexified tortoise plane.

Two contour families parameterize the analytic continuations used by the
resonance solvers:

* :class:`BentLine` — real on [-bend, bend] with both ends rotated by a
  fixed angle phi (point-symmetric "Z" shape); used by the Wronskian
  zero-finder to keep outgoing data recessive below the real axis.
* :class:`SmoothRotation` — w(t) = t * exp(i theta s(t)) with a C^2
  smoothstep ramp s; used by the complex-scaled eigensolver.

A :class:`ContourTransport` carries (r, alpha) along a contour by
integrating the holomorphic flow

    dr/dw = F(r),    d(log alpha)/dw = (F'(r) - 2 F(r)/r) / 2

in log-log form: the radial state is sigma = log(r - r_h) relative to
the horizon that the side approaches, which keeps full relative
precision while r saturates exponentially at the horizon (|r - r_h|
down to ~1e-300 without collapsing onto the root), and log alpha tracks
the branch of sqrt(F)/r continuously without principal-branch surgery.
"""

from __future__ import annotations

import cmath
import math
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .geometry import (
    BlackHoleParams,
    ContourPinchError,
    HorizonData,
    TortoiseMap,
)

__all__ = [
    "BentLine",
    "SmoothRotation",
    "ContourTransport",
    "tail_flow_rhs",
]

_RTOL = 1e-12
_ATOL = 1e-13

# Holomorphy cone half-angle for contour rotations (rad).
APERTURE = 0.3


@dataclass(frozen=True)
class BentLine:
    """Piecewise-linear contour, real on [-bend, bend], ends rotated by
    ``phi``: w(t) = +-bend + (t -+ bend) e^{i phi} for |t| > bend.

    For phi > 0 the left end dips into the lower half-plane and the right
    end rises into the upper one, matching the recessive directions of
    outgoing waves at frequencies with positive real part.
    """

    t_min: float
    t_max: float
    bend: float
    phi: float

    def __post_init__(self) -> None:
        if not (self.t_min < -self.bend < 0.0 < self.bend < self.t_max):
            raise ValueError("need t_min < -bend < 0 < bend < t_max")
        if abs(self.phi) > APERTURE:
            raise ContourPinchError(
                f"rotation angle {self.phi:g} exceeds the holomorphy aperture {APERTURE:g}"
            )

    def w(self, t):
        t = np.asarray(t, dtype=float)
        rot = np.exp(1j * self.phi)
        out = np.where(
            t > self.bend,
            self.bend + (t - self.bend) * rot,
            np.where(t < -self.bend, -self.bend + (t + self.bend) * rot, t + 0j),
        )
        return out if out.shape else complex(out)

    def wprime(self, t):
        t = np.asarray(t, dtype=float)
        rot = np.exp(1j * self.phi)
        out = np.where(np.abs(t) > self.bend, rot, 1.0 + 0j)
        return out if out.shape else complex(out)

    def breakpoints(self) -> tuple[float, ...]:
        return (-self.bend, self.bend)


@dataclass(frozen=True)
class SmoothRotation:
    """Exterior-scaling contour w(t) = t exp(i theta s(t)) with an
    entire (tanh-pair) ramp s rising from ~0 inside |t| < ramp_start to
    ~1 beyond |t| > ramp_end; the barrier region stays real to ~1e-9.

    The ramp is analytic in a strip around the real t-axis (unlike a
    piecewise-polynomial smoothstep, which is only finitely smooth at
    the junctions), so a global spectral discretization of operators
    restricted to this contour converges exponentially.
    """

    t_min: float
    t_max: float
    theta: float
    ramp_start: float
    ramp_end: float

    def __post_init__(self) -> None:
        if not (0.0 < self.ramp_start < self.ramp_end):
            raise ValueError("need 0 < ramp_start < ramp_end")
        if not (self.t_min < 0.0 < self.t_max):
            raise ValueError("need t_min < 0 < t_max")
        if abs(self.theta) > APERTURE:
            raise ContourPinchError(
                f"rotation angle {self.theta:g} exceeds the holomorphy aperture {APERTURE:g}"
            )

    @property
    def _rate(self) -> float:
        # tanh(+-12/2) at the nominal ramp edges: the transition is
        # complete there to ~5e-6 and even (entire in t).
        return 12.0 / (self.ramp_end - self.ramp_start)

    @property
    def _center(self) -> float:
        return 0.5 * (self.ramp_start + self.ramp_end)

    def _ramp(self, t):
        k, c = self._rate, self._center
        return 1.0 + 0.5 * (np.tanh(k * (t - c)) - np.tanh(k * (t + c)))

    def _ramp_prime(self, t):
        k, c = self._rate, self._center
        # |arg| clipped before cosh: sech^2 underflows to 0 long before
        # the clip matters, and cosh(350)^2 stays inside double range.
        lo = np.cosh(np.clip(k * (t - c), -350.0, 350.0))
        hi = np.cosh(np.clip(k * (t + c), -350.0, 350.0))
        return 0.5 * k * (lo**-2.0 - hi**-2.0)

    def w(self, t):
        t = np.asarray(t, dtype=float)
        out = t * np.exp(1j * self.theta * self._ramp(t))
        return out if out.shape else complex(out)

    def wprime(self, t):
        t = np.asarray(t, dtype=float)
        s = self._ramp(t)
        sp = self._ramp_prime(t)
        out = np.exp(1j * self.theta * s) * (1.0 + 1j * self.theta * t * sp)
        return out if out.shape else complex(out)

    def breakpoints(self) -> tuple[float, ...]:
        return (-self.ramp_end, -self.ramp_start, self.ramp_start, self.ramp_end)


def tail_flow_rhs(params: BlackHoleParams, horizons: HorizonData, ref_index: int):
    """Scalar-complex RHS for the log-log tail flow on one side.

    Returns ``deriv(sigma, wp) -> (dsigma_dt, dlogalpha_dt, r)`` where
    sigma = log(r - roots[ref_index]) and wp = dw/dt.  The metric enters
    through the factorised quartic with the (r - r_ref) factor carried
    symbolically by sigma, so no cancellation occurs near the horizon.
    """
    roots = horizons.roots
    r_ref = roots[ref_index]
    others = [roots[i] for i in range(4) if i != ref_index]
    o0, o1, o2 = others
    lam3 = params.lam / 3.0
    M, Q2, lam = params.mass, params.charge**2, params.lam

    def deriv(sigma: complex, wp: complex):
        rho = cmath.exp(sigma)
        r = r_ref + rho
        reduced = -lam3 * (r - o0) * (r - o1) * (r - o2) / (r * r)  # F / rho
        F = reduced * rho
        F1 = 2.0 * M / (r * r) - 2.0 * Q2 / (r * r * r) - (2.0 * lam / 3.0) * r
        return wp * reduced, wp * 0.5 * (F1 - 2.0 * F / r), r

    return deriv


def _guard_events(horizons: HorizonData, ref_index: int):
    """Terminal events flagging a genuine pinch: the radius escaping
    toward the pole beyond the cosmological horizon or drifting into the
    inner-root region where the frame breaks down."""
    roots = horizons.roots
    r_ref = roots[ref_index]
    r_plus = horizons.r_plus
    inner_scale = 0.05 * horizons.r_minus

    def far(_t, y):
        r = r_ref + cmath.exp(complex(y[0]))
        return 40.0 * r_plus - abs(r)

    def inner(_t, y):
        r = r_ref + cmath.exp(complex(y[0]))
        d = min(abs(r), abs(r - roots[0]), abs(r - roots[1]))
        return d - inner_scale

    far.terminal = True
    inner.terminal = True
    return [far, inner]


class ContourTransport:
    """(r, alpha) transported along a contour, anchored at w(0) = 0.

    Integrates the tail flow once per side with dense output; ``state``,
    ``alpha`` and ``r`` then evaluate anywhere on the contour at the
    accuracy of the flow tolerance (the dense interpolant of the
    8th-order integrator), with no grid interpolation error.
    """

    def __init__(
        self,
        params: BlackHoleParams,
        contour,
        tmap: TortoiseMap | None = None,
        rtol: float = _RTOL,
        atol: float = _ATOL,
    ) -> None:
        self.params = params
        self.contour = contour
        self.tmap = tmap or TortoiseMap.build(params)
        h = self.tmap.horizons
        self._anchor_logalpha = complex(np.log(self.tmap.alpha(self.tmap.r0)))
        self._sides: dict[int, dict] = {}
        for sign, ref_index in ((-1, 2), (+1, 3)):
            end = contour.t_min if sign < 0 else contour.t_max
            if sign * end <= 0.0:
                continue
            stops = sorted(
                (b for b in contour.breakpoints() if 0.0 < sign * b < sign * end),
                key=abs,
            )
            ts = [0.0, *stops, end]
            deriv = tail_flow_rhs(params, h, ref_index)
            events = _guard_events(h, ref_index)

            def rhs(t, y, deriv=deriv):
                ds, dla, _ = deriv(complex(y[0]), complex(self.contour.wprime(t)))
                return [ds, dla]

            r_ref = h.roots[ref_index]
            y = np.array(
                [np.log(complex(self.tmap.r0 - r_ref)), self._anchor_logalpha],
                dtype=complex,
            )
            segs: list = []
            for ta, tb in zip(ts[:-1], ts[1:]):
                sol = solve_ivp(
                    rhs, (ta, tb), y, method="DOP853",
                    rtol=rtol, atol=atol, dense_output=True, events=events,
                )
                if sol.status == 1:
                    raise ContourPinchError("contour pinches horizon")
                if not sol.success:
                    raise ContourPinchError(
                        f"contour transport failed: {sol.message}"
                    )
                segs.append((ta, tb, sol))
                y = sol.y[:, -1]
            self._sides[sign] = {
                "ref_index": ref_index,
                "r_ref": r_ref,
                "segments": segs,
                "bounds": [s[1] for s in segs],
                "end_state": (end, complex(y[0]), complex(y[1])),
            }

    # -- queries ---------------------------------------------------------

    def _eval(self, t: float) -> tuple[complex, complex, float]:
        """(sigma, log_alpha, r_ref) at parameter t."""
        if t == 0.0:
            r_ref = self._sides[1]["r_ref"] if 1 in self._sides else self._sides[-1]["r_ref"]
            return np.log(complex(self.tmap.r0 - r_ref)), self._anchor_logalpha, r_ref
        side = self._sides[1 if t > 0 else -1]
        for ta, tb, sol in side["segments"]:
            if min(ta, tb) - 1e-12 <= t <= max(ta, tb) + 1e-12:
                y = sol.sol(t)
                return complex(y[0]), complex(y[1]), side["r_ref"]
        raise ValueError(f"parameter {t} outside the contour domain")

    def state(self, t: float) -> tuple[complex, complex]:
        """(r, log alpha) at contour parameter t."""
        sigma, la, r_ref = self._eval(t)
        return r_ref + cmath.exp(sigma), la

    def r(self, t: float) -> complex:
        return self.state(t)[0]

    def alpha(self, t: float) -> complex:
        return cmath.exp(self._eval(t)[1])

    def alpha_and_slope(self, t: float) -> tuple[complex, complex]:
        """(alpha, d alpha/dw) at contour parameter t."""
        sigma, la, r_ref = self._eval(t)
        rho = cmath.exp(sigma)
        r = r_ref + rho
        a = cmath.exp(la)
        roots = self.tmap.horizons.roots
        reduced = -(self.params.lam / 3.0)
        for ri in roots:
            if ri != r_ref:
                reduced *= r - ri
        reduced /= r * r
        F = reduced * rho  # factorised: no cancellation at the horizon
        M, Q2, lam = self.params.mass, self.params.charge**2, self.params.lam
        F1 = 2.0 * M / r**2 - 2.0 * Q2 / r**3 - (2.0 * lam / 3.0) * r
        return a, a * 0.5 * (F1 - 2.0 * F / r)

    def end_state(self, sign: int) -> tuple[float, complex, complex]:
        """(t_end, sigma_end, log_alpha_end) for the side of given sign."""
        return self._sides[sign]["end_state"]

    def ref_index(self, sign: int) -> int:
        return self._sides[sign]["ref_index"]
