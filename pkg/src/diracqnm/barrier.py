"""Barrier-top asymptotics: the lattice of approximate resonances.

The trapping maximum of the mode potential V = alpha**2 generates, for
large angular number, a regular lattice of approximate resonances
("pseudopoles").  With n = l + 1/2 and m = 2k + 1 (k = overtone index),

    value(k, l) = n z0 + f1(m) + f2(m)/n   (truncated at the given order)

where z0 = sqrt(V(0)), omega = sqrt(|V''(0)|/2) and f1(m) =
-(i omega / (2 z0)) m.

Two conventions for the second correction f2 are provided (selected by
``f2_form``), because they disagree and only one is dimensionally
homogeneous; the direct solvers arbitrate which one tracks the true
resonances at second order (see DEFAULT_F2_FORM):

* ``"m_even"`` — second-order barrier-top perturbation theory for the
  partner operators -d^2/dx^2 + (n alpha)^2 +- n alpha', with the linear
  term of alpha' absorbed by completing the square.  The m-linear terms
  cancel identically and

      f2(m) = (omega^2/(8 z0^3) - omega*b02/(4 z0)) m^2 + e20/(2 z0),
      e20   = -V''''(0)/(64 omega^2) - 7 V'''(0)^2/(1152 omega^4)
              + omega^2/(4 z0^2),

  which is real, and homogeneous under the geometric scaling law.

* ``"m_linear"`` — the bracket convention

      f2(m) = f1(m) * [ -omega m/(4i z0^2) + b02 m/(2i) + b12 ],
      b12   = 1/(8 z0^3) - (3/(8 z0 omega^2)) V'''(0),

  whose b12 constant is dimensionally inhomogeneous (the 1/(8 z0^3)
  term carries length^3); it is kept for comparison and regression
  tests.

Both share

    b02 = (15/(4*144)) V'''(0)^2 / omega^5 + V''''(0) / (32 omega^3),

whose m^2 bracket is confirmed independently by the perturbative
derivation.

Every lattice point is accompanied by its mirror image -conj(value); the
reported multiplicity follows the 2l - 1 bookkeeping convention (flagged
in metadata because the harmonic degeneracy of the angular reduction
would suggest 2l + 1; see MULTIPLICITY_CONVENTION).

Half-integer angular numbers are carried exactly as the odd integer
``two_l`` = 2l, so n = (two_l + 1)/2 is an exact integer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .geometry import BlackHoleParams, barrier_radius, potential_derivatives

__all__ = [
    "MULTIPLICITY_CONVENTION",
    "DEFAULT_F2_FORM",
    "BarrierData",
    "PseudopoleCoeffs",
    "Pseudopole",
    "barrier_data",
    "pseudopole",
    "lattice",
]

# The multiplicity column reports 2l - 1; the angular degeneracy argument
# would give 2l + 1.  Recorded, not resolved: downstream consumers can
# re-weight using two_l.
MULTIPLICITY_CONVENTION = "two_l_minus_one"

# Second-order convention validated against the direct (Wronskian)
# solver; see the module docstring for both candidates.
DEFAULT_F2_FORM = "m_even"


@dataclass(frozen=True)
class BarrierData:
    """Derivatives of the mode potential at its trapping maximum.

    x0 = 0 by the tortoise normalisation; V1 vanishes there and V2 < 0.
    z0 = sqrt(V0) sets the real spacing of the lattice, omega =
    sqrt(|V2|/2) the imaginary spacing.
    """

    params: BlackHoleParams
    r0: float
    V0: float
    V2: float
    V3: float
    V4: float

    x0: float = 0.0

    @property
    def z0(self) -> float:
        return math.sqrt(self.V0)

    @property
    def omega(self) -> float:
        return math.sqrt(-0.5 * self.V2)


def barrier_data(params: BlackHoleParams) -> BarrierData:
    """Evaluate the barrier-top data, cross-checking the chain-rule
    derivatives against the closed forms for the height and curvature."""
    r0 = barrier_radius(params)
    V0, V1, V2, V3, V4 = potential_derivatives(params, r0)
    height = (params.mass * r0 - params.charge**2 - (params.lam / 3.0) * r0**4) / r0**4
    curvature = (
        -2.0 * (3.0 * params.mass / r0 - 4.0 * params.charge**2 / r0**2) * height**2
    )
    if abs(V0 - height) > 1e-8 * abs(height):
        raise RuntimeError("barrier height cross-check failed")
    if abs(V2 - curvature) > 1e-8 * abs(curvature):
        raise RuntimeError("barrier curvature cross-check failed")
    if abs(V1) > 1e-10:
        raise RuntimeError("potential not critical at the barrier radius")
    if not V2 < 0.0:
        raise RuntimeError("barrier maximum is degenerate")
    return BarrierData(params=params, r0=r0, V0=V0, V2=V2, V3=V3, V4=V4)


@dataclass(frozen=True)
class PseudopoleCoeffs:
    """Correction closures entering the lattice through order n**-2."""

    z0: float
    omega: float
    b02: float
    b12: float
    e20: float

    @classmethod
    def from_barrier(cls, data: BarrierData) -> "PseudopoleCoeffs":
        om, z0 = data.omega, data.z0
        b02 = (15.0 / (4.0 * 144.0)) * data.V3**2 / om**5 + data.V4 / (32.0 * om**3)
        b12 = 1.0 / (8.0 * z0**3) - (3.0 / (8.0 * z0 * om**2)) * data.V3
        e20 = (
            -data.V4 / (64.0 * om**2)
            - 7.0 * data.V3**2 / (1152.0 * om**4)
            + om**2 / (4.0 * z0**2)
        )
        return cls(z0=z0, omega=om, b02=b02, b12=b12, e20=e20)

    def f1(self, m: int) -> complex:
        """First correction; m = 2k + 1."""
        return -1j * self.omega / (2.0 * self.z0) * m

    def f2(self, m: int, form: str = DEFAULT_F2_FORM) -> complex:
        """Second correction; m = 2k + 1.  See the module docstring for
        the two conventions."""
        if form == "m_even":
            quad = self.omega**2 / (8.0 * self.z0**3) - self.omega * self.b02 / (
                4.0 * self.z0
            )
            return complex(quad * m**2 + self.e20 / (2.0 * self.z0))
        if form == "m_linear":
            # the bracket is kept exactly in the tabulated form, with
            # 1/(4i z0^2) = -i/(4 z0^2) and 1/(2i) = -i/2
            bracket = (
                -self.omega * m / (4j * self.z0**2)
                + self.b02 * m / (2j)
                + self.b12
            )
            return self.f1(m) * bracket
        raise ValueError(f"unknown f2 form: {form!r}")


@dataclass(frozen=True)
class Pseudopole:
    """One lattice point: overtone k, angular number l = two_l/2, the
    truncation order in 1/n, the complex frequency, whether this entry is
    the reflected partner, and the recorded multiplicity (2l - 1)."""

    k: int
    two_l: int
    order: int
    value: complex
    mirror: bool
    multiplicity: int

    @property
    def l(self) -> float:
        return 0.5 * self.two_l

    @property
    def n(self) -> int:
        return (self.two_l + 1) // 2


def pseudopole(
    data: BarrierData,
    coeffs: PseudopoleCoeffs,
    k: int,
    two_l: int,
    order: int = 2,
    f2_form: str = DEFAULT_F2_FORM,
) -> Pseudopole:
    """Lattice value n*z0 + f1 + f2/n truncated at ``order`` in 1/n."""
    if k < 0:
        raise ValueError("overtone index k must be >= 0")
    if two_l < 1 or two_l % 2 == 0:
        raise ValueError("two_l must be a positive odd integer (half-integer l)")
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    n = (two_l + 1) // 2
    m = 2 * k + 1
    value = complex(n * coeffs.z0)
    if order >= 1:
        value += coeffs.f1(m)
    if order >= 2:
        value += coeffs.f2(m, form=f2_form) / n
    return Pseudopole(
        k=k, two_l=two_l, order=order, value=value,
        mirror=False, multiplicity=two_l - 1,
    )


def lattice(
    data: BarrierData,
    coeffs: PseudopoleCoeffs,
    two_l_values: Sequence[int],
    k_values: Sequence[int],
    order: int = 2,
    f2_form: str = DEFAULT_F2_FORM,
) -> list[Pseudopole]:
    """All pseudopoles over the (k, l) ranges together with their mirror
    images -conj(value), sorted by real part."""
    out: list[Pseudopole] = []
    for two_l in two_l_values:
        for k in k_values:
            p = pseudopole(data, coeffs, k, two_l, order, f2_form=f2_form)
            out.append(p)
            out.append(
                Pseudopole(
                    k=k, two_l=two_l, order=order,
                    value=-p.value.conjugate(),
                    mirror=True, multiplicity=p.multiplicity,
                )
            )
    out.sort(key=lambda p: (p.value.real, p.value.imag))
    return out
