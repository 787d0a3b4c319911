"""Shared fixtures: one reference black hole, lazily built mode
operators, and cached resonance computations reused across test files
(the refinements and eigensolves are the expensive parts of the suite).
"""

from __future__ import annotations

import pytest

from diracqnm import BlackHoleParams, mode_operator, refine, scaled_spectrum
from diracqnm.barrier import PseudopoleCoeffs, barrier_data, pseudopole

REF = BlackHoleParams(mass=1.0, charge=0.5, lam=0.05)


@pytest.fixture(scope="session")
def ref_params() -> BlackHoleParams:
    return REF


@pytest.fixture(scope="session")
def make_op():
    """Memoized mode-operator factory for the reference black hole."""
    cache = {}

    def _make(kind: str, two_l: int):
        key = (kind, two_l)
        if key not in cache:
            cache[key] = mode_operator(REF, kind, two_l)
        return cache[key]

    return _make


@pytest.fixture(scope="session")
def zone_report(ref_params):
    """One full zone scan shared by the probe tests and the acceptance
    criteria (the 18 kernel triples are the expensive part)."""
    from diracqnm import zone_scan

    return zone_scan(ref_params)


@pytest.fixture(scope="session")
def refined(make_op):
    """Memoized resonance refinement: (kind, two_l, k, mirror) -> result.

    Seeds come from the order-2 barrier-top pseudopoles; mirrored seeds
    are located directly on the opposite side of the imaginary axis so
    mirror-symmetry tests are not circular.
    """
    data = barrier_data(REF)
    coeffs = PseudopoleCoeffs.from_barrier(data)
    cache = {}

    def _refine(kind: str, two_l: int, k: int, mirror: bool = False):
        key = (kind, two_l, k, mirror)
        if key not in cache:
            seed = pseudopole(data, coeffs, k, two_l, order=2).value
            if mirror:
                seed = -seed.conjugate()
            cache[key] = refine(make_op(kind, two_l), seed)
        return cache[key]

    return _refine


@pytest.fixture(scope="session")
def scaled(make_op):
    """Memoized complex-scaled runs: (kind, two_l, theta, k_max)."""
    cache = {}

    def _scaled(kind: str, two_l: int, theta: float, k_max: int = 2):
        key = (kind, two_l, theta, k_max)
        if key not in cache:
            cache[key] = scaled_spectrum(
                make_op(kind, two_l), theta, k_max=k_max
            )
        return cache[key]

    return _scaled


@pytest.fixture(scope="session")
def ringdown_trace(make_op):
    """Memoized evolution runs keyed by (two_l, dx): squared-cosine bump
    of half-width 6 at the barrier top, observed on the window
    (-15, 15) until T = 100."""
    from diracqnm import evolve, init_bump, make_grid

    cache = {}

    def _trace(two_l: int, dx: float = 0.1):
        key = (two_l, dx)
        if key not in cache:
            op = make_op("dirac_minus", two_l)
            grid = make_grid(op, dx=dx)
            field = init_bump(grid, 0.0, 6.0)
            cache[key] = evolve(op, field, 100.0, (-15.0, 15.0))
        return cache[key]

    return _trace
