"""Outgoing Green kernels on an observation window and cutoff-norm probes.

The resolvent kernel of a radial mode operator is assembled from the two
outgoing Jost solutions over their Wronskian and sampled on a window
grid.  Quadrature-weighted singular values of the cutoff-weighted kernel
then measure the operator norm of the windowed resolvent, which is a
lower bound for the norm of the cutoff resolvent on the whole line.
``zone_scan`` sweeps these norms over a real frequency band shared by a
family of angular modes and checks that the frequency-weighted suprema
stay bounded as the mode index grows, that the first-order (Dirac) norm
is controlled by the second-order (Schrodinger) ones, and that a
discrete first-derivative norm is controlled by the plain one with a
single constant.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .barrier import barrier_data
from .geometry import BlackHoleParams, flow_profile
from .solver import (
    ContinuationError,
    ModeOperator,
    mode_operator,
    _jost_solve,
    _straight_line,
)

__all__ = [
    "GreenKernel",
    "ZonePoint",
    "ZoneScanReport",
    "green_kernel",
    "cutoff_norm",
    "cutoff_h1_norm",
    "window_cutoff",
    "zone_scan",
]

# A Wronskian this far below the size of its own constituent products is
# treated as a cancellation, i.e. a (near) resonance.
_CANCEL_TOL = 1e-10

# Frequency weight <lambda> used for the zone bounds.
def _energy_weight(lam: complex) -> float:
    return float(np.sqrt(1.0 + abs(lam) ** 2))


def _jost_grid(op: ModeOperator, lam: complex, x: np.ndarray):
    """Both outgoing Jost solutions sampled on ``x`` (real-axis line).

    Returns two (2, N) arrays: rows are the two spinor components for
    Dirac kinds, and (value, x-derivative) for Schrodinger kinds.  The
    stripped solutions are integrated inward from each truncation tip
    and the asymptotic phases are restored afterwards.
    """
    line = _straight_line(op)
    sol_p = _jost_solve(op, lam, line, +1, float(x[0]), t_eval=x[::-1].copy())
    sol_m = _jost_solve(op, lam, line, -1, float(x[-1]), t_eval=x.copy())
    c_p = np.empty((2, x.size), dtype=complex)
    c_p[:, ::-1] = sol_p.y[:2]
    c_m = sol_m.y[:2]
    if op.is_dirac:
        f_p = c_p * np.exp(1j * lam * x)[None, :]
        f_m = c_m * np.exp(-1j * lam * x)[None, :]
    else:
        e_p = np.exp(1j * lam * x)
        e_m = np.exp(-1j * lam * x)
        f_p = np.vstack([c_p[0] * e_p, (c_p[1] + 1j * lam * c_p[0]) * e_p])
        f_m = np.vstack([c_m[0] * e_m, (c_m[1] - 1j * lam * c_m[0]) * e_m])
    return f_p, f_m


def _trapezoid_weights(x: np.ndarray) -> np.ndarray:
    w = np.empty_like(x)
    w[0] = 0.5 * (x[1] - x[0])
    w[-1] = 0.5 * (x[-1] - x[-2])
    w[1:-1] = 0.5 * (x[2:] - x[:-2])
    return w


def _uniform_spacing(x: np.ndarray) -> float:
    h = float(x[1] - x[0])
    if not np.allclose(np.diff(x), h, rtol=1e-9, atol=0.0):
        raise ValueError("derivative stencils require a uniform window grid")
    return h


def _derivative_matrix(x: np.ndarray) -> np.ndarray:
    """Second-order first-derivative matrix on a uniform grid."""
    h = _uniform_spacing(x)
    n = x.size
    d = np.zeros((n, n))
    idx = np.arange(1, n - 1)
    d[idx, idx - 1] = -0.5 / h
    d[idx, idx + 1] = 0.5 / h
    d[0, :3] = np.array([-1.5, 2.0, -0.5]) / h
    d[-1, -3:] = np.array([0.5, -2.0, 1.5]) / h
    return d


@dataclass(frozen=True)
class GreenKernel:
    """Outgoing resolvent kernel sampled on a window grid.

    ``matrix`` has shape (N, N) for Schrodinger kinds and (2N, 2N) for
    Dirac kinds with the two spinor components interleaved per node, so
    entry (2*i + a, 2*j + b) is the (a, b) block component at
    (x_i, x_j).  The Dirac kernel jumps across the diagonal; diagonal
    blocks store the mean of the two one-sided limits.
    """

    lam: complex
    kind: str
    x: np.ndarray
    matrix: np.ndarray
    wronskian: complex

    @property
    def is_dirac(self) -> bool:
        return self.kind.startswith("dirac")

    def validate(self, op: ModeOperator, columns: Sequence[int] | None = None) -> float:
        """Largest relative residual of the defining equation over
        spot-checked columns, using interior finite-difference stencils
        away from the diagonal."""
        if op.kind != self.kind:
            raise ValueError("operator kind does not match the kernel")
        expected = 2 * self.x.size if self.is_dirac else self.x.size
        if self.matrix.shape != (expected, expected):
            raise ValueError("kernel matrix shape does not match its grid")
        x = self.x
        h = _uniform_spacing(x)
        n = x.size
        if columns is None:
            columns = [n // 6, n // 3, n // 2, (2 * n) // 3, (5 * n) // 6]
        prof = flow_profile(op.params, x, tmap=op.tmap)
        alpha = op.n * prof.alpha
        alpha_prime = op.n * prof.V0p / (2.0 * prof.alpha)
        lam = self.lam
        worst = 0.0
        if self.is_dirac:
            q = op.coupling_sign * alpha
            mat = self.matrix
            for j in columns:
                for b in (0, 1):
                    u = mat[0::2, 2 * j + b]
                    v = mat[1::2, 2 * j + b]
                    du = _stencil_d1(u, h)
                    dv = _stencil_d1(v, h)
                    r1 = -1j * du + q * v - lam * u
                    r2 = 1j * dv + q * u - lam * v
                    keep = _interior_mask(x, x[j], h, stencil=2)
                    top = max(np.abs(u).max(), np.abs(v).max())
                    worst = max(
                        worst,
                        float(np.abs(r1[keep]).max() / top),
                        float(np.abs(r2[keep]).max() / top),
                    )
        else:
            pot = alpha**2 + op.coupling_sign * alpha_prime
            for j in columns:
                col = self.matrix[:, j]
                d2 = _stencil_d2(col, h)
                res = -d2 + (pot - lam**2) * col
                keep = _interior_mask(x, x[j], h, stencil=2)
                worst = max(worst, float(np.abs(res[keep]).max() / np.abs(col).max()))
        return worst


def _stencil_d1(col: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order centered first derivative (endpoints copied inward)."""
    d = np.zeros_like(col)
    d[2:-2] = (col[:-4] - 8 * col[1:-3] + 8 * col[3:-1] - col[4:]) / (12.0 * h)
    return d


def _stencil_d2(col: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order centered second derivative (endpoints copied inward)."""
    d = np.zeros_like(col)
    d[2:-2] = (
        -col[:-4] + 16 * col[1:-3] - 30 * col[2:-2] + 16 * col[3:-1] - col[4:]
    ) / (12.0 * h**2)
    return d


def _interior_mask(x: np.ndarray, y: float, h: float, stencil: int) -> np.ndarray:
    keep = np.abs(x - y) > 4.0 * h
    keep[:stencil] = False
    keep[-stencil:] = False
    return keep


def green_kernel(op: ModeOperator, lam: complex, x) -> GreenKernel:
    """Outgoing resolvent kernel of ``op`` at frequency ``lam`` on the
    window grid ``x``.

    The kernel is built from the two outgoing Jost solutions over their
    Wronskian, giving the resolvent of (D - lam) for Dirac kinds and of
    (P - lam^2) for Schrodinger kinds.  ``lam`` must lie above the
    real-axis continuation strip; deeper frequencies belong to the
    scaled method.
    """
    lam = complex(lam)
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("window grid must hold at least 2 nodes")
    if not np.all(np.diff(x) > 0.0):
        raise ValueError("window grid must be strictly increasing")
    line = _straight_line(op)
    if x[0] <= line.t_min or x[-1] >= line.t_max:
        raise ValueError("window grid must lie strictly inside the truncation range")
    if lam.imag < -op.strip:
        raise ContinuationError("continuation invalid: use scaled method")
    f_p, f_m = _jost_grid(op, lam, x)
    w_all = f_p[0] * f_m[1] - f_p[1] * f_m[0]
    mid = x.size // 2
    w = complex(w_all[mid])
    # Cancellation scale: the constituent products at the matching node
    # plus a slowly-varying-solution scale, so that an exact zero of a
    # free Wronskian (threshold resonance) is caught as well.
    cancel = abs(f_p[0, mid] * f_m[1, mid]) + abs(f_p[1, mid] * f_m[0, mid])
    span = float(x[-1] - x[0])
    slow = np.abs(f_p[:, mid]).max() * np.abs(f_m[:, mid]).max() / span
    if abs(w) <= _CANCEL_TOL * (cancel + slow):
        raise ValueError("lambda is (near) a resonance: the Jost Wronskian cancels")
    big_x = x[:, None]
    big_y = x[None, :]
    if op.is_dirac:
        blocks = np.empty((2, x.size, 2, x.size), dtype=complex)
        swap_m = f_m[::-1]
        swap_p = f_p[::-1]
        for a in (0, 1):
            for b in (0, 1):
                upper = np.outer(f_p[a], swap_m[b])
                lower = np.outer(f_m[a], swap_p[b])
                blk = np.where(big_x > big_y, upper, lower)
                d = np.arange(x.size)
                blk[d, d] = 0.5 * (upper[d, d] + lower[d, d])
                blocks[a, :, b, :] = (1j / w) * blk
        matrix = blocks.transpose(1, 0, 3, 2).reshape(2 * x.size, 2 * x.size)
    else:
        upper = np.outer(f_p[0], f_m[0])
        matrix = np.where(big_x >= big_y, upper, upper.T) / w
    return GreenKernel(lam=lam, kind=op.kind, x=x.copy(), matrix=matrix, wronskian=w)


def window_cutoff(x, a: float, b: float, margin: float | None = None) -> np.ndarray:
    """Smooth cutoff supported in (a, b): plateau 1 away from the edges,
    raised-cosine flanks of width ``margin`` (default 15% of the window)."""
    x = np.asarray(x, dtype=float)
    if not b > a:
        raise ValueError("window must have b > a")
    if margin is None:
        margin = 0.15 * (b - a)
    if not 0.0 < 2.0 * margin < (b - a):
        raise ValueError("flank width must fit inside the window")
    chi = np.zeros_like(x)
    inside = (x > a) & (x < b)
    chi[inside] = 1.0
    lo = inside & (x < a + margin)
    hi = inside & (x > b - margin)
    chi[lo] = 0.5 * (1.0 - np.cos(np.pi * (x[lo] - a) / margin))
    chi[hi] = 0.5 * (1.0 - np.cos(np.pi * (b - x[hi]) / margin))
    return chi


def _scaled_matrix(kernel: GreenKernel, chi) -> np.ndarray:
    chi = np.asarray(chi, dtype=float)
    if chi.shape != kernel.x.shape:
        raise ValueError("cutoff must be sampled on the kernel grid")
    s = np.sqrt(_trapezoid_weights(kernel.x)) * chi
    if kernel.is_dirac:
        s = np.repeat(s, 2)
    return s[:, None] * kernel.matrix * s[None, :]


def cutoff_norm(kernel: GreenKernel, chi) -> float:
    """Operator norm (largest quadrature-weighted singular value) of the
    cutoff-weighted kernel: the L^2 -> L^2 norm of chi R(lam) chi
    restricted to the window."""
    return float(np.linalg.norm(_scaled_matrix(kernel, chi), 2))


def cutoff_h1_norm(kernel: GreenKernel, chi) -> float:
    """First-derivative-augmented operator norm of the cutoff-weighted
    kernel: the map is measured into the discrete H^1 pairing
    (values and first differences).  Scalar kinds only."""
    if kernel.is_dirac:
        raise ValueError("first-derivative norm is defined for the scalar kernels")
    chi = np.asarray(chi, dtype=float)
    if chi.shape != kernel.x.shape:
        raise ValueError("cutoff must be sampled on the kernel grid")
    w = _trapezoid_weights(kernel.x)
    root = np.sqrt(w)
    deriv = _derivative_matrix(kernel.x)
    base = chi[:, None] * kernel.matrix * (chi * root)[None, :]
    stacked = np.vstack([root[:, None] * base, root[:, None] * (deriv @ base)])
    return float(np.linalg.norm(stacked, 2))


@dataclass(frozen=True)
class ZonePoint:
    """Windowed resolvent norms at one real frequency of one mode."""

    two_l: int
    lam: float
    dirac_norm: float
    schrodinger_minus_norm: float
    schrodinger_plus_norm: float
    h1_minus: float
    h1_plus: float

    @property
    def dirac_weighted(self) -> float:
        return _energy_weight(self.lam) * self.dirac_norm

    @property
    def schrodinger_weighted(self) -> float:
        return _energy_weight(self.lam) ** 2 * max(
            self.schrodinger_minus_norm, self.schrodinger_plus_norm
        )

    @property
    def chain_ratio(self) -> float:
        """Dirac norm over the frequency-weighted sum of the two scalar
        first-derivative norms (the first-order/second-order chain)."""
        return self.dirac_norm / (
            _energy_weight(self.lam) * (self.h1_minus + self.h1_plus)
        )

    @property
    def interpol_minus(self) -> float:
        return self.h1_minus / (_energy_weight(self.lam) * self.schrodinger_minus_norm)

    @property
    def interpol_plus(self) -> float:
        return self.h1_plus / (_energy_weight(self.lam) * self.schrodinger_plus_norm)


@dataclass(frozen=True)
class ZoneScanReport:
    """Weighted windowed-resolvent norms over the intermediate real band
    for a family of angular modes."""

    params: BlackHoleParams
    zone_parameter: float
    two_l_values: tuple
    points: tuple
    dirac_sup: dict
    schrodinger_sup: dict
    growing: bool

    COLUMNS = (
        "two_l",
        "re_lambda",
        "dirac_norm",
        "schrodinger_minus_norm",
        "schrodinger_plus_norm",
        "dirac_weighted",
        "schrodinger_weighted",
        "h1_minus",
        "h1_plus",
        "chain_ratio",
        "interpol_minus",
        "interpol_plus",
    )

    def rows(self) -> Iterable[tuple]:
        for p in self.points:
            yield (
                p.two_l,
                p.lam,
                p.dirac_norm,
                p.schrodinger_minus_norm,
                p.schrodinger_plus_norm,
                p.dirac_weighted,
                p.schrodinger_weighted,
                p.h1_minus,
                p.h1_plus,
                p.chain_ratio,
                p.interpol_minus,
                p.interpol_plus,
            )


# Growth flag margin: the weighted suprema fluctuate a little with the
# sampling grid, so "growing" means the last mode exceeds the first by
# more than this factor.
_GROWTH_MARGIN = 1.25

# Half-width of the excluded trapping shell around the barrier-top
# frequency, as a fraction of that frequency.  The scanned band is
# resonance-free by intent; near the barrier top the kernel feels the
# resonance lattice, which belongs to the mode solver, not this scan.
_TRAPPING_SHELL = 0.2

_SCAN_KINDS = ("dirac_minus", "schrodinger_minus", "schrodinger_plus")


def _band_samples(lo: float, hi: float, top: float, samples: int) -> np.ndarray:
    """Sample points on [lo, hi] minus the trapping shell around ``top``,
    distributed across the remaining pieces proportionally to length."""
    pieces = []
    for a, b in ((lo, min(hi, (1.0 - _TRAPPING_SHELL) * top)),
                 (max(lo, (1.0 + _TRAPPING_SHELL) * top), hi)):
        if b > a:
            pieces.append((a, b))
    if not pieces:
        raise ValueError("the trapping shell swallows the whole frequency band")
    total = sum(b - a for a, b in pieces)
    counts = [max(1, round(samples * (b - a) / total)) for a, b in pieces]
    while sum(counts) > samples and max(counts) > 1:
        counts[counts.index(max(counts))] -= 1
    return np.concatenate(
        [np.linspace(a, b, c) for (a, b), c in zip(pieces, counts)]
    )


def zone_scan(
    params: BlackHoleParams,
    two_l_values: Sequence[int] = (19, 39, 79),
    *,
    zone_parameter: float = 10.0,
    samples: int = 6,
    window: tuple = (-12.0, 12.0),
    nodes: int = 241,
    workers: int | None = None,
) -> ZoneScanReport:
    """Sweep the windowed cutoff-resolvent norms over real frequencies
    in the intermediate band for each angular mode in ``two_l_values``.

    The band for mode l stretches between ``l / zone_parameter`` and
    ``zone_parameter`` (endpoints sorted, so every mode shares the same
    outer edge); it must be nondegenerate.  A shell around the
    barrier-top frequency is excluded, since there the kernel feels the
    resonance lattice rather than the nontrapping bounds under test.
    Per frequency the Dirac kernel and both scalar kernels are built
    once and all derived norms recorded.
    """
    two_l_values = tuple(int(v) for v in two_l_values)
    if not two_l_values:
        raise ValueError("need at least one angular mode")
    a, b = float(window[0]), float(window[1])
    x = np.linspace(a, b, int(nodes))
    chi = window_cutoff(x, a, b)
    if workers is None:
        workers = int(os.environ.get("QNM_THREADS", "1"))

    z0 = barrier_data(params).z0
    jobs = []
    for two_l in two_l_values:
        lo, hi = sorted((float(zone_parameter), 0.5 * two_l / float(zone_parameter)))
        if not hi > lo:
            raise ValueError(
                f"degenerate frequency band for two_l={two_l}: "
                f"both edges sit at {lo:.4f}"
            )
        top = 0.5 * (two_l + 1) * z0
        ops = {kind: mode_operator(params, kind, two_l) for kind in _SCAN_KINDS}
        for lam in _band_samples(lo, hi, top, int(samples)):
            jobs.append((two_l, float(lam), ops))

    def probe_one(job) -> ZonePoint:
        two_l, lam, ops = job
        kernels = {kind: green_kernel(ops[kind], lam, x) for kind in _SCAN_KINDS}
        return ZonePoint(
            two_l=two_l,
            lam=lam,
            dirac_norm=cutoff_norm(kernels["dirac_minus"], chi),
            schrodinger_minus_norm=cutoff_norm(kernels["schrodinger_minus"], chi),
            schrodinger_plus_norm=cutoff_norm(kernels["schrodinger_plus"], chi),
            h1_minus=cutoff_h1_norm(kernels["schrodinger_minus"], chi),
            h1_plus=cutoff_h1_norm(kernels["schrodinger_plus"], chi),
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = tuple(pool.map(probe_one, jobs))
    else:
        points = tuple(probe_one(job) for job in jobs)

    dirac_sup = {}
    schrodinger_sup = {}
    for p in points:
        dirac_sup[p.two_l] = max(dirac_sup.get(p.two_l, 0.0), p.dirac_weighted)
        schrodinger_sup[p.two_l] = max(
            schrodinger_sup.get(p.two_l, 0.0), p.schrodinger_weighted
        )
    first, last = two_l_values[0], two_l_values[-1]
    growing = (
        dirac_sup[last] > _GROWTH_MARGIN * dirac_sup[first]
        or schrodinger_sup[last] > _GROWTH_MARGIN * schrodinger_sup[first]
    )
    return ZoneScanReport(
        params=params,
        zone_parameter=float(zone_parameter),
        two_l_values=two_l_values,
        points=points,
        dirac_sup=dirac_sup,
        schrodinger_sup=schrodinger_sup,
        growing=growing,
    )
