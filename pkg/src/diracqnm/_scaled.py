"""Complex-scaled spectral eigensolver for the per-mode operators.

The mode operator is restricted to a smoothly rotated contour
w(t) = t e^{i theta s(|t|)} (real near the barrier, rotated by theta in
the tails) and discretized by Chebyshev-Lobatto collocation.  On the
rotated contour the resonance eigenfunctions become square-integrable,
so resonances in the sector -theta < arg(lambda) < 0 appear as discrete
eigenvalues; the essential spectrum rotates out of the way.

Acceptance of an eigenvalue requires two-resolution stability: the
spectrum is computed at N and at ceil(5N/4) collocation points and only
eigenvalues that agree between the two resolutions are reported, which
removes the discretized continuum.  Each accepted value carries a
normwise relative residual computed from the eigenvector at the finer
resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .barrier import PseudopoleCoeffs, barrier_data, pseudopole
from .contours import APERTURE, SmoothRotation
from .solver import ModeOperator, ResonanceEntry, ResonanceList, k_guess_from_value

__all__ = ["ContourSpec", "ScaledResult", "default_contour", "scaled_spectrum"]

_RAMP_START = 15.0
_RAMP_LENGTH = 25.0
_POINTS_PER_OSC = 8.0        # minimal collocation density per oscillation
_DECAY_FLOOR = 0.05          # strings decaying slower than this do not size X
_TAIL_EFOLDS = 18.0
_RAY_MARGIN = 0.002          # sector kept clear of the rotated continuum (rad)
_X_PROBE = 5.0               # truncation shift for the second stability gate


@dataclass(frozen=True)
class ContourSpec:
    """Discretized exterior-scaling contour: rotation reaches ``theta``
    past radius R0 (ramp of fixed length), truncated at |t| = X with N+1
    Chebyshev-Lobatto nodes."""

    R0: float
    theta: float
    X: float
    N: int

    def __post_init__(self) -> None:
        if not self.R0 > 0.0:
            raise ValueError("R0 must be positive")
        if not 0.0 < self.theta < APERTURE:
            raise ValueError(
                f"rotation angle must lie strictly inside the holomorphy "
                f"aperture (0, {APERTURE:g})"
            )
        if not self.X > self.R0 + _RAMP_LENGTH:
            raise ValueError("X must exceed the end of the rotation ramp")
        if self.N < 16:
            raise ValueError("N must be at least 16")

    @property
    def ramp_end(self) -> float:
        return self.R0 + _RAMP_LENGTH

    def rotation(self) -> SmoothRotation:
        return SmoothRotation(
            t_min=-self.X,
            t_max=self.X,
            theta=self.theta,
            ramp_start=self.R0,
            ramp_end=self.ramp_end,
        )

    def points_per_oscillation(self, lam_mag: float) -> float:
        """Collocation points per oscillation of exp(i lam t) over the
        full domain [-X, X] at |lambda| = lam_mag."""
        return math.pi * self.N / (self.X * lam_mag)


@dataclass(frozen=True)
class ScaledResult:
    resonances: ResonanceList
    contour: ContourSpec | None
    theta: float
    raw_count: int
    accepted_count: int

    def __iter__(self):
        return iter(self.resonances)

    def values(self) -> np.ndarray:
        return self.resonances.values()


def _chebyshev(N: int):
    """Chebyshev-Lobatto nodes (descending) and differentiation matrix."""
    j = np.arange(N + 1)
    x = np.cos(np.pi * j / N)
    c = np.ones(N + 1)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** j
    dx = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (dx + np.eye(N + 1))
    D -= np.diag(D.sum(axis=1))
    return x, D


def _string_targets(op: ModeOperator, k_max: int):
    data = barrier_data(op.params)
    coeffs = PseudopoleCoeffs.from_barrier(data)
    return data, [
        pseudopole(data, coeffs, k, op.two_l, order=2).value for k in range(k_max + 1)
    ]


def default_contour(
    op: ModeOperator,
    theta: float,
    *,
    k_max: int = 2,
    N: int | None = None,
    X: float | None = None,
) -> ContourSpec:
    """Contour sized for the barrier-top strings: X reaches enough
    e-folds of the slowest well-revealed string's decay on the rotated
    tail, and N keeps at least the minimal points-per-oscillation at the
    top of the default window."""
    data, targets = _string_targets(op, k_max)
    if X is None:
        decay = None
        for lam in targets:
            margin = theta - abs(math.atan2(lam.imag, lam.real))
            if margin <= 0.0:
                continue
            d = abs(lam) * math.sin(margin)
            if d >= _DECAY_FLOOR and (decay is None or d < decay):
                decay = d
        if decay is None:
            decay = max(0.25 * op.n * data.z0 * math.sin(theta), _DECAY_FLOOR)
        X = _RAMP_START + _RAMP_LENGTH + _TAIL_EFOLDS / decay
    if N is None:
        lam_max = 1.5 * op.n * data.z0
        N = int(math.ceil(1.25 * _POINTS_PER_OSC / math.pi * X * lam_max)) + 32
    return ContourSpec(R0=_RAMP_START, theta=theta, X=float(X), N=int(N))


def _build_matrix(op: ModeOperator, spec: ContourSpec, N: int) -> np.ndarray:
    """Collocation matrix at N+1 nodes on the rotated contour, boundary
    conditions applied by row/column deletion (outgoing-in-the-scaled
    frame = decay = Dirichlet at the truncated ends)."""
    rotation = spec.rotation()
    transport = op.transport(rotation)
    x, D = _chebyshev(N)
    t = spec.X * x                      # descending: t[0] = +X, t[-1] = -X
    D = D / spec.X
    wp = np.asarray(rotation.wprime(t), dtype=complex)
    Dw = (1.0 / wp)[:, None] * D
    n = op.n
    s = op.coupling_sign
    alpha = np.empty(N + 1, dtype=complex)
    dalpha = np.empty(N + 1, dtype=complex)
    for i, ti in enumerate(t):
        alpha[i], dalpha[i] = transport.alpha_and_slope(float(ti))
    if op.is_dirac:
        q = s * n * alpha
        size = N + 1
        A = np.zeros((2 * size, 2 * size), dtype=complex)
        A[:size, :size] = -1j * Dw
        A[:size, size:] = np.diag(q)
        A[size:, :size] = np.diag(q)
        A[size:, size:] = 1j * Dw
        # a(-X) = 0 (unknown index N), b(+X) = 0 (unknown index N+1).
        keep = np.ones(2 * size, dtype=bool)
        keep[N] = keep[size] = False
        return A[np.ix_(keep, keep)]
    U = (n * alpha) ** 2 + s * n * dalpha
    L = -(Dw @ Dw) + np.diag(U)
    return L[1:-1, 1:-1]


def _window_eigs(op, spec, N, window):
    A = _build_matrix(op, spec, N)
    vals, vecs = scipy.linalg.eig(A)
    lam = vals if op.is_dirac else np.sqrt(vals)
    re0, re1, im0, im1 = window
    # Truncated-box modes sit on the rotated continuum ray arg = -theta
    # and converge in N exactly like true eigenvalues, so they must be
    # excluded geometrically, not by resolution comparison.
    keep = (
        (lam.real >= re0)
        & (lam.real <= re1)
        & (lam.imag >= im0)
        & (lam.imag <= im1)
        & (np.arctan2(lam.imag, np.abs(lam.real)) > -spec.theta + _RAY_MARGIN)
    )
    idx = np.nonzero(keep)[0]
    return lam[idx], vals[idx], vecs[:, idx], A


def scaled_spectrum(
    op: ModeOperator,
    theta: float = 0.25,
    *,
    k_max: int = 2,
    window=None,
    contour: ContourSpec | None = None,
    N: int | None = None,
    X: float | None = None,
    stability_tol: float = 1e-6,
) -> ScaledResult:
    """Resonances of the mode operator by complex scaling.

    ``theta = 0`` performs no rotation: the operator stays self-adjoint
    (real spectrum only) and the result is empty.  Otherwise resonances
    inside ``window`` (default: real part bracketing the barrier-top
    strings, depth covering overtones up to ``k_max``) must pass two
    stability gates to be accepted, with values and residuals taken
    from the finer resolution:

    * resolution: agreement between N and ceil(5N/4) collocation points;
    * truncation: agreement when the cutoff moves to X + 5 (quantized
      standing waves on the truncated rotated arms scale like 1/X and
      fail this, while genuine resonances are X-independent to the
      exponentially small tail truncation).

    If the window contains raw eigenvalues but none survive the gates,
    the discretization left the window unresolved and an error listing
    the unstable values is raised instead of returning junk.
    """
    if theta == 0.0:
        return ScaledResult(
            resonances=ResonanceList(entries=()),
            contour=None,
            theta=0.0,
            raw_count=0,
            accepted_count=0,
        )
    data, targets = _string_targets(op, k_max)
    if contour is None:
        contour = default_contour(op, theta, k_max=k_max, N=N, X=X)
    if window is None:
        depth = (2.0 * k_max + 2.0) * data.omega / (2.0 * data.z0)
        window = (0.2 * op.n * data.z0, 1.5 * op.n * data.z0, -depth, -1e-9)
    lam_top = max(abs(window[0]), abs(window[1]), 1e-3)
    if contour.points_per_oscillation(lam_top) < _POINTS_PER_OSC:
        raise ValueError(
            f"N = {contour.N} gives fewer than {_POINTS_PER_OSC:g} points per "
            f"oscillation at |lambda| = {lam_top:g}; increase N"
        )

    lam_coarse, _, _, _ = _window_eigs(op, contour, contour.N, window)
    n_fine = int(math.ceil(1.25 * contour.N))
    lam_fine, raw_fine, vecs, A = _window_eigs(op, contour, n_fine, window)
    probe = ContourSpec(
        R0=contour.R0,
        theta=contour.theta,
        X=contour.X + _X_PROBE,
        N=int(math.ceil(n_fine * (contour.X + _X_PROBE) / contour.X)),
    )
    lam_probe, _, _, _ = _window_eigs(op, probe, probe.N, window)

    raw_count = len(lam_fine)
    entries = []
    unstable = []
    if raw_count:
        a_norm = np.linalg.norm(A, np.inf)
        for i, lam in enumerate(lam_fine):
            gap_n = (
                np.min(np.abs(lam_coarse - lam)) if len(lam_coarse) else np.inf
            )
            gap_x = np.min(np.abs(lam_probe - lam)) if len(lam_probe) else np.inf
            if max(gap_n, gap_x) > stability_tol:
                unstable.append(complex(lam))
                continue
            v = vecs[:, i]
            ev = raw_fine[i]
            residual = float(
                np.linalg.norm(A @ v - ev * v) / (a_norm * np.linalg.norm(v))
            )
            near = min(
                (pseudopole_value for pseudopole_value in targets),
                key=lambda z: abs(z - lam),
            )
            entries.append(
                ResonanceEntry(
                    lam=complex(lam),
                    kind=op.kind,
                    two_l=op.two_l,
                    k_guess=k_guess_from_value(op, complex(lam)),
                    method="scaled",
                    residual=residual,
                    matched_pseudopole=near,
                )
            )
    if raw_count and not entries:
        raise RuntimeError(
            "complex scaling left no stable eigenvalue in the window "
            f"(unstable: {', '.join(format(z, '.6f') for z in unstable)}); "
            "increase N or X, or shrink the window to the revealed sector"
        )
    entries.sort(key=lambda e: (e.lam.real, e.lam.imag))
    return ScaledResult(
        resonances=ResonanceList(entries=tuple(entries)),
        contour=contour,
        theta=theta,
        raw_count=raw_count,
        accepted_count=len(entries),
    )
