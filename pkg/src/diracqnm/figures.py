"""Figure rendering for the command-line reports.

Each helper takes already-computed objects and writes one PNG next to
the delimited output.  matplotlib is imported lazily with the Agg
backend so library use never touches a display.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "compare_figure",
    "horizons_figure",
    "potential_figure",
    "resonance_figure",
    "ringdown_figure",
    "trace_figure",
    "zone_figure",
]


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path) -> str:
    fig.savefig(path, dpi=130, bbox_inches="tight")
    _pyplot().close(fig)
    return str(path)


def horizons_figure(params, horizons, path) -> str:
    """Metric function over the positive radii with the horizon roots
    marked."""
    from .geometry import metric_function

    plt = _pyplot()
    positive = [r for r in horizons.roots if r > 0]
    r_lo, r_hi = 0.6 * min(positive), 1.06 * max(positive)
    r = np.linspace(r_lo, r_hi, 800)
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.plot(r, metric_function(params, r), lw=1.2)
    ax.axhline(0.0, color="0.6", lw=0.6)
    for root in positive:
        ax.axvline(root, color="tab:red", lw=0.8, ls="--")
        ax.plot([root], [0.0], "o", color="tab:red", ms=4)
    ax.set_xlabel("areal radius r")
    ax.set_ylabel("metric function F(r)")
    ax.set_title(
        f"horizons at M={params.mass:g}, Q={params.charge:g}, "
        f"Λ={params.lam:g}"
    )
    return _save(fig, path)


def potential_figure(profile, two_l, rows, path) -> str:
    """Scattering potentials of one angular mode over the tortoise
    window: the squared coupling and both first-order-reduction
    potentials."""
    plt = _pyplot()
    x = np.asarray([row[0] for row in rows])
    coupling = np.asarray([row[6] for row in rows])
    pot_minus = np.asarray([row[7] for row in rows])
    pot_plus = np.asarray([row[8] for row in rows])
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.plot(x, coupling**2, lw=1.2, label="squared coupling")
    ax.plot(x, pot_minus, lw=1.0, ls="--", label="reduction, minus sign")
    ax.plot(x, pot_plus, lw=1.0, ls=":", label="reduction, plus sign")
    ax.set_xlabel("tortoise coordinate x")
    ax.set_ylabel("potential")
    ax.set_title(f"mode potentials, two_l={two_l}")
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, path)


def resonance_figure(rows, pseudopoles, path) -> str:
    """Complex-plane scatter of computed resonances over the
    barrier-top ladder crosses; rows are the direct-qnm CSV rows."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if pseudopoles:
        ax.plot(
            [p.value.real for p in pseudopoles],
            [p.value.imag for p in pseudopoles],
            "+", color="0.55", ms=9, mew=1.1, label="barrier-top ladder",
        )
    by_method: dict = {}
    for row in rows:
        by_method.setdefault(str(row[2]), []).append(
            complex(row[3], row[4])
        )
    markers = {"jost": "o", "scaled": "s"}
    for method, vals in sorted(by_method.items()):
        ax.plot(
            [v.real for v in vals],
            [v.imag for v in vals],
            markers.get(method, "d"),
            ms=4, ls="none", label=method, alpha=0.8,
        )
    ax.set_xlabel("Re λ")
    ax.set_ylabel("Im λ")
    ax.set_title("resonances")
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, path)


def compare_figure(rows, path) -> str:
    """Ladder-vs-direct mismatch against the mode index, one curve per
    truncation order; rows are the compare CSV rows."""
    plt = _pyplot()
    ks = [int(row[1]) for row in rows]
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    for idx, order in ((6, 0), (7, 1), (8, 2)):
        ax.semilogy(
            ks, [row[idx] for row in rows], "o-", ms=4,
            label=f"order {order}",
        )
    ax.set_xlabel("ladder index k")
    ax.set_ylabel("|direct − ladder value|")
    ax.set_xticks(sorted(set(ks)))
    ax.set_title("barrier-top ladder accuracy")
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, path)


def trace_figure(trace, path) -> str:
    """Global and windowed energy norms against time, log scale."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.semilogy(trace.times, trace.global_norm, lw=1.1, label="global norm")
    ax.semilogy(trace.times, trace.local_norm, lw=1.1, label="window norm")
    ax.set_xlabel("time t")
    ax.set_ylabel("energy norm")
    ax.set_title("time evolution")
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, path)


def ringdown_figure(trace, fit, path) -> str:
    """Probe signal with the fitted damped-exponential model overlaid
    on the fit window."""
    plt = _pyplot()
    t = np.asarray(trace.times)
    y = np.asarray(trace.probe)
    keep = (t >= fit.window[0]) & (t <= fit.window[1])
    model = np.zeros_like(t[keep], dtype=complex)
    for mode in fit.modes:
        model += mode.amplitude * np.exp(-1j * mode.lam * (t[keep] - t[keep][0]))
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.semilogy(t, np.abs(y), lw=1.0, label="|probe signal|")
    ax.semilogy(t[keep], np.abs(model), lw=1.0, ls="--", label="fitted model")
    ax.axvspan(*fit.window, color="0.92")
    ax.set_xlabel("time t")
    ax.set_ylabel("|signal|")
    ax.set_title(f"ringdown fit, order used {fit.order_used}")
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, path)


def zone_figure(report, path) -> str:
    """Frequency-weighted cutoff-resolvent norms along the scan band,
    one curve per angular mode and operator family."""
    plt = _pyplot()
    fig, axes = plt.subplots(1, 2, figsize=(8.6, 3.4), sharex=True)
    for two_l in report.two_l_values:
        pts = sorted(
            (p for p in report.points if p.two_l == two_l),
            key=lambda p: p.lam.real,
        )
        lam = [p.lam.real for p in pts]
        axes[0].plot(
            lam, [p.dirac_weighted for p in pts], "o-", ms=3,
            label=f"two_l={two_l}",
        )
        axes[1].plot(
            lam, [p.schrodinger_weighted for p in pts], "o-", ms=3,
            label=f"two_l={two_l}",
        )
    axes[0].set_ylabel("weighted first-order norm")
    axes[1].set_ylabel("weighted second-order norm")
    for ax in axes:
        ax.set_xlabel("Re λ")
        ax.legend(frameon=False, fontsize=8)
    fig.suptitle("cutoff-resolvent scan")
    return _save(fig, path)
