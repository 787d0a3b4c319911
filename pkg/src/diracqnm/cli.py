"""Command-line entry point wiring black-hole configs to the horizon,
barrier-ladder, resonance, time-evolution, and resolvent-probe
computations.

Eight subcommands write reproducible artifacts into an output
directory: full-precision CSV tables, optional JSON mirrors
(``--json``), PNG figures rendered alongside the delimited output
(``--figures``, on by default), and a ``manifest.json`` echoing the
resolved configuration and package version.  Options resolve in the
order command line > config file (INI sections ``[blackhole]``,
``[solver]``, ``[evolution]``, ``[probe]``) > built-in defaults.  The
environment variable ``QNM_THREADS`` caps internal parallelism.  Exit
codes: 0 success, 1 numerical failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import datetime
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__, figures
from ._io import ConfigError, load_config_file, write_csv, write_json
from .barrier import (
    DEFAULT_F2_FORM,
    PseudopoleCoeffs,
    barrier_data,
    lattice,
    pseudopole,
)
from .evolution import (
    evolve,
    init_bump,
    make_grid,
    ringdown_fit,
    save_snapshot,
)
from .geometry import (
    AdmissibilityError,
    BlackHoleParams,
    ContourPinchError,
    find_horizons,
    flow_profile,
    metric_function,
)
from .probe import ZoneScanReport, zone_scan
from .solver import (
    ContinuationError,
    k_guess_from_value,
    mode_operator,
    scaled_spectrum,
    string_resonances,
)

__all__ = ["RunConfig", "main"]

_KINDS = (
    "dirac_minus",
    "dirac_plus",
    "schrodinger_minus",
    "schrodinger_plus",
)

_COMMANDS = (
    "horizons",
    "potential",
    "asymptotic-qnm",
    "direct-qnm",
    "compare",
    "evolve",
    "ringdown",
    "probe-resolvent",
)


# ---------------------------------------------------------------------------
# resolved run configuration


@dataclass(frozen=True)
class RunConfig:
    """Everything one run depends on, resolved and serializable.

    ``blackhole`` holds the mass/charge/lambda triple as plain floats,
    ``options`` the command-specific block (windows, ranges,
    tolerances) with JSON-compatible values, so the config round-trips
    through ``as_dict``/``from_dict`` (and JSON) losslessly.  ``seed``
    is recorded for any stochastic fit jitter; the fitters shipped here
    are deterministic, so it only tags the manifest.
    """

    command: str
    blackhole: dict
    options: dict
    outdir: str
    seed: int | None = None

    def params(self) -> BlackHoleParams:
        return BlackHoleParams(
            mass=self.blackhole["mass"],
            charge=self.blackhole["charge"],
            lam=self.blackhole["lambda"],
        )

    def as_dict(self) -> dict:
        return {
            "command": self.command,
            "blackhole": dict(self.blackhole),
            "options": dict(self.options),
            "outdir": self.outdir,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "RunConfig":
        return cls(
            command=payload["command"],
            blackhole=dict(payload["blackhole"]),
            options=dict(payload["options"]),
            outdir=payload["outdir"],
            seed=payload.get("seed"),
        )


# ---------------------------------------------------------------------------
# option casting (shared by command line and config file)


def _cast_float(raw: str) -> float:
    return float(raw)


def _cast_int(raw: str) -> int:
    return int(raw)


def _cast_pair(raw: str) -> list:
    parts = raw.split(":")
    if len(parts) != 2:
        raise ValueError("expected two colon-separated numbers a:b")
    a, b = (float(p) for p in parts)
    if not b > a:
        raise ValueError("expected a < b")
    return [a, b]


def _cast_bump(raw: str) -> list:
    parts = raw.split(":")
    if len(parts) != 2:
        raise ValueError("expected center:width")
    center, width = (float(p) for p in parts)
    if not width > 0:
        raise ValueError("bump width must be positive")
    return [center, width]


def _cast_box(raw: str) -> list:
    parts = raw.split(":")
    if len(parts) != 4:
        raise ValueError("expected re0:re1:im0:im1")
    re0, re1, im0, im1 = (float(p) for p in parts)
    if not (re1 > re0 and im1 > im0):
        raise ValueError("expected re0 < re1 and im0 < im1")
    return [re0, re1, im0, im1]


def _cast_int_list(raw: str) -> list:
    try:
        values = [int(p) for p in raw.split(",") if p.strip() != ""]
    except ValueError as exc:
        raise ValueError("expected comma-separated integers") from exc
    if not values:
        raise ValueError("expected at least one integer")
    return values


def _cast_k_range(raw: str) -> list:
    """Ladder indices: ``0..4`` (inclusive), ``0,2,5``, or ``3``."""
    if ".." in raw:
        lo_raw, _, hi_raw = raw.partition("..")
        lo, hi = int(lo_raw), int(hi_raw)
        if hi < lo:
            raise ValueError("expected lo..hi with lo <= hi")
        values = list(range(lo, hi + 1))
    else:
        values = [int(p) for p in raw.split(",") if p.strip() != ""]
    if not values or min(values) < 0:
        raise ValueError("ladder indices must be non-negative")
    return sorted(set(values))


def _cast_choice(*options: str):
    def cast(raw: str) -> str:
        if raw not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return raw

    return cast


@dataclass(frozen=True)
class _Opt:
    """One resolvable option: its flag, config-file home, cast, and
    default (already in resolved form)."""

    flag: str
    section: str
    key: str
    cast: object
    default: object
    help: str
    dest: str = ""

    @property
    def attr(self) -> str:
        return self.dest or self.flag.lstrip("-").replace("-", "_")


_BLACKHOLE_OPTS = (
    _Opt("--mass", "blackhole", "mass", _cast_float, 1.0,
         "black-hole mass M (geometric units)"),
    _Opt("--charge", "blackhole", "charge", _cast_float, 0.5,
         "black-hole charge Q"),
    _Opt("--lambda", "blackhole", "lambda", _cast_float, 0.05,
         "cosmological constant", dest="lam"),
)

_COMMAND_OPTS: dict[str, tuple[_Opt, ...]] = {
    "horizons": (),
    "potential": (
        _Opt("--two_l", "solver", "two_l", _cast_int, 19,
             "twice the half-integer angular momentum (odd)"),
        _Opt("--window", "solver", "window", _cast_pair, [-20.0, 20.0],
             "tortoise range a:b to tabulate"),
        _Opt("--nodes", "solver", "nodes", _cast_int, 801,
             "number of tabulation nodes"),
    ),
    "asymptotic-qnm": (
        _Opt("--two_l", "solver", "two_l", _cast_int_list, [19],
             "comma-separated list of two_l values"),
        _Opt("--k", "solver", "k", _cast_k_range, [0, 1, 2],
             "ladder indices, e.g. 0..4 or 0,2"),
        _Opt("--order", "solver", "order", _cast_int, 2,
             "ladder truncation order (0, 1, or 2)"),
        _Opt("--f2-form", "solver", "f2_form",
             _cast_choice("m_even", "m_linear"), DEFAULT_F2_FORM,
             "convention for the second ladder correction"),
    ),
    "direct-qnm": (
        _Opt("--l", "solver", "two_l", _cast_int, 19,
             "twice the half-integer angular momentum (odd)",
             dest="two_l"),
        _Opt("--kind", "solver", "kind",
             _cast_choice(*(_KINDS + ("all",))), "dirac_minus",
             "operator kind, or 'all' for all four"),
        _Opt("--method", "solver", "method",
             _cast_choice("jost", "scaled", "both"), "jost",
             "root-finding on the scattering matching, the rotated "
             "eigensolver, or both"),
        _Opt("--window", "solver", "window", _cast_box, None,
             "search box re0:re1:im0:im1 (default: around the first "
             "three ladder points)"),
        _Opt("--theta", "solver", "theta", _cast_float, 0.25,
             "rotation angle for the scaled method"),
        _Opt("--N", "solver", "n", _cast_int, None,
             "collocation points for the scaled method", dest="n_coll"),
    ),
    "compare": (
        _Opt("--two_l", "solver", "two_l", _cast_int, 19,
             "twice the half-integer angular momentum (odd)"),
        _Opt("--k", "solver", "k", _cast_k_range, [0, 1, 2],
             "ladder indices to compare, e.g. 0..2"),
        _Opt("--kind", "solver", "kind", _cast_choice(*_KINDS),
             "dirac_minus", "operator kind for the direct values"),
    ),
    "evolve": (
        _Opt("--two_l", "evolution", "two_l", _cast_int, 19,
             "twice the half-integer angular momentum (odd)"),
        _Opt("--kind", "evolution", "kind", _cast_choice(*_KINDS),
             "dirac_minus", "operator kind to evolve"),
        _Opt("--T", "evolution", "t", _cast_float, 100.0,
             "final time", dest="t_final"),
        _Opt("--dx", "evolution", "dx", _cast_float, 0.1,
             "grid spacing (dt = dx)"),
        _Opt("--bump", "evolution", "bump", _cast_bump, [0.0, 6.0],
             "initial data center:width"),
        _Opt("--window", "evolution", "window", _cast_pair,
             [-15.0, 15.0], "observation window a:b"),
        _Opt("--snapshots", "evolution", "snapshots", _cast_int, 0,
             "number of field snapshots to write"),
        _Opt("--probe-x", "evolution", "probe_x", _cast_float, None,
             "pointwise probe location (default: window center)"),
    ),
    "probe-resolvent": (
        _Opt("--two_l", "probe", "two_l", _cast_int_list, [19, 39, 79],
             "comma-separated list of two_l values"),
        _Opt("--zone", "probe", "zone", _cast_float, 10.0,
             "outer edge of the scanned frequency band"),
        _Opt("--grid", "probe", "grid", _cast_int, 6,
             "frequency samples per angular mode"),
        _Opt("--nodes", "probe", "nodes", _cast_int, 241,
             "observation-window grid nodes"),
        _Opt("--window", "probe", "window", _cast_pair, [-12.0, 12.0],
             "observation window a:b"),
    ),
}
# ringdown drives the same evolution, then fits it
_COMMAND_OPTS["ringdown"] = _COMMAND_OPTS["evolve"] + (
    _Opt("--order", "evolution", "order", _cast_int, 6,
         "number of damped exponentials to fit"),
    _Opt("--fit-window", "evolution", "fit_window", _cast_pair, None,
         "time window t0:t1 for the fit (default: 0.25T to 0.95T)"),
)


# ---------------------------------------------------------------------------
# parser and option resolution


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    group = common.add_argument_group("common options")
    group.add_argument("--config", metavar="PATH",
                       help="INI config file with sections [blackhole], "
                            "[solver], [evolution], [probe]")
    group.add_argument("--out", metavar="DIR", default=None,
                       help="output directory (default: current)")
    for opt in _BLACKHOLE_OPTS:
        group.add_argument(opt.flag, dest=opt.attr, metavar="X",
                           help=opt.help)
    group.add_argument("--json", action="store_true",
                       help="write a JSON mirror next to each CSV")
    group.add_argument("--figures", action=argparse.BooleanOptionalAction,
                       default=True, help="render PNG figures next to the "
                                          "delimited output")
    group.add_argument("--seed", type=int, default=None,
                       help="seed recorded for stochastic fit jitter "
                            "(the shipped fitters are deterministic)")

    parser = argparse.ArgumentParser(
        prog="diracqnm",
        description="Quasi-normal modes of massless spin-1/2 waves "
                    "outside charged de Sitter black holes.",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="command")
    descriptions = {
        "horizons": "horizon radii, surface gravities, and residuals",
        "potential": "tortoise-coordinate potential profile of one mode",
        "asymptotic-qnm": "barrier-top resonance ladder",
        "direct-qnm": "resonances by scattering-matching roots and/or "
                      "the rotated eigensolver",
        "compare": "ladder accuracy against directly computed resonances",
        "evolve": "time evolution of an initial bump with energy traces",
        "ringdown": "time evolution plus damped-exponential fit",
        "probe-resolvent": "windowed resolvent-norm scan over a "
                           "frequency band",
    }
    for command in _COMMANDS:
        cmd_parser = sub.add_parser(
            command, parents=[common], help=descriptions[command],
            description=descriptions[command],
        )
        for opt in _COMMAND_OPTS[command]:
            cmd_parser.add_argument(opt.flag, dest=opt.attr, metavar="X",
                                    help=opt.help)
    return parser


def _resolve_opt(args, config_file, opt: _Opt):
    raw = getattr(args, opt.attr, None)
    if raw is not None:
        try:
            return opt.cast(raw)
        except ValueError as exc:
            raise ConfigError(f"option {opt.flag}: {raw!r}: {exc}") from exc
    if config_file is not None:
        raw = config_file.get(opt.section, opt.key)
        if raw is not None:
            try:
                return opt.cast(raw)
            except ValueError as exc:
                raise config_file.error(
                    opt.section, opt.key, raw, str(exc)
                ) from exc
    return opt.default


def _resolve_config(args) -> RunConfig:
    config_file = (
        load_config_file(args.config) if args.config is not None else None
    )
    blackhole = {}
    for opt in _BLACKHOLE_OPTS:
        blackhole[opt.key] = _resolve_opt(args, config_file, opt)
    options = {}
    for opt in _COMMAND_OPTS[args.command]:
        options[opt.attr] = _resolve_opt(args, config_file, opt)
    outdir = args.out
    if outdir is None and config_file is not None:
        outdir = config_file.get("blackhole", "outdir")
    return RunConfig(
        command=args.command,
        blackhole=blackhole,
        options=options,
        outdir=outdir if outdir is not None else ".",
        seed=args.seed,
    )


def _thread_count() -> int:
    raw = os.environ.get("QNM_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise ConfigError(
            f"QNM_THREADS = {raw!r}: expected an integer"
        ) from exc


def _parallel_map(fn, items):
    """Order-preserving map, fanned out over threads when QNM_THREADS
    allows; results are independent of the thread count."""
    items = list(items)
    workers = min(_thread_count(), max(1, len(items)))
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# artifact emission


def _native(value):
    """JSON-compatible scalar mirroring one CSV cell."""
    if isinstance(value, (bool, int, float, str)) or value is None:
        return value
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    return float(value)


class _Emitter:
    """Collects the artifacts of one run: CSV tables, their optional
    JSON mirrors, figures, and raw binary files."""

    def __init__(self, outdir: str, json_mirror: bool, render: bool):
        self.outdir = outdir
        self.json_mirror = json_mirror
        self.render = render
        self.artifacts: list[str] = []

    def _path(self, name: str) -> str:
        return os.path.join(self.outdir, name)

    def csv(self, stem: str, columns, rows) -> list:
        rows = [tuple(row) for row in rows]
        write_csv(self._path(stem + ".csv"), columns, rows)
        self.artifacts.append(stem + ".csv")
        if self.json_mirror:
            payload = {
                "columns": list(columns),
                "rows": [[_native(cell) for cell in row] for row in rows],
            }
            write_json(self._path(stem + ".json"), payload)
            self.artifacts.append(stem + ".json")
        return rows

    def figure(self, stem: str, renderer, *objects) -> None:
        if not self.render:
            return
        renderer(*objects, self._path(stem + ".png"))
        self.artifacts.append(stem + ".png")

    def snapshot(self, stem: str, field, t: float) -> None:
        path = self._path(stem + ".qnmsnap")
        partial = path + ".part~"
        save_snapshot(partial, field, t)
        os.replace(partial, path)
        self.artifacts.append(stem + ".qnmsnap")

    def manifest(self, cfg: RunConfig, summary: dict) -> None:
        payload = {
            "command": cfg.command,
            "version": __version__,
            "generated_at": datetime.datetime.now(
                datetime.timezone.utc
            ).isoformat(timespec="seconds"),
            "config": cfg.as_dict(),
            "artifacts": list(self.artifacts),
            "summary": {key: _native(val) for key, val in summary.items()},
        }
        write_json(self._path("manifest.json"), payload)
        self.artifacts.append("manifest.json")


# ---------------------------------------------------------------------------
# command runners


def _run_horizons(cfg: RunConfig, emit: _Emitter) -> dict:
    params = cfg.params()
    horizons = find_horizons(params)
    roles = ("negative", "inner", "event", "cosmological")
    rows = [
        (role, r, kappa, abs(metric_function(params, r)))
        for role, r, kappa in zip(roles, horizons.roots, horizons.kappas)
    ]
    emit.csv("horizons", ("role", "radius", "kappa", "residual"), rows)
    emit.figure("horizons", figures.horizons_figure, params, horizons)
    return {
        "max_residual": max(row[3] for row in rows),
        "event_radius": horizons.roots[2],
        "cosmological_radius": horizons.roots[3],
    }


def _run_potential(cfg: RunConfig, emit: _Emitter) -> dict:
    params = cfg.params()
    two_l = cfg.options["two_l"]
    a, b = cfg.options["window"]
    x = np.linspace(a, b, cfg.options["nodes"])
    profile = flow_profile(params, x)
    n = 0.5 * (two_l + 1)
    coupling = n * profile.alpha
    coupling_prime = n * profile.V0p / (2.0 * profile.alpha)
    rows = list(
        zip(
            profile.x, profile.r, profile.alpha, profile.V0,
            profile.V0p, profile.V0pp, coupling,
            coupling**2 - coupling_prime, coupling**2 + coupling_prime,
        )
    )
    emit.csv(
        "potential",
        ("x", "r", "alpha", "v0", "v0_prime", "v0_second", "coupling",
         "potential_minus", "potential_plus"),
        rows,
    )
    emit.figure("potential", figures.potential_figure, profile, two_l, rows)
    peak = max(rows, key=lambda row: row[3])
    return {"barrier_top_x": peak[0], "barrier_top_v0": peak[3]}


def _run_asymptotic(cfg: RunConfig, emit: _Emitter) -> dict:
    params = cfg.params()
    data = barrier_data(params)
    coeffs = PseudopoleCoeffs.from_barrier(data)
    points = lattice(
        data, coeffs, cfg.options["two_l"], cfg.options["k"],
        order=cfg.options["order"], f2_form=cfg.options["f2_form"],
    )
    rows = [
        (p.two_l, p.k, p.order, p.value.real, p.value.imag,
         int(p.mirror), p.multiplicity)
        for p in points
    ]
    emit.csv(
        "asymptotic_qnm",
        ("two_l", "k", "order", "re", "im", "mirror", "multiplicity"),
        rows,
    )
    emit.figure("asymptotic_qnm", figures.resonance_figure, [], points)
    return {"points": len(rows)}


def _ladder_box(data, coeffs, two_l: int, k_values) -> list:
    """Bounding box of the order-2 ladder points for the given indices,
    padded by the ladder spacing."""
    spacing = coeffs.omega / coeffs.z0
    values = [
        pseudopole(data, coeffs, k, two_l, order=2).value for k in k_values
    ]
    return [
        min(v.real for v in values) - spacing,
        max(v.real for v in values) + spacing,
        min(v.imag for v in values) - 0.5 * spacing,
        -1e-9,
    ]


def _ladder_indices_in(data, coeffs, two_l: int, box) -> list:
    """Ladder indices whose order-2 point falls in the box (padded by
    half a spacing); the ladder descends monotonically, so the scan
    stops once it leaves the box from below."""
    spacing = coeffs.omega / coeffs.z0
    re0, re1, im0, im1 = box
    ks = []
    for k in range(200):
        value = pseudopole(data, coeffs, k, two_l, order=2).value
        if value.imag < im0 - 0.5 * spacing:
            break
        if (
            re0 - 0.5 * spacing <= value.real <= re1 + 0.5 * spacing
            and im0 - 0.5 * spacing <= value.imag <= im1
        ):
            ks.append(k)
    return ks


def _in_box(lam: complex, box) -> bool:
    re0, re1, im0, im1 = box
    return re0 <= lam.real <= re1 and im0 <= lam.imag <= im1


def _entry_row(entry) -> tuple:
    err = (
        abs(entry.lam - entry.matched_pseudopole)
        if entry.matched_pseudopole is not None
        else float("nan")
    )
    return (
        entry.two_l, entry.kind, entry.method, entry.lam.real,
        entry.lam.imag, entry.residual, entry.k_guess, err,
    )


def _run_direct(cfg: RunConfig, emit: _Emitter) -> dict:
    params = cfg.params()
    two_l = cfg.options["two_l"]
    data = barrier_data(params)
    coeffs = PseudopoleCoeffs.from_barrier(data)
    box = cfg.options["window"]
    if box is None:
        box = _ladder_box(data, coeffs, two_l, (0, 1, 2))
    ks = _ladder_indices_in(data, coeffs, two_l, box)
    kinds = (
        _KINDS if cfg.options["kind"] == "all" else (cfg.options["kind"],)
    )
    method = cfg.options["method"]

    def one_kind(kind: str) -> list:
        op = mode_operator(params, kind, two_l)
        rows = []
        if method in ("jost", "both") and ks:
            found = string_resonances(op, ks)
            rows += [
                _entry_row(e) for e in found.entries if _in_box(e.lam, box)
            ]
        if method in ("scaled", "both"):
            result = scaled_spectrum(
                op, cfg.options["theta"],
                k_max=max(ks, default=2),
                window=tuple(box),
                N=cfg.options["n_coll"],
            )
            rows += [_entry_row(e) for e in result.resonances.entries]
        return rows

    rows = [row for rows in _parallel_map(one_kind, kinds) for row in rows]
    rows.sort(key=lambda r: (r[1], r[2], -r[4], r[3]))
    emit.csv(
        "direct_qnm",
        ("two_l", "kind", "method", "re", "im", "residual", "matched_k",
         "pseudopole_err"),
        rows,
    )
    ladder_points = lattice(data, coeffs, [two_l], ks, order=2)
    emit.figure("direct_qnm", figures.resonance_figure, rows,
                [p for p in ladder_points if not p.mirror])
    return {
        "resonances": len(rows),
        "ladder_indices": len(ks),
        "max_residual": max((row[5] for row in rows), default=0.0),
    }


def _run_compare(cfg: RunConfig, emit: _Emitter) -> dict:
    params = cfg.params()
    two_l = cfg.options["two_l"]
    data = barrier_data(params)
    coeffs = PseudopoleCoeffs.from_barrier(data)
    op = mode_operator(params, cfg.options["kind"], two_l)
    found = string_resonances(op, cfg.options["k"])
    by_k = {e.k_guess: e for e in found.entries if e.lam.real > 0}
    rows = []
    for k in cfg.options["k"]:
        entry = by_k.get(k)
        if entry is None:
            continue
        errs = [
            abs(entry.lam - pseudopole(data, coeffs, k, two_l, order=r).value)
            for r in (0, 1, 2)
        ]
        rows.append(
            (two_l, k, entry.kind, entry.lam.real, entry.lam.imag,
             entry.residual, errs[0], errs[1], errs[2])
        )
    emit.csv(
        "compare",
        ("two_l", "k", "kind", "direct_re", "direct_im", "residual",
         "err_order0", "err_order1", "err_order2"),
        rows,
    )
    emit.figure("compare", figures.compare_figure, rows)
    improving = all(row[6] > row[7] > row[8] for row in rows)
    return {
        "modes": len(rows),
        "orders_improve": improving,
        "max_order2_error": max((row[8] for row in rows), default=0.0),
    }


def _evolution_run(cfg: RunConfig):
    params = cfg.params()
    op = mode_operator(params, cfg.options["kind"], cfg.options["two_l"])
    grid = make_grid(op, dx=cfg.options["dx"])
    center, width = cfg.options["bump"]
    field = init_bump(grid, center, width)
    t_final = cfg.options["t_final"]
    count = cfg.options["snapshots"]
    snapshot_times = None
    if count > 0:
        snapshot_times = (
            [t_final] if count == 1
            else np.linspace(0.0, t_final, count).tolist()
        )
    result = evolve(
        op, field, t_final, tuple(cfg.options["window"]),
        probe_x=cfg.options["probe_x"],
        snapshot_times=snapshot_times,
        keep_history=False,
    )
    if snapshot_times is None:
        return op, result, []
    trace, snaps = result
    return op, trace, snaps


def _trace_rows(trace) -> list:
    return list(
        zip(
            trace.times, trace.global_norm, trace.local_norm,
            trace.probe.real, trace.probe.imag,
        )
    )


_TRACE_COLUMNS = ("t", "global", "local", "probe_re", "probe_im")


def _run_evolve(cfg: RunConfig, emit: _Emitter) -> dict:
    _, trace, snaps = _evolution_run(cfg)
    emit.csv("evolve_trace", _TRACE_COLUMNS, _trace_rows(trace))
    for index, (t, field) in enumerate(snaps):
        emit.snapshot(f"snapshot_{index:03d}", field, t)
    emit.figure("evolve_trace", figures.trace_figure, trace)
    start = trace.global_norm[0]
    drift = (
        float(np.max(np.abs(trace.global_norm - start)) / start)
        if start > 0 else 0.0
    )
    return {
        "steps": len(trace.times) - 1,
        "global_drift": drift,
        "final_local_norm": float(trace.local_norm[-1]),
        "snapshots": len(snaps),
    }


def _run_ringdown(cfg: RunConfig, emit: _Emitter) -> dict:
    op, trace, snaps = _evolution_run(cfg)
    for index, (t, field) in enumerate(snaps):
        emit.snapshot(f"snapshot_{index:03d}", field, t)
    t_final = cfg.options["t_final"]
    fit_window = cfg.options["fit_window"]
    if fit_window is None:
        fit_window = [0.25 * t_final, 0.95 * t_final]
    fit = ringdown_fit(trace, cfg.options["order"],
                       window=tuple(fit_window))
    params = cfg.params()
    data = barrier_data(params)
    coeffs = PseudopoleCoeffs.from_barrier(data)
    rows = []
    for index, mode in enumerate(fit.modes):
        lam = mode.lam
        upper = lam if lam.real >= 0 else -lam.conjugate()
        k = k_guess_from_value(op, upper)
        reference = pseudopole(data, coeffs, k, op.two_l, order=2).value
        if lam.real < 0:
            reference = -reference.conjugate()
        rows.append(
            (index, lam.real, lam.imag, mode.amplitude.real,
             mode.amplitude.imag, k, abs(lam - reference))
        )
    emit.csv(
        "ringdown_modes",
        ("mode", "re", "im", "amp_re", "amp_im", "matched_k",
         "pseudopole_err"),
        rows,
    )
    emit.csv("evolve_trace", _TRACE_COLUMNS, _trace_rows(trace))
    emit.figure("ringdown", figures.ringdown_figure, trace, fit)
    dominant = fit.dominant()
    return {
        "fit_residual": fit.residual,
        "order_used": fit.order_used,
        "dominant_re": dominant.lam.real,
        "dominant_im": dominant.lam.imag,
    }


def _run_probe(cfg: RunConfig, emit: _Emitter) -> dict:
    report = zone_scan(
        cfg.params(),
        cfg.options["two_l"],
        zone_parameter=cfg.options["zone"],
        samples=cfg.options["grid"],
        window=tuple(cfg.options["window"]),
        nodes=cfg.options["nodes"],
    )
    emit.csv("probe_resolvent", ZoneScanReport.COLUMNS, report.rows())
    emit.figure("probe_resolvent", figures.zone_figure, report)
    return {
        "points": len(report.points),
        "dirac_sup": report.dirac_sup,
        "schrodinger_sup": report.schrodinger_sup,
        "growing": report.growing,
    }


_RUNNERS = {
    "horizons": _run_horizons,
    "potential": _run_potential,
    "asymptotic-qnm": _run_asymptotic,
    "direct-qnm": _run_direct,
    "compare": _run_compare,
    "evolve": _run_evolve,
    "ringdown": _run_ringdown,
    "probe-resolvent": _run_probe,
}


# ---------------------------------------------------------------------------
# entry point


def _format_summary(summary: dict) -> str:
    parts = []
    for key, value in summary.items():
        if isinstance(value, bool):
            parts.append(f"{key}={'yes' if value else 'no'}")
        elif isinstance(value, float):
            parts.append(f"{key}={value:.6g}")
        else:
            parts.append(f"{key}={value}")
    return ", ".join(parts)


def _execute(cfg: RunConfig, json_mirror: bool, render: bool) -> int:
    os.makedirs(cfg.outdir, exist_ok=True)
    emit = _Emitter(cfg.outdir, json_mirror, render)
    summary = _RUNNERS[cfg.command](cfg, emit)
    emit.manifest(cfg, summary)
    print(f"{cfg.command}: {_format_summary(summary)}")
    print(f"wrote {len(emit.artifacts)} files to {cfg.outdir}: "
          + ", ".join(emit.artifacts))
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        cfg = _resolve_config(args)
        cfg.params()
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AdmissibilityError as exc:
        print(f"error: inadmissible black-hole parameters: {exc}",
              file=sys.stderr)
        return 2
    try:
        return _execute(cfg, args.json, args.figures)
    except (
        ContinuationError,
        ContourPinchError,
        ValueError,
        ArithmeticError,
        np.linalg.LinAlgError,
    ) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
