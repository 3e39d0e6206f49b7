"""Command-line driver for the solver library.

Every subcommand writes one machine-readable table (CSV or JSON) with a
fixed column order, 17-significant-digit floats, and deterministic row
ordering, so identical configurations produce bitwise identical output.
An optional report flag renders a matplotlib overview figure next to the
table.  Configuration comes from flags or a plain key-value file, with
flags winning on conflict.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import fields

import numpy as np

from . import ed, evb, experiments, model, rapidity

__all__ = ["main", "run", "build_parser", "EXIT_OK", "EXIT_CONFIG",
           "EXIT_SOLVER", "EXIT_VERIFY"]

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2
EXIT_VERIFY = 3

_OUTPUT_DIR_ENV = "OPENRG_OUTPUT_DIR"
_VERIFY_L_MAX = 5

_COMMANDS = ("spectrum", "flow", "gap-scaling", "homogeneous", "ratios",
             "transitions", "verify")


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


class VerificationError(RuntimeError):
    """The cross-check suite reported failing invariants."""


def _fmt(x):
    """17 significant digits; canonical nan/inf spellings."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def _label_str(occ):
    return "".join(str(int(n)) for n in occ)


def _write_table(path, header, rows, footer=(), fmt="csv"):
    """Serialize one table; footer entries are (key, value) pairs."""
    if fmt == "csv":
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(
                cell if isinstance(cell, str) else _fmt(cell) for cell in row))
        for key, value in footer:
            lines.append(f"# {key} = "
                         f"{value if isinstance(value, str) else _fmt(value)}")
        text = "\n".join(lines) + "\n"
    else:
        payload = {
            "columns": list(header),
            "rows": [[cell if isinstance(cell, str) else float(cell)
                      for cell in row] for row in rows],
            "footer": {key: (value if isinstance(value, str)
                             else float(value)) for key, value in footer},
        }
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _resolve_out(args, default_name):
    out = args.out or default_name
    if not os.path.isabs(out):
        out = os.path.join(os.environ.get(_OUTPUT_DIR_ENV, "."), out)
    parent = os.path.dirname(out)
    if parent:
        os.makedirs(parent, exist_ok=True)
    return out


def _settings_from_args(args):
    kwargs = {}
    for f in fields(evb.ContinuationSettings):
        value = getattr(args, f.name, None)
        if value is not None:
            kwargs[f.name] = value
    try:
        return evb.ContinuationSettings(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _spec_from_args(args, need_N=True):
    if args.L is None:
        raise ConfigError("--L is required")
    L = args.L
    N = args.N if args.N is not None else L
    g = args.g if args.g is not None else 1.0
    if args.homogeneous:
        return model.homogeneous_model(L, args.omega, g, N, args.g0,
                                       args.Omega)
    if args.levels is not None:
        omega = tuple(float(x) for x in args.levels.split(","))
        try:
            return model.ModelSpec(L, omega, g, N, args.g0, args.Omega)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    try:
        return model.ModelSpec(L, tuple(range(1, L + 1)), g, N, args.g0,
                               args.Omega)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _parse_grid(text):
    """Coupling grid: either a comma list or lo:hi:count (inclusive)."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid {text!r} must be lo:hi:count")
        lo, hi, num = float(parts[0]), float(parts[1]), int(parts[2])
        if num < 2 or hi <= lo:
            raise ConfigError(f"grid {text!r} must be ascending with >= 2 points")
        return [float(g) for g in np.linspace(lo, hi, num)]
    try:
        grid = [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"cannot parse grid {text!r}") from exc
    if not grid:
        raise ConfigError("empty coupling grid")
    return grid


def _forbid_homogeneous(args, command):
    if args.homogeneous:
        raise ConfigError(
            f"{command} solves the eigenvalue-based equations, which need "
            "distinct levels; use the homogeneous command instead")


# ---------------------------------------------------------------- commands

def _cmd_spectrum(args):
    _forbid_homogeneous(args, "spectrum")
    settings = _settings_from_args(args)
    spec = _spec_from_args(args)
    if args.all_sectors:
        recs = experiments.full_spectrum(spec, settings)
    else:
        recs = experiments.sector_records(spec, settings)
        recs.sort(key=lambda r: r.occupation)
    rows = [(_label_str(r.occupation), str(r.sector), r.gamma.real,
             r.gamma.imag, r.residual, r.source) for r in recs]
    out = _resolve_out(args, f"spectrum.{args.format}")
    _write_table(out, ("label", "sector", "re_gamma", "im_gamma",
                       "residual", "source"), rows, fmt=args.format)
    if args.report:
        _report_spectrum(recs, out)
    return [out]


def _cmd_flow(args):
    _forbid_homogeneous(args, "flow")
    settings = _settings_from_args(args)
    spec = _spec_from_args(args)
    grid = _parse_grid(args.g_grid if args.g_grid is not None else "0.1:2:20")
    raw = experiments.spectral_flow(spec, grid, settings)
    rows = [(g, _label_str(occ), re, over, im, res, "EVB")
            for g, occ, re, over, im, res in raw]
    out = _resolve_out(args, f"flow.{args.format}")
    _write_table(out, ("g", "label", "re_gamma", "re_gamma_over_g",
                       "im_gamma", "residual", "source"), rows,
                 fmt=args.format)
    if args.report:
        _report_flow(raw, out)
    return [out]


def _cmd_gap_scaling(args):
    _forbid_homogeneous(args, "gap-scaling")
    settings = _settings_from_args(args)
    sizes = [int(x) for x in
             (args.sizes or ",".join(map(str, range(10, 51, 4)))).split(",")]
    g = args.g if args.g is not None else 2.0
    result = experiments.gap_scaling(sizes, g, settings,
                                     workers=args.workers)
    rows = [(str(L), gap, str(int(pair)), "EVB")
            for L, gap, pair in zip(result.L_values, result.gap_values,
                                    result.is_complex_pair)]
    footer = [("g", result.g), ("fit_slope", result.fit_slope),
              ("fit_intercept", result.fit_intercept),
              ("fit_rms", result.fit_rms)]
    out = _resolve_out(args, f"gap-scaling.{args.format}")
    _write_table(out, ("L", "gap_abs_re", "is_complex_pair", "source"),
                 rows, footer, fmt=args.format)
    if args.report:
        _report_gap_scaling(result, out)
    return [out]


def _cmd_homogeneous(args):
    if not args.homogeneous:
        args.homogeneous = True
    if args.L is None:
        raise ConfigError("--L is required")
    table = model.homogeneous_spectrum(args.L, args.omega,
                                       args.g if args.g is not None else 1.0,
                                       args.g0, args.Omega)
    rows = [(str(S), str(M), gamma.real, gamma.imag, str(deg), 0.0,
             "HOMOGENEOUS") for S, M, gamma, deg in table]
    out = _resolve_out(args, f"homogeneous.{args.format}")
    _write_table(out, ("S", "M", "re_gamma", "im_gamma", "degeneracy",
                       "residual", "source"), rows, fmt=args.format)
    if args.report:
        _report_homogeneous(table, out)
    return [out]


def _cmd_ratios(args):
    _forbid_homogeneous(args, "ratios")
    settings = _settings_from_args(args)
    spec = _spec_from_args(args)
    g_large = args.g if args.g is not None else 5.0
    raw = experiments.ratio_quantization(spec, g_large, settings,
                                         ratio_threshold=args.ratio_threshold)
    rows = [(_label_str(occ), str(p), measured, predicted, dev, "EVB")
            for occ, p, measured, predicted, dev in raw]
    out = _resolve_out(args, f"ratios.{args.format}")
    _write_table(out, ("label", "p", "measured_ratio", "predicted_ratio",
                       "rel_dev", "source"), rows, fmt=args.format)
    if args.report:
        _report_ratios(raw, out)
    return [out]


def _cmd_transitions(args):
    _forbid_homogeneous(args, "transitions")
    settings = _settings_from_args(args)
    spec = _spec_from_args(args)
    grid = _parse_grid(args.g_grid if args.g_grid is not None else "0,2")
    lo, hi = min(grid), max(grid)
    recs = experiments.transition_map(spec, (lo, hi), settings)
    rows = []
    trace_rows = []
    for rec in recs:
        rows.append((_label_str(rec.label_a), _label_str(rec.label_b),
                     math.nan if rec.g_star is None else rec.g_star,
                     math.nan if rec.gamma_star is None
                     else rec.gamma_star.real, "EVB"))
        for g, occ, j, re_q, over, im_q in rec.trace:
            trace_rows.append((g, _label_str(occ), str(j), re_q, over, im_q,
                               "EVB"))
    out = _resolve_out(args, f"transitions.{args.format}")
    _write_table(out, ("label_a", "label_b", "g_star", "gamma_star_re",
                       "source"), rows, fmt=args.format)
    written = [out]
    if args.trace_out or trace_rows:
        if args.trace_out:
            trace_out = args.trace_out
            if not os.path.isabs(trace_out):
                trace_out = os.path.join(
                    os.environ.get(_OUTPUT_DIR_ENV, "."), trace_out)
        else:
            trace_out = os.path.splitext(out)[0] + f"-trace.{args.format}"
        _write_table(trace_out, ("g", "label", "j", "re_q", "re_q_over_g",
                                 "im_q", "source"), trace_rows,
                     fmt=args.format)
        written.append(trace_out)
    if args.report and recs:
        _report_transitions(recs, out)
    return written


# ------------------------------------------------------------------ verify

def _op_norm(mat):
    return float(np.linalg.norm(mat, 2))


def _verify_checks(spec, settings):
    """Yield (name, value, tolerance, passed) for the cross-check suite."""
    from scipy.optimize import linear_sum_assignment

    L = spec.L
    liou = ed.build_liouvillian(spec)
    charges = [ed.build_charge(spec, j) for j in range(L)]
    sz = ed.build_sz(L)
    parity = ed.build_spin_inversion(L)
    w = spec.omega_arr

    for j in (0, L - 1):
        v = _op_norm(liou.entries @ charges[j].entries
                     - charges[j].entries @ liou.entries)
        yield f"commutator [liouvillian, Q_{j + 1}]", v, 1e-11, v < 1e-11
    v = max(_op_norm(charges[j].entries @ charges[k].entries
                     - charges[k].entries @ charges[j].entries)
            for j in range(L) for k in range(j + 1, L))
    yield "commutators [Q_j, Q_k]", v, 1e-11, v < 1e-11
    total = sum(q.entries for q in charges)
    target = 1j * sz.entries + spec.g * sz.entries @ sz.entries
    v = _op_norm(total - target)
    yield "charge sum rule sum_j Q_j", v, 1e-11, v < 1e-11
    weighted = sum(wj * q.entries for wj, q in zip(w, charges))
    ident = np.eye(liou.dim)
    v = _op_norm(weighted - liou.entries - 2 * spec.g * np.sum(w) * ident)
    yield "weighted sum rule sum_j omega_j Q_j", v, 1e-11, v < 1e-11
    v = _op_norm(parity.entries.conj().T @ liou.entries @ parity.entries
                 - liou.entries.conj().T)
    yield "pseudo-Hermiticity P' L P = L'", v, 1e-11, v < 1e-11

    for N in range(0, 2 * L + 1):
        sec = spec.with_N(N)
        states = evb.solve_sector(sec, settings)
        eigs = np.array([evb.eigenvalue_of_state(st, sec) for st in states])
        vals, _, _ = ed.diagonalize(ed.build_liouvillian(
            sec, sector_restricted=True))
        cost = np.abs(eigs[:, None] - vals[None, :])
        r, c = linear_sum_assignment(cost)
        v = float(cost[r, c].max())
        yield f"EVB vs ED multiset, N={N}", v, 1e-8, v < 1e-8

        worst_bethe = worst_gamma = 0.0
        for st in states:
            if st.N > sec.L:
                continue
            try:
                raps = rapidity.rapidities_from_state(st, sec)
            except rapidity.UnsupportedExtractionError:
                continue
            res = rapidity.verify_bethe_equations(sec, raps.values)
            if res.size:
                worst_bethe = max(worst_bethe, float(np.max(np.abs(res))))
            back = model.eigenvalue_from_rapidities(sec, raps.values_arr)
            worst_gamma = max(worst_gamma,
                              abs(back - evb.eigenvalue_of_state(st, sec)))
        yield (f"rapidity Bethe residual, N={N}", worst_bethe, 1e-8,
               worst_bethe < 1e-8)
        yield (f"rapidity eigenvalue round trip, N={N}", worst_gamma, 1e-8,
               worst_gamma < 1e-8)


def _cmd_verify(args):
    _forbid_homogeneous(args, "verify")
    if args.L is None:
        args.L = 3
    if args.L > _VERIFY_L_MAX:
        raise ConfigError(f"verify is capped at L = {_VERIFY_L_MAX} "
                          "(dense-oracle cost)")
    settings = _settings_from_args(args)
    args.N = args.L
    spec = _spec_from_args(args)
    failures = 0
    for name, value, tol, passed in _verify_checks(spec, settings):
        status = "PASS" if passed else "FAIL"
        print(f"{status} {name}: {value:.3e} (tol {tol:.0e})")
        failures += not passed
    print(f"{'OK' if failures == 0 else 'FAILED'}: "
          f"{failures} failing check(s)")
    if failures:
        raise VerificationError(f"{failures} failing check(s)")
    return []


# ------------------------------------------------------------------ reports

def _figure(out):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _report_path(out):
    return os.path.splitext(out)[0] + ".png"


def _save(plt, fig, out):
    fig.savefig(_report_path(out), dpi=150)
    plt.close(fig)


def _report_spectrum(recs, out):
    plt = _figure(out)
    fig, ax = plt.subplots(figsize=(6, 4))
    sectors = sorted({r.sector for r in recs})
    cmap = plt.get_cmap("coolwarm")
    span = max(1, max(abs(s) for s in sectors))
    for s in sectors:
        pts = [r.gamma for r in recs if r.sector == s]
        ax.scatter([z.real for z in pts], [z.imag for z in pts], s=12,
                   color=cmap(0.5 + 0.5 * s / span), label=f"$S^z$={s}")
    nz = [r.gamma for r in recs if abs(r.gamma) > 1e-8]
    if nz:
        gap = min(nz, key=lambda z: abs(z.real))
        ax.axvline(gap.real, ls=":", color="k", lw=1)
    ax.set_xlabel(r"Re $\gamma$")
    ax.set_ylabel(r"Im $\gamma$")
    if len(sectors) <= 9:
        ax.legend(fontsize=7)
    fig.tight_layout()
    _save(plt, fig, out)


def _report_flow(rows, out):
    plt = _figure(out)
    fig, axes = plt.subplots(2, 1, sharex=True, figsize=(6, 6))
    by_label = {}
    for g, occ, re, over, im, _res in rows:
        by_label.setdefault(occ, []).append((g, over, im))
    for occ, pts in by_label.items():
        pts.sort()
        gs = [p[0] for p in pts]
        axes[0].plot(gs, [p[1] for p in pts], lw=0.8)
        axes[1].plot(gs, [p[2] for p in pts], lw=0.8)
    axes[0].set_ylabel(r"Re $\gamma$ / g")
    axes[1].set_ylabel(r"Im $\gamma$")
    axes[1].set_xlabel("g")
    fig.tight_layout()
    _save(plt, fig, out)


def _report_gap_scaling(result, out):
    plt = _figure(out)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogx(result.L_values, result.gap_values, "o", label="exact")
    if not math.isnan(result.fit_slope):
        xs = np.linspace(min(result.L_values), max(result.L_values), 200)
        ax.semilogx(xs, result.fit_slope * np.log(xs) + result.fit_intercept,
                    "--", label="log fit")
    ax.set_xlabel("L")
    ax.set_ylabel(r"|Re $\gamma$|")
    ax.legend()
    fig.tight_layout()
    _save(plt, fig, out)


def _report_homogeneous(table, out):
    plt = _figure(out)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.scatter([g.real for _, _, g, _ in table],
               [g.imag for _, _, g, _ in table],
               c=[M for _, M, _, _ in table], cmap="coolwarm", s=14)
    ax.set_xlabel(r"Re $\gamma$")
    ax.set_ylabel(r"Im $\gamma$")
    fig.tight_layout()
    _save(plt, fig, out)


def _report_ratios(rows, out):
    plt = _figure(out)
    fig, ax = plt.subplots(figsize=(6, 4))
    good = [(p, m) for _, p, m, _, _ in rows if p >= 0 and not math.isnan(m)]
    if good:
        ax.scatter([p for p, _ in good], [abs(m) for _, m in good], s=14,
                   label="measured")
        ps = sorted({p for p, _ in good})
        ax.plot(ps, [1.0 / (2 * p + 1) for p in ps], "k--",
                label=r"$1/(2p+1)$")
        ax.legend()
    ax.set_xlabel("p")
    ax.set_ylabel(r"|g Im $\gamma$ / Re $\gamma$|")
    fig.tight_layout()
    _save(plt, fig, out)


def _report_transitions(recs, out):
    plt = _figure(out)
    fig, axes = plt.subplots(2, 1, sharex=True, figsize=(6, 6))
    rec = next((r for r in recs if r.trace), None)
    if rec is not None:
        by_curve = {}
        for g, occ, j, re_q, over, im_q in rec.trace:
            by_curve.setdefault((occ, j), []).append((g, over, im_q))
        for (occ, j), pts in by_curve.items():
            pts.sort()
            style = "-" if occ == rec.label_a else "--"
            axes[0].plot([p[0] for p in pts], [p[1] for p in pts], style,
                         lw=0.8)
            axes[1].plot([p[0] for p in pts], [p[2] for p in pts], style,
                         lw=0.8)
        if rec.g_star is not None:
            for ax in axes:
                ax.axvline(rec.g_star, ls=":", color="k", lw=1)
    axes[0].set_ylabel(r"Re $q_j$ / g")
    axes[1].set_ylabel(r"Im $q_j$")
    axes[1].set_xlabel("g")
    fig.tight_layout()
    _save(plt, fig, out)


# ------------------------------------------------------------------- parser

def _read_config(path):
    values = {}
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(
                        f"{path}:{lineno}: expected key = value")
                key, value = line.split("=", 1)
                values[key.strip().replace("-", "_")] = value.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return values


def build_parser():
    parser = argparse.ArgumentParser(
        prog="openrg",
        description="Exact spectra of the collectively dissipative "
                    "Richardson-Gaudin Liouvillian.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value file; flags win")
        p.add_argument("--L", type=int)
        p.add_argument("--N", type=int)
        p.add_argument("--g", type=float)
        p.add_argument("--g0", type=float, default=0.0)
        p.add_argument("--Omega", type=float, default=0.0)
        p.add_argument("--picket-fence", action="store_true",
                       help="levels omega_j = j (the default)")
        p.add_argument("--levels", help="comma list of distinct levels")
        p.add_argument("--homogeneous", action="store_true")
        p.add_argument("--omega", type=float, default=1.0,
                       help="level value for the homogeneous model")
        p.add_argument("--g-grid", help="comma list or lo:hi:count")
        p.add_argument("--all-sectors", action="store_true",
                       help="dump every N sector instead of just one")
        p.add_argument("--sizes", help="comma list of system sizes")
        p.add_argument("--ratio-threshold", type=float, default=1.5)
        p.add_argument("--out")
        p.add_argument("--trace-out")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--workers", type=int,
                       default=os.cpu_count() or 1)
        p.add_argument("--report", action="store_true",
                       help="render an overview figure next to the table")
        for f in fields(evb.ContinuationSettings):
            flag = "--" + f.name.replace("_", "-")
            p.add_argument(flag, type=type(f.default), default=None)
    return parser


def _apply_config(parser, args, argv):
    if not args.config:
        return args
    values = _read_config(args.config)
    given = {a.split("=", 1)[0].lstrip("-").replace("-", "_")
             for a in argv if a.startswith("--")}
    overrides = []
    for key, value in values.items():
        if key in given or key == "config":
            continue
        flag = "--" + key.replace("_", "-")
        if value.lower() in ("true", "false"):
            if value.lower() == "true":
                overrides.append(flag)
        else:
            overrides.extend([flag, value])
    return parser.parse_args([args.command] + overrides + argv[1:])


def run(argv):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args = _apply_config(parser, args, argv)
        handler = {
            "spectrum": _cmd_spectrum,
            "flow": _cmd_flow,
            "gap-scaling": _cmd_gap_scaling,
            "homogeneous": _cmd_homogeneous,
            "ratios": _cmd_ratios,
            "transitions": _cmd_transitions,
            "verify": _cmd_verify,
        }[args.command]
        written = handler(args)
    except (ConfigError, model.SingularInputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (evb.NonConvergenceError, ed.ResourceLimitError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
