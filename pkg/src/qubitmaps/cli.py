"""Command-line front end.

Every subcommand accepts ``--config FILE`` with flat ``key=value`` lines whose
keys mirror the long flags (``omega-plus=1.0`` or ``omega_plus=1.0``); flags
given on the command line win. Exit codes: 0 success, 2 configuration error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import dynamical_map as dm
from . import master_equations as me
from . import three_qubit as tq
from .diagnostics import SingularMapError, divisibility_report, witness_series
from .io import csv_text, json_text, write_text
from .presets import FIGURES
from .two_qubit import BlockParams, makhlin_analysis, max_concurrence_search

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(ValueError):
    pass


# -- parsing helpers ---------------------------------------------------------------

def _vec3(text):
    try:
        v = [float(x) for x in str(text).split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}")
    if len(v) != 3:
        raise argparse.ArgumentTypeError(f"expected three components, got {text!r}")
    return np.array(v)


def _expr(text):
    """Float, also accepting pi and sqrt() (e.g. 'sqrt(5)/2', 'pi/4')."""
    try:
        return float(text)
    except ValueError:
        pass
    try:
        val = eval(str(text), {"__builtins__": {}}, {"pi": math.pi, "sqrt": math.sqrt})
        return float(val)
    except Exception:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")


def read_config(path):
    """Parse key=value lines; '#' starts a comment."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def _add_two_qubit(p):
    g = p.add_argument_group("two-qubit parameters")
    g.add_argument("--preset", choices=sorted(FIGURES))
    g.add_argument("--omega-plus", type=_expr)
    g.add_argument("--omega-minus", type=_expr)
    g.add_argument("--phi-plus", type=_expr)
    g.add_argument("--phi-minus", type=_expr)
    g.add_argument("--tan-phi-plus", type=_expr)
    g.add_argument("--tan-phi-minus", type=_expr)
    g.add_argument("--rE", type=_vec3, help="environment Bloch vector x,y,z")


def _add_grid(p, t_max=True):
    if t_max:
        p.add_argument("--t-max", type=_expr)
        p.add_argument("--dt", type=_expr)
        p.add_argument("--n-times", type=int)


def _add_common(p):
    p.add_argument("--config")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--output", "-o", help="output path (default: stdout)")
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    ap = argparse.ArgumentParser(prog="qubitmaps",
                                 description="Exact reduced qubit dynamics toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan-region", help="perfect-entangler / coupling regions on a phi grid")
    _add_common(p)
    p.add_argument("--omega-plus", type=_expr, default=1.0)
    p.add_argument("--omega-minus", type=_expr, default=0.7)
    p.add_argument("--n-phi-plus", type=int, default=40)
    p.add_argument("--n-phi-minus", type=int, default=40)
    p.add_argument("--concurrence", action="store_true",
                   help="add a numerical concurrence search per grid point")
    p.add_argument("--n-states", type=int, default=250)
    p.add_argument("--n-search-times", type=int, default=64)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("witness", help="trace distance and fidelity series")
    _add_common(p)
    _add_two_qubit(p)
    _add_grid(p)
    p.add_argument("--r1", type=_vec3)
    p.add_argument("--r2", type=_vec3)

    p = sub.add_parser("generator", help="time-local generator trace or Lindblad rates")
    _add_common(p)
    _add_two_qubit(p)
    _add_grid(p)
    p.add_argument("--kind", choices=("trace", "lindblad"))
    p.add_argument("--r1", type=_vec3)
    p.add_argument("--r2", type=_vec3)

    p = sub.add_parser("classify", help="dynamical map family")
    _add_common(p)
    _add_two_qubit(p)

    p = sub.add_parser("divisibility", help="P-/CP-divisibility up to tau2")
    _add_common(p)
    _add_two_qubit(p)
    p.add_argument("--tau2", type=_expr, default=1.0)
    p.add_argument("--n-scan", type=int, default=200)

    p = sub.add_parser("effective-tl", help="effective time-local equation from a shifted state")
    _add_common(p)
    _add_two_qubit(p)
    p.add_argument("--eps", type=_expr, default=0.1)
    p.add_argument("--direction", type=_vec3)
    p.add_argument("--T", type=_expr, default=2.0)
    p.add_argument("--rS0", type=_vec3, default=np.array([0.3, 0.1, -0.2]))

    p = sub.add_parser("three-qubit", help="switched spectator model")
    _add_common(p)
    p.add_argument("--omega", type=_expr, default=1.0)
    p.add_argument("--gamma", type=_expr, default=0.5)
    p.add_argument("--tau", type=_expr, default=math.pi / 4)
    p.add_argument("--zE", type=_expr, default=0.6)
    p.add_argument("--rEp", type=_vec3, default=np.array([0.8, 0.0, 0.0]))
    _add_grid(p)
    return ap


def parse_args(argv):
    """Two-pass parse so config-file values act as defaults under the flags."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = read_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in sub._actions}
        typed = {}
        for k, v in cfg.items():
            if k not in known or k in ("config", "help"):
                raise ConfigError(f"unknown config key {k!r} for {args.command}")
            act = known[k]
            if act.type is not None:
                try:
                    v = act.type(v)
                except (argparse.ArgumentTypeError, ValueError) as exc:
                    raise ConfigError(f"config key {k}: {exc}")
            elif isinstance(act, argparse._StoreTrueAction):
                v = v.lower() in ("1", "true", "yes")
            if act.choices is not None and v not in act.choices:
                raise ConfigError(f"config key {k}: {v!r} not in {sorted(act.choices)}")
            typed[k] = v
        sub.set_defaults(**typed)
        args = parser.parse_args(argv)
    return args


# -- parameter resolution ------------------------------------------------------------

def _block_from_args(args):
    fig = FIGURES.get(args.preset) if getattr(args, "preset", None) else None
    for side in ("plus", "minus"):
        if getattr(args, f"phi_{side}") is not None and getattr(args, f"tan_phi_{side}") is not None:
            raise ConfigError(f"--phi-{side} and --tan-phi-{side} conflict")
    wp = args.omega_plus if args.omega_plus is not None else (fig.omega if fig else None)
    wm = args.omega_minus if args.omega_minus is not None else wp

    def angle(side, default):
        phi, tphi = getattr(args, f"phi_{side}"), getattr(args, f"tan_phi_{side}")
        if phi is not None:
            return phi
        if tphi is not None:
            return math.atan(tphi)
        return default

    default_phi = math.atan(fig.tan_phi) if fig else None
    pp = angle("plus", default_phi)
    pm = angle("minus", pp)
    if wp is None or pp is None:
        raise ConfigError("give --preset or --omega-plus and --phi-plus/--tan-phi-plus")
    if wp < 0 or wm < 0:
        raise ConfigError("block frequencies must be non-negative")
    b = BlockParams.from_angles(wp, pp, wm, pm)
    r_E = args.rE if args.rE is not None else np.array(fig.r_E if fig else (0.0, 0.0, 0.0))
    dm._check_env(r_E)
    return b, np.asarray(r_E, dtype=float), fig


def _t_grid(args, fig, default_t_max=None):
    t_max = args.t_max if args.t_max is not None else (fig.t_max if fig else default_t_max)
    if t_max is None or t_max <= 0:
        raise ConfigError("need a positive --t-max")
    if args.dt is not None and args.n_times is not None:
        raise ConfigError("--dt and --n-times conflict")
    if args.dt is not None:
        if args.dt <= 0:
            raise ConfigError("--dt must be positive")
        n = int(round(t_max / args.dt)) + 1
    else:
        n = args.n_times if args.n_times is not None else (fig.n_times if fig else 1001)
    if n < 2:
        raise ConfigError("time grid needs at least two points")
    return np.linspace(0.0, t_max, n)


def _default_t_max(b):
    w = [x for x in (b.omega_p, b.omega_m) if x > 0]
    return 2 * math.pi / min(w) if w else 1.0


# -- subcommands ---------------------------------------------------------------------

def _region_point(job):
    i, j, pp, pm, wp, wm, conc, ns, nt, seed = job
    b = BlockParams.from_angles(wp, pp, wm, pm)
    rep = makhlin_analysis(b, _default_t_max(b))
    pe = rep.is_perfect_entangler
    strong = math.sin(pp) ** 2 + math.sin(pm) ** 2 > 1
    region = "strong" if strong else ("time_local_pe" if pe else "weak_non_pe")
    row = [pp, pm, pe, strong, region]
    if conc:
        rng = np.random.default_rng([seed, i, j])
        val, t = max_concurrence_search(b, n_states=ns, n_times=nt, rng=rng)
        row += [val, t]
    return row


def phi_grid(n):
    """phi_k = -pi/2 + (k + 1) pi / n, k = 0..n-1 (includes pi/2, and pi/4 when 4 | n)."""
    return -math.pi / 2 + (np.arange(n) + 1) * math.pi / n


def cmd_scan_region(args):
    if args.n_phi_plus < 2 or args.n_phi_minus < 2:
        raise ConfigError("grid sizes must be at least 2")
    if args.workers < 1:
        raise ConfigError("--workers must be positive")
    jobs = [(i, j, float(pp), float(pm), args.omega_plus, args.omega_minus, args.concurrence,
             args.n_states, args.n_search_times, args.seed)
            for i, pp in enumerate(phi_grid(args.n_phi_plus))
            for j, pm in enumerate(phi_grid(args.n_phi_minus))]
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as ex:
            rows = list(ex.map(_region_point, jobs, chunksize=16))
    else:
        rows = [_region_point(j) for j in jobs]
    head = ["phi_plus", "phi_minus", "perfect_entangler", "strong_coupling", "region"]
    if args.concurrence:
        head += ["max_concurrence", "t_at_max"]
    if args.format == "json":
        return json_text({"columns": head, "rows": rows})
    return csv_text(head, rows)


def cmd_witness(args):
    b, r_E, fig = _block_from_args(args)
    t = _t_grid(args, fig, _default_t_max(b))
    r1 = args.r1 if args.r1 is not None else np.array(fig.r1 if fig and fig.r1 else (1, 0, 0))
    r2 = args.r2 if args.r2 is not None else np.array(fig.r2 if fig and fig.r2 else (0, 1, 0))
    ws = witness_series(b, r_E, r1, r2, t)
    omega = b.omega_p
    if args.format == "json":
        return json_text({"omega": omega, "backflow": [list(x) for x in ws.backflow],
                          "tau_nm": ws.tau_nm, "period_D": ws.period("D"),
                          "period_F": ws.period("F"), "expected_period": math.pi / omega,
                          "t": ws.t, "D": ws.D, "F": ws.F})
    return ws.to_csv(omega)


def cmd_generator(args):
    b, r_E, fig = _block_from_args(args)
    t = _t_grid(args, fig, _default_t_max(b))
    kind = args.kind or ("lindblad" if args.preset == "fig4" else "trace")
    if kind == "lindblad":
        r1 = args.r1 if args.r1 is not None else np.array(fig.r1 if fig and fig.r1 else (1, 0, 0))
        r2 = args.r2 if args.r2 is not None else np.array(fig.r2 if fig and fig.r2 else (-1, 0, 0))
        return me.gamma_csv(b, r_E, t, r1, r2)
    if args.format == "json":
        rep = dm.invertibility_analysis(b, r_E, float(t[-1]))
        _, K, det = me.generator_series(b, r_E, t)
        return json_text({"invertibility": rep.to_dict(), "t": t,
                          "trK": np.trace(K, axis1=1, axis2=2), "det": det})
    return me.trace_k_csv(b, r_E, t, scale=math.pi / (4 * b.omega_p))


def cmd_classify(args):
    b, r_E, _ = _block_from_args(args)
    lab = dm.classify(b, r_E)
    out = {"family": lab.family.value, "unital": lab.unital,
           "extra_symmetries": list(lab.extra_symmetries),
           "amplitude_damping": lab.amplitude_damping, "periodic": lab.periodic,
           "markovian": lab.markovian, "coupling_regime": dm.coupling_regime(b),
           "perfect_entangler": makhlin_analysis(b, _default_t_max(b)).is_perfect_entangler}
    if args.format == "csv":
        return csv_text(list(out), [[v if not isinstance(v, list) else ";".join(v)
                                     for v in out.values()]])
    return json_text(out)


def cmd_divisibility(args):
    b, r_E, _ = _block_from_args(args)
    rep = divisibility_report(b, r_E, args.tau2, n_scan=args.n_scan)
    return json_text(rep.to_dict())


def cmd_effective_tl(args):
    b, r_E, fig = _block_from_args(args)
    setup = me.EffectiveTLSetup.from_escape(b, r_E, args.eps, args.T, args.direction)
    setup.validate(b, args.T)
    exact = dm.map_at(b, r_E, args.T).apply(args.rS0)
    plain = me.effective_propagation(setup, b, args.rS0, args.T, False)
    corrected = me.effective_propagation(setup, b, args.rS0, args.T, True)
    return json_text({"eps": setup.eps, "r_shifted": setup.r_shifted, "T": args.T,
                      "exact": exact, "uncorrected": plain, "corrected": corrected,
                      "error_uncorrected": float(np.linalg.norm(plain - exact)),
                      "error_corrected": float(np.linalg.norm(corrected - exact))})


def cmd_three_qubit(args):
    p = tq.ThreeQubitParams(args.omega, args.gamma, args.tau, args.zE, tuple(args.rEp))
    if args.format == "json":
        out = tq.switch_report(p)
        out["symmetry_audit"] = tq.symmetry_audit(p)
        return json_text(out)
    t_max = args.t_max if args.t_max is not None else p.tau + 2 * math.pi / abs(args.omega or 1)
    if args.dt is not None and args.n_times is not None:
        raise ConfigError("--dt and --n-times conflict")
    n = args.n_times or (int(round(t_max / args.dt)) + 1 if args.dt else 401)
    return tq.switch_csv(p, np.linspace(0.0, t_max, n))


COMMANDS = {
    "scan-region": (cmd_scan_region, "csv"),
    "witness": (cmd_witness, "csv"),
    "generator": (cmd_generator, "csv"),
    "classify": (cmd_classify, "json"),
    "divisibility": (cmd_divisibility, "json"),
    "effective-tl": (cmd_effective_tl, "json"),
    "three-qubit": (cmd_three_qubit, "csv"),
}


def run(argv=None):
    """Return (exit code, output text or error message)."""
    try:
        args = parse_args(argv)
    except ConfigError as exc:
        return EXIT_CONFIG, str(exc)
    func, default_fmt = COMMANDS[args.command]
    if args.format is None:
        args.format = default_fmt
    try:
        text = func(args)
    except (ConfigError, ValueError) as exc:
        return EXIT_CONFIG, str(exc)
    except (ArithmeticError, SingularMapError, np.linalg.LinAlgError) as exc:
        return EXIT_NUMERIC, str(exc)
    if args.output:
        write_text(args.output, text)
        return EXIT_OK, ""
    return EXIT_OK, text


def main(argv=None):
    try:
        code, text = run(argv)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code or 0)
    stream = sys.stdout if code == EXIT_OK else sys.stderr
    if text:
        stream.write(text if code == EXIT_OK else f"error: {text}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
