"""Command-line front end: figure-data reproduction sweeps as CSV/JSON.

Exit codes: 0 success, 2 usage error, 3 numeric-domain error.  All output is
deterministic for a fixed argv (randomized self-checks use fixed seeds); the
resolved configuration is recorded in the output header.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import ed as ed_mod
from . import gaussian, optomech_stationary, optomech_unitary, qstate, spin_lde
from .exceptions import QcbError
from .output import emit, export_table, fmt_value, parallel_map, read_table


def _parse_levels(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError as exc:
        raise QcbError(f"cannot parse level list {text!r}") from exc


def _load_config_defaults(args: argparse.Namespace, parser: argparse.ArgumentParser):
    """Apply key=value pairs from --config for flags left at their defaults."""
    if getattr(args, "config", None) is None:
        return
    try:
        lines = open(args.config).read().splitlines()
    except OSError as exc:
        raise QcbError(f"cannot read config file: {exc}") from exc
    defaults = {a.dest: a.default for a in parser._actions}
    for raw in lines:
        raw = raw.strip()
        if not raw or raw.startswith("#") or "=" not in raw:
            continue
        key, value = (t.strip() for t in raw.split("=", 1))
        dest = key.replace("-", "_")
        if dest not in defaults or getattr(args, dest) != defaults[dest]:
            continue  # unknown key or flag explicitly given: flags win
        current = defaults[dest]
        if isinstance(current, bool):
            setattr(args, dest, value.lower() in ("1", "true", "yes"))
        elif isinstance(current, int) and not isinstance(current, bool):
            setattr(args, dest, int(value))
        elif isinstance(current, float):
            setattr(args, dest, float(value))
        else:
            setattr(args, dest, value)


def _config_dict(args, keys):
    return {k: getattr(args, k) for k in keys}


# --------------------------------------------------------------------- werner


def _cmd_werner(args, parser) -> int:
    if args.grid is not None:
        fs = np.linspace(-1.0, 1.0 / 3.0, args.grid)
        rows = []
        for f in fs:
            n, en = qstate.negativity(qstate.werner_state(float(f)))
            rows.append({"f": float(f), "N": n, "EN": en})
        text = export_table(rows, ["f", "N", "EN"],
                            _config_dict(args, ["grid"]) | {"command": "werner"},
                            args.out, args.format)
        if args.out is None:
            emit(text)
        return 0
    if args.f is None:
        parser.error("provide --f or --grid")
    n, en = qstate.negativity(qstate.werner_state(args.f))
    print(f"N={fmt_value(n)} EN={fmt_value(en)}")
    return 0


# ------------------------------------------------------------------- gaussian


def _cmd_gaussian(args, parser) -> int:
    if args.grid is not None:
        rows = []
        for r in np.linspace(0.0, args.r_max, args.grid):
            for nb in np.linspace(0.0, args.nbar_max, args.grid):
                v = gaussian.two_mode_squeezed_thermal_cov(float(r), 0.0, float(nb)).cov
                rows.append({"r": float(r), "n_bar": float(nb),
                             "EN": gaussian.logneg_gaussian(v),
                             "EN_closed": max(0.0, 2.0 * r - math.log(2.0 * nb + 1.0))})
        text = export_table(rows, ["r", "n_bar", "EN", "EN_closed"],
                            _config_dict(args, ["grid", "r_max", "nbar_max"])
                            | {"command": "gaussian"}, args.out, args.format)
        if args.out is None:
            emit(text)
        return 0
    v = gaussian.two_mode_squeezed_thermal_cov(args.r, args.theta, args.n_bar).cov
    dminus = gaussian.ppt_tilde_dminus(v)
    print(f"d_minus={fmt_value(dminus)} EN={fmt_value(gaussian.logneg_gaussian(v))} "
          f"separable={fmt_value(gaussian.simon_invariant_check(v))}")
    return 0


# ----------------------------------------------------------- optomech-unitary


def _cmd_optomech_unitary(args, parser) -> int:
    p = optomech_unitary.OptoUnitaryParams(k=args.k, alpha=args.alpha,
                                           n_bar=args.n_bar, t=args.t)
    sel = optomech_unitary.SubspaceSelector(_parse_levels(args.cavity),
                                            _parse_levels(args.mirror))
    q = args.quantity
    if q == "marker":
        if args.sweep_t is not None:
            ts = np.linspace(0.0, 2.0 * math.pi, args.sweep_t)

            def one(t):
                pt = optomech_unitary.OptoUnitaryParams(k=args.k, alpha=args.alpha,
                                                        n_bar=args.n_bar, t=float(t))
                return {"t": float(t), "marker": optomech_unitary.marker_upsilon(pt, sel)}

            rows = parallel_map(one, ts)
            text = export_table(rows, ["t", "marker"],
                                {"command": "optomech-unitary", "k": args.k,
                                 "alpha": args.alpha, "n_bar": args.n_bar,
                                 "cavity": args.cavity, "mirror": args.mirror},
                                args.out, args.format)
            if args.out is None:
                emit(text)
            return 0
        print(f"marker={fmt_value(optomech_unitary.marker_upsilon(p, sel))}")
        return 0
    if q == "tangle":
        dm = optomech_unitary.projected_density(p, sel)
        print(f"tangle={fmt_value(qstate.tangle(dm))}")
        return 0
    if q == "negativity":
        dm = optomech_unitary.projected_density(p, sel)
        n, en = qstate.negativity(dm)
        print(f"N={fmt_value(n)} EN={fmt_value(en)}")
        return 0
    if q == "entropies":
        s_tot, s_cav, s_mir = optomech_unitary.linear_entropies_closed(p)
        print(f"S_total={fmt_value(s_tot)} S_cav={fmt_value(s_cav)} "
              f"S_mir={fmt_value(s_mir)}")
        return 0
    if q == "mi":
        print(f"MI={fmt_value(optomech_unitary.normalized_mi_time(p))}")
        return 0
    if q == "mi-average":
        print(f"MI_av={fmt_value(optomech_unitary.averaged_mi(p, args.mi_steps))}")
        return 0
    parser.error(f"unknown quantity {q}")
    return 2


# ------------------------------------------------------------ optomech-steady


def _cmd_optomech_steady(args, parser) -> int:
    kappa = args.kappa if args.kappa > 0 else None
    p = optomech_stationary.derive_physical_params(
        length=args.length, mass=args.mass, power=args.power, quality=args.quality,
        temperature=args.temperature, wavelength=args.wavelength,
        finesse=args.finesse, kappa=kappa, omega_m=2.0 * math.pi * args.fm)
    xs = np.linspace(args.dmin, args.dmax, args.steps)
    rows = parallel_map(
        lambda x: optomech_stationary.detuning_sweep(p, [x])[0], xs)
    cols = ["Delta_over_wm", "alpha_s", "G", "S1", "S2", "stable", "EN", "n_eff"]
    cols += [f"V{i}{j}" for i in range(1, 5) for j in range(1, 5)]
    cfg = _config_dict(args, ["length", "mass", "power", "quality", "temperature",
                              "wavelength", "finesse", "fm", "dmin", "dmax", "steps"])
    cfg |= {"command": "optomech-steady", "kappa": p.kappa, "n_bar": p.n_bar,
            "g": p.g, "drive_E": p.drive_E}
    text = export_table(rows, cols, cfg, args.out, args.format)
    if args.out is None:
        emit(text)
    return 0


# ------------------------------------------------------------------------ lde


def _cmd_lde(args, parser) -> int:
    if args.lde_command == "chi":
        if args.model == "ring":
            if args.L is None or args.r is None:
                parser.error("ring model needs --L and --r")
            val = spin_lde.chi_ring(spin_lde.RingGeometry(args.L, args.r))
        elif args.model == "aklt":
            if args.r is None:
                parser.error("aklt model needs --r")
            val = spin_lde.chi_aklt(args.r, args.method)
        else:
            parser.error(f"unknown model {args.model}")
        print(fmt_value(val))
        return 0

    if args.lde_command == "thermal":
        cp = spin_lde.CanonicalParams(args.jcan, args.phi, args.eta)
        temps = np.geomspace(args.tmin, args.tmax, args.steps)
        rows = []
        for t in temps:
            beta = 1.0 / float(t)
            c = spin_lde.correlator_of_beta(cp, beta)
            rows.append({"kT": float(t), "beta": beta,
                         "J_ab": spin_lde.jab_of_beta(cp, beta),
                         "correlator": c,
                         "concurrence": qstate.concurrence_from_correlator(c)})
        ct = spin_lde.critical_temperature(cp)
        cfg = _config_dict(args, ["jcan", "phi", "eta", "tmin", "tmax", "steps"])
        cfg |= {"command": "lde-thermal",
                "kT_star_exact": float("nan") if ct.kT_exact is None else ct.kT_exact,
                "kT_star_estimate": ct.kT_estimate}
        text = export_table(rows, ["kT", "beta", "J_ab", "correlator", "concurrence"],
                            cfg, args.out, args.format)
        if args.out is None:
            emit(text)
        return 0

    if args.lde_command == "fit":
        config, columns, rows = read_table(args.infile)
        if "beta" in columns:
            betas = [row["beta"] for row in rows]
        elif "kT" in columns:
            betas = [1.0 / row["kT"] for row in rows]
        else:
            raise QcbError("fit input needs a 'beta' or 'kT' column")
        col = "correlator" if args.kind == "correlator" else "J_ab"
        if col not in columns:
            raise QcbError(f"fit input lacks a {col!r} column")
        fit = spin_lde.fit_canonical_params(
            [(b, row[col]) for b, row in zip(betas, rows)], kind=args.kind)
        payload = {"J_can": fit.params.J_can, "Phi": fit.params.Phi,
                   "eta": fit.params.eta, "rms_residual": fit.rms_residual,
                   "n_points": len(rows)}
        text = json.dumps({k: fmt_value(v) for k, v in payload.items()},
                          indent=2, sort_keys=True) + "\n"
        if args.out:
            open(args.out, "w").write(text)
        else:
            emit(text)
        return 0
    parser.error("missing lde subcommand")
    return 2


# ------------------------------------------------------------------------- ed


def _make_lattice(args) -> ed_mod.LatticeSpec:
    probes = args.probes if args.probes == "ends" else tuple(
        int(t) for t in args.probes.split(","))
    if args.lattice == "chain":
        return ed_mod.chain(args.L, args.alpha, probes)
    if args.lattice == "ladder":
        return ed_mod.ladder(args.L, args.alpha, probes)
    raise QcbError(f"unknown lattice {args.lattice!r}")


def _cmd_ed(args, parser) -> int:
    spec = _make_lattice(args)
    if args.ed_command == "run":
        j_can, gap = ed_mod.low_spectrum_jcan(spec)
        if args.temps == "auto":
            temps = ed_mod.default_temperature_grid(j_can)
        else:
            temps = np.array([float(t) for t in args.temps.split(",")])
        spectrum = ed_mod.full_spectrum(spec)
        betas = 1.0 / temps
        corrs = ed_mod.thermal_correlator_exact(spec, betas, spectrum=spectrum)
        rows = [{"kT": float(t), "beta": float(b), "correlator": float(c),
                 "concurrence": qstate.concurrence_from_correlator(float(c))}
                for t, b, c in zip(temps, betas, corrs)]
        cfg = _config_dict(args, ["lattice", "L", "alpha", "probes", "temps"])
        cfg |= {"command": "ed-run", "J_can_exact": j_can, "robust_gap": gap}
        text = export_table(rows, ["kT", "beta", "correlator", "concurrence"],
                            cfg, args.out, args.format)
        if args.out is None:
            emit(text)
        return 0
    if args.ed_command == "report":
        rep = ed_mod.theory_consistency_report(spec)
        text = json.dumps({k: fmt_value(v) if v is not None else None
                           for k, v in rep.items()}, indent=2, sort_keys=True) + "\n"
        if args.out:
            open(args.out, "w").write(text)
        else:
            emit(text)
        return 0
    parser.error("missing ed subcommand")
    return 2


# -------------------------------------------------------------------- parsing


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="qcb", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=None, help="output file (default stdout)")
        p.add_argument("--format", default="csv", choices=["csv", "json"])
        p.add_argument("--config", default=None,
                       help="key=value file supplying defaults (flags override)")

    p = sub.add_parser("werner", help="Werner-family negativity")
    p.add_argument("--f", type=float, default=None)
    p.add_argument("--grid", type=int, default=None)
    common(p)

    p = sub.add_parser("gaussian", help="two-mode squeezed thermal log-negativity")
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--n-bar", type=float, default=0.0)
    p.add_argument("--grid", type=int, default=None)
    p.add_argument("--r-max", type=float, default=2.0)
    p.add_argument("--nbar-max", type=float, default=3.0)
    common(p)

    p = sub.add_parser("optomech-unitary", help="exact cavity-mirror model")
    p.add_argument("--quantity", default="marker",
                   choices=["marker", "tangle", "negativity", "entropies",
                            "mi", "mi-average"])
    p.add_argument("--k", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--n-bar", type=float, default=0.0)
    p.add_argument("--t", type=float, default=math.pi)
    p.add_argument("--cavity", default="0,1")
    p.add_argument("--mirror", default="0,1")
    p.add_argument("--sweep-t", type=int, default=None)
    p.add_argument("--mi-steps", type=int, default=256)
    common(p)

    p = sub.add_parser("optomech-steady", help="driven-cavity detuning sweep")
    p.add_argument("--length", type=float, default=1e-3, help="cavity length [m]")
    p.add_argument("--mass", type=float, default=5e-12, help="mirror mass [kg]")
    p.add_argument("--power", type=float, default=50e-3, help="input power [W]")
    p.add_argument("--quality", type=float, default=1e5, help="mechanical Q")
    p.add_argument("--temperature", type=float, default=0.4, help="bath T [K]")
    p.add_argument("--wavelength", type=float, default=810e-9)
    p.add_argument("--finesse", type=float, default=1.07e4)
    p.add_argument("--fm", type=float, default=1e7, help="mirror frequency [Hz]")
    p.add_argument("--kappa", type=float, default=0.0,
                   help="override cavity decay [rad/s] (0 = from finesse)")
    p.add_argument("--dmin", type=float, default=0.2)
    p.add_argument("--dmax", type=float, default=3.0)
    p.add_argument("--steps", type=int, default=57)
    common(p)

    p = sub.add_parser("lde", help="spin-bus long-distance entanglement")
    lde_sub = p.add_subparsers(dest="lde_command", required=True)
    q = lde_sub.add_parser("chi", help="bus susceptibility")
    q.add_argument("--model", required=True, choices=["ring", "aklt"])
    q.add_argument("--L", type=int, default=None)
    q.add_argument("--r", type=int, default=None)
    q.add_argument("--method", default="closed", choices=["closed", "numeric"])
    common(q)
    q = lde_sub.add_parser("thermal", help="canonical-model temperature sweep")
    q.add_argument("--jcan", type=float, required=True)
    q.add_argument("--phi", type=float, default=0.0)
    q.add_argument("--eta", type=float, default=0.0)
    q.add_argument("--tmin", type=float, required=True)
    q.add_argument("--tmax", type=float, required=True)
    q.add_argument("--steps", type=int, default=12)
    common(q)
    q = lde_sub.add_parser("fit", help="fit canonical parameters to data")
    q.add_argument("--in", dest="infile", required=True)
    q.add_argument("--kind", default="correlator", choices=["correlator", "jab"])
    common(q)

    p = sub.add_parser("ed", help="exact-diagonalization oracle")
    ed_sub = p.add_subparsers(dest="ed_command", required=True)
    for name, helptext in [("run", "thermal correlator sweep"),
                           ("report", "theory consistency report (JSON)")]:
        q = ed_sub.add_parser(name, help=helptext)
        q.add_argument("--lattice", default="chain", choices=["chain", "ladder"])
        q.add_argument("--L", type=int, default=8)
        q.add_argument("--alpha", type=float, default=0.05)
        q.add_argument("--probes", default="ends",
                       help='"ends" or explicit bath sites "i,j"')
        if name == "run":
            q.add_argument("--temps", default="auto")
        common(q)
    return top


_HANDLERS = {
    "werner": _cmd_werner,
    "gaussian": _cmd_gaussian,
    "optomech-unitary": _cmd_optomech_unitary,
    "optomech-steady": _cmd_optomech_steady,
    "lde": _cmd_lde,
    "ed": _cmd_ed,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        _load_config_defaults(args, parser)
        return _HANDLERS[args.command](args, parser)
    except SystemExit as exc:  # parser.error inside handlers
        return exc.code if isinstance(exc.code, int) else 2
    except QcbError as exc:
        print(f"qcb: error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
