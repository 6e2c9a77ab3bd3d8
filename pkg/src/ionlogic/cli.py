"""Batch command line: ``sweep``, ``gate``, ``ptm`` and ``energy`` subcommands.

Data goes to files (CSV with 6 significant digits, JSON at full precision);
stdout carries one ``#``-prefixed summary line per run.

Exit codes: 0 ok, 2 bad arguments, 3 numerical failure, 4 invalid config.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np
from scipy.integrate import IntegrationWarning

from . import energy, ledger, metrics, ptm, pulses
from .dynamics import TWO_PI, sweep_omega

EXIT_OK = 0
EXIT_BAD_ARGS = 2
EXIT_NUMERICAL = 3
EXIT_CONFIG = 4


def _write_json(obj, path: str | Path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _summary(text: str) -> None:
    print(f"# {text}")


# --- subcommands -----------------------------------------------------------

def cmd_sweep(args) -> int:
    if args.points < 3:
        raise ValueError("--points must be at least 3")
    if not 0 < args.omega_min < args.omega_max:
        raise ValueError("need 0 < --omega-min < --omega-max")
    grid = np.linspace(args.omega_min, args.omega_max, args.points)
    res = sweep_omega(TWO_PI * args.j_hz, args.delta_ratio, grid)
    res.to_csv(args.out)
    k = res.rightmost_peak
    if k is None:
        _summary(f"sweep: {args.points} points, no interior peak")
    else:
        _summary(f"sweep: rightmost peak Omega/J={res.omega_over_j[k]:.6g} "
                 f"fidelity={res.classical_fidelity[k]:.6g} gate_time_ms={res.gate_time[k] * 1e3:.6g}")
    return EXIT_OK


def _gate_program(args) -> tuple[pulses.PulseProgram, metrics.TruthTable]:
    j = TWO_PI * args.j_hz
    mode = args.pulse_mode
    if args.gate == "not":
        return pulses.not_program(args.qubit, mode), metrics.truth_table("not", qubit=args.qubit)
    if args.gate == "cnot":
        prog = pulses.cnot_program(t_cond=args.t_cond_ms * 1e-3, spectator_j=TWO_PI * args.spectator_j_hz,
                                   pulse_mode=mode)
        return prog, metrics.truth_table("cnot")
    if args.gate == "toffoli":
        prog = pulses.toffoli_program(j, args.omega_ratio, args.blocks, mode, dd=not args.no_dd)
        return prog, metrics.truth_table("toffoli")
    prog = pulses.half_adder_program(j, args.omega_ratio, args.blocks, args.t_cond_ms * 1e-3, pulse_mode=mode)
    return prog, metrics.truth_table("half_adder")


def cmd_gate(args) -> int:
    if args.samples < 1 or args.workers < 1:
        raise ValueError("--samples and --workers must be positive")
    prog, tt = _gate_program(args)
    noise = None
    if args.noise_t2us is not None:
        if args.noise_t2us <= 0:
            raise ValueError("--noise-t2us must be positive")
        noise = pulses.NoiseModel(args.noise_t2us * 1e-6, args.samples, args.seed)
    table = metrics.outcome_table(prog, noise, workers=args.workers)
    metrics.write_outcome_csv(table, args.out)
    f = metrics.classical_fidelity(table, tt)
    noise_txt = "noiseless" if noise is None else f"T2*={args.noise_t2us:g}us samples={args.samples} seed={args.seed}"
    _summary(f"gate {args.gate}: classical_fidelity={f:.6g} ({noise_txt})")
    return EXIT_OK


def cmd_ptm(args) -> int:
    res = ptm.equivalent_cnot_fidelity(args.target, args.lambda_h)
    _write_json(res.to_dict(), args.out)
    _summary(f"ptm equivalent-cnot: lambda_cnot={res.lambda_cnot:.6g} f_cnot={res.f_cnot:.6g} "
             f"f_half_adder={res.f_half_adder:.6g}")
    return EXIT_OK


def cmd_energy_power(args) -> int:
    g = energy.WaveguideGeometry(args.radius_mm * 1e-3, args.freq_ghz * 1e9)
    d = energy.DipoleParams(theta=args.theta)
    omega_r = TWO_PI * args.rabi_hz
    est = energy.power_required(omega_r, g, d)
    e_pi = est.p_watts * math.pi / omega_r
    out = est.to_dict()
    out["pi_pulse_energy_J"] = e_pi
    out["photons_per_pi_pulse"] = energy.photon_count(e_pi, g.frequency)
    _write_json(out, args.out)
    _summary(f"energy power: P={est.p_watts:.6g} W B_amp={est.b_amp_tesla:.6g} T "
             f"photons_per_pi_pulse={out['photons_per_pi_pulse']:.6g}")
    return EXIT_OK


def _ledger_config(args) -> ledger.LedgerConfig:
    cfg = ledger.load_config(args.config) if args.config else ledger.LedgerConfig()
    kw = {}
    if args.n_ions is not None:
        kw["n_ions"] = args.n_ions
    if args.preset is not None:
        kw["dd_preset"] = args.preset
    if kw:
        cfg = ledger.config_from_dict({**ledger.config_to_dict(cfg), **kw})
    return cfg


def cmd_energy_ledger(args) -> int:
    cfg = _ledger_config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ledger.write_ledger_csv(cfg, out_dir / "ledger.csv")
    report = ledger.totals(cfg)
    report["gates"] = {g: ledger.gate_energy(g, cfg) for g in ("toffoli", "cnot", "half_adder")}
    _write_json(report, out_dir / "report.json")
    _summary(f"energy ledger: baseline={report['baseline_J']:.6g} J processing={report['processing_J']:.6g} J "
             f"total={report['ledger_total_J']:.6g} J preset={cfg.dd_preset}")
    return EXIT_OK


def cmd_energy_timeline(args) -> int:
    cfg = _ledger_config(args)
    series = ledger.timeline(cfg, include_trap=not args.no_trap)
    ledger.write_timeline_csv(series, args.out)
    _summary(f"energy timeline: {len(series)} intervals, integral excluding trap="
             f"{ledger.timeline_integral(series, exclude=('rf_trap',)):.6g} J")
    return EXIT_OK


def cmd_energy_projection(args) -> int:
    res = ledger.projection(args.scenario)
    _write_json(res, args.out)
    _summary(f"energy projection {args.scenario}: NOT={res['not_J']:.6g} J")
    return EXIT_OK


# --- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ionlogic", description="Trapped-ion reversible logic simulations and energy accounting.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sweep", help="Toffoli classical fidelity versus Omega/J")
    s.add_argument("--j-hz", type=float, default=31.0)
    s.add_argument("--delta-ratio", type=float, default=2.0)
    s.add_argument("--omega-min", type=float, default=0.05)
    s.add_argument("--omega-max", type=float, default=1.3)
    s.add_argument("--points", type=int, default=400)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)

    g = sub.add_parser("gate", help="outcome table of a pulse program")
    g.add_argument("gate", choices=["not", "cnot", "toffoli", "half-adder"])
    g.add_argument("--noise-t2us", type=float, default=None, help="quasi-static dephasing T2* in microseconds")
    g.add_argument("--samples", type=int, default=500)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--pulse-mode", choices=["instantaneous", "finite"], default="instantaneous")
    g.add_argument("--qubit", type=int, choices=[0, 1, 2], default=1, help="target of the NOT gate")
    g.add_argument("--j-hz", type=float, default=31.0)
    g.add_argument("--omega-ratio", type=float, default=1.1)
    g.add_argument("--blocks", type=int, default=200)
    g.add_argument("--t-cond-ms", type=float, default=pulses.T_CNOT * 1e3)
    g.add_argument("--spectator-j-hz", type=float, default=0.0)
    g.add_argument("--no-dd", action="store_true", help="Toffoli without decoupling pulses")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gate)

    t = sub.add_parser("ptm", help="Pauli transfer matrix analyses")
    tsub = t.add_subparsers(dest="ptm_command", required=True)
    eq = tsub.add_parser("equivalent-cnot", help="CNOT fidelity matching a Half-Adder fidelity")
    eq.add_argument("--target", type=float, required=True)
    eq.add_argument("--lambda-h", type=float, default=0.999)
    eq.add_argument("--out", required=True)
    eq.set_defaults(func=cmd_ptm)

    e = sub.add_parser("energy", help="microwave power and energy ledger")
    esub = e.add_subparsers(dest="energy_command", required=True)
    pw = esub.add_parser("power", help="waveguide power for a Rabi frequency")
    pw.add_argument("--rabi-hz", type=float, default=33e3)
    pw.add_argument("--radius-mm", type=float, default=8.15)
    pw.add_argument("--freq-ghz", type=float, default=12.6)
    pw.add_argument("--theta", type=float, default=0.0, help="dipole angle to the field (rad)")
    pw.add_argument("--out", required=True)
    pw.set_defaults(func=cmd_energy_power)

    for name, func, doc in (("ledger", cmd_energy_ledger, "per-step energy ledger"),
                            ("timeline", cmd_energy_timeline, "power-versus-time series")):
        q = esub.add_parser(name, help=doc)
        q.add_argument("--config", default=None, help="ledger JSON config")
        q.add_argument("--n-ions", type=int, default=None)
        q.add_argument("--preset", default=None, help="per-pulse DD energy preset")
        if name == "ledger":
            q.add_argument("--out-dir", required=True)
        else:
            q.add_argument("--no-trap", action="store_true")
            q.add_argument("--out", required=True)
        q.set_defaults(func=func)

    pr = esub.add_parser("projection", help="energy projections for other platforms")
    pr.add_argument("--scenario", choices=["planar_trap", "cavity_qed"], default="planar_trap")
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=cmd_energy_projection)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", IntegrationWarning)
            return args.func(args)
    except ledger.InvalidConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RuntimeError, ArithmeticError, IntegrationWarning) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_ARGS


if __name__ == "__main__":
    sys.exit(main())
