"""Command-line front end: ``trimon <command> [options]``.

Exit codes: 0 success, 1 usage, 2 configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import circuit, crossing, gates, pulses, readout, tomography
from .errors import ConvergenceError, TrimonError, TruncationWarning
from .io import (ConfigError, device_from_config, dumps, load_config, measured_zz, measurement_model, pulse_zz,
                 read_crossing_csv, to_csv)

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3
COMMANDS = ("derive", "spectrum", "simulate", "tomo", "fit-crossing", "report")
NAMED_CIRCUITS = {
    "bell": gates.bell_sequence,
    "swap": lambda: gates.swap_preparation() + gates.swap_sequence(),
    "swap_prep": gates.swap_preparation,
    "transfer": lambda: gates.transfer_preparation() + gates.transfer_sequence(),
    "transfer_prep": gates.transfer_preparation,
    "empty": gates.GateSequence,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trimon", description="Trimon device, gate, readout and spectroscopy toolkit")
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config file (defaults to the built-in canonical device)")
    common.add_argument("--seed", type=int, help="RNG seed (overrides the config)")
    common.add_argument("--out", help="directory for the output file")
    common.add_argument("--shots", type=int, help="shots per tomography setting; 0 for exact probabilities")
    common.add_argument("--dt-ps", type=float, help="pulse integration step in ps")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True
    sub.add_parser("derive", parents=[common], help="closed-form device parameters")
    sp = sub.add_parser("spectrum", parents=[common], help="exact vs perturbative spectrum")
    sp.add_argument("--n-max", type=int, default=6)
    sp.add_argument("--potential", choices=circuit.POTENTIALS, default="quartic")
    sim = sub.add_parser("simulate", parents=[common], help="gate- or pulse-level circuit simulation")
    sim.add_argument("--level", choices=("gate", "pulse"), default="gate")
    sim.add_argument("--circuit", help="named circuit or JSON file (overrides the config)")
    tomo = sub.add_parser("tomo", parents=[common], help="synthetic readout and MLE tomography")
    tomo.add_argument("--level", choices=("gate", "pulse"), default="gate")
    tomo.add_argument("--circuit", help="named circuit or JSON file (overrides the config)")
    tomo.add_argument("--bootstrap", type=int, help="bootstrap resamples (0 disables)")
    fit = sub.add_parser("fit-crossing", parents=[common], help="avoided-crossing fit")
    fit.add_argument("--data", help="CSV with flux, freq_hz[, branch]")
    sub.add_parser("report", parents=[common], help="summarize outputs found in --out")
    return parser


# --- commands --------------------------------------------------------------------


def _seed(args, cfg):
    seed = args.seed if args.seed is not None else cfg.get("seed")
    if seed is None:
        raise ConfigError("a seed is required for stochastic commands (--seed or config 'seed')")
    return int(seed)


def _cavity(cfg: dict, derived: circuit.DerivedParams):
    cav = cfg.get("cavity")
    if not cav:
        return None
    try:
        bare = float(cav["omega_bare_ghz"]) * 1e9
        kappa = float(cav.get("kappa_mhz", 1.0)) * 1e6
        if "g_mhz" in cav:
            return float(cav["g_mhz"]) * 1e6, bare, kappa, "config"
        measured = circuit.transition_bands(measured_zz(cfg)).upper["A"]
        g = circuit.coupling_from_chi_A(float(cav["chi_a_mhz"]) * 1e6, measured - bare, derived.kerr.alpha_A)
        return g, bare, kappa, "chi_a"
    except KeyError as exc:
        raise ConfigError(f"cavity section needs {exc.args[0]}") from None


def cmd_derive(args, cfg) -> dict:
    spec = device_from_config(cfg)
    d = circuit.derive(spec)
    ec, m, k, b = d.charging, d.modes, d.kerr, d.bands
    out = {
        "device": {"ej_hz": spec.EJ, "c_a_f": spec.C_A, "c_b_f": spec.C_B, "c_cp_f": spec.C_Cp, "flux": spec.flux},
        "charging_energies": {"e_ca_hz": ec.E_CA, "e_cb_hz": ec.E_CB, "e_cc_hz": ec.E_CC},
        "modes": {f"omega_{q.lower()}_hz": m.omega(q) for q in "ABC"}
        | {f"z_{q.lower()}_ohm": getattr(m, f"Z_{q}") for q in "ABC"},
        "kerr": {f"j_{q.lower()}_hz": k.self_kerr(q) for q in "ABC"}
        | {f"j_{p.lower()}_hz": getattr(k, f"J_{p}") for p in ("AB", "BC", "CA")}
        | {f"beta_{q.lower()}_hz": k.beta(q) for q in "ABC"}
        | {f"alpha_{q.lower()}_hz": k.alpha(q) for q in "ABC"},
        "bands": {f"omega_{q.lower()}_{band}_hz": b.band(q, band) for q in "AB" for band in ("upper", "lower")}
        | {f"omega_{q.lower()}_{s}{t}_hz": b.entries[q][(s, t)] for q in "ABC" for s in (0, 1) for t in (0, 1)},
        "reported_units": {f"j_{p.lower()}_over_pi_mhz": circuit.j_over_pi(getattr(k, f"J_{p}")) / 1e6
                        for p in ("AB", "BC", "CA")}
        | {f"alpha_{q.lower()}_mhz": k.alpha(q) / 1e6 for q in "ABC"}
        | {f"omega_{q.lower()}_ghz": m.omega(q) / 1e9 for q in "ABC"},
    }
    cav = _cavity(cfg, d)
    if cav is not None:
        g, bare, kappa, source = cav
        rows = {}
        for label, zz in (("derived_bands", d.zz), ("measured_bands", measured_zz(cfg))):
            upper_a = circuit.transition_bands(zz).upper["A"]
            params = circuit.CavityParams.build(bare, g, kappa, upper_a, k.alpha_A)
            chi = circuit.dispersive_shifts(params, zz)
            rows[label] = {"delta0_hz": params.Delta0, "delta1_hz": params.Delta1,
                           "chi_a_hz": chi.chi_A, "chi_b_hz": chi.chi_B, "chi_c_hz": chi.chi_C}
        out["cavity"] = {"omega_bare_hz": bare, "g_hz": g, "g_source": source, "kappa_hz": kappa, **rows}
        out["reported_units"] |= {f"chi_{q}_over_2pi_mhz": rows["measured_bands"][f"chi_{q}_hz"] / 1e6 for q in "abc"}
    return out


def cmd_spectrum(args, cfg) -> dict:
    spec = device_from_config(cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", TruncationWarning)
        leak = circuit.truncation_leakage(spec, args.n_max, args.potential)
        table = circuit.compare_with_perturbation(spec, args.n_max, args.potential)
    return {
        "n_max": args.n_max,
        "potential": args.potential,
        "ground_state_leakage": leak,
        "converged": leak <= 1e-6 and not caught,
        "rows": {name: {"exact_hz": r["exact"], "perturbative_hz": r["perturbative"],
                        "relative_error": r["relative_error"]} for name, r in table.items()},
        "max_relative_error": max(abs(r["relative_error"]) for r in table.values()),
    }


def _load_circuit(args, cfg) -> tuple[str, gates.GateSequence]:
    source = args.circuit if getattr(args, "circuit", None) else cfg.get("circuit", "bell")
    if isinstance(source, list):
        return "config", gates.parse_circuit(source)
    if source in NAMED_CIRCUITS:
        return source, NAMED_CIRCUITS[source]()
    path = Path(source)
    if not path.exists():
        raise ConfigError(f"unknown circuit {source!r} (named: {', '.join(NAMED_CIRCUITS)})")
    try:
        return path.stem, gates.parse_circuit(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"circuit file {path} is not valid JSON: {exc}") from None


def _dt(args, cfg) -> float:
    dt_ps = args.dt_ps if args.dt_ps is not None else cfg.get("pulses", {}).get("dt_ps", 10.0)
    return float(dt_ps) * 1e-12


def _run_circuit(args, cfg, seq):
    if args.level == "gate":
        U, ledger = gates.apply_with_frame(seq)
        return U, ledger, None
    zz = pulse_zz(cfg)
    rise = float(cfg.get("pulses", {}).get("rise_ns", 10.0)) * 1e-9
    res = pulses.simulate_circuit(seq, zz, _dt(args, cfg), rise_sigma=rise)
    return gates.restrict(res.U), res.ledger, res


def cmd_simulate(args, cfg) -> dict:
    name, seq = _load_circuit(args, cfg)
    U, ledger, res = _run_circuit(args, cfg, seq)
    ideal = gates.ideal_circuit(seq)
    psi = U @ gates.basis_state("00")
    target = ideal @ gates.basis_state("00")
    out = {
        "circuit": name,
        "level": args.level,
        "gates": gates.circuit_to_json(seq),
        "ledger": {"zeta_a_rad": ledger.zeta_A, "zeta_b_rad": ledger.zeta_B},
        "gate_fidelity": pulses.average_gate_fidelity(U, ideal),
        "state_fidelity": gates.state_fidelity(psi, target),
        "unitary": U,
        "final_state": psi,
    }
    if res is not None:
        out["duration_s"] = res.duration
        out["dt_s"] = res.grid
        out["schedule"] = pulses.schedule_to_json(res.tones)
    return out


def cmd_tomo(args, cfg) -> dict:
    name, seq = _load_circuit(args, cfg)
    U, _, _ = _run_circuit(args, cfg, seq)
    target = gates.ideal_circuit(seq) @ gates.basis_state("00")
    model = measurement_model(cfg)
    rcfg = cfg.get("readout", {})
    shots = args.shots if args.shots is not None else int(rcfg.get("shots", 10000))
    n_boot = args.bootstrap if args.bootstrap is not None else int(rcfg.get("bootstrap", 100))
    rng = np.random.default_rng(_seed(args, cfg)) if shots else np.random.default_rng(0)
    data = readout.run_tomography(model=model, shots=shots, rng=rng, preparation=U, keep_records=False)
    try:
        result = tomography.mle_reconstruct(data, target=target, rng=rng)
    except ConvergenceError as exc:
        result = exc.best
    std = None
    if shots and n_boot:
        std, _ = tomography.bootstrap_fidelity(data, target, n_boot, rng)
    return {
        "circuit": name,
        "level": args.level,
        "shots_per_setting": shots,
        "heralded_fraction": data.heralded_fraction,
        "fidelity": result.fidelity,
        "fidelity_std": std,
        "log_likelihood": result.log_likelihood,
        "init_log_likelihood": result.init_log_likelihood,
        "probability_floor_triggered": result.floor_triggered,
        "f_k": data.f,
        "counts": data.counts,
        "rho": result.rho,
        "stokes": {label: float(v) for label, v in zip(tomography.PAULI_LABELS, result.stokes.ravel())},
    }


def cmd_fit_crossing(args, cfg) -> dict:
    ccfg = cfg.get("crossing", {})
    data_path = args.data or ccfg.get("data_csv")
    if data_path:
        data = read_crossing_csv(data_path)
        source = str(data_path)
    else:
        syn = ccfg.get("synthetic")
        if not syn:
            raise ConfigError("crossing needs data_csv or a synthetic section")
        rng = np.random.default_rng(_seed(args, cfg))
        flux = np.linspace(syn["flux_min"], syn["flux_max"], int(syn["n_flux"]))
        data = crossing.synthetic_dataset(syn["j_over_pi_mhz"] * 1e6 / 2, syn["omega_q_ghz"] * 1e9,
                                          syn["omega_max_ghz"] * 1e9, syn["scale"], flux,
                                          syn.get("noise_mhz", 0.0) * 1e6, rng)
        source = "synthetic"
    fit = crossing.fit_avoided_crossing(data)
    return {
        "source": source,
        "n_points": fit.n_points,
        "j_hz": fit.J,
        "j_over_pi_mhz": fit.j_over_pi / 1e6,
        "omega_q_hz": fit.omega_q,
        "omega_max_hz": fit.omega_max,
        "flux_scale": fit.scale,
        "degeneracy_flux": fit.degeneracy_flux,
        "residual_rms_hz": fit.residual_rms,
    }


def cmd_report(args, cfg) -> dict:
    if not args.out:
        raise ConfigError("report reads prior outputs from --out")
    out_dir = Path(args.out)
    found = {}
    for name in ("derive", "spectrum", "simulate", "tomo", "fit-crossing"):
        path = out_dir / f"{name}.json"
        if path.exists():
            found[name] = json.loads(path.read_text())
    zz = measured_zz(cfg)
    bands = circuit.transition_bands(zz)
    band_summary = {q.lower(): {"omega_upper_ghz": bands.entries[q][(0, 0)] / 1e9} for q in "ABC"}
    couplings = {"measured": {f"j_{p.lower()}_over_pi_mhz": 2 * zz.cross(p[0], p[1]) / 1e6
                              for p in ("AB", "BC", "CA")}}
    if "derive" in found:
        pu = found["derive"]["reported_units"]
        for q in "abc":
            band_summary[q]["alpha_mhz"] = pu[f"alpha_{q}_mhz"]
        couplings["theory"] = {k: v for k, v in pu.items() if k.startswith("j_") or k.startswith("chi_")}
    report = {"band_summary": band_summary, "couplings": couplings, "sources": sorted(found)}
    if "spectrum" in found:
        report["oracle_max_relative_error"] = found["spectrum"]["max_relative_error"]
    if "simulate" in found:
        report["simulation"] = {k: found["simulate"][k] for k in ("circuit", "level", "gate_fidelity", "state_fidelity")}
    if "tomo" in found:
        report["tomography"] = {k: found["tomo"][k] for k in ("circuit", "fidelity", "fidelity_std", "shots_per_setting")}
    if "fit-crossing" in found:
        report["crossing"] = {k: found["fit-crossing"][k] for k in ("j_over_pi_mhz", "omega_q_hz", "residual_rms_hz")}
    return report


HANDLERS = {
    "derive": cmd_derive,
    "spectrum": cmd_spectrum,
    "simulate": cmd_simulate,
    "tomo": cmd_tomo,
    "fit-crossing": cmd_fit_crossing,
    "report": cmd_report,
}


def _emit(command: str, result: dict, fmt: str, out: str | None) -> str:
    text = dumps(result) if fmt == "json" else to_csv(result)
    if out:
        path = Path(out)
        path.mkdir(parents=True, exist_ok=True)
        (path / f"{command}.{fmt}").write_text(text)
    return text


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"trimon: usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        cfg = load_config(args.config)
        result = HANDLERS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"trimon: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TrimonError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"trimon: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (KeyError, TypeError, ValueError) as exc:
        print(f"trimon: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(_emit(args.command, result, args.format, args.out))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
