"""Command-line front end: ``twophoton <command> [--config FILE] [--out DIR]``.

Commands: ``rates``, ``evolve``, ``sweep``, ``spectrum`` and ``resonance``.
Data files are CSV with 17 significant digits; every CSV has a JSON sidecar
holding the effective configuration.  Exit status is 0 on success, 2 for
invalid input, 3 for numerical-accuracy failures and 4 for horizon failures.
"""
import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .bath import NO_PHONONS, compute_rates
from .config import config_from_dict, load_config
from .dynamics import emission_probabilities, initial_state, propagate, time_grid, \
    write_trajectory_csv
from .errors import ConfigurationError, TwoPhotonError
from .liouvillian import build_liouvillian
from .operators import build_operators, build_space
from .scan import resonance_locator, sweep_delta2
from .spectrum import cavity_spectrum, resolvent_spectrum


def _temperature_label(t):
    return "off" if t is None else f"{t:g}K"


def _sidecar(path, cfg, **extra):
    doc = {"version": __version__, "config": cfg.effective(), **extra}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_json_default)


def _json_default(obj):
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def cmd_rates(cfg, out, workers):
    """Phonon-induced shifts and rates for the configured system."""
    rates = compute_rates(cfg.system, cfg.active_bath)
    table = rates.table()
    path = os.path.join(out, "rates.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "re", "im"])
        for name, value in table.items():
            z = complex(value)
            w.writerow([name, f"{z.real:.17g}", f"{z.imag:.17g}"])
    _sidecar(os.path.join(out, "rates.json"), cfg)
    print(f"<B> = {rates.mean_b:.4f}")
    for name, value in table.items():
        z = complex(value)
        print(f"  {name:20s} {z.real: .6e} {z.imag: .6e}j")
    return 0


def _state_space(cfg):
    return build_operators(build_space(cfg.n_max))


def cmd_evolve(cfg, out, workers):
    """Time evolution from |e,e,0> and emission probabilities."""
    ops = _state_space(cfg)
    gen = build_liouvillian(cfg.generator, cfg.system, cfg.active_bath, ops)
    opts = cfg.evolve
    ts = propagate(gen, initial_state(ops.space), time_grid(opts["t_max"], opts["dt"]),
                   neg_tol=opts["neg_tol"])
    probs = emission_probabilities(ts, cfg.system.kappa, close_tail=opts["close_tail"])
    path = os.path.join(out, "trajectory.csv")
    write_trajectory_csv(path, ts, cfg.system.kappa)
    _sidecar(os.path.join(out, "trajectory.json"), cfg,
             asymptotic=probs.as_dict(), tail_closed=probs.tail_closed,
             residual_excitation=probs.residual)
    print(f"P={probs.P:.6f} Q={probs.Q:.6f} R={probs.R:.6f} R'={probs.R_prime:.6f}")
    return 0


def cmd_sweep(cfg, out, workers):
    """Emission probabilities on a delta2 grid, per temperature."""
    for res in sweep_delta2(cfg.sweep, workers=workers):
        stem = f"sweep_{_temperature_label(res.temperature)}"
        res.write(out, stem)
        _sidecar(os.path.join(out, stem + ".json"), cfg, sweep=res.metadata())
        finite = np.isfinite(res.R)
        if finite.any():
            k = int(np.nanargmax(res.R))
            print(f"T={_temperature_label(res.temperature)}: max R={res.R[k]:.4f} at "
                  f"delta2={res.delta2[k]:g}; failures={len(res.failures)}")
        else:
            print(f"T={_temperature_label(res.temperature)}: all points failed")
    return 0


def _spectrum_job(args):
    cfg_doc, temperature = args
    cfg = config_from_dict(cfg_doc)
    spec = cfg.spectrum
    bath = NO_PHONONS if temperature is None else cfg.bath.with_temperature(temperature)
    ops = _state_space(cfg)
    gen = build_liouvillian(cfg.generator, cfg.system, bath, ops)
    omega = np.linspace(spec["omega_min"], spec["omega_max"], spec["omega_points"])
    if spec["method"] == "resolvent":
        return resolvent_spectrum(gen, initial_state(ops.space), ops, cfg.system.kappa, omega)
    ts = propagate(gen, initial_state(ops.space), time_grid(spec["t_max"], spec["dt"]),
                   neg_tol=spec["neg_tol"])
    return cavity_spectrum(gen, ts, ops, cfg.system.kappa, omega)


def cmd_spectrum(cfg, out, workers):
    """Cavity emission spectrum, per temperature."""
    temps = cfg.spectrum["temperatures"]
    jobs = [(cfg.effective(), t) for t in temps]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            spectra = list(pool.map(_spectrum_job, jobs))
    else:
        spectra = [_spectrum_job(j) for j in jobs]
    for t, sp in zip(temps, spectra):
        stem = f"spectrum_{_temperature_label(t)}"
        sp.to_csv(os.path.join(out, stem + ".csv"))
        peaks = [float(x) for x in sp.peaks(1e-2)]
        _sidecar(os.path.join(out, stem + ".json"), cfg, temperature_K=t,
                 raw_norm=sp.raw_norm, peaks=peaks,
                 cavity_window_weight=sp.window_weight(1.0),
                 photon_number=sp.photon_number())
        print(f"T={_temperature_label(t)}: peaks at {np.round(peaks, 2).tolist()}, "
              f"cavity-window weight {sp.window_weight(1.0):.3f}")
    return 0


def cmd_resonance(cfg, out, workers):
    """Analytic two-photon resonance conditions."""
    doc = {}
    for kind in ("cavity", "phonon"):
        r = resonance_locator(cfg.system, kind, tuple(cfg.resonance["interval"]))
        doc[kind] = {"delta2": r.delta2, "mismatch": r.mismatch,
                     "candidates": [list(c) for c in r.candidates]}
        print(f"{kind}: delta2*={r.delta2:.6f} mismatch={r.mismatch:.3e}")
    _sidecar(os.path.join(out, "resonance.json"), cfg, resonance=doc)
    return 0


COMMANDS = {"rates": cmd_rates, "evolve": cmd_evolve, "sweep": cmd_sweep,
            "spectrum": cmd_spectrum, "resonance": cmd_resonance}


def build_parser():
    parser = argparse.ArgumentParser(prog="twophoton", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=(fn.__doc__ or "").strip() or None)
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                       help="worker processes (default: number of CPUs)")
        p.add_argument("--generator", choices=("full", "approx"),
                       help="master-equation generator (overrides the config)")
    return parser


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config) if args.config else config_from_dict(
            {"schema_version": 1})
        cfg = cfg.with_generator(args.generator)
        if args.workers < 1:
            raise ConfigurationError("--workers must be >= 1")
        out = args.out or cfg.output_dir
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "effective_config.json"), "w") as fh:
            json.dump(cfg.effective(), fh, indent=2, sort_keys=True)
        return COMMANDS[args.command](cfg, out, args.workers)
    except TwoPhotonError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
