"""Command-line front end: experiment presets writing CSV, metadata, and figures."""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, EXPERIMENTS, resolve
from .device import IDTParams, ev_to_joules, electron_phonon_coupling, idt_center_frequency
from .io import write_csv_atomic, write_sidecar
from .spectra import cpt_spectrum, sideband_spectrum
from .transient import PulseSequence, decoherence_budget, fit_transient_pair, run_transient

TWO_PI = 2.0 * np.pi


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sawspin",
        description="Simulations of an optically driven three-level emitter "
                    "coupled to a quantized acoustic mode.",
    )
    parser.add_argument("--version", action="version", version=f"sawspin {__version__}")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} preset")
        p.add_argument("--config", type=Path, default=None, help="config file path")
        p.add_argument("--seed", type=int, default=None, help="random seed")
        p.add_argument("--out", type=Path, default=None, help="output CSV path")
        p.add_argument("--samples", type=int, default=None,
                       help="diffusion sample count")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (0 = machine parallelism)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
        p.add_argument("--no-figure", action="store_true",
                       help="skip rendering the figure")
    return parser


def _resolve_config(args):
    file_text = None
    if args.config is not None:
        file_text = Path(args.config).read_text(encoding="utf-8")
    overrides = list(args.set)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.samples is not None:
        overrides.append(f"diffusion_samples={args.samples}")
    if args.threads is not None:
        overrides.append(f"threads={args.threads}")
    if args.no_figure:
        overrides.append("figure=false")
    return resolve(args.experiment, file_text=file_text, overrides=overrides)


def _meta_lines(cfg, extra: dict) -> list[str]:
    lines = [f"sawspin {__version__}"]
    lines += cfg.serialize().strip().splitlines()
    lines += [f"{k} = {v}" for k, v in extra.items()]
    return lines


def _finish(cfg, out_path, meta_extra, columns, figure_fn=None):
    t0 = time.perf_counter()
    write_csv_atomic(out_path, _meta_lines(cfg, meta_extra), columns)
    write_sidecar(out_path, cfg.serialize(), {
        "version": __version__,
        "elapsed_s": f"{time.perf_counter() - t0:.3f}",
        **meta_extra,
    })
    figure_path = None
    if cfg["figure"] and figure_fn is not None:
        figure_path = out_path.with_suffix(".png")
        figure_fn(figure_path)
    print(f"wrote {out_path}" + (f" and {figure_path}" if figure_path else ""))


def _run_cpt(cfg, out_path):
    from .report import save_spectrum_figure

    spec = cpt_spectrum(cfg.levels(), cfg.drive(), cfg.rates(), cfg.diffusion(),
                        cfg.axis(), window=cfg["cpt_window_us"],
                        threads=cfg.threads(),
                        per_config=cfg["per_config_columns"])
    columns = [("axis_MHz", spec.axis / TWO_PI), ("signal_arb", spec.signal)]
    if spec.per_config is not None:
        _, labels = cfg.levels().raman_offsets()
        for i, (branch, m_n) in enumerate(labels):
            name = f"signal_b{'p' if branch > 0 else 'm'}1_mn{m_n:+d}_arb"
            columns.append((name, spec.per_config[:, i]))
    _finish(cfg, out_path, {"signal_points": len(spec.axis)}, columns,
            lambda p: save_spectrum_figure(spec, p, kind="cpt"))


def _run_sideband_spectrum(cfg, out_path):
    from .report import save_spectrum_figure

    spec = sideband_spectrum(cfg.levels(), cfg.drive(), cfg.rates(), cfg.axis(),
                             pulse_duration=cfg["pulse_us"],
                             diffusion=cfg.diffusion(), threads=cfg.threads(),
                             per_config=cfg["per_config_columns"])
    columns = [("axis_MHz", spec.axis / TWO_PI), ("signal_arb", spec.signal)]
    if spec.per_config is not None:
        _, labels = cfg.levels().raman_offsets()
        for i, (branch, m_n) in enumerate(labels):
            name = f"signal_b{'p' if branch > 0 else 'm'}1_mn{m_n:+d}_arb"
            columns.append((name, spec.per_config[:, i]))
    _finish(cfg, out_path, {"background_arb": spec.metadata["background"]}, columns,
            lambda p: save_spectrum_figure(spec, p, kind="sideband"))


def _run_transient(cfg, out_path):
    from .report import save_transient_figure

    seq = PulseSequence.standard()
    durations = cfg.durations()
    offset = TWO_PI * cfg["probe_offset_mhz"]
    on = run_transient(seq, cfg.levels(), cfg.drive(), cfg.rates(), durations)
    off = run_transient(seq, cfg.levels(), cfg.drive(), cfg.rates(), durations,
                        two_photon_offset=offset)
    fit = fit_transient_pair(on, off, cfg.rates(), cfg.levels(), cfg.drive(),
                             control_offset=offset)
    meta = {
        "fit_branching_MHz": f"{fit.Gamma_flip / TWO_PI:.6f}",
        "fit_Omega_R_MHz": f"{fit.Omega_R / TWO_PI:.6f}",
        "fit_Omega_ss_MHz": f"{fit.Omega_ss / TWO_PI:.6f}",
        "fit_residual_rms": f"{fit.residual_rms:.3e}",
    }
    columns = [("duration_us", durations), ("signal_arb", on.signal),
               ("control_arb", off.signal)]
    _finish(cfg, out_path, meta, columns,
            lambda p: save_transient_figure(on, off, p, fit))
    print(f"fit: branching {fit.Gamma_flip / TWO_PI:.3f} MHz, "
          f"Rabi {fit.Omega_R / TWO_PI:.3f} MHz, "
          f"sideband Rabi {fit.Omega_ss / TWO_PI:.3f} MHz")


def _run_budget(cfg, out_path):
    from .report import save_budget_figure

    budget = decoherence_budget(cfg.drive(), cfg.rates(), cfg.delta_grid())
    columns = [
        ("delta_MHz", budget.Delta / TWO_PI),
        ("omega_ss_MHz", budget.Omega_ss / TWO_PI),
        ("pumping_rate_MHz", budget.pumping_rate / TWO_PI),
        ("decoherence_rate_MHz", budget.decoherence_rate / TWO_PI),
    ]
    slope = np.polyfit(np.log(budget.Delta), np.log(budget.pumping_rate), 1)[0]
    _finish(cfg, out_path, {"pumping_loglog_slope": f"{slope:.4f}"}, columns,
            lambda p: save_budget_figure(budget, p))


def _run_device(cfg, out_path):
    width = cfg["finger_width_um"] * 1e-6
    params = {"finger_width_w": width,
              "saw_velocity_v_s": cfg["saw_velocity_m_s"],
              "n_finger_pairs": cfg["n_finger_pairs"]}
    d_ev = cfg["deformation_potential_ev"]
    mass = cfg["effective_mass_kg"]
    freq = idt_center_frequency(IDTParams(**params))
    print(f"SAW center frequency: {freq / 1e6:.1f} MHz")
    lines = {"center_frequency_MHz": f"{freq / 1e6:.6f}"}
    if d_ev is not None and mass is not None:
        k_m = cfg["wavenumber_per_m"]
        if k_m is None:
            k_m = TWO_PI * freq / cfg["saw_velocity_m_s"]
        p = IDTParams(**params, deformation_potential_j=ev_to_joules(d_ev),
                      effective_mass_m=mass, wavenumber_k_m=k_m)
        g = electron_phonon_coupling(p, TWO_PI * freq)
        print(f"electron-phonon coupling: {g / TWO_PI / 1e6:.6f} MHz")
        lines["coupling_MHz"] = f"{g / TWO_PI / 1e6:.9f}"
    if out_path is not None:
        names = list(lines)
        columns = [(name, np.array([float(lines[name])])) for name in names]
        _finish(cfg, out_path, lines, columns, None)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
    except (ConfigError, OSError) as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2

    if args.experiment == "validate":
        from .validate import run_all

        failures = run_all()
        if failures:
            print(f"error: validate: {failures} check(s) failed", file=sys.stderr)
            return 1
        print("all checks passed")
        return 0

    out_path = args.out
    if out_path is None and args.experiment != "device":
        out_path = Path(f"{args.experiment}.csv")

    runners = {
        "cpt": _run_cpt,
        "sideband-spectrum": _run_sideband_spectrum,
        "sideband-transient": _run_transient,
        "decoherence-budget": _run_budget,
        "device": _run_device,
    }
    try:
        runners[args.experiment](cfg, out_path)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {args.experiment}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
