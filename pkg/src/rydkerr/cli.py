"""Command-line interface: spectrum | synth | extract | fit | pipeline.

Each command reads and writes plain files so stages can be chained,
scripted or replayed from a manifest.  Exit codes: 0 success, 2
configuration problems, 3 numerical failures, 4 signal-processing
failures.  All outputs are deterministic for fixed inputs and seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import blockade as blockade_mod
from . import response
from .blockade import BlockadeMode
from .config import ExcitonSeriesConfig, SpectralGrid, load_config
from .errors import ConfigError, NumericsError, SignalProcessingError
from .fitting import extract_n2, fit_powerlaw, fit_saturable
from .images import ComplexFieldMap, ScalarFieldMap, read_png16, read_rkf, write_rkf
from .interferometry import (
    PhaseShiftCurve,
    add_intensity_jitter,
    add_shot_noise,
    bin_by_intensity,
    demodulate_phase,
    gaussian_beam,
    gaussian_phase_map,
    subtract_reference,
    synthesize_interferogram,
    unwrap_phase,
)
from .utils import atomic_write_text

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_SIGNAL = 4

DEFAULT_CARRIER = f"{2 * np.pi / 10},0.0"


def _load_config_and_blockade(args) -> tuple[ExcitonSeriesConfig, BlockadeMode]:
    if not args.config:
        raise ConfigError("this command needs --config")
    path = Path(args.config)
    cfg = load_config(path)
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    mode = blockade_mod.from_dict(raw.get("blockade"))
    override = getattr(args, "blockade", None)
    if override:
        mode = blockade_mod.BlockadeMode(
            variant=override,
            broadening_constant=mode.broadening_constant,
            isat_scale=mode.isat_scale,
            isat_exponent=mode.isat_exponent,
            isat_per_n=mode.isat_per_n)
    return cfg, mode


def _out_path(args, name: str) -> Path:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir / name


def _read_map(path) -> ScalarFieldMap:
    path = str(path)
    if path.lower().endswith(".png"):
        return read_png16(path)
    return read_rkf(path)


# ---------------------------------------------------------------------------
# spectrum

def cmd_spectrum(args) -> int:
    cfg, mode = _load_config_and_blockade(args)
    if args.nmin is not None or args.nmax is not None:
        cfg = cfg.replace(n_min=args.nmin or cfg.n_min, n_max=args.nmax or cfg.n_max)
    eb_min = args.eb_min_mev * 1e-3
    eb_max = args.eb_max_mev * 1e-3
    e_lo, e_hi = cfg.gap_energy - eb_max, cfg.gap_energy - eb_min
    if e_lo <= 0 or e_hi > cfg.gap_energy + 10e-3:
        raise ConfigError("grid bounds must lie inside (0, gap + 10 meV)")
    grid = SpectralGrid.from_binding_energy(cfg, eb_min, eb_max, args.step_uev * 1e-6)
    text = response.render_spectrum_csv(grid, cfg, mode, intensity=args.intensity,
                                        chi3_only=args.chi3_only)
    out = _out_path(args, args.out_file)
    atomic_write_text(out, text)
    print(f"wrote {out} ({len(grid)} energies)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# synth

def _parse_carrier(text: str):
    try:
        kx, ky = (float(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"carrier must be 'kx,ky' in rad/pixel, got {text!r}") from exc
    return kx, ky


def _model_phase_map(intensity: ScalarFieldMap, energy: float,
                     cfg: ExcitonSeriesConfig, mode: BlockadeMode) -> ScalarFieldMap:
    """Kerr phase map for an intensity image, via a 1-D lookup table."""
    peak = float(intensity.values.max())
    lut_i = np.linspace(0.0, max(peak, 1e-12), 600)
    lut_phi = response.phase_shift(energy, lut_i, cfg, mode)
    return ScalarFieldMap(np.interp(intensity.values, lut_i, lut_phi),
                          intensity.pixel_pitch)


def cmd_synth(args) -> int:
    rng = np.random.default_rng(args.seed)
    shape = (args.size, args.size)
    beam = gaussian_beam(args.power_mw, args.beam_sigma_um, shape,
                         args.pixel_pitch_um)
    low_int = ScalarFieldMap(beam.values * args.low_ratio, beam.pixel_pitch)
    carrier = _parse_carrier(args.carrier)

    if args.mode == "model":
        cfg, mode = _load_config_and_blockade(args)
        if args.energy_ev is None:
            raise ConfigError("model synthesis needs --energy-ev")
        phase_high = _model_phase_map(beam, args.energy_ev, cfg, mode)
        phase_low = _model_phase_map(low_int, args.energy_ev, cfg, mode)
    else:
        sigma = args.bump_sigma_um or args.beam_sigma_um
        phase_high = gaussian_phase_map(args.peak_phase, sigma, shape,
                                        args.pixel_pitch_um)
        phase_low = ScalarFieldMap(np.zeros(shape), args.pixel_pitch_um)

    ref_amp = args.ref_amplitude
    if ref_amp is None:
        ref_amp = float(np.sqrt(beam.values.max()))
    sig_high = ComplexFieldMap.from_intensity_phase(beam, phase_high)
    sig_low = ComplexFieldMap.from_intensity_phase(low_int, phase_low)
    ifg_high = synthesize_interferogram(sig_high, ref_amp, carrier, args.ref_curvature)
    ifg_low = synthesize_interferogram(sig_low, ref_amp * np.sqrt(args.low_ratio),
                                       carrier, args.ref_curvature)

    images = {"high_ifg": ifg_high, "low_ifg": ifg_low,
              "high_int": beam, "low_int": low_int}
    if args.intensity_jitter > 0 or args.shot_counts > 0:
        for key in list(images):
            img = images[key]
            if args.intensity_jitter > 0:
                img = add_intensity_jitter(img, args.intensity_jitter, rng)
            if args.shot_counts > 0:
                img = add_shot_noise(img, args.shot_counts, rng)
            images[key] = img

    extra = {"seed": args.seed}
    written = {}
    for key, img in images.items():
        path = _out_path(args, f"{args.prefix}_{key}.rkf")
        write_rkf(path, img, extra)
        written[key] = str(path)
    meta = {
        "seed": args.seed,
        "mode": args.mode,
        "power_mw": args.power_mw,
        "beam_sigma_um": args.beam_sigma_um,
        "low_ratio": args.low_ratio,
        "carrier": list(carrier),
        "ref_curvature": args.ref_curvature,
        "peak_phase": args.peak_phase if args.mode == "bump" else None,
        "energy_ev": args.energy_ev,
        "files": written,
    }
    meta_path = _out_path(args, f"{args.prefix}_meta.json")
    atomic_write_text(meta_path, json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(written)} images with prefix {args.prefix} in {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# extract

def cmd_extract(args) -> int:
    def demod(path):
        img = _read_map(path)
        try:
            return unwrap_phase(demodulate_phase(img, args.window_radius))
        except SignalProcessingError as exc:
            raise SignalProcessingError(f"{path}: {exc}") from exc

    high = demod(args.high_ifg)
    low = demod(args.low_ifg)
    intensity = _read_map(args.intensity)
    high.require_same_grid(low, "high and low power phase maps")
    diff = subtract_reference(high, low, intensity)
    curve = bin_by_intensity(diff, intensity, n_bins=args.bins,
                             tolerance=args.tolerance)
    out = _out_path(args, args.out_file)
    atomic_write_text(out, curve.to_csv(seed=args.seed))
    print(f"wrote {out} ({len(curve)} bins)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# fit

def _read_curve(path) -> PhaseShiftCurve:
    with open(path, "r", encoding="utf-8") as fh:
        return PhaseShiftCurve.from_csv(fh.read())


def _read_index(path):
    """Index CSV with columns file,n[,transmission]; paths relative to it."""
    base = Path(path).parent
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        rows = [line.strip() for line in fh if line.strip() and not line.startswith("#")]
    header = [h.strip() for h in rows[0].split(",")]
    if "file" not in header:
        raise ConfigError(f"{path}: index CSV needs a 'file' column")
    for line in rows[1:]:
        cells = dict(zip(header, (c.strip() for c in line.split(","))))
        entry = {"file": str(base / cells["file"])}
        if cells.get("n"):
            entry["n"] = int(cells["n"])
        if cells.get("transmission"):
            entry["transmission"] = float(cells["transmission"])
        entries.append(entry)
    return entries


def cmd_fit(args) -> int:
    entries = [{"file": p} for p in args.curve or []]
    if args.index:
        entries.extend(_read_index(args.index))
    if not entries:
        raise ConfigError("fit needs --curve files and/or --index")

    report = {"curves": {}, "failures": {}}
    for entry in entries:
        name = Path(entry["file"]).name
        try:
            curve = _read_curve(entry["file"])
            result = fit_saturable(curve, unweighted=args.unweighted)
            record = result.to_dict()
            transmission = entry.get("transmission", args.transmission)
            if transmission is not None and args.wavelength_nm is not None:
                record["n2_mm2_per_mW"] = extract_n2(
                    result.params["alpha"], transmission,
                    args.length_um, args.wavelength_nm)
            if "n" in entry:
                record["n"] = entry["n"]
            report["curves"][name] = record
        except (ValueError, OSError) as exc:
            report["failures"][name] = str(exc)

    if args.powerlaw:
        points = [(rec["n"], rec["params"]["isat"])
                  for rec in report["curves"].values() if "n" in rec]
        by_n: dict[int, list[float]] = {}
        for n, isat in points:
            by_n.setdefault(n, []).append(isat)
        ns = sorted(by_n)
        isats = [float(np.mean(by_n[n])) for n in ns]
        result = fit_powerlaw(ns, isats, args.delta)
        report["powerlaw"] = result.to_dict()
        report["powerlaw"]["n_values"] = ns
        report["powerlaw"]["isat_values"] = isats

    out = _out_path(args, args.out_file)
    atomic_write_text(out, json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out} ({len(report['curves'])} curves, "
          f"{len(report['failures'])} failures)")
    return EXIT_NUMERIC if report["failures"] else EXIT_OK


# ---------------------------------------------------------------------------
# pipeline

def cmd_pipeline(args) -> int:
    from .pipeline import run_manifest
    return run_manifest(args.manifest, force=args.force)


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rydkerr",
        description="Kerr spectroscopy toolkit: forward model, interferogram "
                    "synthesis, phase extraction and saturable fitting")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, default=0, help="random seed")
    common.add_argument("--blockade",
                        choices=["none", "broadening", "saturable", "combined"],
                        help="override the configured blockade mode")

    p = sub.add_parser("spectrum", parents=[common],
                       help="evaluate chi1/chi3/n2/absorption on an energy grid")
    p.add_argument("--eb-min-mev", type=float, default=-2.0)
    p.add_argument("--eb-max-mev", type=float, default=35.0)
    p.add_argument("--step-uev", type=float, default=1.0)
    p.add_argument("--intensity", type=float, default=0.0,
                   help="intensity in mW/mm^2 for chi3 and absorption columns")
    p.add_argument("--nmin", type=int)
    p.add_argument("--nmax", type=int)
    p.add_argument("--chi3-only", action="store_true")
    p.add_argument("--out-file", default="spectrum.csv")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("synth", parents=[common],
                       help="synthesize an interferogram pair plus intensity images")
    p.add_argument("--mode", choices=["bump", "model"], default="bump")
    p.add_argument("--size", type=int, default=512)
    p.add_argument("--pixel-pitch-um", type=float, default=2.5)
    p.add_argument("--beam-sigma-um", type=float, default=200.0)
    p.add_argument("--power-mw", type=float, default=1.0)
    p.add_argument("--low-ratio", type=float, default=0.02,
                   help="low-power frame power ratio")
    p.add_argument("--carrier", default=DEFAULT_CARRIER,
                   help="fringe carrier kx,ky in rad/pixel")
    p.add_argument("--ref-curvature", type=float, default=1e-5,
                   help="reference parabolic phase in rad/pixel^2")
    p.add_argument("--ref-amplitude", type=float,
                   help="reference amplitude (default sqrt of beam peak)")
    p.add_argument("--peak-phase", type=float, default=0.3,
                   help="bump mode: peak Kerr phase in rad")
    p.add_argument("--bump-sigma-um", type=float,
                   help="bump mode: bump width (default beam sigma)")
    p.add_argument("--energy-ev", type=float,
                   help="model mode: probe photon energy")
    p.add_argument("--intensity-jitter", type=float, default=0.0)
    p.add_argument("--shot-counts", type=float, default=0.0)
    p.add_argument("--prefix", default="synth")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", parents=[common],
                       help="extract a phase-shift curve from an interferogram pair")
    p.add_argument("--high-ifg", required=True)
    p.add_argument("--low-ifg", required=True)
    p.add_argument("--intensity", required=True,
                   help="high-power intensity image (mW/mm^2)")
    p.add_argument("--bins", type=int, default=30)
    p.add_argument("--tolerance", type=float,
                   help="bin half-width as a fraction of the peak intensity")
    p.add_argument("--window-radius", type=float,
                   help="sideband window radius in FFT bins")
    p.add_argument("--out-file", default="curve.csv")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("fit", parents=[common],
                       help="fit saturable curves; optional n2 and scaling law")
    p.add_argument("--curve", action="append", help="curve CSV (repeatable)")
    p.add_argument("--index", help="index CSV with columns file,n[,transmission]")
    p.add_argument("--unweighted", action="store_true")
    p.add_argument("--transmission", type=float,
                   help="low-power transmission for n2 extraction")
    p.add_argument("--length-um", type=float, default=50.0)
    p.add_argument("--wavelength-nm", type=float)
    p.add_argument("--powerlaw", action="store_true",
                   help="fit I_sat(n) = A (n - delta)^b over indexed curves")
    p.add_argument("--delta", type=float, default=0.34)
    p.add_argument("--out-file", default="fit_report.json")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("pipeline", parents=[common],
                       help="run a manifest of spectrum/synth/extract/fit steps")
    p.add_argument("--manifest", required=True)
    p.add_argument("--force", action="store_true",
                   help="re-run steps even when inputs are unchanged")
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericsError, FloatingPointError, OverflowError, ZeroDivisionError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SignalProcessingError as exc:
        print(f"signal-processing error: {exc}", file=sys.stderr)
        return EXIT_SIGNAL
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def entrypoint():
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
