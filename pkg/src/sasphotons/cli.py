"""Command-line entry point: ``sasphotons {simulate,correlate,fit,report}``.

Exit codes: 0 success, 1 usage error, 2 data or configuration error,
3 fit did not converge.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import coincidence, fitting, io, montecarlo, physics, report, spatial

logger = logging.getLogger("sasphotons")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NOCONV = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class NotConverged(RuntimeError):
    pass


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="INI experiment configuration")
    p.add_argument("--seed", type=int, help="RNG seed (overrides config)")
    p.add_argument("--output-dir", type=Path, help="directory for output files")
    p.add_argument("--format", choices=("csv", "bin"), help="event stream format")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sasphotons", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="generate a detection event stream")
    _common(p)
    p.add_argument("--n-pulses", type=int)
    p.add_argument("--workers", type=int)

    p = sub.add_parser("correlate", help="delay histogram and correlated rate of a stream")
    _common(p)
    p.add_argument("stream", type=Path)
    p.add_argument("--max-delay", type=int, default=coincidence.DEFAULT_MAX_DELAY)
    p.add_argument("--rep-rate", type=float, help="pulse rate in Hz (default: summary.json or 76e6)")
    p.add_argument("--n-pulses", type=int, help="pulses in the stream (default: summary.json)")
    p.add_argument("--chunk-records", type=int, default=1 << 20)

    p = sub.add_parser("fit", help="fit a dataset")
    _common(p)
    p.add_argument("kind", choices=("spectral", "aperture", "power", "xsection"))
    p.add_argument("data", type=Path)
    p.add_argument("--components", type=int, choices=(1, 2), default=1)
    p.add_argument("--fixed-sigma", type=float, help="pin the narrow aperture width (mm)")
    p.add_argument("--channel", default="aS", choices=spatial.CHANNELS)

    p = sub.add_parser("report", help="headline numbers from a pair rate")
    _common(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--rate", type=float, help="correlated pair rate, counts/s")
    src.add_argument("--correlation", type=Path, help="correlation.json from 'correlate'")
    p.add_argument("--shift", type=float, help="Raman shift of the measurement, cm^-1")
    p.add_argument("--power-fit", type=Path, help="fit_power.json to include the exponent")
    p.add_argument("--tbg", action="store_true", help="add the x390 enhancement projection")
    p.add_argument("--enhancement", type=float, default=report.TBG_ENHANCEMENT)
    return parser


def _output_dir(args, cfg: io.ExperimentConfig) -> Path:
    out = args.output_dir if args.output_dir is not None else Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args, cfg: io.ExperimentConfig) -> dict:
    sim = cfg.simulation
    n_pulses = args.n_pulses if args.n_pulses is not None else sim.n_pulses
    seed = args.seed if args.seed is not None else sim.seed
    workers = args.workers if args.workers is not None else sim.workers
    fmt = args.format or cfg.output_format
    if n_pulses < 1:
        raise physics.ConfigError("n_pulses must be >= 1")
    probs = cfg.probabilities()
    stream = montecarlo.simulate(probs, n_pulses, seed, cfg.laser.rep_rate, workers=workers)

    out = _output_dir(args, cfg)
    path = out / f"events.{fmt}"
    io.write_stream(stream, path, fmt)
    s_pulses = stream.channel_pulses(montecarlo.S)
    a_pulses = stream.channel_pulses(montecarlo.AS)
    observed = {
        "S": int(s_pulses.size),
        "aS": int(a_pulses.size),
        "coincidences": int(np.intersect1d(s_pulses, a_pulses).size),
    }
    summary = {
        "stream": path.name,
        "format": fmt,
        "n_pulses": n_pulses,
        "rep_rate": cfg.laser.rep_rate,
        "seed": seed,
        "photons_per_pulse": physics.photons_per_pulse(cfg.laser),
        "probabilities": probs.__dict__,
        "expected": probs.expected_counts(n_pulses),
        "observed": observed,
        "events": len(stream),
    }
    io.write_json(out / "summary.json", summary)
    print(f"wrote {len(stream)} events over {n_pulses} pulses to {path}")
    print(f"photons per pulse: {summary['photons_per_pulse']:.4g}")
    for key in ("S", "aS", "coincidences"):
        print(f"{key:>12}: observed {observed[key]}, expected {summary['expected'][key]:.4g}")
    return summary


def _stream_meta(args) -> tuple[int | None, float]:
    summary_path = args.stream.parent / "summary.json"
    meta = json.loads(summary_path.read_text()) if summary_path.exists() else {}
    n_pulses = args.n_pulses if args.n_pulses is not None else meta.get("n_pulses")
    rep_rate = args.rep_rate if args.rep_rate is not None else meta.get("rep_rate", 76e6)
    return n_pulses, float(rep_rate)


def cmd_correlate(args, cfg: io.ExperimentConfig) -> dict:
    if args.max_delay < 1:
        raise io.DataError("--max-delay must be >= 1")
    if not args.stream.exists():
        raise io.DataError(f"{args.stream}: no such file")
    n_pulses, rep_rate = _stream_meta(args)
    acc = coincidence.HistogramAccumulator(args.max_delay)
    last = -1
    for pulses, channels in io.iter_stream_chunks(args.stream, args.chunk_records):
        acc.update(pulses, channels)
        last = int(pulses[-1])
    if n_pulses is None:
        n_pulses = last + 1
        logger.warning("pulse count unknown; assuming %d from the last record", n_pulses)
    if n_pulses < 1:
        raise io.DataError("stream is empty and its pulse count is unknown; pass --n-pulses")
    try:
        h = acc.result(n_pulses, rep_rate)
    except ValueError as exc:
        raise io.DataError(str(exc)) from None
    res = coincidence.extract_correlated_rate(h)

    out = _output_dir(args, cfg)
    m = float(h.side_counts.mean())
    g2 = h.counts / m if m > 0 else np.full(h.counts.shape, np.nan)
    io.write_table(out / "histogram.csv", ["delay_pulses", "counts", "g2"],
                   ([int(d), int(c), float(g)] for d, c, g in zip(h.delays, h.counts, g2)))
    report_obj = {
        **res.as_dict(),
        "n_pulses": n_pulses,
        "rep_rate": rep_rate,
        "accumulation_time": h.accumulation_time,
        "max_delay": h.max_delay,
        "n_s": h.n_s,
        "n_as": h.n_as,
        "zero_delay_counts": h.zero_delay,
    }
    io.write_json(out / "correlation.json", report_obj)
    print(f"corr_rate = {res.corr_rate:.6g} +/- {res.uncertainty:.3g} counts/s, g2(0) = {res.g2_zero:.6g}")
    return report_obj


def _fit_spectral(args, cfg):
    data = io.read_table(args.data, io.SPECTRAL_COLUMNS)
    series = fitting.SpectralRateSeries(data[:, 0], data[:, 1], data[:, 2], cfg.laser, cfg.collection)
    result = fitting.fit_step_constants(series, cfg.material)
    grid = np.linspace(-3000, 3000, 601)
    fitted = cfg.material
    cs = [result.value(n) for n in ("C1", "C2")]
    areas = (fitted.stokes_area_1st, fitted.stokes_area_2nd)
    bands = [physics.PotentialBand(b.shift_lo, b.shift_hi,
                                   0.0 if np.isnan(cs[i]) else physics.v0_from_raman_area(areas[i], cs[i]))
             for i, b in enumerate(fitted.bands[:2])]
    model_mat = physics.MaterialModel(fitted.name, fitted.spectrum, fitted.temperature, tuple(bands))
    from .synthetic import model_rates

    curve = model_rates(grid, cfg.laser, cfg.collection, model_mat)
    return result, ["shift_cm1", "model_rate_cps"], zip(grid, curve)


def _fit_aperture(args, cfg):
    data = io.read_table(args.data, io.APERTURE_COLUMNS)
    try:
        curve = spatial.ApertureCurve(data[:, 0], data[:, 1], args.channel)
    except ValueError as exc:
        raise io.DataError(f"{args.data}: {exc}") from None
    profile, result = spatial.fit_profile(curve, args.components, fixed_sigma=args.fixed_sigma)
    grid = np.linspace(0.0, float(curve.radii[-1]), 201)
    return result, ["radius_mm", "model_intensity"], zip(grid, spatial.transmitted_fraction(profile, grid))


def _fit_power(args, cfg):
    data = io.read_table(args.data, io.POWER_COLUMNS)
    result = fitting.fit_power_law(data)
    a, b = result.value("amplitude"), result.value("exponent")
    grid = np.linspace(data[:, 0].min(), data[:, 0].max(), 101)
    return result, ["power_w", "model_rate_cps"], zip(grid, a * grid ** b)


def _fit_xsection(args, cfg):
    data = io.read_table(args.data, io.XSECTION_COLUMNS)
    result = fitting.fit_cross_section_scaling(data)
    grid = np.linspace(0.0, data[:, 0].max(), 101)
    return result, ["a_raman_sq", "model_rate_cps"], zip(grid, result.value("slope") * grid)


_FITTERS = {"spectral": _fit_spectral, "aperture": _fit_aperture, "power": _fit_power, "xsection": _fit_xsection}


def cmd_fit(args, cfg: io.ExperimentConfig) -> dict:
    if not args.data.exists():
        raise io.DataError(f"{args.data}: no such file")
    result, columns, rows = _FITTERS[args.kind](args, cfg)
    out = _output_dir(args, cfg)
    io.write_json(out / f"fit_{args.kind}.json", result.as_dict())
    io.write_table(out / f"model_{args.kind}.csv", columns, rows)
    for name, (v, e) in result.parameters.items():
        print(f"{name} = {v:.6g} +/- {e:.3g}")
    if not result.converged:
        raise NotConverged(result.message or "fit did not converge")
    return result.as_dict()


def cmd_report(args, cfg: io.ExperimentConfig) -> list[report.Quantity]:
    if args.correlation is not None:
        rate = float(json.loads(args.correlation.read_text())["corr_rate"])
    else:
        rate = args.rate
    if rate < 0:
        logger.warning("negative correlated rate %.3g clipped to 0", rate)
        rate = 0.0
    quantities = report.headline_numbers(rate, cfg.laser, cfg.collection, cfg.material, args.shift,
                                         args.enhancement if args.tbg else None)
    if args.power_fit is not None:
        fit = json.loads(args.power_fit.read_text())
        b = fit["parameters"]["exponent"]
        quantities.append(report.Quantity("power_exponent", b["value"], "1"))
        quantities.append(report.Quantity("power_exponent_stderr", b["stderr"], "1"))
    out = _output_dir(args, cfg)
    text = report.format_text(quantities)
    (out / "report.txt").write_text(text)
    io.write_table(out / "report.csv", ["quantity", "value", "unit"],
                   ([q.name, q.value, q.unit] for q in quantities))
    sys.stdout.write(text)
    return quantities


_COMMANDS = {"simulate": cmd_simulate, "correlate": cmd_correlate, "fit": cmd_fit, "report": cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = io.load_config(args.config)
        _COMMANDS[args.command](args, cfg)
    except NotConverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    except (ValueError, KeyError, OSError) as exc:
        # DataError, ConfigError, ProbabilityError and FitError are ValueErrors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
