"""
Command line for the photon-pair source toolkit.

    python -m src.cli [--config PATH] [--seed N] [--out DIR] [-v] <command> [options]

Every command reads one run configuration, writes CSV tables and a JSON
summary into the output directory and exits with 0 on success, 1 on usage
or configuration errors, 2 on model or solver errors and 3 on I/O errors.
"""

import argparse
import logging
import sys

import numpy as np
import pandas as pd
from dotenv import load_dotenv

from src.data_handlers.config_loader import load_run_config
from src.data_handlers.results_writer import OutputSession
from src.models.phasematch import max_fluctuation_nm, perturbation_scan, solve_phase_matching
from src.models.spectrum import (
    build_filtered_jsa,
    build_jsa,
    central_wavelength,
    marginal_fwhm_nm,
    marginal_spectrum,
    methods_filter_chains,
    schmidt_decompose,
)
from src.models.tmsv import heralded_g2, power_to_squeezing
from src.simulation.array import build_chip, calibrate_eta_sigma, chip_statistics, sample_hom_groups
from src.simulation.hom import FILTER_POLICIES, hom_scan_mc, prepare_source, visibility_from_overlap
from src.simulation.montecarlo import (
    analytic_click_probabilities,
    analytic_heralded_g2_hbt,
    loglog_slope,
    power_scan,
    simulate_hbt,
)
from src.utils.config import DEFAULT_POWERS_MW, HBT_POWERS_MW
from src.utils.errors import ConfigError, OutputError, PhotonPairError
from src.utils.logger import setup_logging

logger = logging.getLogger(__name__)

FIGURES = ("fig2a", "fig2bc", "fig2de", "fig3a", "fig3b", "fig4")
SLOPE_POWERS_MW = tuple(float(p) for p in range(1, 11))
VISIBILITY_THRESHOLD = 0.9
G2H_THRESHOLD = 0.12


class ArgumentParser(argparse.ArgumentParser):
    """argparse that reports usage errors as ConfigError instead of exiting."""

    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def _powers(text):
    try:
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"invalid power list {text!r}") from e


def build_parser():
    parser = ArgumentParser(prog="python -m src.cli", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--config", help="run configuration file (KEY=value lines)")
    parser.add_argument("--seed", type=int, help="override RUN_SEED")
    parser.add_argument("--out", help="override OUTPUT_DIR")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phasematch", help="solve the phase-matching condition")
    p.add_argument("--delta-n", type=float)
    p.add_argument("--pump-nm", type=float)
    p.add_argument("--length-mm", type=float)

    p = sub.add_parser("perturb-scan", help="wavelengths under birefringence perturbations")
    p.add_argument("--eta-max", type=float, default=0.2)
    p.add_argument("--points", type=int, default=101)

    p = sub.add_parser("spectra", help="filtered single-photon spectra of both arms")
    p.add_argument("--narrowband", action="store_true", help="add the 1 nm bandpass filters")

    p = sub.add_parser("jsa", help="joint spectral amplitude and Schmidt analysis")
    p.add_argument("--filtered", action="store_true", help="apply the detection filter chains")
    p.add_argument("--narrowband", action="store_true", help="add the 1 nm bandpass filters")

    p = sub.add_parser("power-scan", help="coincidence rate and g2 versus pump power")
    p.add_argument("--powers", type=_powers, default=DEFAULT_POWERS_MW, help="comma-separated mW")

    p = sub.add_parser("hbt", help="heralded Hanbury-Brown-Twiss measurement at one power")
    p.add_argument("--power-mw", type=float, default=10.0)
    p.add_argument("--splitter-ratio", type=float, default=0.5)

    p = sub.add_parser("hom", help="two-source interference scan")
    p.add_argument("--eta-a", type=float, default=0.0)
    p.add_argument("--eta-b", type=float, default=0.0)
    p.add_argument("--policy", choices=FILTER_POLICIES)

    sub.add_parser("chip", help="central-wavelength statistics and interference tests of a chip")

    p = sub.add_parser("figures", help="regenerate the datasets of one or more figures")
    p.add_argument("--which", nargs="+", choices=FIGURES, required=True)
    return parser


def _overrides(args):
    overrides = {"RUN_SEED": args.seed, "OUTPUT_DIR": args.out}
    if args.command == "phasematch":
        overrides.update({
            "WAVEGUIDE_DELTA_N": args.delta_n,
            "WAVEGUIDE_PUMP_NM": args.pump_nm,
            "WAVEGUIDE_LENGTH_MM": args.length_mm,
        })
    if args.command == "hom":
        overrides["HOM_FILTER_POLICY"] = args.policy
    return {k: v for k, v in overrides.items() if v is not None}


def cmd_phasematch(config, args, out):
    solution = solve_phase_matching(config.waveguide_spec())
    report = solution.as_dict()
    for key, value in report.items():
        print(f"{key:>18s}  {value:.6g}")
    out.summary(report, "phasematch.json")
    return report


def cmd_perturb_scan(config, args, out):
    if args.points < 2:
        raise ConfigError("--points must be at least 2")
    scan = perturbation_scan(config.waveguide_spec(), np.linspace(0.0, args.eta_max, args.points),
                             workers=config.detection.workers)
    out.csv(scan, "perturb_scan.csv")
    summary = {
        "eta_max": args.eta_max,
        "max_fluctuation_nm": max_fluctuation_nm(scan, args.eta_max),
        "failed_points": int((scan["error"] != "").sum()),
    }
    if np.isclose(scan["eta"], 0.05).any():
        summary["max_fluctuation_nm_eta_0.05"] = max_fluctuation_nm(scan, 0.05)
    out.summary(summary, "perturb_scan.json")
    return summary


def cmd_spectra(config, args, out):
    spec = config.waveguide_spec()
    solution = solve_phase_matching(spec)
    signal_chain, idler_chain = methods_filter_chains(solution, narrowband=args.narrowband)
    js = build_filtered_jsa(spec, config.pump_envelope(), signal_chain, idler_chain, config.grid_config())
    summary = {"survival": js.survival, "purity": schmidt_decompose(js).purity}
    for arm in ("signal", "idler"):
        spectrum = marginal_spectrum(js, arm)
        out.csv(spectrum, f"spectrum_{arm}.csv")
        summary[f"{arm}_central_nm"] = central_wavelength(spectrum) * 1e9
        summary[f"{arm}_fwhm_nm"] = marginal_fwhm_nm(spectrum)
    summary["solver_lambda_s_nm"] = solution.lambda_s * 1e9
    summary["solver_lambda_i_nm"] = solution.lambda_i * 1e9
    out.summary(summary, "spectra.json")
    return summary


def cmd_jsa(config, args, out):
    spec = config.waveguide_spec()
    if args.filtered or args.narrowband:
        signal_chain, idler_chain = methods_filter_chains(solve_phase_matching(spec), narrowband=args.narrowband)
        js = build_filtered_jsa(spec, config.pump_envelope(), signal_chain, idler_chain, config.grid_config())
    else:
        js = build_jsa(spec, config.pump_envelope(), config.grid_config())
    schmidt = schmidt_decompose(js)
    out.jsa(js, "jsa.bin")
    coefficients = schmidt.schmidt_coefficients
    out.csv(pd.DataFrame({"mode": np.arange(coefficients.size), "weight": coefficients}), "schmidt.csv")
    summary = {
        "purity": schmidt.purity,
        "schmidt_number": schmidt.schmidt_number,
        "survival": js.survival,
        "grid": [int(js.omega_s.size), int(js.omega_i.size)],
    }
    out.summary(summary, "jsa.json")
    return summary


def _power_scan_summary(scan):
    g2h = scan["g2h"].dropna()
    return {
        "powers_mw": scan["power_mw"].tolist(),
        "max_g2h": float(g2h.max()) if not g2h.empty else float("nan"),
        "max_g2h_model": float(scan["g2h_model"].max()),
        "max_rate_cc_per_s": float(scan["rate_cc_per_s"].max()),
        "failed_points": int((scan["error"].fillna("") != "").sum()),
    }


def cmd_power_scan(config, args, out, powers=None, name="power_scan"):
    scan = power_scan(config.pump_calibration(), powers or args.powers, config.detection_config())
    out.csv(scan, f"{name}.csv")
    summary = _power_scan_summary(scan)
    if (scan["rate_cc_per_s"] > 0).sum() >= 2:
        summary["loglog_slope"] = loglog_slope(scan)
    out.summary(summary, f"{name}.json")
    return summary


def cmd_hbt(config, args, out):
    cfg = config.detection_config()
    state = power_to_squeezing(config.pump_calibration(), args.power_mw)
    counts = simulate_hbt(state, cfg, splitter_ratio=args.splitter_ratio)
    out.csv(pd.DataFrame([counts.as_dict()]), "hbt_counts.csv")
    summary = {
        "power_mw": args.power_mw,
        "r": state.r,
        "mu": state.mu,
        "g2h": counts.g2h_estimate(),
        "stat_err_g2h": counts.g2h_stat_error(),
        "g2h_model": analytic_heralded_g2_hbt(state, cfg, args.splitter_ratio),
        "g2h_ideal_detectors": heralded_g2(state, cfg.eta_idler),
        "g2si": counts.g2si_estimate(),
        "g2si_model": analytic_click_probabilities(state, cfg)["g2si"],
        "klyshko_signal": counts.klyshko_signal(),
        "klyshko_idler": counts.klyshko_idler(),
        "rates_per_s": counts.rates(),
    }
    out.summary(summary, "hbt.json")
    return summary


def cmd_hom(config, args, out):
    base = config.waveguide_spec()
    nominal = solve_phase_matching(base)
    pump = config.pump_envelope()
    sources = [
        prepare_source(base.perturbed(eta, label=label), mu=config.hom.mean_pairs, pump=pump,
                       policy=config.hom.filter_policy, nominal=nominal)
        for eta, label in ((args.eta_a, "A"), (args.eta_b, "B"))
    ]
    det = config.detection_config()
    result = hom_scan_mc(sources[0], sources[1], config.hom_scan_config(), det)
    out.csv(result.to_frame(), "hom_scan.csv")
    summary = result.summary()
    centre = int(np.argmin(np.abs(result.delays)))
    summary["overlap_zero_delay"] = float(result.overlaps[centre])
    summary["visibility_model"] = visibility_from_overlap(result.overlaps[centre], sources[0].mu, sources[1].mu, det)
    out.summary(summary, "hom.json")
    return summary


def _chip(config):
    base = config.waveguide_spec()
    sigma = config.chip.eta_sigma
    if sigma < 0:
        sigma = calibrate_eta_sigma(base, config.chip.signal_std_nm * 1e-9)
    return build_chip(base, count=config.chip.count, eta_sigma=sigma, seed=config.seed)


def cmd_chip_statistics(config, args, out):
    chip = _chip(config)
    stats = chip_statistics(chip, workers=config.detection.workers)
    out.csv(stats.table, "chip_sources.csv")
    out.csv(stats.histogram("signal"), "chip_histogram_signal.csv")
    out.csv(stats.histogram("idler"), "chip_histogram_idler.csv")
    summary = stats.summary()
    summary["eta_sigma"] = chip.eta_sigma
    summary["redraws"] = chip.redraws
    out.summary(summary, "chip.json")
    return summary


def cmd_chip_hom(config, args, out):
    chip = _chip(config)
    _, table = sample_hom_groups(
        chip, n_groups=config.chip.hom_groups, seed=config.seed, mu=config.hom.mean_pairs,
        pump=config.pump_envelope(), policy=config.hom.filter_policy, det=config.detection_config(),
    )
    out.csv(table, "chip_hom.csv")
    visibilities = table["visibility"].to_numpy(float)
    summary = {
        "groups": table["group"].tolist(),
        "visibilities": visibilities.tolist(),
        "min_visibility": float(visibilities.min()),
        "all_above_0.9": bool(np.all(visibilities > VISIBILITY_THRESHOLD)),
    }
    out.summary(summary, "chip_hom.json")
    return summary


def cmd_chip(config, args, out):
    summary = cmd_chip_statistics(config, args, out)
    summary["hom"] = cmd_chip_hom(config, args, out)
    return summary


def cmd_figures(config, args, out):
    summaries = {}
    for which in dict.fromkeys(args.which):
        logger.info("building %s", which)
        if which == "fig2a":
            summaries[which] = cmd_chip_statistics(config, args, out)
        elif which == "fig2bc":
            scan_args = argparse.Namespace(eta_max=0.2, points=101)
            summaries[which] = cmd_perturb_scan(config, scan_args, out)
        elif which == "fig2de":
            summaries[which] = cmd_spectra(config, argparse.Namespace(narrowband=False), out)
        elif which == "fig3a":
            summary = cmd_power_scan(config, args, out, powers=HBT_POWERS_MW, name="fig3a_power_scan")
            summary["all_below_0.12"] = bool(summary["max_g2h"] < G2H_THRESHOLD)
            summaries[which] = summary
        elif which == "fig3b":
            summary = cmd_power_scan(config, args, out, powers=SLOPE_POWERS_MW + DEFAULT_POWERS_MW[1:],
                                     name="fig3b_power_scan")
            cfg = config.detection_config()
            calib = config.pump_calibration()
            model = pd.DataFrame({
                "power_mw": SLOPE_POWERS_MW,
                "rate_cc_per_s": [analytic_click_probabilities(power_to_squeezing(calib, p), cfg)["p_si"] * cfg.rep_rate
                                  for p in SLOPE_POWERS_MW],
            })
            summary["loglog_slope_model_1_10mw"] = loglog_slope(model)
            summaries[which] = summary
        elif which == "fig4":
            summaries[which] = cmd_chip_hom(config, args, out)
    out.summary(summaries, "figures.json")
    return summaries


COMMANDS = {
    "phasematch": cmd_phasematch,
    "perturb-scan": cmd_perturb_scan,
    "spectra": cmd_spectra,
    "jsa": cmd_jsa,
    "power-scan": cmd_power_scan,
    "hbt": cmd_hbt,
    "hom": cmd_hom,
    "chip": cmd_chip,
    "figures": cmd_figures,
}


def main(argv=None):
    """
    Run one command.

    Args:
        argv (list): Arguments without the program name, default sys.argv[1:]

    Returns:
        int: Process exit code
    """
    load_dotenv()
    try:
        args = build_parser().parse_args(argv)
        setup_logging(args.verbose)
        config = load_run_config(args.config, overrides=_overrides(args))
        logger.info("config %s, seed %d", config.config_hash(), config.seed)
        with OutputSession(config.output.dir, config.config_hash(), config.seed) as out:
            COMMANDS[args.command](config, args, out)
    except PhotonPairError as e:
        logger.debug("command failed", exc_info=True)
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return OutputError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
