"""
Pulse-by-pulse Monte Carlo of the pair detection set-up.

Each pump pulse carries n pairs drawn from the source's pair-number
distribution. Signal and idler photons are lost independently (binomial
thinning with the end-to-end efficiency), every detector adds Bernoulli dark
counts, and a threshold detector clicks on one or more photons. Coincidences
are clocked: two clicks coincide when they belong to the same pulse.

Random numbers come from counter-based Philox streams. Pulses are processed
in batches of `batch_size`; batch b draws channel k from
Philox(SeedSequence(seed, spawn_key=(stream, b, k))), so the counts do not
depend on how many workers process the batches.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from itertools import combinations

import numpy as np
import pandas as pd
from numpy.random import Generator, Philox, SeedSequence

from src.models.tmsv import power_to_squeezing
from src.utils.config import (
    BATCH_SIZE,
    COINCIDENCE_WINDOW_S,
    COUPLING_EFFICIENCY,
    DARK_RATE_HZ,
    DETECTOR_QE,
    N_PULSES,
    REP_RATE_HZ,
    SEED,
)
from src.utils.errors import EstimatorUndefinedError, PhotonPairError
from src.utils.validators import (
    require,
    validate_efficiency,
    validate_integer_at_least,
    validate_positive,
    validate_range,
)

logger = logging.getLogger(__name__)

MAX_DARK_PROB = 0.01
POWER_SCAN_COLUMNS = [
    "power_mw", "r", "rate_cc_per_s", "g2si", "g2h", "stat_err_g2h",
    "mu", "g2si_model", "g2h_model", "error",
]

# channel indices inside one batch
PAIRS, SIGNAL_LOSS, IDLER_LOSS, SIGNAL_DARK, IDLER_DARK, ROUTING, SIGNAL2_DARK = range(7)


@dataclass(frozen=True)
class DetectionConfig:
    """Detection apparatus shared by every Monte Carlo experiment."""

    rep_rate: float = REP_RATE_HZ
    eta_signal: float = COUPLING_EFFICIENCY * DETECTOR_QE
    eta_idler: float = COUPLING_EFFICIENCY * DETECTOR_QE
    dark_prob: float = DARK_RATE_HZ / REP_RATE_HZ
    coincidence_window: float = COINCIDENCE_WINDOW_S
    n_pulses: int = N_PULSES
    seed: int = SEED
    batch_size: int = BATCH_SIZE
    workers: int = 1

    def __post_init__(self):
        require(validate_positive("rep_rate", self.rep_rate))
        require(validate_efficiency("eta_signal", self.eta_signal))
        require(validate_efficiency("eta_idler", self.eta_idler))
        require(validate_range("dark_prob", self.dark_prob, 0.0, MAX_DARK_PROB))
        require(validate_positive("coincidence_window", self.coincidence_window))
        require(validate_integer_at_least("n_pulses", self.n_pulses, 1))
        require(validate_integer_at_least("seed", self.seed, 0))
        require(validate_integer_at_least("batch_size", self.batch_size, 1))
        require(validate_integer_at_least("workers", self.workers, 1))

    def accidental_rate(self, singles_rate_a, singles_rate_b):
        """Unclocked accidental coincidence rate 2τ R_a R_b for a window τ."""
        return 2.0 * self.coincidence_window * singles_rate_a * singles_rate_b


def detection_from_components(coupling=COUPLING_EFFICIENCY, detector_qe=DETECTOR_QE,
                              dark_rate_hz=DARK_RATE_HZ, rep_rate=REP_RATE_HZ, **kwargs):
    """
    Detection config from separately specified loss factors.

    η = coupling × QE per arm; the per-pulse dark probability is the dark
    count rate divided by the repetition rate.
    """
    eta = coupling * detector_qe
    return DetectionConfig(
        rep_rate=rep_rate,
        eta_signal=kwargs.pop("eta_signal", eta),
        eta_idler=kwargs.pop("eta_idler", eta),
        dark_prob=dark_rate_hz / rep_rate,
        **kwargs,
    )


@dataclass(frozen=True)
class CountSummary:
    """
    Integer click tallies of one run.

    Two-detector runs fill n_s, n_i and n_si. HBT runs additionally fill the
    split-signal channels 1 and 2; there n_s counts pulses where either
    signal detector clicked.
    """

    n_pulses: int
    rep_rate: float
    n_s: int = 0
    n_i: int = 0
    n_si: int = 0
    n_1: int = 0
    n_2: int = 0
    n_12: int = 0
    n_1i: int = 0
    n_2i: int = 0
    n_12i: int = 0
    mode: str = "pairs"

    def merge(self, other):
        counts = {
            f.name: getattr(self, f.name) + getattr(other, f.name)
            for f in fields(self)
            if f.name not in ("rep_rate", "mode")
        }
        return replace(self, **counts)

    def rate(self, count):
        return count * self.rep_rate / self.n_pulses

    @property
    def coincidence_rate(self):
        return self.rate(self.n_si)

    def rates(self):
        return {
            f.name.replace("n_", "rate_", 1): self.rate(getattr(self, f.name))
            for f in fields(self)
            if f.name.startswith("n_") and f.name != "n_pulses"
        }

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def _require(self, **denominators):
        zero = [name for name, value in denominators.items() if value == 0]
        if zero:
            raise EstimatorUndefinedError(
                f"estimator undefined, zero counts in {', '.join(zero)}", counts=self.as_dict()
            )

    def g2si_estimate(self):
        """N_si N / (N_s N_i)."""
        self._require(n_s=self.n_s, n_i=self.n_i)
        return self.n_si * self.n_pulses / (self.n_s * self.n_i)

    def g2h_estimate(self):
        """N_12i N_i / (N_1i N_2i)."""
        self._require(n_1i=self.n_1i, n_2i=self.n_2i)
        return self.n_12i * self.n_i / (self.n_1i * self.n_2i)

    def g2h_stat_error(self):
        """Poisson error propagation for the heralded estimator."""
        g2h = self.g2h_estimate()
        if self.n_12i == 0:
            return float("nan")
        return g2h * math.sqrt(1.0 / self.n_12i + 1.0 / self.n_i + 1.0 / self.n_1i + 1.0 / self.n_2i)

    def car(self):
        """Coincidences over the accidentals N_s N_i / N expected from the singles."""
        return self.g2si_estimate()

    def klyshko_signal(self):
        """Heralding efficiency of the signal arm, N_si / N_i."""
        self._require(n_i=self.n_i)
        return self.n_si / self.n_i

    def klyshko_idler(self):
        self._require(n_s=self.n_s)
        return self.n_si / self.n_s

    def check_ordering(self):
        """Count ordering N_12i ≤ min(N_1i, N_2i) ≤ N_i ≤ N."""
        ok = self.n_si <= min(self.n_s, self.n_i) and max(self.n_s, self.n_i) <= self.n_pulses
        if self.mode == "hbt":
            ok = ok and self.n_12i <= min(self.n_1i, self.n_2i) and max(self.n_1i, self.n_2i) <= self.n_i
        return ok


def substream(seed, stream, batch, channel):
    return Generator(Philox(SeedSequence(seed, spawn_key=(stream, batch, channel))))


def sample_pair_numbers(rng, probabilities, size):
    """Inverse-CDF draw of pair numbers from a finite distribution."""
    cdf = np.cumsum(probabilities)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, rng.random(size), side="right")


def _batch_sizes(cfg):
    full, rest = divmod(cfg.n_pulses, cfg.batch_size)
    return [cfg.batch_size] * full + ([rest] if rest else [])


def _run_batches(cfg, worker):
    sizes = _batch_sizes(cfg)
    if cfg.workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(worker, range(len(sizes)), sizes))
    else:
        parts = [worker(b, size) for b, size in enumerate(sizes)]
    total = parts[0]
    for part in parts[1:]:
        total = total.merge(part)
    return total


def _clicks(rng_loss, rng_dark, photons, efficiency, dark_prob):
    detected = rng_loss.binomial(photons, efficiency)
    dark = rng_dark.random(photons.size) < dark_prob
    return (detected > 0) | dark


def simulate_pairs(source, cfg, stream=0):
    """
    Two-detector run: signal and idler each on one threshold detector.

    Args:
        source (TmsvState or FockPairSource): Pair-number statistics
        cfg (DetectionConfig): Detection apparatus and seed
        stream (int): Stream index separating independent runs with one seed

    Returns:
        CountSummary: Singles and coincidences
    """
    probabilities = source.pair_probabilities()

    def worker(batch, size):
        pairs = sample_pair_numbers(substream(cfg.seed, stream, batch, PAIRS), probabilities, size)
        s = _clicks(substream(cfg.seed, stream, batch, SIGNAL_LOSS), substream(cfg.seed, stream, batch, SIGNAL_DARK),
                    pairs, cfg.eta_signal, cfg.dark_prob)
        i = _clicks(substream(cfg.seed, stream, batch, IDLER_LOSS), substream(cfg.seed, stream, batch, IDLER_DARK),
                    pairs, cfg.eta_idler, cfg.dark_prob)
        return CountSummary(
            n_pulses=size,
            rep_rate=cfg.rep_rate,
            n_s=int(np.count_nonzero(s)),
            n_i=int(np.count_nonzero(i)),
            n_si=int(np.count_nonzero(s & i)),
        )

    summary = _run_batches(cfg, worker)
    logger.debug("simulate_pairs: %d pulses, N_s=%d N_i=%d N_si=%d",
                 summary.n_pulses, summary.n_s, summary.n_i, summary.n_si)
    return summary


def simulate_hbt(source, cfg, splitter_ratio=0.5, stream=0):
    """
    Three-detector run: the signal passes a beam splitter onto detectors 1
    and 2, the idler detector is the herald.

    The signal photons are routed binomially with `splitter_ratio` and then
    detected with eta_signal on each output.

    Returns:
        CountSummary: mode "hbt", all counts of g²_H(0) = N_12i N_i / (N_1i N_2i)
    """
    require(validate_range("splitter_ratio", splitter_ratio, 0.0, 1.0, include_low=False, include_high=False))
    probabilities = source.pair_probabilities()

    def worker(batch, size):
        pairs = sample_pair_numbers(substream(cfg.seed, stream, batch, PAIRS), probabilities, size)
        to_first = substream(cfg.seed, stream, batch, ROUTING).binomial(pairs, splitter_ratio)
        loss = substream(cfg.seed, stream, batch, SIGNAL_LOSS)
        c1 = (loss.binomial(to_first, cfg.eta_signal) > 0) | (
            substream(cfg.seed, stream, batch, SIGNAL_DARK).random(size) < cfg.dark_prob)
        c2 = (loss.binomial(pairs - to_first, cfg.eta_signal) > 0) | (
            substream(cfg.seed, stream, batch, SIGNAL2_DARK).random(size) < cfg.dark_prob)
        ci = _clicks(substream(cfg.seed, stream, batch, IDLER_LOSS), substream(cfg.seed, stream, batch, IDLER_DARK),
                     pairs, cfg.eta_idler, cfg.dark_prob)
        either = c1 | c2
        return CountSummary(
            n_pulses=size,
            rep_rate=cfg.rep_rate,
            n_s=int(np.count_nonzero(either)),
            n_i=int(np.count_nonzero(ci)),
            n_si=int(np.count_nonzero(either & ci)),
            n_1=int(np.count_nonzero(c1)),
            n_2=int(np.count_nonzero(c2)),
            n_12=int(np.count_nonzero(c1 & c2)),
            n_1i=int(np.count_nonzero(c1 & ci)),
            n_2i=int(np.count_nonzero(c2 & ci)),
            n_12i=int(np.count_nonzero(c1 & c2 & ci)),
            mode="hbt",
        )

    summary = _run_batches(cfg, worker)
    logger.debug("simulate_hbt: %d pulses, N_i=%d N_1i=%d N_2i=%d N_12i=%d",
                 summary.n_pulses, summary.n_i, summary.n_1i, summary.n_2i, summary.n_12i)
    return summary


def _all_click_probability(probabilities, signal_arms, idler_eff, detectors, dark_prob):
    """Inclusion-exclusion over the detector subset that must all click."""
    total = 0.0
    for size in range(len(detectors) + 1):
        for subset in combinations(detectors, size):
            signal = [signal_arms[d] for d in subset if d != "i"]
            none = (1.0 - dark_prob) ** len(subset)
            n = np.arange(probabilities.size)
            base = (1.0 - sum(signal)) ** n
            if "i" in subset:
                base = base * (1.0 - idler_eff) ** n
            total += (-1) ** size * none * float(np.dot(probabilities, base))
    return total


def analytic_click_probabilities(source, cfg):
    """
    Exact per-pulse click probabilities of the two-detector run.

    Returns:
        dict: p_s, p_i, p_si and the expected g2si = p_si / (p_s p_i)
    """
    p = source.pair_probabilities()
    arms = {"s": cfg.eta_signal}
    p_s = _all_click_probability(p, arms, cfg.eta_idler, ("s",), cfg.dark_prob)
    p_i = _all_click_probability(p, arms, cfg.eta_idler, ("i",), cfg.dark_prob)
    p_si = _all_click_probability(p, arms, cfg.eta_idler, ("s", "i"), cfg.dark_prob)
    g2si = p_si / (p_s * p_i) if p_s > 0 and p_i > 0 else float("nan")
    return {"p_s": p_s, "p_i": p_i, "p_si": p_si, "g2si": g2si}


def analytic_heralded_g2_hbt(source, cfg, splitter_ratio=0.5):
    """
    Expected value of the HBT estimator for threshold detectors with darks,
    p_12i p_i / (p_1i p_2i) from exact click probabilities.
    """
    p = source.pair_probabilities()
    arms = {"1": splitter_ratio * cfg.eta_signal, "2": (1.0 - splitter_ratio) * cfg.eta_signal}

    def prob(*detectors):
        return _all_click_probability(p, arms, cfg.eta_idler, detectors, cfg.dark_prob)

    p_1i, p_2i = prob("1", "i"), prob("2", "i")
    if p_1i == 0.0 or p_2i == 0.0:
        return float("nan")
    return prob("1", "2", "i") * prob("i") / (p_1i * p_2i)


def _estimate(estimator):
    try:
        return estimator(), ""
    except EstimatorUndefinedError as e:
        return float("nan"), str(e)


def power_scan(calib, powers, cfg, splitter_ratio=0.5):
    """
    Coincidence rate and correlation estimators across pump powers.

    Each power runs the two-detector pair configuration, which gives the
    coincidence rate and g2si, and the HBT configuration, which gives g2h,
    on streams 2k + 1 and 2k + 2 for the k-th power. Undefined estimators
    (e.g. at 0 mW) are NaN with the reason in `error`; a failed power point
    keeps its row with NaN values.

    Args:
        calib (PumpCalibration): Power-to-squeezing calibration
        powers (list): Pump powers in mW
        cfg (DetectionConfig): Detection apparatus

    Returns:
        DataFrame: One row per power in POWER_SCAN_COLUMNS order
    """
    rows = []
    for index, power in enumerate(powers):
        row = {"power_mw": float(power)}
        try:
            state = power_to_squeezing(calib, power)
            pairs = simulate_pairs(state, cfg, stream=2 * index + 1)
            summary = simulate_hbt(state, cfg, splitter_ratio, stream=2 * index + 2)
        except PhotonPairError as e:
            logger.warning("power scan point %.4g mW failed: %s", power, e)
            row["error"] = str(e)
            rows.append(row)
            continue
        g2si, err_si = _estimate(pairs.g2si_estimate)
        g2h, err_h = _estimate(summary.g2h_estimate)
        stat, _ = _estimate(summary.g2h_stat_error)
        model = analytic_click_probabilities(state, cfg)
        row.update({
            "r": state.r,
            "rate_cc_per_s": pairs.coincidence_rate,
            "g2si": g2si,
            "g2h": g2h,
            "stat_err_g2h": stat,
            "mu": state.mu,
            "g2si_model": model["g2si"],
            "g2h_model": analytic_heralded_g2_hbt(state, cfg, splitter_ratio),
            "error": "; ".join(e for e in (err_si, err_h) if e),
        })
        logger.info("power %.1f mW: r=%.4f rate=%.4g/s g2si=%.4g g2h=%.4g",
                    power, state.r, row["rate_cc_per_s"], g2si, g2h)
        rows.append(row)
    return pd.DataFrame(rows, columns=POWER_SCAN_COLUMNS)


def loglog_slope(scan, x="power_mw", y="rate_cc_per_s"):
    """Least-squares slope of log(y) against log(x) over rows with positive values."""
    data = scan[(scan[x] > 0) & (scan[y] > 0)]
    slope, _ = np.polyfit(np.log(data[x].to_numpy(float)), np.log(data[y].to_numpy(float)), 1)
    return float(slope)
