"""
Arrays of nominally identical sources written on one chip.

Fabrication scatter is modelled as a fractional birefringence error per
waveguide, Δn_k = Δn (1 + η_k) with η_k ~ Normal(0, eta_sigma).
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd
from numpy.random import Generator, Philox, SeedSequence

from src.models.phasematch import solve_phase_matching, wavelength_sensitivity
from src.simulation.hom import pairwise_visibility_matrix, prepare_source
from src.utils.config import CHIP_COUNT, CHIP_SIGNAL_STD_M, FABRICATION_META, HISTOGRAM_BIN_M, HOM_GROUPS, HOM_MEAN_PAIRS, SEED
from src.utils.errors import DomainError, PhotonPairError
from src.utils.validators import require, validate_integer_at_least, validate_positive, validate_range

logger = logging.getLogger(__name__)

MAX_ETA_SIGMA = 0.2
SOURCE_COLUMNS = ["source_id", "delta_n", "eta", "lambda_s_nm", "lambda_i_nm"]


@dataclass(frozen=True, eq=False)
class ChipModel:
    base: object
    etas: tuple
    eta_sigma: float
    seed: int
    redraws: int = 0

    @property
    def count(self):
        return len(self.etas)

    @property
    def sources(self):
        return [
            self.base.with_delta_n(self.base.delta_n * (1.0 + eta), label=f"wg{k:03d}")
            for k, eta in enumerate(self.etas)
        ]


@dataclass(frozen=True, eq=False)
class ArrayStatistics:
    table: pd.DataFrame
    failures: list = field(default_factory=list)

    def summary(self):
        """Mean, standard deviation and range per arm, plus the idler/signal spread ratio."""
        out = {"count": int(len(self.table)), "failed": len(self.failures)}
        for arm in ("lambda_s_nm", "lambda_i_nm"):
            values = self.table[arm]
            out[f"{arm}_mean"] = float(values.mean())
            out[f"{arm}_std"] = float(values.std(ddof=1)) if len(values) > 1 else 0.0
            out[f"{arm}_min"] = float(values.min())
            out[f"{arm}_max"] = float(values.max())
        std_s, std_i = out["lambda_s_nm_std"], out["lambda_i_nm_std"]
        out["std_ratio"] = std_i / std_s if std_s > 0 else float("nan")
        out["model_std_ratio"] = (out["lambda_i_nm_mean"] / out["lambda_s_nm_mean"]) ** 2
        return out

    def histogram(self, arm="signal", bin_width=HISTOGRAM_BIN_M):
        """
        Counts of central wavelengths in fixed-width bins.

        Returns:
            DataFrame: bin_low_nm, bin_high_nm, count
        """
        column = {"signal": "lambda_s_nm", "idler": "lambda_i_nm"}[arm]
        values = self.table[column].to_numpy(float)
        width = bin_width * 1e9
        low = np.floor(values.min() / width) * width
        high = max(np.ceil(values.max() / width) * width, low + width)
        edges = np.arange(low, high + 0.5 * width, width)
        counts, edges = np.histogram(values, bins=edges)
        return pd.DataFrame({"bin_low_nm": edges[:-1], "bin_high_nm": edges[1:], "count": counts})


def build_chip(base, count=CHIP_COUNT, eta_sigma=0.0, seed=SEED):
    """
    Draw the per-source birefringence perturbations of one chip.

    Draws with Δn_k ≤ 0 are rejected and redrawn; the number of redraws is
    recorded on the chip.

    Args:
        base (WaveguideSpec): Nominal waveguide
        count (int): Number of sources
        eta_sigma (float): Standard deviation of η in [0, 0.2]
        seed (int): Seed of the Philox stream

    Returns:
        ChipModel: The chip
    """
    require(validate_integer_at_least("count", count, 1))
    require(validate_range("eta_sigma", eta_sigma, 0.0, MAX_ETA_SIGMA))
    rng = Generator(Philox(SeedSequence(seed)))
    etas = []
    redraws = 0
    while len(etas) < count:
        eta = float(rng.normal(0.0, eta_sigma)) if eta_sigma > 0 else 0.0
        if 1.0 + eta <= 0.0:
            redraws += 1
            logger.warning("redrawing source %d: eta=%.4f gives non-positive delta_n", len(etas), eta)
            continue
        etas.append(eta)
    if not base.fabrication_meta:
        base = replace(base, fabrication_meta=dict(FABRICATION_META))
    return ChipModel(base=base, etas=tuple(etas), eta_sigma=eta_sigma, seed=seed, redraws=redraws)


def calibrate_eta_sigma(base, target_signal_std=CHIP_SIGNAL_STD_M):
    """
    Perturbation width giving a target signal-wavelength spread, from the
    first-order sensitivity dλ_s/dη.
    """
    require(validate_positive("target_signal_std", target_signal_std))
    d_signal, _ = wavelength_sensitivity(base)
    sigma = target_signal_std / abs(d_signal)
    logger.info("calibrated eta_sigma=%.5f for signal std %.3f nm", sigma, target_signal_std * 1e9)
    return sigma


def _solve_source(index, spec, eta):
    try:
        solution = solve_phase_matching(spec)
    except PhotonPairError as e:
        return None, {"source_id": index, "eta": eta, "error": str(e)}
    return {
        "source_id": index,
        "delta_n": spec.delta_n,
        "eta": eta,
        "lambda_s_nm": solution.lambda_s * 1e9,
        "lambda_i_nm": solution.lambda_i * 1e9,
    }, None


def chip_statistics(chip, workers=1):
    """
    Phase-matched wavelengths of every source and their spread.

    Failed solves are listed in `failures` and left out of the table.
    """
    jobs = list(zip(range(chip.count), chip.sources, chip.etas))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda job: _solve_source(*job), jobs))
    else:
        results = [_solve_source(*job) for job in jobs]
    rows = [row for row, _ in results if row is not None]
    failures = [failure for _, failure in results if failure is not None]
    for failure in failures:
        logger.warning("source %d failed: %s", failure["source_id"], failure["error"])
    return ArrayStatistics(table=pd.DataFrame(rows, columns=SOURCE_COLUMNS), failures=failures)


def group_blocks(count, n_groups):
    """Contiguous blocks of source indices, sizes differing by at most one."""
    require(validate_integer_at_least("n_groups", n_groups, 2))
    if count < n_groups:
        raise DomainError(f"cannot split {count} sources into {n_groups} groups")
    return [block.tolist() for block in np.array_split(np.arange(count), n_groups)]


def sample_hom_groups(chip, n_groups=HOM_GROUPS, seed=SEED, mu=HOM_MEAN_PAIRS, pump=None,
                      policy="common", det=None):
    """
    Interconnected interference tests across the chip.

    Test g pairs one source drawn from block g with one drawn from block
    g + 1 (cyclically), giving n_groups pairs. With the default "common"
    filter policy all sources are filtered at the nominal wavelengths, which
    hides spectral detuning; pass policy="tracking" to expose it.

    Returns:
        tuple: (list of index pairs, visibility DataFrame)
    """
    blocks = group_blocks(chip.count, n_groups)
    rng = Generator(Philox(SeedSequence(seed, spawn_key=(1,))))
    pairs = [
        (int(rng.choice(blocks[g])), int(rng.choice(blocks[(g + 1) % n_groups])))
        for g in range(n_groups)
    ]
    specs = chip.sources
    nominal = solve_phase_matching(chip.base)
    wanted = sorted({index for pair in pairs for index in pair})
    prepared = {
        index: prepare_source(specs[index], mu=mu, pump=pump, policy=policy, nominal=nominal)
        for index in wanted
    }
    position = {index: k for k, index in enumerate(wanted)}
    table = pairwise_visibility_matrix(
        [prepared[index] for index in wanted],
        pairs=[(position[a], position[b]) for a, b in pairs],
        det=det,
    )
    table["source_a"] = [a for a, _ in pairs]
    table["source_b"] = [b for _, b in pairs]
    table.insert(0, "group", [f"{{{g},{(g + 1) % n_groups}}}" for g in range(n_groups)])
    return pairs, table
