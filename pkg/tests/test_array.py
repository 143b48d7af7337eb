"""Tests for source arrays on one chip"""

import numpy as np
import pytest
from scipy.stats import chi2

from src.simulation.array import (
    SOURCE_COLUMNS,
    ChipModel,
    build_chip,
    calibrate_eta_sigma,
    chip_statistics,
    group_blocks,
    sample_hom_groups,
)
from src.utils.errors import DomainError


@pytest.fixture(scope="module")
def eta_sigma(spec):
    return calibrate_eta_sigma(spec, 0.4e-9)


@pytest.fixture(scope="module")
def stats(spec, eta_sigma):
    return chip_statistics(build_chip(spec, count=128, eta_sigma=eta_sigma, seed=2024))


def test_build_chip_is_deterministic(spec):
    first = build_chip(spec, count=16, eta_sigma=0.01, seed=3)
    second = build_chip(spec, count=16, eta_sigma=0.01, seed=3)
    other = build_chip(spec, count=16, eta_sigma=0.01, seed=4)
    assert first.etas == second.etas
    assert first.etas != other.etas
    assert first.count == 16
    assert first.redraws == 0


def test_chip_sources_carry_perturbed_birefringence(spec):
    chip = build_chip(spec, count=4, eta_sigma=0.01, seed=3)
    sources = chip.sources
    assert [s.label for s in sources] == ["wg000", "wg001", "wg002", "wg003"]
    for source, eta in zip(sources, chip.etas):
        assert source.delta_n == pytest.approx(spec.delta_n * (1 + eta))
    assert chip.base.fabrication_meta


def test_zero_spread_gives_identical_sources(spec):
    chip = build_chip(spec, count=3, eta_sigma=0.0)
    assert chip.etas == (0.0, 0.0, 0.0)


@pytest.mark.parametrize("count, eta_sigma", [(0, 0.01), (4, -0.01), (4, 0.3)])
def test_build_chip_rejects_bad_parameters(spec, count, eta_sigma):
    with pytest.raises(DomainError):
        build_chip(spec, count=count, eta_sigma=eta_sigma)


def test_calibrated_spread(spec, eta_sigma):
    # signal moves by about 22 nm per unit of relative birefringence error
    assert eta_sigma == pytest.approx(0.018, rel=0.1)


def test_drawn_spread_inside_confidence_band(spec, eta_sigma):
    """Sample variance of 128 draws lies in the 99% chi-square band of eta_sigma"""
    chip = build_chip(spec, count=128, eta_sigma=eta_sigma, seed=2024)
    variance = np.var(chip.etas, ddof=1)
    dof = chip.count - 1
    assert chi2.ppf(0.005, dof) * eta_sigma ** 2 / dof <= variance <= chi2.ppf(0.995, dof) * eta_sigma ** 2 / dof


def test_chip_statistics(stats, solution):
    summary = stats.summary()
    assert summary["count"] == 128
    assert summary["failed"] == 0
    assert list(stats.table.columns) == SOURCE_COLUMNS
    assert summary["lambda_s_nm_std"] == pytest.approx(0.4, rel=0.25)
    assert abs(summary["lambda_s_nm_mean"] - solution.lambda_s * 1e9) < 0.2
    assert abs(summary["lambda_i_nm_mean"] - solution.lambda_i * 1e9) < 0.3
    assert summary["lambda_i_nm_std"] > summary["lambda_s_nm_std"]
    assert summary["std_ratio"] == pytest.approx(summary["model_std_ratio"], rel=0.02)


def test_chip_statistics_with_workers(spec, eta_sigma, stats):
    threaded = chip_statistics(build_chip(spec, count=128, eta_sigma=eta_sigma, seed=2024), workers=4)
    assert threaded.table.equals(stats.table)


def test_histogram(stats):
    for arm in ("signal", "idler"):
        hist = stats.histogram(arm, bin_width=0.1e-9)
        assert list(hist.columns) == ["bin_low_nm", "bin_high_nm", "count"]
        assert hist["count"].sum() == 128
        assert np.allclose(hist["bin_high_nm"] - hist["bin_low_nm"], 0.1)


def test_group_blocks():
    blocks = group_blocks(10, 3)
    assert blocks == [[0, 1, 2, 3], [4, 5, 6], [7, 8, 9]]
    assert sorted(i for block in group_blocks(100, 10) for i in block) == list(range(100))
    with pytest.raises(DomainError):
        group_blocks(3, 4)
    with pytest.raises(DomainError):
        group_blocks(10, 1)


def test_sample_hom_groups_on_a_small_chip(spec, pump, eta_sigma):
    chip = build_chip(spec, count=20, eta_sigma=eta_sigma, seed=8)
    blocks = group_blocks(20, 4)
    pairs, table = sample_hom_groups(chip, n_groups=4, seed=8, pump=pump)
    assert len(pairs) == 4
    assert list(table["group"]) == ["{0,1}", "{1,2}", "{2,3}", "{3,0}"]
    for g, (a, b) in enumerate(pairs):
        assert a in blocks[g]
        assert b in blocks[(g + 1) % 4]
    assert list(table["source_a"]) == [a for a, _ in pairs]
    assert (table["visibility"] > 0.9).all()


def test_sample_hom_groups_is_reproducible(spec, pump, eta_sigma):
    chip = build_chip(spec, count=20, eta_sigma=eta_sigma, seed=8)
    first, _ = sample_hom_groups(chip, n_groups=4, seed=8, pump=pump)
    second, _ = sample_hom_groups(chip, n_groups=4, seed=8, pump=pump)
    assert first == second


@pytest.mark.slow
def test_full_chip_interference(spec, pump, eta_sigma):
    chip = build_chip(spec, count=128, eta_sigma=eta_sigma, seed=2024)
    _, table = sample_hom_groups(chip, n_groups=10, seed=2024, pump=pump)
    assert len(table) == 10
    assert (table["visibility"] > 0.9).all()


def test_signal_shift_follows_birefringence_error(stats):
    correlation = np.corrcoef(stats.table["eta"], stats.table["lambda_s_nm"])[0, 1]
    assert abs(correlation) > 0.999


def test_detuned_block_lowers_tracking_visibilities(spec, pump):
    """A block of sources written with a 20% birefringence error fails every test it joins"""
    blocks = group_blocks(20, 4)
    etas = tuple(0.2 if k in blocks[1] else 0.0 for k in range(20))
    chip = ChipModel(base=spec, etas=etas, eta_sigma=0.0, seed=8)
    pairs, table = sample_hom_groups(chip, n_groups=4, seed=8, pump=pump, policy="tracking")
    touched = [(a in blocks[1]) != (b in blocks[1]) for a, b in pairs]
    assert touched == [True, True, False, False]
    assert (table.loc[touched, "visibility"] < 0.1).all()
    assert (table.loc[[not t for t in touched], "visibility"] > 0.9).all()
