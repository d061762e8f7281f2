from zaniwave import enums, wavelets
from zaniwave.errors import DomainError, ShapeError

import numpy as np
import pywt
import pytest


@pytest.mark.parametrize('D', range(3, 9))
def test_basis_is_orthonormal(D):
    basis = wavelets.build_basis(D)
    assert basis.L == 2 ** D
    assert np.allclose(basis.W @ basis.W.T, np.eye(basis.L), atol=1e-10)


@pytest.mark.parametrize('D', range(3, 9))
def test_inverse_and_parseval(D):
    rng = np.random.default_rng(D)
    basis = wavelets.build_basis(D)
    signal = rng.normal(size=(3, basis.L))
    coefficients = wavelets.dwt(signal, basis)
    assert np.allclose(wavelets.idwt(coefficients, basis), signal, atol=1e-10)
    assert np.allclose(np.sum(coefficients ** 2, axis=-1), np.sum(signal ** 2, axis=-1), atol=1e-10)
    # The basis matrix and the transform agree.
    assert np.allclose(coefficients, signal @ basis.W.T, atol=1e-10)


def test_detail_map():
    basis = wavelets.build_basis(3)
    assert basis.detail_map.tolist() == [0, 1, 2, 2, 3, 3, 3, 3]
    assert basis.level_indices(2).tolist() == [2, 3]


def test_constant_lives_in_the_scaling_coefficient():
    basis = wavelets.build_basis(5)
    coefficients = wavelets.dwt(np.ones(basis.L), basis)
    assert coefficients[0] == pytest.approx(np.sqrt(basis.L))
    assert np.allclose(coefficients[1:], 0, atol=1e-10)


@pytest.mark.parametrize('D', [2, 4, 7])
def test_basis_size_limits_accepted(D):
    assert wavelets.build_basis(D).D == D


@pytest.mark.parametrize('D', [1, 13, 3.5])
def test_basis_size_limits_rejected(D):
    with pytest.raises(DomainError):
        wavelets.build_basis(D)


def test_dwt_rejects_lengths():
    with pytest.raises(ShapeError):
        wavelets.dwt(np.ones(12))
    with pytest.raises(ShapeError):
        wavelets.dwt(np.ones(16), wavelets.build_basis(3))


@pytest.mark.parametrize('frequency, series_level', [(2, 1), (4, 2), (8, 3), (16, 4)])
def test_sinusoid_energy_localization(frequency, series_level):
    basis = wavelets.build_basis(6)
    cells_per_unit = wavelets.SERIES_FILL * basis.L
    t = np.arange(basis.L) / cells_per_unit
    coefficients = wavelets.dwt(np.sin(2 * np.pi * frequency * t), basis)
    level = wavelets.dominant_level(coefficients, basis)
    assert basis.series_level(level, cells_per_unit) == series_level
    low, high = basis.frequency_window(level, cells_per_unit)
    assert low <= frequency < high
    energy = wavelets.level_energy(coefficients, basis)
    assert energy[level] / energy.sum() >= 0.8


def test_dominant_level_grows_with_frequency():
    basis = wavelets.build_basis(6)
    t = np.arange(basis.L) / (wavelets.SERIES_FILL * basis.L)
    levels = [wavelets.dominant_level(wavelets.dwt(np.sin(2 * np.pi * f * t), basis), basis)
              for f in (2, 4, 8, 16)]
    assert levels == sorted(levels)
    assert len(set(levels)) == 4


def test_series_levels_follow_the_placement():
    basis = wavelets.build_basis(6)
    assert [basis.series_level(level) for level in range(1, 7)] == [0, 1, 2, 3, 4, 5]
    times = np.arange(128) / 128
    interpolation = wavelets.build_interpolation(times, basis,
                                                 cells_per_unit=wavelets.SERIES_FILL * basis.L)
    labels = wavelets.level_labels(basis, interpolation)
    assert labels[1:].tolist() == [-1, 0, 1, 2, 3, 4]
    assert basis.frequency_value(4, wavelets.SERIES_FILL * basis.L) == pytest.approx(4.0)


def test_transform_matches_pywt():
    basis = wavelets.build_basis(5)
    signal = np.random.default_rng(3).normal(size=basis.L)
    approx, finest = pywt.dwt(signal, 'sym4', mode='periodization')
    coefficients = wavelets.dwt(signal, basis)
    assert np.allclose(coefficients[basis.L // 2:], finest)
    assert np.allclose(wavelets.dwt(approx, filter_name='sym4'), coefficients[:basis.L // 2])


def test_grid_levels():
    assert wavelets.grid_levels(56) == 6
    assert wavelets.grid_levels(64) == 6
    assert wavelets.grid_levels(65) == 7
    assert wavelets.grid_levels(1) == 2


def test_interpolation_rows_sum_to_one_and_centre():
    basis = wavelets.build_basis(6)
    interpolation = wavelets.build_interpolation(np.arange(1, 57), basis)
    assert interpolation.H.shape == (56, 64)
    assert np.allclose(interpolation.H.sum(axis=1), 1)
    assert interpolation.offset == pytest.approx((63 - 55) / 2)
    assert interpolation.positions[0] == pytest.approx(4.0)


def test_interpolation_of_integer_positions_picks_single_cells():
    basis = wavelets.build_basis(3)
    interpolation = wavelets.build_interpolation(np.arange(1, 9), basis)
    assert np.allclose(interpolation.H, np.eye(8))


def test_interpolation_rejects_too_long_spans():
    basis = wavelets.build_basis(3)
    with pytest.raises(DomainError):
        wavelets.build_interpolation(np.arange(1, 11), basis)


def test_mean_function_shape_checks():
    basis = wavelets.build_basis(4)
    interpolation = wavelets.build_interpolation(np.arange(1, 11), basis)
    theta = np.zeros(basis.L)
    theta[0] = 4.0
    mu = wavelets.mean_function(theta, interpolation, basis)
    assert np.allclose(mu, 1.0)
    with pytest.raises(ShapeError):
        wavelets.mean_function(np.zeros(8), interpolation, basis)


@pytest.mark.parametrize('margin', enums.MARGIN.values)
def test_grid_from_series_inverts_placement(margin):
    basis = wavelets.build_basis(6)
    interpolation = wavelets.build_interpolation(np.arange(1, 57), basis)
    series = np.sin(np.arange(56) / 5.0)
    grid = wavelets.grid_from_series(series, interpolation, margin=margin)
    assert np.allclose(interpolation.H @ grid, series)
    uncovered = interpolation.H.sum(axis=0) == 0
    if margin == enums.MARGIN.ZERO:
        assert np.all(grid[uncovered] == 0)
    else:
        assert np.all(np.abs(grid[uncovered]) <= 1)


def test_transform_summary_layout():
    basis = wavelets.build_basis(4)
    interpolation = wavelets.build_interpolation(np.arange(1, 17), basis)
    rng = np.random.default_rng(0)
    draws = rng.normal(size=(30, 16))
    summary = wavelets.transform_summary(draws, basis, interpolation, n_draws=5)
    assert summary.n_draws == 5
    assert len(summary.level) == 6 * basis.L
    median = summary.median()
    assert np.all(median.draw_id == 0)
    assert np.all(np.diff(median.level) >= 0)
    magnitudes = np.abs(wavelets.dwt(draws, basis))
    for level in range(basis.D + 1):
        expected = np.sort(np.median(magnitudes, axis=0)[basis.detail_map == level])
        assert np.allclose(np.sort(median.magnitude[median.level == level]), expected)
    finest = median.level == basis.D
    assert np.allclose(median.block_end[finest] - median.block_start[finest], 2.0)


def test_summary_energy_splits_halves():
    basis = wavelets.build_basis(6)
    interpolation = wavelets.build_interpolation(np.arange(1, 65), basis)
    t = np.arange(64)
    series = np.where(t >= 32, np.sin(2 * np.pi * 24 * t / 64), 0.0)
    summary = wavelets.transform_summary(series, basis, interpolation)
    energy = wavelets.summary_energy(summary, 32.5)
    assert energy[6, 1] > 3 * energy[6, 0]


def test_summary_energy_leaves_out_margin_blocks():
    basis = wavelets.build_basis(6)
    interpolation = wavelets.build_interpolation(np.arange(1, 41), basis)
    series = np.sin(2 * np.pi * 24 * np.arange(40) / 64)
    summary = wavelets.transform_summary(series, basis, interpolation)
    everything = wavelets.summary_energy(summary, 20.5)
    inside = wavelets.summary_energy(summary, 20.5, span=(1, 40))
    assert np.all(inside <= everything + 1e-12)
    assert inside.sum() < everything.sum()
