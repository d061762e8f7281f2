# SPDX-License-Identifier: Apache-2.0

# Copyright 2026 Contributors to zaniwave

# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at

#     http://www.apache.org/licenses/LICENSE-2.0

# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""
Periodic discrete wavelet transform with the least-asymmetric 8-tap
Daubechies filter, the basis matrix it induces, and the interpolation that
places an observed series on the dyadic grid.

Coefficient vectors are ordered coarse to fine: the scaling coefficient,
then detail level 1 (one coefficient), level 2 (two coefficients) and so on
up to level D with 2**(D-1) coefficients.
"""

import logging
import warnings

import numpy as np
import pywt

from zaniwave import enums
from zaniwave.errors import DomainError, ShapeError, ValidationError
from zaniwave.objects import WaveletBasis, InterpolationMatrix, WaveletTransformSummary

logger = logging.getLogger('zaniwave')

MIN_LEVELS = 2
MAX_LEVELS = 12

# Share of the grid a transformed series occupies. At two thirds, 2**j cycles
# per unit of series time sit at the centre of a detail band.
SERIES_FILL = 2.0 / 3.0


def _check_length(n, basis, what):
    if basis is not None and n != basis.L:
        raise ShapeError(f"Expected {what} of length {basis.L}, got {n}")
    if n < 2 or n & (n - 1):
        raise ShapeError(f"The {what} length must be a power of two, got {n}")


def dwt(signal, basis=None, filter_name='sym4'):
    """
    Full-depth periodic wavelet transform along the last axis.

    :param signal: Array whose last axis has length L = 2**D.
    :param WaveletBasis basis: Optional basis the signal must conform to.
    :returns: Coefficients in coarse-to-fine order, same shape as signal.
    """
    signal = np.asarray(signal, dtype=float)
    n = signal.shape[-1]
    _check_length(n, basis, 'signal')
    if basis is not None:
        filter_name = basis.filter_name
    with warnings.catch_warnings():
        # Every level past pywt's advised depth wraps around the grid, which
        # periodization handles exactly.
        warnings.simplefilter('ignore', UserWarning)
        coefficients = pywt.wavedec(signal, filter_name, mode='periodization',
                                    level=int(np.log2(n)), axis=-1)
    return np.concatenate(coefficients, axis=-1)


def idwt(coefficients, basis=None, filter_name='sym4'):
    """
    Inverse of dwt along the last axis.
    """
    coefficients = np.asarray(coefficients, dtype=float)
    n = coefficients.shape[-1]
    _check_length(n, basis, 'coefficient vector')
    if basis is not None:
        filter_name = basis.filter_name
    blocks = [coefficients[..., :1]]
    start = 1
    while start < n:
        blocks.append(coefficients[..., start:2 * start])
        start *= 2
    return pywt.waverec(blocks, filter_name, mode='periodization', axis=-1)


def _circular_centers(W):
    L = W.shape[1]
    angles = 2 * np.pi * np.arange(L) / L
    resultant = (W ** 2) @ np.exp(1j * angles)
    centers = np.mod(np.angle(resultant), 2 * np.pi) * L / (2 * np.pi)
    centers[np.abs(resultant) < 1e-8] = (L - 1) / 2
    return centers


def build_basis(D, filter_name='sym4'):
    """
    Build the orthonormal basis matrix on a grid of 2**D points.

    :param int D: Number of detail levels, between 2 and 12.
    :returns: A WaveletBasis whose rows are the basis functions.
    """
    if not isinstance(D, (int, np.integer)) or not MIN_LEVELS <= D <= MAX_LEVELS:
        raise DomainError(f"The number of detail levels must be an integer in "
                          f"{MIN_LEVELS}..{MAX_LEVELS}, got {D}")
    L = 2 ** D
    W = dwt(np.eye(L), filter_name=filter_name).T
    detail_map = np.zeros(L, dtype=np.int64)
    for level in range(1, D + 1):
        detail_map[2 ** (level - 1):2 ** level] = level
    return WaveletBasis(D=int(D), W=W, detail_map=detail_map,
                        centers=_circular_centers(W), filter_name=filter_name)


def grid_levels(T):
    """
    The smallest D (at least 2) with 2**D >= T.
    """
    return max(MIN_LEVELS, int(np.ceil(np.log2(max(T, 1)))))


def build_interpolation(times, basis, span=None, cells_per_unit=1.0):
    """
    Piecewise-linear, periodic interpolation from the grid to the observed
    times. Times are placed at offset + (t - span[0]) * cells_per_unit, with
    the offset chosen to centre the span inside the grid.

    :param times: Sorted observation times.
    :param WaveletBasis basis: The grid to interpolate from.
    :param tuple span: (first, last) time of the declared series. Defaults to
                       the range of times.
    :param float cells_per_unit: Grid cells per unit of time.
    :returns: An InterpolationMatrix of shape (len(times), L).
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0:
        raise ShapeError("At least one observation time is required")
    if np.any(np.diff(times) < 0):
        raise ValidationError("Observation times must be sorted")
    if span is None:
        span = (float(times[0]), float(times[-1]))
    span = (float(span[0]), float(span[1]))
    if times[0] < span[0] or times[-1] > span[1]:
        raise DomainError(f"Observation times must lie inside the span {span}")
    if cells_per_unit <= 0:
        raise DomainError("cells_per_unit must be positive")
    L = basis.L
    extent = (span[1] - span[0]) * cells_per_unit
    if extent > L:
        raise DomainError(f"A span of {span[1] - span[0]} time units at {cells_per_unit} cells "
                          f"per unit does not fit a grid of {L} points")
    offset = max((L - 1 - extent) / 2, 0.0)
    positions = offset + (times - span[0]) * cells_per_unit
    lower = np.floor(positions)
    weight = positions - lower
    rows = np.arange(len(times))
    H = np.zeros((len(times), L))
    np.add.at(H, (rows, lower.astype(np.int64) % L), 1.0 - weight)
    np.add.at(H, (rows, (lower.astype(np.int64) + 1) % L), weight)
    return InterpolationMatrix(H=H, times=times, offset=offset,
                               cells_per_unit=float(cells_per_unit), span=span)


def mean_function(theta, H, W):
    """
    The mean on the observed time points, H @ W.T @ theta.
    """
    theta = np.asarray(theta, dtype=float)
    H = H.H if isinstance(H, InterpolationMatrix) else H
    W = W.W if isinstance(W, WaveletBasis) else W
    if theta.shape[-1] != W.shape[0] or H.shape[1] != W.shape[1]:
        raise ShapeError(f"Cannot combine theta {theta.shape}, H {H.shape} and W {W.shape}")
    return theta @ W @ H.T


def _spacing(times):
    return float(np.median(np.diff(times))) if len(times) > 1 else 1.0


def _grid_time(interpolation, cells):
    return interpolation.span[0] + (cells - interpolation.offset) / interpolation.cells_per_unit


def grid_from_series(values, interpolation, margin=enums.MARGIN.PERIODIC):
    """
    Place series values back on the grid. Cells touched by the interpolation
    get the weighted average of the values they feed; the remaining margin
    cells are filled by periodic extension of the series or with zeros.

    :param values: Array of shape (..., T).
    :param InterpolationMatrix interpolation: The placement to invert.
    :param str margin: 'periodic' or 'zero'.
    :returns: Array of shape (..., L).
    """
    if margin not in enums.MARGIN.values:
        raise ValidationError(f"margin must be one of {enums.MARGIN.values}, got '{margin}'")
    values = np.asarray(values, dtype=float)
    H = interpolation.H
    if values.shape[-1] != H.shape[0]:
        raise ShapeError(f"Expected series of length {H.shape[0]}, got {values.shape[-1]}")
    weight = H.sum(axis=0)
    covered = weight > 1e-12
    grid = np.zeros(values.shape[:-1] + (H.shape[1],))
    grid[..., covered] = (values @ H)[..., covered] / weight[covered]
    if margin == enums.MARGIN.PERIODIC and not np.all(covered):
        times = interpolation.times
        period = times[-1] - times[0] + _spacing(times)
        where = _grid_time(interpolation, np.flatnonzero(~covered).astype(float))
        flat = values.reshape(-1, values.shape[-1])
        filled = np.array([np.interp(where, times, row, period=period) for row in flat])
        grid[..., ~covered] = filled.reshape(values.shape[:-1] + (len(where),))
    return grid


def level_energy(coefficients, basis, boundary=None):
    """
    Squared coefficient energy per level (index 0 is the scaling level).

    With a boundary grid position, the energy is split by the centre of each
    basis function and an array of shape (D + 1, 2) is returned holding the
    energy before and after the boundary.
    """
    energy = np.asarray(coefficients, dtype=float) ** 2
    levels = basis.detail_map
    if boundary is None:
        return np.bincount(levels, weights=energy, minlength=basis.D + 1)
    before = basis.centers < boundary
    return np.stack([np.bincount(levels, weights=energy * before, minlength=basis.D + 1),
                     np.bincount(levels, weights=energy * ~before, minlength=basis.D + 1)], axis=1)


def dominant_level(coefficients, basis, mask=None):
    """
    The detail level (1..D) holding the most energy, optionally counting
    only the coefficients selected by mask.
    """
    energy = np.asarray(coefficients, dtype=float) ** 2
    if mask is not None:
        energy = energy * mask
    totals = np.bincount(basis.detail_map, weights=energy, minlength=basis.D + 1)
    return int(np.argmax(totals[1:]) + 1)


def transform_summary(mu_draws, basis, interpolation, n_draws=100, margin=enums.MARGIN.PERIODIC):
    """
    Wavelet transform of posterior draws of the mean function. Every draw is
    put back on the grid and transformed; the summary holds the median
    magnitude over all draws (draw_id 0) and the magnitudes of up to n_draws
    individual draws, evenly spread over the available draws.

    :param mu_draws: Array of shape (draws, T), or a single series.
    :param WaveletBasis basis: The basis of the fit.
    :param InterpolationMatrix interpolation: The placement used by the fit.
    :returns: A WaveletTransformSummary with one row per coefficient and draw.
    """
    mu_draws = np.atleast_2d(np.asarray(mu_draws, dtype=float))
    if mu_draws.shape[0] < 1:
        raise ShapeError("At least one draw is required")
    magnitudes = np.abs(dwt(grid_from_series(mu_draws, interpolation, margin=margin), basis))
    picked = np.unique(np.linspace(0, len(magnitudes) - 1, min(n_draws, len(magnitudes))).astype(int))
    table = np.vstack([np.median(magnitudes, axis=0)[None, :], magnitudes[picked]])

    widths = basis.L / 2.0 ** np.maximum(basis.detail_map - 1, 0)
    block_start = _grid_time(interpolation, basis.centers - widths / 2)
    block_end = _grid_time(interpolation, basis.centers + widths / 2)
    order = np.lexsort((block_start, basis.detail_map))

    n_rows = table.shape[0]
    return WaveletTransformSummary(level=np.tile(basis.detail_map[order], n_rows),
                                   block_start=np.tile(block_start[order], n_rows),
                                   block_end=np.tile(block_end[order], n_rows),
                                   draw_id=np.repeat(np.arange(n_rows), len(order)),
                                   magnitude=table[:, order].ravel())


def summary_energy(summary, boundary, span=None):
    """
    Squared median magnitudes per level, split by whether the centre of a
    coefficient's block lies before or after `boundary` (in series time).
    With a span, blocks centred outside (first, last) are left out.

    :returns: Array of shape (levels, 2).
    """
    median = summary.median()
    centre = (median.block_start + median.block_end) / 2
    n_levels = int(median.level.max()) + 1 if len(median.level) else 1
    inside = np.ones(len(centre), dtype=bool)
    if span is not None:
        inside = (centre >= span[0]) & (centre <= span[1])
    before = centre < boundary
    energy = median.magnitude ** 2 * inside
    return np.stack([np.bincount(median.level, weights=energy * before, minlength=n_levels),
                     np.bincount(median.level, weights=energy * ~before, minlength=n_levels)], axis=1)


def level_labels(basis, interpolation=None):
    """
    Series level of every detail level 0..D for a series placed by
    `interpolation`; see WaveletBasis.series_level.
    """
    cells_per_unit = None if interpolation is None else interpolation.cells_per_unit * \
        (interpolation.span[1] - interpolation.span[0] + _spacing(interpolation.times))
    return np.array([basis.series_level(level, cells_per_unit) for level in range(basis.D + 1)])
