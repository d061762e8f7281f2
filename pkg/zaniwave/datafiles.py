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
Readers and writers for everything zaniwave puts on disk. Every writer has a
matching reader that returns the same object.
"""

import io
import json
import logging
import os
import zipfile

import numpy as np
import pandas as pd

from zaniwave.errors import DataFormatError, ValidationError
from zaniwave.objects import HaulDataset, HaulRecord, SampleArchive, WaveletTransformSummary

logger = logging.getLogger('zaniwave')

HAUL_COLUMNS = ['trip', 'obs', 'quarter']
TRANSFORM_COLUMNS = ['level', 'block_start', 'block_end', 'draw_id', 'magnitude']
HOLDOUT_COLUMNS = ['record_id', 'observed', 'median', 'lo95', 'hi95']
BAND_COLUMNS = ['time', 'component', 'lo95', 'median', 'hi95']
SERIES_COLUMNS = ['time', 'value']
ARCHIVE_ARRAYS = ['draws', 'loglik', 'accept_stat', 'divergences', 'step_size',
                  'depth_hits', 'rhat', 'energy_error']

# Zip members get a fixed timestamp so equal archives are equal bytes.
ZIP_DATE_TIME = (1980, 1, 1, 0, 0, 0)


def _ensure_directory(path):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)


def read_hauls(path, T=None, J=None):
    """
    Read a haul CSV with header trip,obs,quarter,<category 1>,...,<category K>.

    :param str path: The file to read.
    :param int T: Number of time units. Defaults to the largest quarter.
    :param int J: Number of trips. Defaults to the largest trip id.
    :returns: A HaulDataset.
    :raises DataFormatError: With the line number of the first bad row.
    """
    try:
        frame = pd.read_csv(path, dtype=str, skipinitialspace=True)
        # pandas renames repeated column names, so take them from the raw header
        header = pd.read_csv(path, header=None, nrows=1, dtype=str, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise DataFormatError(None, f"The file '{path}' is empty")
    columns = [str(column).strip() for column in header.iloc[0]]
    if [column.lower() for column in columns[:3]] != HAUL_COLUMNS:
        raise DataFormatError(1, f"The header must start with {','.join(HAUL_COLUMNS)}, "
                                 f"got {','.join(columns[:3])}")
    categories = columns[3:]
    if len(categories) < 2:
        raise DataFormatError(1, "At least two category columns are required")
    if len(set(categories)) != len(categories):
        raise DataFormatError(1, "Category names must be unique")
    if frame.empty:
        raise DataFormatError(None, f"The file '{path}' has no records")

    values = np.zeros(frame.shape, dtype=np.int64)
    for position, column in enumerate(frame.columns):
        parsed = pd.to_numeric(frame[column], errors='coerce')
        bad = parsed.isna() | (parsed != np.floor(parsed))
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            raise DataFormatError(row + 2, f"'{frame[column].iloc[row]}' in column "
                                           f"'{columns[position]}' is not an integer")
        values[:, position] = parsed.to_numpy(dtype=np.int64)
    negative = np.flatnonzero(np.any(values[:, 3:] < 0, axis=1))
    if len(negative):
        raise DataFormatError(int(negative[0]) + 2, "Counts must be non-negative")
    low = np.flatnonzero(np.any(values[:, :3] < 1, axis=1))
    if len(low):
        raise DataFormatError(int(low[0]) + 2, "trip, obs and quarter are 1-based")

    T = int(values[:, 2].max()) if T is None else T
    J = int(values[:, 0].max()) if J is None else J
    for line, row in enumerate(values, start=2):
        if row[2] > T:
            raise DataFormatError(line, f"Quarter {row[2]} is outside the span 1..{T}")
        if row[0] > J:
            raise DataFormatError(line, f"Trip {row[0]} is outside the range 1..{J}")
    records = [HaulRecord(trip_id=int(row[0]), obs_index=int(row[1]), quarter=int(row[2]),
                          counts=row[3:]) for row in values]
    logger.debug(f"Read {len(records)} hauls with {len(categories)} categories from {path}")
    return HaulDataset(records=records, K=len(categories), T=T, J=J, category_names=categories)


def write_hauls(dataset, path):
    _ensure_directory(path)
    frame = pd.DataFrame(dataset.counts, columns=dataset.category_names)
    frame.insert(0, 'quarter', dataset.quarters)
    frame.insert(0, 'obs', [record.obs_index for record in dataset.records])
    frame.insert(0, 'trip', dataset.trips)
    frame.to_csv(path, index=False)


def write_series(times, values, path):
    _ensure_directory(path)
    pd.DataFrame({'time': times, 'value': values}).to_csv(path, index=False)


def read_series(path):
    """
    :returns: (times, values)
    """
    frame = _read_frame(path, SERIES_COLUMNS)
    return frame['time'].to_numpy(dtype=float), frame['value'].to_numpy(dtype=float)


# Sample archives

def _npy_bytes(array):
    buffer = io.BytesIO()
    np.lib.format.write_array(buffer, np.ascontiguousarray(array), allow_pickle=False)
    return buffer.getvalue()


def _write_member(archive_file, name, payload):
    info = zipfile.ZipInfo(name, date_time=ZIP_DATE_TIME)
    info.compress_type = zipfile.ZIP_DEFLATED
    info.external_attr = 0o644 << 16
    archive_file.writestr(info, payload)


def save_archive(archive, path):
    """
    Write a SampleArchive as a zip file holding header.json, with the
    variant, branch, parameter blocks (name: [offset, shape]), seed and
    sampler settings, and one .npy member per array.
    """
    _ensure_directory(path)
    header = {'variant': archive.variant,
              'branch': archive.branch,
              'blocks': archive.blocks,
              'seed': archive.seed,
              'config': archive.config,
              'arrays': [name for name in ARCHIVE_ARRAYS if getattr(archive, name) is not None]}
    with zipfile.ZipFile(path, 'w') as archive_file:
        _write_member(archive_file, 'header.json',
                      json.dumps(header, sort_keys=True, indent=2, default=str))
        for name in header['arrays']:
            _write_member(archive_file, f'{name}.npy', _npy_bytes(getattr(archive, name)))
    logger.debug(f"Saved archive {archive.branch}/{archive.variant} to {path}")


def load_archive(path):
    try:
        with zipfile.ZipFile(path) as archive_file:
            header = json.loads(archive_file.read('header.json'))
            arrays = {name: np.lib.format.read_array(io.BytesIO(archive_file.read(f'{name}.npy')),
                                                     allow_pickle=False)
                      for name in header['arrays']}
    except (zipfile.BadZipFile, KeyError) as err:
        raise DataFormatError(None, f"'{path}' is not a zaniwave archive: {err}")
    blocks = {name: [offset, tuple(shape)] for name, (offset, shape) in header['blocks'].items()}
    return SampleArchive(variant=header['variant'], branch=header['branch'], blocks=blocks,
                         seed=header['seed'], config=header['config'], **arrays)


# Tabular outputs

def _read_frame(path, columns):
    try:
        frame = pd.read_csv(path)
    except pd.errors.EmptyDataError:
        raise DataFormatError(None, f"The file '{path}' is empty")
    missing = [column for column in columns if column not in frame.columns]
    if missing:
        raise DataFormatError(1, f"'{path}' lacks the columns {missing}")
    return frame


def write_waic_table(table, path):
    _ensure_directory(path)
    table.to_csv(path, index=True, index_label='branch')


def read_waic_table(path):
    frame = _read_frame(path, ['branch'])
    return frame.set_index('branch')


def write_frame(frame, path):
    """
    Write a plot-ready table (fitted bands, empirical proportions, smoother
    curves, holdout predictions) without its index.
    """
    _ensure_directory(path)
    frame.to_csv(path, index=False)


def read_frame(path, columns=()):
    return _read_frame(path, list(columns))


def read_holdout(path):
    return _read_frame(path, HOLDOUT_COLUMNS)


def read_bands(path):
    return _read_frame(path, BAND_COLUMNS)


def write_transform_summary(summary, path):
    _ensure_directory(path)
    pd.DataFrame({'level': summary.level,
                  'block_start': summary.block_start,
                  'block_end': summary.block_end,
                  'draw_id': summary.draw_id,
                  'magnitude': summary.magnitude}).to_csv(path, index=False)


def read_transform_summary(path):
    frame = _read_frame(path, TRANSFORM_COLUMNS)
    if (frame['draw_id'] < 0).any():
        raise ValidationError("draw_id must be non-negative")
    return WaveletTransformSummary(level=frame['level'].to_numpy(dtype=np.int64),
                                   block_start=frame['block_start'].to_numpy(dtype=float),
                                   block_end=frame['block_end'].to_numpy(dtype=float),
                                   draw_id=frame['draw_id'].to_numpy(dtype=np.int64),
                                   magnitude=frame['magnitude'].to_numpy(dtype=float))
