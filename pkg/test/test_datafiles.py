from zaniwave import datafiles, evaluation, sampler, wavelets
from zaniwave.errors import DataFormatError, ValidationError
from zaniwave.objects import SamplerConfig

from test.fixtures.targets import GaussianTarget, handmade_dataset

import numpy as np
import pandas as pd
import pytest


HAULS = """trip,obs,quarter,cod,haddock,plaice
1,1,1,3,0,2
1,2,1,0,0,0
2,1,3,5,1,0
"""


def write(tmp_path, text, name='hauls.csv'):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_read_hauls(tmp_path):
    dataset = datafiles.read_hauls(write(tmp_path, HAULS))
    assert dataset.K == 3
    assert dataset.T == 3
    assert dataset.J == 2
    assert dataset.category_names == ['cod', 'haddock', 'plaice']
    assert dataset.counts.tolist() == [[3, 0, 2], [0, 0, 0], [5, 1, 0]]
    assert dataset.totals.tolist() == [5, 0, 6]
    wider = datafiles.read_hauls(write(tmp_path, HAULS), T=8, J=4)
    assert (wider.T, wider.J) == (8, 4)


def test_haul_round_trip(tmp_path):
    dataset = handmade_dataset()
    path = str(tmp_path / 'out' / 'hauls.csv')
    datafiles.write_hauls(dataset, path)
    again = datafiles.read_hauls(path, T=dataset.T, J=dataset.J)
    assert np.array_equal(again.counts, dataset.counts)
    assert again.quarters.tolist() == dataset.quarters.tolist()
    assert again.category_names == dataset.category_names


@pytest.mark.parametrize('text, line', [
    ("trip,obs,quarter,a,b\n1,1,1,2,3\n1,2,1,x,3\n", 3),
    ("trip,obs,quarter,a,b\n1,1,1,2,3\n1,2,1,2,3\n1,3,1,2.5,1\n", 4),
    ("trip,obs,quarter,a,b\n1,1,1,-2,3\n", 2),
    ("trip,obs,quarter,a,b\n0,1,1,2,3\n", 2),
    ("trip,obs,time,a,b\n1,1,1,2,3\n", 1),
    ("trip,obs,quarter,a\n1,1,1,2\n", 1),
    ("trip,obs,quarter,a,a\n1,1,1,2,2\n", 1),
])
def test_read_hauls_reports_the_line(tmp_path, text, line):
    with pytest.raises(DataFormatError) as err:
        datafiles.read_hauls(write(tmp_path, text))
    assert err.value.line == line
    assert str(err.value).startswith(f"Line {line}:")


def test_read_hauls_checks_declared_ranges(tmp_path):
    with pytest.raises(DataFormatError) as err:
        datafiles.read_hauls(write(tmp_path, HAULS), T=2)
    assert err.value.line == 4
    with pytest.raises(DataFormatError) as err:
        datafiles.read_hauls(write(tmp_path, HAULS), J=1)
    assert err.value.line == 4


def test_read_hauls_empty(tmp_path):
    with pytest.raises(DataFormatError):
        datafiles.read_hauls(write(tmp_path, ""))
    with pytest.raises(DataFormatError):
        datafiles.read_hauls(write(tmp_path, "trip,obs,quarter,a,b\n"))


@pytest.fixture
def archive():
    config = SamplerConfig(iterations=40, warmup=20, chains=2, seed=3)
    return sampler.run(GaussianTarget([0.0, 1.0]), config)


def test_archive_round_trip(tmp_path, archive):
    path = str(tmp_path / 'archives' / 'fit.zip')
    datafiles.save_archive(archive, path)
    loaded = datafiles.load_archive(path)
    for name in datafiles.ARCHIVE_ARRAYS:
        assert np.array_equal(getattr(loaded, name), getattr(archive, name), equal_nan=True)
    assert loaded.variant == archive.variant
    assert loaded.branch == archive.branch
    assert loaded.seed == archive.seed
    assert loaded.config == archive.config
    assert np.array_equal(loaded.block('x'), archive.block('x'))


def test_archive_bytes_are_reproducible(tmp_path, archive):
    first, second = str(tmp_path / 'a.zip'), str(tmp_path / 'b.zip')
    datafiles.save_archive(archive, first)
    datafiles.save_archive(archive, second)
    with open(first, 'rb') as a, open(second, 'rb') as b:
        assert a.read() == b.read()


def test_load_archive_rejects_other_files(tmp_path):
    with pytest.raises(DataFormatError):
        datafiles.load_archive(write(tmp_path, "not a zip", name='fit.zip'))


def test_waic_table_round_trip(tmp_path):
    table = evaluation.waic_table({('a', 'W-B'): 1.5, ('b', 'W-B'): 2.5}, ['a', 'b'])
    path = str(tmp_path / 'waic_table.csv')
    datafiles.write_waic_table(table, path)
    again = datafiles.read_waic_table(path)
    assert list(again.index) == ['a', 'b', 'Total']
    assert again.loc['Total', 'W-B'] == 4.0


def test_transform_summary_round_trip(tmp_path):
    basis = wavelets.build_basis(3)
    interpolation = wavelets.build_interpolation(np.arange(1, 9), basis)
    summary = wavelets.transform_summary(np.random.default_rng(0).normal(size=(5, 8)), basis,
                                         interpolation, n_draws=2)
    path = str(tmp_path / 'transform.csv')
    datafiles.write_transform_summary(summary, path)
    again = datafiles.read_transform_summary(path)
    assert np.array_equal(again.level, summary.level)
    assert np.array_equal(again.draw_id, summary.draw_id)
    assert np.allclose(again.magnitude, summary.magnitude)
    assert list(pd.read_csv(path).columns) == datafiles.TRANSFORM_COLUMNS


def test_transform_summary_rejects(tmp_path):
    with pytest.raises(DataFormatError):
        datafiles.read_transform_summary(write(tmp_path, "level,magnitude\n0,1.0\n"))
    bad = "level,block_start,block_end,draw_id,magnitude\n0,0,1,-1,0.5\n"
    with pytest.raises(ValidationError):
        datafiles.read_transform_summary(write(tmp_path, bad))


def test_series_round_trip(tmp_path):
    times = np.arange(16) / 16
    values = np.cos(times)
    path = str(tmp_path / 'series.csv')
    datafiles.write_series(times, values, path)
    again_times, again_values = datafiles.read_series(path)
    assert np.allclose(again_times, times)
    assert np.allclose(again_values, values)
