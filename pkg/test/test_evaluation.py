from zaniwave import counts, enums, evaluation, wavelets
from zaniwave.errors import ValidationError
from zaniwave.objects import BranchDataset, HaulDataset, HaulRecord, SampleArchive, WaicResult
from zaniwave.posterior import BranchPosterior

from test.fixtures.targets import two_category_dataset

import logging

import numpy as np
import pandas as pd
import pytest


def test_waic_by_hand():
    loglik = np.log(np.array([[0.2, 0.5, 0.9],
                              [0.4, 0.5, 0.7],
                              [0.3, 0.6, 0.8]]))
    result = evaluation.waic(loglik)
    lpd = np.log(np.exp(loglik).mean(axis=0))
    variance = loglik.var(axis=0, ddof=1)
    assert result.lpd_hat == pytest.approx(np.sum(lpd))
    assert result.p_waic == pytest.approx(np.sum(variance))
    assert result.waic == pytest.approx(-2 * np.sum(lpd) + 2 * np.sum(variance))
    assert np.sum(result.pointwise) == pytest.approx(result.waic)


def test_waic_of_identical_draws_has_no_penalty():
    result = evaluation.waic(np.full((50, 4), -1.5))
    assert result.p_waic == 0.0
    assert result.waic == pytest.approx(12.0)


@pytest.mark.parametrize('loglik', [np.zeros((1, 3)), np.zeros((2, 3, 1)),
                                    np.array([[0.0, -np.inf], [0.0, -1.0]])])
def test_waic_rejects(loglik):
    with pytest.raises(ValidationError):
        evaluation.waic(loglik)


def test_waic_table_totals_and_multinomial():
    results = {('a', 'CM-B'): 10.0, ('b', 'CM-B'): 5.0,
               ('a', 'W-B'): 8.0, ('b', 'W-B'): WaicResult(4.0, 0.0, 0.0, np.zeros(1), np.zeros(1)),
               (None, 'multinomial'): 30.0}
    table = evaluation.waic_table(results, ['a', 'b'])
    assert list(table.columns) == ['CM-B', 'W-B', 'multinomial']
    assert list(table.index) == ['a', 'b', evaluation.TOTAL]
    assert table.loc[evaluation.TOTAL, 'CM-B'] == 15.0
    assert table.loc[evaluation.TOTAL, 'W-B'] == 12.0
    assert table.loc[evaluation.TOTAL, 'multinomial'] == 30.0
    assert table['multinomial'].iloc[:2].isna().all()


def test_waic_table_missing_entries_propagate():
    table = evaluation.waic_table({('a', 'W-B'): 1.0}, ['a', 'b'], variants=['W-B', 'W-ZI-B'])
    assert np.isnan(table.loc['b', 'W-B'])
    assert np.isnan(table.loc[evaluation.TOTAL, 'W-B'])
    assert table['W-ZI-B'].isna().all()


def dataset_with_quarters(quarters):
    records = [HaulRecord(trip_id=1, obs_index=i + 1, quarter=q, counts=[1, 1])
               for i, q in enumerate(quarters)]
    return HaulDataset(records=records, K=2, T=max(quarters), J=1)


def test_make_holdout_keeps_a_record_per_time_point():
    dataset = dataset_with_quarters([1, 1, 1, 2, 3, 3, 4, 4, 4, 4] * 3)
    split = evaluation.make_holdout(dataset, fraction=0.2, seed=7)
    assert len(split.test) == 6
    assert len(np.intersect1d(split.train, split.test)) == 0
    assert len(split.train) + len(split.test) == dataset.M
    train_quarters = set(dataset.quarters[split.train])
    assert train_quarters == {1, 2, 3, 4}
    again = evaluation.make_holdout(dataset, fraction=0.2, seed=7)
    assert np.array_equal(split.test, again.test)


def test_make_holdout_when_too_few_records(caplog):
    dataset = dataset_with_quarters([1, 1, 2, 3])
    with caplog.at_level(logging.WARNING, logger='zaniwave'):
        split = evaluation.make_holdout(dataset, fraction=0.75, seed=1)
    assert len(split.test) == 1
    assert "could be held out" in caplog.text
    with pytest.raises(ValidationError):
        evaluation.make_holdout(dataset_with_quarters([1, 2, 3]), fraction=0.5)
    with pytest.raises(ValidationError):
        evaluation.make_holdout(dataset, fraction=1.0)


def fixed_archive(posterior, values, variant, draws=2000):
    params = posterior.layout.pack(values)
    return SampleArchive(variant=variant, branch=posterior.label, blocks=posterior.layout.to_header(),
                         draws=np.tile(params, (1, draws, 1)),
                         loglik=np.zeros((1, draws, posterior.M)),
                         accept_stat=np.ones((1, draws)), divergences=np.zeros(1),
                         step_size=np.ones(1), depth_hits=np.zeros(1), rhat=np.full(len(params), np.nan))


def zero_values(posterior):
    return {name: np.zeros(shape) for name, shape in posterior.layout}


def test_predict_holdout_at_known_parameters():
    dataset, tree = two_category_dataset()
    basis = wavelets.build_basis(3)
    interpolation = wavelets.build_interpolation(np.arange(1, 9), basis)
    branch = counts.aggregate_branch(dataset, tree.root)
    posterior = BranchPosterior(branch, enums.VARIANT.W_B, basis, interpolation)
    values = zero_values(posterior)
    values['log_sigma'] = np.array([-10.0])
    archive = fixed_archive(posterior, values, enums.VARIANT.W_B)
    test = BranchDataset('root', y=[5, 0, 40], n=[10, 0, 40], time_index=[0, 3, 7],
                         trip_index=[0, 0, 0], T=8, J=6)
    frame = evaluation.predict_holdout(archive, posterior, test, record_ids=[11, 12, 13], seed=3)
    assert frame['record_id'].tolist() == [11, 12, 13]
    assert frame['median'].tolist() == [5.0, 0.0, 20.0]
    assert frame.loc[0, 'lo95'] >= 1 and frame.loc[0, 'hi95'] <= 9
    assert frame.loc[1, 'hi95'] == 0
    assert frame['sqrt_median'].tolist() == pytest.approx([np.sqrt(5), 0.0, np.sqrt(20)])
    assert evaluation.interval_coverage(frame) == pytest.approx(2 / 3)


def test_predict_holdout_with_inflation():
    dataset, tree = two_category_dataset()
    basis = wavelets.build_basis(3)
    interpolation = wavelets.build_interpolation(np.arange(1, 9), basis)
    branch = counts.aggregate_branch(dataset, tree.root)
    posterior = BranchPosterior(branch, enums.VARIANT.W_ZI_B, basis, interpolation)
    values = zero_values(posterior)
    values['lambda0'] = np.array([50.0])
    archive = fixed_archive(posterior, values, enums.VARIANT.W_ZI_B)
    test = BranchDataset('root', y=[0, 3], n=[30, 30], time_index=[0, 1], trip_index=[0, 0], T=8, J=6)
    frame = evaluation.predict_holdout(archive, posterior, test, include_overdispersion=False, seed=0)
    assert frame['hi95'].tolist() == [0.0, 0.0]


def test_predict_holdout_rejects():
    dataset, tree = two_category_dataset()
    basis = wavelets.build_basis(3)
    interpolation = wavelets.build_interpolation(np.arange(1, 9), basis)
    posterior = BranchPosterior(dataset, enums.VARIANT.MULTINOMIAL, basis, interpolation)
    archive = fixed_archive(posterior, zero_values(posterior), enums.VARIANT.MULTINOMIAL)
    test = BranchDataset('root', y=[0], n=[1], time_index=[0], trip_index=[0], T=8, J=6)
    with pytest.raises(ValidationError):
        evaluation.predict_holdout(archive, posterior, test)


def test_interval_coverage_of_empty_frame():
    frame = pd.DataFrame(columns=['observed', 'lo95', 'hi95'])
    assert np.isnan(evaluation.interval_coverage(frame))
