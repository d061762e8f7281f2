from zaniwave import enums
from zaniwave.errors import ValidationError
from zaniwave.objects import RunConfig, SamplerConfig
from zaniwave.preflight import preflight_config

import logging

import pytest


def test_duplicate_variants_are_removed(caplog):
    payload = {'variants': ['CM-B', 'W-B', 'CM-B']}
    with caplog.at_level(logging.WARNING, logger='zaniwave'):
        checked = preflight_config('run_config', payload)
    assert checked['variants'] == ['CM-B', 'W-B']
    assert payload['variants'] == ['CM-B', 'W-B', 'CM-B']
    assert "contains duplicates" in caplog.text


@pytest.mark.parametrize('payload', [{'variants': ['W-Q-B']},
                                     {'variants': []},
                                     {'holdout': {'fraction': 1.5}},
                                     {'bandwidth': 0},
                                     {'sampler': {'iterations': 100, 'warmup': 100}},
                                     {'sampler': {'chains': 0}}])
def test_run_config_errors(payload):
    with pytest.raises(ValidationError):
        preflight_config('run_config', payload)


def test_warm_start_chain_is_ordered(caplog):
    payload = {'warm_start': ['W-ZaNI-B', 'CM-B', 'multinomial', 'W-B']}
    with caplog.at_level(logging.WARNING, logger='zaniwave'):
        checked = preflight_config('run_config', payload)
    assert checked['warm_start'] == ['CM-B', 'W-B', 'W-ZaNI-B']
    assert "Only the nested variants" in caplog.text
    assert "not ordered" in caplog.text


def test_parallel_disables_warm_starts(caplog):
    with caplog.at_level(logging.WARNING, logger='zaniwave'):
        checked = preflight_config('run_config', {'parallel': True})
    assert checked['use_warm_starts'] is False
    assert "disables warm starts" in caplog.text
    quiet = preflight_config('run_config', {'parallel': True, 'use_warm_starts': False})
    assert quiet['use_warm_starts'] is False


def test_sampler_corrections(caplog):
    with caplog.at_level(logging.WARNING, logger='zaniwave'):
        checked = preflight_config('sampler_config', {'thinning': 0, 'algorithm': 'NUTS'})
    assert checked['thinning'] == 1
    assert checked['algorithm'] == enums.ALGORITHM.NUTS
    assert "Changing to 1" in caplog.text
    SamplerConfig(**checked)


def test_nested_sampler_payload_is_checked_and_copied():
    payload = {'sampler': {'thinning': -2}}
    checked = preflight_config('run_config', payload)
    assert checked['sampler']['thinning'] == 1
    assert payload['sampler']['thinning'] == -2


def test_dataclass_payload():
    config = RunConfig(variants=['W-B', 'W-B'])
    checked = preflight_config('run_config', config)
    assert checked['variants'] == ['W-B']
    assert RunConfig.from_dict(checked).variants == ['W-B']


def test_unknown_config_type_passes_through():
    assert preflight_config('something_else', {'a': 1}) == {'a': 1}


def test_thinning_that_does_not_divide_is_rejected():
    with pytest.raises(ValidationError):
        preflight_config('sampler_config', {'iterations': 100, 'warmup': 50, 'thinning': 3})
    with pytest.raises(ValidationError):
        preflight_config('run_config', {'sampler': {'thinning': 3}})
    checked = preflight_config('sampler_config', {'iterations': 100, 'warmup': 40, 'thinning': 3})
    assert SamplerConfig(**checked).retained == 20
