from zaniwave import enums, errors
import pytest


def test_exit_codes():
    assert errors.ValidationError().exit_code == enums.EXIT_CODE.VALIDATION == 1
    assert errors.NestingError('root').exit_code == 1
    assert errors.DataFormatError(3).exit_code == 1
    assert errors.SamplerError().exit_code == enums.EXIT_CODE.SAMPLER == 2
    assert errors.NonFiniteDensityError('lambda').exit_code == 2
    assert errors.PartialCompletion().exit_code == enums.EXIT_CODE.PARTIAL == 3


def test_descriptions_name_the_culprit():
    err = errors.NestingError('Dab vs Plaice', "categories [5] appear in both children")
    assert str(err) == "Nesting node 'Dab vs Plaice': categories [5] appear in both children"
    assert err.node == 'Dab vs Plaice'
    assert str(errors.DataFormatError(7, "Counts must be non-negative")) == \
        "Line 7: Counts must be non-negative"
    assert errors.NonFiniteDensityError('shrinkage').term == 'shrinkage'
    assert 'shrinkage' in str(errors.NonFiniteDensityError('shrinkage'))


def test_partial_completion_lists_failures():
    err = errors.PartialCompletion({('root', 'W-ZaNI-B'): ValueError('boom')}, bundle='bundle')
    assert 'root/W-ZaNI-B' in err.description
    assert err.bundle == 'bundle'


def test_validation_errors_are_value_errors():
    with pytest.raises(ValueError):
        raise errors.DomainError("p must lie strictly inside (0, 1)")
    with pytest.raises(RuntimeError):
        raise errors.SamplerError()
