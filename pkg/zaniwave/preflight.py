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


from dataclasses import asdict, is_dataclass
import logging

from zaniwave import enums
from zaniwave.errors import ValidationError
from zaniwave.objects import SamplerConfig

logger = logging.getLogger('zaniwave')


def preflight_config(config_type, payload):
    """
    Tests a configuration before it is used. It will correct benign errors
    and warn you about them. Uncorrectable errors will raise a
    ValidationError. A copy of the payload is returned; the original is left
    alone.

    :param str config_type: The type of configuration, 'run_config' or
                            'sampler_config'.
    :param dict payload: The configuration, as a dict or a dataclass.
    """
    payload = asdict(payload) if is_dataclass(payload) else dict(payload)
    for key, value in payload.items():
        if isinstance(value, dict):
            payload[key] = dict(value)
        elif is_dataclass(value):
            payload[key] = asdict(value)
    if f'_preflight_{config_type}' in globals():
        globals()[f'_preflight_{config_type}'](payload)
    return payload


def _preflight_run_config(payload):
    # Check that every variant is requested once
    variants = payload.get('variants')
    if variants is not None:
        unknown = [variant for variant in variants if variant not in enums.VARIANT.values]
        if unknown:
            raise ValidationError(f"Unknown variants {unknown}, use any of {enums.VARIANT.values}")
        unique = list(dict.fromkeys(variants))
        if len(unique) != len(variants):
            logger.warning(f"The variant list {variants} contains duplicates. "
                           f"Using {unique} instead.")
            payload['variants'] = unique
        if not unique:
            raise ValidationError("The variant list must not be empty")

    # Check that the warm-start chain runs from simpler to richer nested variants
    warm_start = payload.get('warm_start')
    if warm_start is not None:
        nested = [variant for variant in warm_start if variant in enums.NESTED_VARIANTS]
        if len(nested) != len(warm_start):
            logger.warning("Only the nested variants can be warm-started; "
                           f"dropping {[v for v in warm_start if v not in nested]} from the chain.")
        ordered = sorted(set(nested), key=enums.NESTED_VARIANTS.index)
        if ordered != nested:
            logger.warning(f"The warm-start chain {nested} is not ordered from simple to rich. "
                           f"Using {ordered} instead.")
        payload['warm_start'] = ordered

    # Warm starts pass values from one fit to the next, so they need sequential fits
    if payload.get('parallel') and payload.get('use_warm_starts', True):
        logger.warning("Parallel fitting disables warm starts; "
                       "every fit will start from its own random point.")
        payload['use_warm_starts'] = False

    holdout = payload.get('holdout')
    if isinstance(holdout, dict) and 'fraction' in holdout:
        if not 0 < holdout['fraction'] < 1:
            raise ValidationError(f"The holdout fraction must lie in (0, 1), "
                                  f"got {holdout['fraction']}")

    if payload.get('bandwidth') is not None and payload['bandwidth'] <= 0:
        raise ValidationError(f"The smoother bandwidth must be positive, got {payload['bandwidth']}")

    if isinstance(payload.get('sampler'), dict):
        _preflight_sampler_config(payload['sampler'])


def _preflight_sampler_config(payload):
    # Check that thinning keeps at least every draw
    if 'thinning' in payload and payload['thinning'] < 1:
        logger.warning(f"thinning must be at least 1, not {payload['thinning']}. "
                       "Changing to 1.")
        payload['thinning'] = 1

    if isinstance(payload.get('algorithm'), str) \
            and payload['algorithm'].lower() in enums.ALGORITHM.values \
            and payload['algorithm'] != payload['algorithm'].lower():
        logger.warning(f"The algorithm should be written '{payload['algorithm'].lower()}'.")
        payload['algorithm'] = payload['algorithm'].lower()

    iterations = payload.get('iterations')
    warmup = payload.get('warmup')
    if iterations is not None and warmup is not None and warmup >= iterations:
        raise ValidationError(f"warmup ({warmup}) must be smaller than iterations ({iterations}), "
                              "otherwise no draws are retained.")
    if payload.get('chains') is not None and payload['chains'] < 1:
        raise ValidationError(f"At least one chain is required, got {payload['chains']}")
    thinning = payload.get('thinning') or SamplerConfig.thinning
    kept = (SamplerConfig.iterations if iterations is None else iterations) - \
        (SamplerConfig.warmup if warmup is None else warmup)
    if kept > 0 and kept % thinning:
        raise ValidationError(f"thinning ({thinning}) must divide the {kept} post-warmup iterations")
