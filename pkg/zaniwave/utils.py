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
Seeding and coroutine helpers shared by the sampler, the holdout split and the
pipeline.
"""

import asyncio
import logging
import zlib

import numpy as np

logger = logging.getLogger('zaniwave')


def child_seed(seed, *keys):
    """
    Derive an independent SeedSequence from a master seed and any number of
    string or integer keys, for example a branch label and a variant name.
    """
    spawn_key = tuple(key if isinstance(key, int) else zlib.crc32(str(key).encode('utf-8'))
                      for key in keys)
    return np.random.SeedSequence(entropy=seed, spawn_key=spawn_key)


def spawn_generators(seed, count):
    """
    Return `count` independent generators derived from a single seed, which
    may be an integer, None or a SeedSequence.
    """
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in seed.spawn(count)]


def seed_value(seed):
    """
    Return an integer that reproduces the given seed, for recording in outputs.
    """
    if isinstance(seed, np.random.SeedSequence):
        return int(seed.generate_state(1)[0])
    return seed


async def await_if_required(result):
    if asyncio.iscoroutine(result):
        result = await result
    return result
