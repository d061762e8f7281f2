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
A collection of enumerations that name the model variants, sampler
algorithms and exit codes used throughout zaniwave.
"""


class Enum(type):
    def __getitem__(self, item):
        return getattr(self, item)

    @property
    def members(self):
        return sorted([item for item in list(set(dir(self)) - set(dir(Enum)))
                       if not item.startswith("_")])

    @property
    def values(self):
        return [self[item] for item in self.members]


class VARIANT(metaclass=Enum):
    CM_B = "CM-B"
    W_B = "W-B"
    W_ZI_B = "W-ZI-B"
    W_ZANI_B = "W-ZaNI-B"
    MULTINOMIAL = "multinomial"


class ALGORITHM(metaclass=Enum):
    NUTS = "nuts"
    HMC = "hmc"


class MARGIN(metaclass=Enum):
    PERIODIC = "periodic"
    ZERO = "zero"


class HOOK_POINT(metaclass=Enum):
    BEFORE_FIT = "before_fit"
    AFTER_BRANCH = "after_branch"
    AFTER_FIT = "after_fit"


class EXIT_CODE(metaclass=Enum):
    SUCCESS = 0
    VALIDATION = 1
    SAMPLER = 2
    PARTIAL = 3


# Simplest to richest; later variants are warm-started from earlier ones.
NESTED_VARIANTS = [VARIANT.CM_B, VARIANT.W_B, VARIANT.W_ZI_B, VARIANT.W_ZANI_B]

# Display order for tables.
ALL_VARIANTS = NESTED_VARIANTS + [VARIANT.MULTINOMIAL]
