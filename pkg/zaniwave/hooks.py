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

import logging

from zaniwave import enums, utils
from zaniwave.errors import ValidationError

logger = logging.getLogger('zaniwave')

HOOKS = {hook_point: [] for hook_point in enums.HOOK_POINT.values}


def register(hook_point, callback):
    """
    Register a callback for a hook point. Callbacks may be plain functions
    or coroutine functions.

    before_fit gets (config, tree); after_branch gets (branch, variant,
    archive, waic_result) after every fit, or (branch, variant, None, error)
    when the fit failed; after_fit gets the finished bundle.
    """
    if hook_point not in HOOKS:
        raise ValidationError(f"The hook_point must be one of '{', '.join(HOOKS.keys())}', "
                              f"you provided '{hook_point}'")
    HOOKS[hook_point].append(callback)


def clear(hook_point=None):
    for point in ([hook_point] if hook_point else HOOKS):
        HOOKS[point].clear()


async def call(hook_point, *args, **kwargs):
    for hook in HOOKS.get(hook_point, []):
        try:
            await utils.await_if_required(hook(*args, **kwargs))
        except Exception as err:
            logger.warning(f"The {hook_point} hook {getattr(hook, '__name__', hook)} "
                           f"raised {err.__class__.__name__}: {err}")
