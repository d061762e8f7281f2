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

from zaniwave.enums import EXIT_CODE


class ZaniwaveError(Exception):
    """
    Base class for every error raised by zaniwave. The exit_code is what the
    command line tool returns when the error reaches it.
    """
    def __init__(self, description=None):
        super().__init__(description)
        self.exit_code = EXIT_CODE.VALIDATION
        self.description = description


class ValidationError(ZaniwaveError, ValueError):
    def __init__(self, description='INVALID INPUT'):
        super().__init__(description)
        self.exit_code = EXIT_CODE.VALIDATION


class NestingError(ValidationError):
    def __init__(self, node=None, description='INVALID NESTING'):
        if node is not None:
            description = f"Nesting node '{node}': {description}"
        super().__init__(description)
        self.node = node


class DataFormatError(ValidationError):
    def __init__(self, line=None, description='MALFORMED DATA'):
        if line is not None:
            description = f"Line {line}: {description}"
        super().__init__(description)
        self.line = line


class DomainError(ValidationError):
    def __init__(self, description='VALUE OUTSIDE DOMAIN'):
        super().__init__(description)


class ShapeError(ValidationError):
    def __init__(self, description='SHAPE MISMATCH'):
        super().__init__(description)


class SamplerError(ZaniwaveError, RuntimeError):
    def __init__(self, description='SAMPLER FAILURE'):
        super().__init__(description)
        self.exit_code = EXIT_CODE.SAMPLER


class NonFiniteDensityError(SamplerError):
    def __init__(self, term=None, description='NON-FINITE LOG DENSITY'):
        if term is not None:
            description = f"{description} in term '{term}'"
        super().__init__(description)
        self.term = term


class PartialCompletion(ZaniwaveError):
    """
    Raised by the pipeline when some (branch, variant) fits failed while
    others completed. The completed results are available on the exception.
    """
    def __init__(self, failures=None, bundle=None, description='PARTIAL COMPLETION'):
        failures = failures or {}
        if failures:
            failed = ", ".join(f"{branch}/{variant}" for branch, variant in failures)
            description = f"{description}: {failed}"
        super().__init__(description)
        self.exit_code = EXIT_CODE.PARTIAL
        self.failures = failures
        self.bundle = bundle
