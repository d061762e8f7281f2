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

import json
import os
from dataclasses import dataclass, field, asdict
from typing import List, Dict, Tuple

import numpy as np

from zaniwave import enums
from zaniwave.errors import ValidationError, DomainError, NestingError, ShapeError


@dataclass
class HaulRecord:
    """
    One haul: the per-category counts for observation obs_index of trip
    trip_id, made in time unit quarter. Identifiers are 1-based.
    """
    trip_id: int
    obs_index: int
    quarter: int
    counts: np.ndarray
    total: int = None

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.ndim != 1:
            raise ShapeError("The counts of a haul must be a one-dimensional vector")
        if np.any(self.counts < 0):
            raise DomainError(f"Counts must be non-negative, got {self.counts.tolist()}")
        if self.total is None:
            self.total = int(self.counts.sum())
        elif self.total != int(self.counts.sum()):
            raise ValidationError(f"The total {self.total} does not equal the sum of "
                                  f"the counts {int(self.counts.sum())}")


@dataclass
class HaulDataset:
    records: List[HaulRecord]
    K: int
    T: int
    J: int
    category_names: List[str] = None

    def __post_init__(self):
        if self.category_names is None:
            self.category_names = [f"category_{k + 1}" for k in range(self.K)]
        if len(self.category_names) != self.K:
            raise ValidationError(f"Expected {self.K} category names, got {len(self.category_names)}")
        for record in self.records:
            if len(record.counts) != self.K:
                raise ShapeError(f"Record of trip {record.trip_id} has {len(record.counts)} "
                                 f"counts, expected {self.K}")
            if not 1 <= record.quarter <= self.T:
                raise DomainError(f"Time unit {record.quarter} is outside the span 1..{self.T}")
            if not 1 <= record.trip_id <= self.J:
                raise DomainError(f"Trip {record.trip_id} is outside the range 1..{self.J}")

    @property
    def M(self):
        return len(self.records)

    @property
    def counts(self):
        if not self.records:
            return np.zeros((0, self.K), dtype=np.int64)
        return np.vstack([record.counts for record in self.records])

    @property
    def totals(self):
        return np.array([record.total for record in self.records], dtype=np.int64)

    @property
    def quarters(self):
        return np.array([record.quarter for record in self.records], dtype=np.int64)

    @property
    def trips(self):
        return np.array([record.trip_id for record in self.records], dtype=np.int64)

    def subset(self, indices):
        """
        Return a dataset with only the records at the given positions. The
        declared span, trip count and categories are kept.
        """
        return HaulDataset(records=[self.records[i] for i in indices],
                           K=self.K, T=self.T, J=self.J,
                           category_names=list(self.category_names))


@dataclass
class NestingNode:
    """
    An internal node of the nesting tree. Category sets hold 0-based indices.
    """
    label: str
    member_set: Tuple[int, ...]
    left_set: Tuple[int, ...]
    right_set: Tuple[int, ...]

    def __post_init__(self):
        self.member_set = tuple(sorted(self.member_set))
        self.left_set = tuple(sorted(self.left_set))
        self.right_set = tuple(sorted(self.right_set))
        if not self.left_set or not self.right_set:
            raise NestingError(self.label, "both children need at least one category")
        if set(self.left_set) & set(self.right_set):
            overlap = sorted(set(self.left_set) & set(self.right_set))
            raise NestingError(self.label, f"categories {[k + 1 for k in overlap]} appear in both children")
        if set(self.left_set) | set(self.right_set) != set(self.member_set):
            raise NestingError(self.label, "the children do not partition the member set")


@dataclass
class NestingTree:
    """
    Binary partition tree over K categories. Nodes are stored in pre-order,
    the root first.
    """
    nodes: List[NestingNode]
    K: int
    category_names: List[str] = None

    def __post_init__(self):
        if self.category_names is None:
            self.category_names = [f"category_{k + 1}" for k in range(self.K)]
        if self.K < 2:
            raise NestingError(None, "a nesting tree needs at least two categories")
        if len(self.nodes) != self.K - 1:
            raise NestingError(None, f"expected {self.K - 1} internal nodes, got {len(self.nodes)}")
        labels = [node.label for node in self.nodes]
        if len(set(labels)) != len(labels):
            raise NestingError(None, "node labels must be unique")
        root = self.nodes[0]
        if set(root.member_set) != set(range(self.K)):
            missing = sorted(set(range(self.K)) - set(root.member_set))
            raise NestingError(root.label, f"categories {[k + 1 for k in missing]} are missing")

    @property
    def root(self):
        return self.nodes[0]

    @property
    def leaves(self):
        return [(k,) for k in range(self.K)]

    @property
    def branch_labels(self):
        return [node.label for node in self.nodes]

    def node(self, label):
        for node in self.nodes:
            if node.label == label:
                return node
        raise NestingError(label, "no such node in the tree")


@dataclass
class BranchDataset:
    """
    The aggregated (y, n) pairs that one internal node models. Time and trip
    indices are 0-based.
    """
    node_label: str
    y: np.ndarray
    n: np.ndarray
    time_index: np.ndarray
    trip_index: np.ndarray
    T: int
    J: int

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.int64)
        self.n = np.asarray(self.n, dtype=np.int64)
        self.time_index = np.asarray(self.time_index, dtype=np.int64)
        self.trip_index = np.asarray(self.trip_index, dtype=np.int64)
        if not (len(self.y) == len(self.n) == len(self.time_index) == len(self.trip_index)):
            raise ShapeError("The branch arrays must all have one entry per record")
        if np.any(self.y < 0) or np.any(self.y > self.n):
            raise DomainError(f"Branch '{self.node_label}' has counts outside 0..N")

    @property
    def M(self):
        return len(self.y)

    @property
    def flagged(self):
        return self.n == 0

    @property
    def active(self):
        return self.n > 0


@dataclass
class WaveletBasis:
    """
    Orthonormal wavelet basis on a periodic grid of L = 2**D points. Row l of
    W is basis function l; detail_map[l] is 0 for the scaling function and j
    for detail level j.
    """
    D: int
    W: np.ndarray
    detail_map: np.ndarray
    centers: np.ndarray
    filter_name: str = 'sym4'

    @property
    def L(self):
        return 2 ** self.D

    def level_indices(self, level):
        return np.flatnonzero(self.detail_map == level)

    def frequency_window(self, level, cells_per_unit=None):
        """
        The range of frequencies that detail level `level` responds to most
        strongly: [2**(level-2), 2**(level-1)) cycles per grid length.

        With cells_per_unit the window is given in cycles per unit of series
        time instead, for a series placed at that many grid cells per unit.
        """
        units = 1.0 if cells_per_unit is None else self.L / cells_per_unit
        if level == 0:
            return (0.0, 0.5 / units)
        return (2.0 ** (level - 2) / units, 2.0 ** (level - 1) / units)

    def frequency_value(self, level, cells_per_unit=None):
        low, high = self.frequency_window(level, cells_per_unit)
        return (low + high) / 2

    def series_level(self, level, cells_per_unit=None):
        """
        Label of detail level `level` relative to the series: the series level
        j is the detail level whose frequency value is closest to 2**j cycles
        per unit. A series filling the whole grid gets labels one below the
        detail level; a series filling two thirds of it gets labels two below.
        """
        return int(np.rint(np.log2(self.frequency_value(level, cells_per_unit))))


@dataclass
class InterpolationMatrix:
    H: np.ndarray
    times: np.ndarray
    offset: float
    cells_per_unit: float
    span: Tuple[float, float]

    def __post_init__(self):
        if not np.allclose(self.H.sum(axis=1), 1.0):
            raise ValidationError("Every row of an interpolation matrix must sum to 1")

    @property
    def positions(self):
        return self.offset + (np.asarray(self.times, dtype=float) - self.span[0]) * self.cells_per_unit


@dataclass
class WaveletTransformSummary:
    """
    Long-format coefficient magnitudes. draw_id 0 holds the posterior median
    over draws; draw ids 1.. hold individual draw transforms.
    """
    level: np.ndarray
    block_start: np.ndarray
    block_end: np.ndarray
    draw_id: np.ndarray
    magnitude: np.ndarray

    def median(self):
        mask = self.draw_id == 0
        return WaveletTransformSummary(self.level[mask], self.block_start[mask], self.block_end[mask],
                                       self.draw_id[mask], self.magnitude[mask])

    @property
    def n_draws(self):
        return int(self.draw_id.max()) if len(self.draw_id) else 0


@dataclass
class ZaNIParams:
    N: int
    p: float
    lambda0: float = -np.inf
    lambda_n: float = -np.inf

    def __post_init__(self):
        if self.N < 0:
            raise DomainError(f"The number of trials must be non-negative, got {self.N}")
        if not 0 < self.p < 1:
            raise DomainError(f"p must lie strictly inside (0, 1), got {self.p}")


@dataclass
class MixtureWeights:
    q0: float
    qN: float

    @property
    def binomial(self):
        return 1.0 - self.q0 - self.qN


@dataclass
class ShrinkageState:
    """
    delta[0] belongs to the scaling coefficient, delta[j] to detail level j.
    """
    delta: np.ndarray
    phi: float
    alpha1: float
    alpha2: float
    nu: float = 3.0

    def __post_init__(self):
        self.delta = np.asarray(self.delta, dtype=float)

    @property
    def tau(self):
        return np.cumprod(self.delta, axis=-1)


@dataclass
class PriorConfig:
    nu: float = 3.0
    alpha1_bounds: Tuple[float, float] = (0.0, 50.0)
    alpha2_bounds: Tuple[float, float] = (1.0, 50.0)
    half_cauchy_scale: float = 100.0
    lambda_variance: float = 100.0

    def __post_init__(self):
        self.alpha1_bounds = tuple(self.alpha1_bounds)
        self.alpha2_bounds = tuple(self.alpha2_bounds)
        for name in ('alpha1_bounds', 'alpha2_bounds'):
            low, high = getattr(self, name)
            if not low < high:
                raise ValidationError(f"{name} must be an increasing pair, got {(low, high)}")
        if self.nu <= 0 or self.half_cauchy_scale <= 0 or self.lambda_variance <= 0:
            raise ValidationError("nu, half_cauchy_scale and lambda_variance must be positive")


@dataclass
class SamplerConfig:
    iterations: int = 2000
    warmup: int = 1000
    chains: int = 3
    thinning: int = 1
    target_accept: float = 0.8
    max_tree_depth: int = 10
    seed: int = None
    algorithm: str = enums.ALGORITHM.NUTS
    hmc_steps: int = 16
    divergence_threshold: float = 1000.0
    adapt_mass: bool = True
    initial_step: float = None

    def __post_init__(self):
        if self.chains < 1:
            raise ValidationError(f"At least one chain is required, got {self.chains}")
        if not 0 <= self.warmup < self.iterations:
            raise ValidationError(f"warmup ({self.warmup}) must be smaller than "
                                  f"iterations ({self.iterations})")
        if self.thinning < 1:
            raise ValidationError(f"thinning must be at least 1, got {self.thinning}")
        if (self.iterations - self.warmup) % self.thinning:
            raise ValidationError(f"thinning ({self.thinning}) must divide the "
                                  f"{self.iterations - self.warmup} post-warmup iterations")
        if not 0 < self.target_accept < 1:
            raise ValidationError(f"target_accept must lie in (0, 1), got {self.target_accept}")
        if self.max_tree_depth < 0:
            raise ValidationError("max_tree_depth must be non-negative")
        if self.algorithm not in enums.ALGORITHM.values:
            raise ValidationError(f"Unknown algorithm '{self.algorithm}', "
                                  f"use one of {enums.ALGORITHM.values}")

    @property
    def retained(self):
        """Number of retained draws per chain, (iterations - warmup) / thinning."""
        return (self.iterations - self.warmup) // self.thinning


@dataclass
class SampleArchive:
    """
    Post-warmup output of all chains for one (branch, variant) fit. Arrays
    are indexed (chain, draw, ...).
    """
    variant: str
    branch: str
    blocks: Dict[str, Tuple[int, Tuple[int, ...]]]
    draws: np.ndarray
    loglik: np.ndarray
    accept_stat: np.ndarray
    divergences: np.ndarray
    step_size: np.ndarray
    depth_hits: np.ndarray
    rhat: np.ndarray
    energy_error: np.ndarray = None
    seed: int = None
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.draws.ndim != 3 or self.loglik.ndim != 3:
            raise ShapeError("draws and loglik must be (chain, draw, ...) arrays")
        if self.draws.shape[:2] != self.loglik.shape[:2]:
            raise ShapeError("draws and loglik disagree on the number of chains or draws")

    @property
    def chains(self):
        return self.draws.shape[0]

    @property
    def n_draws(self):
        return self.draws.shape[0] * self.draws.shape[1]

    def pooled_draws(self):
        return self.draws.reshape(-1, self.draws.shape[-1])

    def pooled_loglik(self):
        return self.loglik.reshape(-1, self.loglik.shape[-1])

    def block(self, name):
        """
        Return the pooled draws of one named parameter block, shaped
        (draws, *block_shape).
        """
        offset, shape = self.blocks[name]
        size = int(np.prod(shape))
        return self.pooled_draws()[:, offset:offset + size].reshape((-1,) + tuple(shape))

    @property
    def converged(self):
        finite = self.rhat[np.isfinite(self.rhat)]
        return bool(np.all(finite < 1.1))


@dataclass
class WaicResult:
    waic: float
    lpd_hat: float
    p_waic: float
    pointwise_lpd: np.ndarray
    pointwise_p_waic: np.ndarray

    @property
    def pointwise(self):
        return -2 * self.pointwise_lpd + 2 * self.pointwise_p_waic


@dataclass
class HoldoutSplit:
    train: np.ndarray
    test: np.ndarray
    fraction: float
    eligible: np.ndarray
    seed: int = None


@dataclass
class HoldoutConfig:
    enabled: bool = False
    fraction: float = 0.10
    seed: int = None
    include_overdispersion: bool = True

    def __post_init__(self):
        if not 0 < self.fraction < 1:
            raise ValidationError(f"The holdout fraction must lie in (0, 1), got {self.fraction}")


@dataclass
class RunConfig:
    data_path: str = None
    nesting_path: str = None
    variants: List[str] = field(default_factory=lambda: list(enums.ALL_VARIANTS))
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    prior: PriorConfig = field(default_factory=PriorConfig)
    holdout: HoldoutConfig = field(default_factory=HoldoutConfig)
    warm_start: List[str] = field(default_factory=lambda: list(enums.NESTED_VARIANTS))
    use_warm_starts: bool = True
    parallel: bool = False
    output_dir: str = None
    seed: int = None
    levels: int = None
    transform_draws: int = 100
    bandwidth: float = 5.0

    def __post_init__(self):
        if isinstance(self.sampler, dict):
            self.sampler = SamplerConfig(**self.sampler)
        if isinstance(self.prior, dict):
            self.prior = PriorConfig(**self.prior)
        if isinstance(self.holdout, dict):
            self.holdout = HoldoutConfig(**self.holdout)
        if not self.variants:
            raise ValidationError("The variant list must not be empty")
        for variant in self.variants + self.warm_start:
            if variant not in enums.VARIANT.values:
                raise ValidationError(f"Unknown variant '{variant}', use one of {enums.VARIANT.values}")
        for name in ('data_path', 'nesting_path'):
            path = getattr(self, name)
            if path is not None and not os.path.exists(path):
                raise ValidationError(f"The {name.replace('_', ' ')} '{path}' does not exist")
        if self.output_dir is None:
            self.output_dir = os.environ.get('ZANIWAVE_OUTPUT_DIR', 'zaniwave_output')
        if self.seed is not None and self.sampler.seed is None:
            self.sampler.seed = self.seed
        if self.seed is not None and self.holdout.seed is None:
            self.holdout.seed = self.seed

    @classmethod
    def from_dict(cls, values):
        return cls(**values)

    @classmethod
    def load(cls, path):
        with open(path) as file:
            return cls.from_dict(json.load(file))

    def to_dict(self):
        return asdict(self)


@dataclass
class FitBundle:
    """
    Everything fit_all produced. Archives and WAIC results are keyed by
    (branch, variant); the multinomial fit uses (None, 'multinomial').
    inflation holds the share of active records at 0 or n per branch.
    """
    output_dir: str
    tree: NestingTree
    archives: Dict[Tuple[str, str], SampleArchive] = field(default_factory=dict)
    waic: Dict[Tuple[str, str], WaicResult] = field(default_factory=dict)
    table: object = None
    failures: Dict[Tuple[str, str], Exception] = field(default_factory=dict)
    files: List[str] = field(default_factory=list)
    holdout: HoldoutSplit = None
    coverage: Dict[Tuple[str, str], float] = field(default_factory=dict)
    inflation: Dict[str, float] = field(default_factory=dict)

    @property
    def requested(self):
        return len(self.archives) + len(self.failures)

    @property
    def complete(self):
        return not self.failures
