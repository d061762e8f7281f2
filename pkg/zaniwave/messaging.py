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

import numpy as np
from jinja2 import Environment, PackageLoader

logger = logging.getLogger('zaniwave')

TEMPLATES = Environment(loader=PackageLoader('zaniwave', 'templates'),
                        trim_blocks=True, lstrip_blocks=True)


def create_message(message_type, **message_payload):
    """
    Render a human-readable summary. Returns a string.

    :param str message_type: Name of the template, without extension.
    :param message_payload: Values for the template. Some message types take
                            domain objects (a HaulDataset or SampleArchive)
                            and derive their values from them.
    """
    if f'_prepare_{message_type}' in globals():
        message_payload = globals()[f'_prepare_{message_type}'](**message_payload)
    template = TEMPLATES.get_template(f'{message_type}.txt')
    return template.render(**message_payload).rstrip('\n')


def _prepare_ingest_summary(dataset, top=7):
    totals = dataset.counts.sum(axis=0)
    grand_total = max(int(totals.sum()), 1)
    categories = [{'name': name, 'total': int(total), 'share': total / grand_total}
                  for name, total in zip(dataset.category_names, totals)]
    order = np.argsort(-totals, kind='stable')[:min(top, dataset.K)]
    return {'records': dataset.M,
            'trips': len(np.unique(dataset.trips)),
            'time_units': dataset.T,
            'categories': categories,
            'top': [dataset.category_names[k] for k in order],
            'top_share': float(totals[order].sum() / grand_total)}


def _prepare_convergence_summary(archive):
    finite = archive.rhat[np.isfinite(archive.rhat)]
    return {'branch': archive.branch,
            'variant': archive.variant,
            'chains': archive.chains,
            'draws_per_chain': archive.draws.shape[1],
            'divergences': int(np.sum(archive.divergences)),
            'depth_hits': int(np.sum(archive.depth_hits)),
            'step_sizes': [f"{step:.3g}" for step in archive.step_size],
            'acceptance': float(np.mean(archive.accept_stat)) if archive.accept_stat.size else 0.0,
            'max_rhat': float(finite.max()) if finite.size else None,
            'undefined': int(np.sum(~np.isfinite(archive.rhat))),
            'converged': archive.converged}


def _prepare_fit_summary(table, failures, requested, output_dir, inflation=None):
    rows = [{'label': label, 'values': ['-' if value is None or np.isnan(value) else f"{value:.1f}"
                                        for value in values]}
            for label, values in zip(table.index, table.values.tolist())]
    return {'variants': list(table.columns),
            'rows': rows,
            'inflation': [{'label': label, 'share': '-' if np.isnan(share) else f"{share:.1%}"}
                          for label, share in (inflation or {}).items()],
            'failures': [f"{branch or 'all'} / {variant}: {error}" for (branch, variant), error in failures.items()],
            'completed': requested - len(failures),
            'requested': requested,
            'output_dir': output_dir}
