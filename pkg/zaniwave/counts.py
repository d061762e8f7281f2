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
Count data, the binary nesting tree and the branch aggregation that splits a
multinomial likelihood into independent binomial-family models.
"""

import json
import logging

import numpy as np

from zaniwave.distributions import binomial_logpmf
from zaniwave.errors import NestingError, ValidationError
from zaniwave.objects import NestingNode, NestingTree, BranchDataset

logger = logging.getLogger('zaniwave')

# Eight discard categories; the last one aggregates every other species.
DISCARDS_NESTING = json.dumps({
    "categories": ["whiting", "haddock", "pout", "poor_cod",
                   "dab", "plaice", "grey_gurnard", "other"],
    "nodes": [
        {"label": "Abundant vs Others", "left": "Gadiformes vs non-Gadiformes", "right": ["other"]},
        {"label": "Gadiformes vs non-Gadiformes", "left": "Large vs Small",
         "right": "Pleuronectidae vs non-Pleuronectidae"},
        {"label": "Large vs Small", "left": "Whiting vs Haddock", "right": "Pout vs Poor cod"},
        {"label": "Whiting vs Haddock", "left": ["whiting"], "right": ["haddock"]},
        {"label": "Pout vs Poor cod", "left": ["pout"], "right": ["poor_cod"]},
        {"label": "Pleuronectidae vs non-Pleuronectidae", "left": "Dab vs Plaice",
         "right": ["grey_gurnard"]},
        {"label": "Dab vs Plaice", "left": ["dab"], "right": ["plaice"]}
    ]
})


def parse_nesting(config_text, category_names=None):
    """
    Parse a nesting configuration into a validated NestingTree.

    The configuration is a JSON document with an optional "categories" list
    and a "nodes" list. Every node has a "label" and a "left" and "right"
    child (or a two-element "children" list). A child is either the label of
    another node or a list of categories, given as 1-based integers or as
    category names.

    :param str config_text: The JSON configuration.
    :param list category_names: Category names, used when the configuration
                                does not list its own.
    :returns: A NestingTree with its nodes in pre-order.
    """
    try:
        config = json.loads(config_text)
    except json.JSONDecodeError as err:
        raise ValidationError(f"The nesting configuration is not valid JSON: {err}")
    if not isinstance(config, dict) or not config.get('nodes'):
        raise ValidationError("The nesting configuration needs a non-empty 'nodes' list")

    names = config.get('categories') or category_names
    raw_nodes = {}
    for raw in config['nodes']:
        label = raw.get('label')
        if label is None:
            raise NestingError(None, "every node needs a label")
        if label in raw_nodes:
            raise NestingError(label, "duplicate node label")
        if 'children' in raw:
            if len(raw['children']) != 2:
                raise NestingError(label, f"only binary splits are supported, "
                                          f"got {len(raw['children'])} children")
            left, right = raw['children']
        elif 'left' in raw and 'right' in raw:
            left, right = raw['left'], raw['right']
        else:
            raise NestingError(label, "a node needs a left and a right child")
        raw_nodes[label] = (left, right)

    if names is None:
        referenced = [c for left, right in raw_nodes.values() for child in (left, right)
                      if isinstance(child, list) for c in child]
        if not all(isinstance(c, int) for c in referenced):
            raise ValidationError("Category names are needed to resolve named categories")
        names = [f"category_{k}" for k in range(1, max(referenced) + 1)]
    K = len(names)

    def category_index(node_label, category):
        if isinstance(category, bool):
            raise NestingError(node_label, f"'{category}' is not a category")
        if isinstance(category, int):
            if not 1 <= category <= K:
                raise NestingError(node_label, f"category {category} is outside 1..{K}")
            return category - 1
        if category in names:
            return names.index(category)
        raise NestingError(node_label, f"unknown category '{category}'")

    # Resolve the children into node labels or category sets.
    children = {}
    parents = {}
    for label, pair in raw_nodes.items():
        resolved = []
        for child in pair:
            if isinstance(child, str) and child in raw_nodes:
                if child in parents:
                    raise NestingError(child, f"has two parents, '{parents[child]}' and '{label}'")
                if child == label:
                    raise NestingError(label, "a node cannot be its own child")
                parents[child] = label
                resolved.append(child)
            else:
                listed = child if isinstance(child, list) else [child]
                resolved.append(frozenset(category_index(label, c) for c in listed))
        children[label] = resolved

    members = {}

    def member_set(label, visiting=()):
        if label in visiting:
            raise NestingError(label, "the nesting contains a cycle")
        if label not in members:
            left, right = [member_set(c, visiting + (label,)) if isinstance(c, str) else c
                           for c in children[label]]
            if not left or not right:
                raise NestingError(label, "both children need at least one category")
            if left & right:
                overlap = sorted(k + 1 for k in left & right)
                raise NestingError(label, f"categories {overlap} appear in both children")
            members[label] = left | right
        return members[label]

    for label in raw_nodes:
        member_set(label)

    # A category list with several entries must itself be split by some node.
    by_members = {frozenset(members[label]): label for label in raw_nodes}
    for label in raw_nodes:
        for index, child in enumerate(children[label]):
            if isinstance(child, frozenset) and len(child) > 1:
                if child not in by_members:
                    raise NestingError(label, f"child {sorted(k + 1 for k in child)} is not "
                                              f"split any further; only binary splits are supported")
                if by_members[child] in parents and parents[by_members[child]] != label:
                    raise NestingError(label, f"child {sorted(k + 1 for k in child)} is already "
                                              f"split under '{parents[by_members[child]]}'")
                parents[by_members[child]] = label
                children[label][index] = by_members[child]

    roots = [label for label in raw_nodes if label not in parents]
    if len(roots) != 1:
        raise NestingError(None, f"expected a single root node, found {roots}")

    root = roots[0]
    if members[root] != frozenset(range(K)):
        missing = sorted(k + 1 for k in set(range(K)) - members[root])
        raise NestingError(root, f"categories {missing} are missing from the tree")

    ordered = []

    def visit(label):
        left, right = [members[c] if isinstance(c, str) else c for c in children[label]]
        ordered.append(NestingNode(label=label, member_set=tuple(members[label]),
                                   left_set=tuple(left), right_set=tuple(right)))
        for child in children[label]:
            if isinstance(child, str):
                visit(child)

    visit(root)
    if len(ordered) != len(raw_nodes):
        unreachable = sorted(set(raw_nodes) - {node.label for node in ordered})
        raise NestingError(unreachable[0], "node is not reachable from the root")
    return NestingTree(nodes=ordered, K=K, category_names=list(names))


def two_category_tree(category_names=None, label='root'):
    """
    The smallest legal tree: one node splitting category 1 from category 2.
    """
    return NestingTree(nodes=[NestingNode(label, (0, 1), (0,), (1,))], K=2,
                       category_names=category_names)


def aggregate_branch(dataset, node):
    """
    Aggregate the haul counts for one internal node: y is the sum over the
    left set and n the sum over the member set. Records with n == 0 are
    flagged and contribute nothing to the branch likelihood.

    :param HaulDataset dataset: The haul data.
    :param NestingNode node: A node of a tree over the same categories.
    :returns: A BranchDataset.
    """
    if max(node.member_set) >= dataset.K:
        raise ValidationError(f"Node '{node.label}' refers to categories beyond K={dataset.K}")
    counts = dataset.counts
    y = counts[:, list(node.left_set)].sum(axis=1)
    n = counts[:, list(node.member_set)].sum(axis=1)
    flagged = int(np.sum(n == 0))
    if flagged:
        logger.debug(f"Branch '{node.label}' has {flagged} records without any trials")
    return BranchDataset(node_label=node.label, y=y, n=n,
                         time_index=dataset.quarters - 1,
                         trip_index=dataset.trips - 1,
                         T=dataset.T, J=dataset.J)


def aggregate_all(dataset, tree):
    """
    Aggregate every branch of the tree, keyed by node label in pre-order.
    """
    return {node.label: aggregate_branch(dataset, node) for node in tree.nodes}


def nested_loglik_check(y, p, tree):
    """
    Sum of plain binomial branch log-likelihoods over the tree. By the
    nesting identity this equals the multinomial log-pmf of y under p.

    :param y: K counts.
    :param p: K probabilities summing to 1.
    :param NestingTree tree: The nesting tree.
    :returns: The log-likelihood, or -inf when a member set without
              probability mass received counts.
    """
    y = np.asarray(y, dtype=np.int64)
    p = np.asarray(p, dtype=float)
    if len(y) != tree.K or len(p) != tree.K:
        raise ValidationError(f"Expected vectors of length {tree.K}")
    if np.any(p < 0) or not np.isclose(p.sum(), 1.0):
        raise ValidationError("p must be a probability vector")
    total = 0.0
    for node in tree.nodes:
        n_tilde = int(y[list(node.member_set)].sum())
        if n_tilde == 0:
            continue
        y_tilde = int(y[list(node.left_set)].sum())
        mass = p[list(node.member_set)].sum()
        if mass <= 0:
            logger.warning(f"Node '{node.label}' has no probability mass but {n_tilde} counts")
            return -np.inf
        total += float(binomial_logpmf(y_tilde, n_tilde, p[list(node.left_set)].sum() / mass))
    return total


def inflation_fraction(branch):
    """
    The fraction of active records of a branch with y at 0 or at n.
    """
    active = branch.active
    if not np.any(active):
        return float('nan')
    y, n = branch.y[active], branch.n[active]
    return float(np.mean((y == 0) | (y == n)))
