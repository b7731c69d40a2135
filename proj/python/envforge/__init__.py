# Copyright 2026 The Envforge Authors
# SPDX-License-Identifier: Apache-2.0
"""Synthetic tool-use environments and rollout simulation.

Thin dict-level wrappers over the compiled core: structured values cross the
extension boundary as JSON text, and this package converts at the edges.
"""

import json

try:
    from . import _envforge as _core
except ImportError:  # build-tree layout: extension module alongside the package
    import _envforge as _core

__version__ = _core.__version__

# Numeric routines pass through unchanged.
group_advantages = _core.group_advantages
sequence_importance_ratio = _core.sequence_importance_ratio
allocate_budget = _core.allocate_budget
oversampling_coefficient = _core.oversampling_coefficient
sliding_window_ppl = _core.sliding_window_ppl
kcg_select = _core.kcg_select
fit_power_law = _core.fit_power_law
domain_styles = _core.domain_styles


def generate_domain(seed, config=None):
    """Generate a tool graph; returns it as a dict."""
    return json.loads(_core.generate_domain(seed, json.dumps(config or {})))


def validate_toolset(graph):
    """Per-tool executability and edge-consistency report as a dict."""
    return json.loads(_core.validate_toolset(json.dumps(graph)))


def assemble_environment(graph, env_config=None, seed=0):
    """Spawn an environment (subgraph, database, gold chains) as a dict."""
    return json.loads(
        _core.assemble_environment(json.dumps(graph), json.dumps(env_config or {}), seed)
    )


def run_simulation(cluster=None, workload=None, mode="async", seed=0):
    """Run the rollout simulator; returns {"metrics": ..., "events": [...]}."""
    return json.loads(
        _core.run_simulation(json.dumps(cluster or {}), json.dumps(workload or {}), mode, seed)
    )


__all__ = [
    "__version__",
    "allocate_budget",
    "assemble_environment",
    "domain_styles",
    "fit_power_law",
    "generate_domain",
    "group_advantages",
    "kcg_select",
    "oversampling_coefficient",
    "run_simulation",
    "sequence_importance_ratio",
    "sliding_window_ppl",
    "validate_toolset",
]
