"""Full-size training runs; deselected by default, run with `pytest -m slow`."""

import dataclasses

import pytest

from hise.commands.ablate import aggregation_variants, run_ablation
from hise.config import ComponentToggles, load_run_config
from hise.data import generate_synthetic
from hise.training import Trainer

pytestmark = pytest.mark.slow


def test_desk_config_converges() -> None:
    config = load_run_config("desk", env_seed=False)
    report = Trainer(config, generate_synthetic(config)).run().final
    assert report.t2v.r1 >= 95.0
    assert report.v2t.r1 >= 95.0


def test_semantics_help_on_the_hard_config() -> None:
    config = load_run_config("hard", env_seed=False)
    split = generate_synthetic(config)
    full = Trainer(config, split).run().final
    baseline_config = dataclasses.replace(config, components=ComponentToggles(False, False, False, False))
    baseline = Trainer(baseline_config, split).run().final
    assert baseline.t2v.r1 < 80.0, f"hard config is not hard at seed {config.seed}"
    assert full.r_sum >= baseline.r_sum


def test_graph_reasoning_beats_mean_pooling_on_the_hard_config() -> None:
    config = load_run_config("hard", env_seed=False)
    rows = run_ablation(aggregation_variants(config), generate_synthetic(config))
    (pooled_label, pooled), *graph_rows = rows
    for label, report in graph_rows:
        assert report.r_sum >= pooled.r_sum, (
            f"seed {config.seed}: {label} R@Sum {report.r_sum:.1f} < {pooled_label} R@Sum {pooled.r_sum:.1f}"
        )
