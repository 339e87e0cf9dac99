"""Ablation tables: one model per row, all rows trained from the same seed and fixtures."""

import csv
import dataclasses
import logging
from collections.abc import Callable
from pathlib import Path

from hise import constants
from hise.commands.base import CommandContext, arg, command, write_json
from hise.config import ComponentToggles, ReasoningToggles, RunConfig
from hise.data import DatasetSplit
from hise.errors import ConfigError
from hise.evaluation import CSV_HEADER, MetricsReport
from hise.format import format_float, format_table
from hise.training import Trainer

logger = logging.getLogger(__name__)

Variant = tuple[str, RunConfig]

# VDS, VHS, TDS, THS
COMPONENT_ROWS = (
    (False, False, False, False),
    (False, False, False, True),
    (False, False, True, False),
    (False, False, True, True),
    (False, True, True, True),
    (True, False, True, True),
    (True, True, False, True),
    (True, True, True, True),
)
AGGREGATION_ROWS = ((False, False), (True, False), (False, True), (True, True))
ALPHA_ROWS = (0.7, 0.8, 0.9, 1.0)


def component_variants(config: RunConfig) -> list[Variant]:
    variants = []
    for vds, vhs, tds, ths in COMPONENT_ROWS:
        toggles = ComponentToggles(vds=vds, vhs=vhs, tds=tds, ths=ths)
        label = "all" if all((vds, vhs, tds, ths)) else toggles.label()
        variants.append((label, dataclasses.replace(config, components=toggles)))
    return variants


def aggregation_variants(config: RunConfig) -> list[Variant]:
    variants = []
    for visual, textual in AGGREGATION_ROWS:
        reasoning = ReasoningToggles(visual_graph=visual, textual_graph=textual)
        variants.append((reasoning.label(), dataclasses.replace(config, reasoning=reasoning)))
    return variants


def alpha_variants(config: RunConfig) -> list[Variant]:
    return [
        (f"alpha={alpha:g}", dataclasses.replace(config, loss=dataclasses.replace(config.loss, alpha=alpha)))
        for alpha in ALPHA_ROWS
    ]


def loss_variants(config: RunConfig) -> list[Variant]:
    lambda_bank = config.loss.lambda_bank or constants.LAMBDA_BANK
    rows = (
        ("b-infonce", dataclasses.replace(config.loss, kind="b-infonce")),
        ("hal", dataclasses.replace(config.loss, kind="hal", lambda_bank=0.0)),
        ("m-hal", dataclasses.replace(config.loss, kind="hal", lambda_bank=lambda_bank)),
    )
    return [(label, dataclasses.replace(config, loss=loss)) for label, loss in rows]


AXES: dict[str, Callable[[RunConfig], list[Variant]]] = {
    "components": component_variants,
    "aggregation": aggregation_variants,
    "alpha": alpha_variants,
    "loss": loss_variants,
}


def select_rows(variants: list[Variant], labels: list[str] | None) -> list[Variant]:
    """Keeps the named rows, in table order; None keeps every row."""
    if labels is None:
        return variants
    known = [label for label, _ in variants]
    unknown = [label for label in labels if label not in known]
    if unknown:
        raise ConfigError(f"rows: unknown row {unknown[0]!r} (choose from {', '.join(known)})")
    return [(label, variant) for label, variant in variants if label in labels]


def _row_labels(raw: str) -> list[str]:
    return [label.strip() for label in raw.split(",") if label.strip()]


def run_ablation(variants: list[Variant], split: DatasetSplit) -> list[tuple[str, MetricsReport]]:
    rows = []
    for index, (label, variant) in enumerate(variants, start=1):
        variant.validate()
        logger.info("row %d/%d: %s", index, len(variants), label)
        report = Trainer(variant, split).run().final
        logger.info("row %s: R@Sum %.1f", label, report.r_sum)
        rows.append((label, report))
    return rows


def write_csv(path: Path, rows: list[tuple[str, MetricsReport]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for label, report in rows:
            writer.writerow([label, *(f"{value:.4f}" for value in report.csv_values())])


@command(
    "ablate",
    arguments=(
        arg("--config", required=True, help="config file or bundled preset"),
        arg("--data", required=True, help="fixture directory"),
        arg("--out", required=True, help="output directory"),
        arg("--axis", choices=sorted(AXES), default="components", help="which table to produce"),
        arg("--rows", type=_row_labels, help="comma-separated row labels to train (default: all rows)"),
    ),
    help="train one model per ablation row and tabulate the metrics",
)
def ablate(cc: CommandContext) -> int:
    out_dir = Path(cc.args.out)
    axis = cc.args.axis
    with cc.run_log(out_dir, "ablate.log"):
        config = cc.load_config()
        split = cc.load_split(config)
        rows = run_ablation(select_rows(AXES[axis](config), cc.args.rows), split)
        write_csv(out_dir / f"{axis}.csv", rows)
        write_json(
            out_dir / f"{axis}.json",
            {"axis": axis, "seed": config.seed, "rows": [{"row": label, **r.to_dict()} for label, r in rows]},
        )
    table = format_table(
        list(CSV_HEADER), [[label, *(format_float(v) for v in r.csv_values())] for label, r in rows]
    )
    cc.emit(table)
    return 0
