"""Stratified percentile reports over per-case scores, plus the Dice overlap.

Reports slice a score table by (group, region) and summarize each stratum
with mean, population std, and the nearest-rank percentiles p50/p25/p10/p5.
Low percentiles are the point: a model can look fine on averages while its
worst decile on a rare subgroup collapses, and that is exactly what the p10
and p5 columns surface.

Statistics are computed on raw scores in [0, 1], carried at full precision
in percent scale, and rounded (half away from zero, one decimal) only when
rendered.  Group and region ordering follows first encounter in the input
so reports are stable under re-runs but follow the data, not the alphabet.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .objectives import empirical_percentile
from .scores import ScoreTable

__all__ = [
    "CELL_NAMES",
    "StratumStats",
    "GroupBlock",
    "PercentileReport",
    "ReportComparison",
    "dice",
    "percentile_report",
    "compare_reports",
    "render_value",
    "render_delta",
    "render_text",
    "render_json",
    "render_comparison_text",
    "render_comparison_json",
]

CELL_NAMES = ("mean", "std", "p50", "p25", "p10", "p5")

PERCENTILE_ALPHAS = {"p50": 0.50, "p25": 0.25, "p10": 0.10, "p5": 0.05}


def dice(pred, gt) -> float:
    """Overlap 2|A∩B| / (|A|+|B|) between binary masks; both empty -> 1.0."""
    a = np.asarray(pred, dtype=bool)
    b = np.asarray(gt, dtype=bool)
    if a.shape != b.shape:
        raise ValueError(f"mask shapes differ: {a.shape} vs {b.shape}")
    total = int(a.sum()) + int(b.sum())
    if total == 0:
        return 1.0
    return 2.0 * int(np.logical_and(a, b).sum()) / total


@dataclass(frozen=True)
class StratumStats:
    """Full-precision percent-scale summary of one (group, region) stratum."""

    count: int
    mean: float
    std: float
    p50: float
    p25: float
    p10: float
    p5: float

    def cells(self) -> tuple:
        return (self.mean, self.std, self.p50, self.p25, self.p10, self.p5)


@dataclass
class GroupBlock:
    name: str
    cases: int
    regions: list


@dataclass
class PercentileReport:
    groups: list

    def keys(self) -> list:
        return [(g.name, region) for g in self.groups for region, _ in g.regions]


@dataclass
class ReportComparison:
    """Per-cell deltas (second report minus first), percent points."""

    groups: list


def _stratum(scores: list) -> StratumStats:
    arr = np.asarray(scores, dtype=float)
    stats = {name: 100.0 * empirical_percentile(arr, a) for name, a in PERCENTILE_ALPHAS.items()}
    return StratumStats(
        count=arr.size,
        mean=100.0 * float(arr.mean()),
        std=100.0 * float(arr.std(ddof=0)),
        **stats,
    )


def percentile_report(table: ScoreTable) -> PercentileReport:
    """Summarize every (group, region) stratum observed in the table."""
    if len(table) == 0:
        raise ValueError("cannot report on an empty score table")
    group_order: list = []
    region_order: dict = {}
    by_stratum: dict = {}
    cases: dict = {}
    for row in table:
        if row.group not in region_order:
            group_order.append(row.group)
            region_order[row.group] = []
            cases[row.group] = set()
        if row.region not in region_order[row.group]:
            region_order[row.group].append(row.region)
        by_stratum.setdefault((row.group, row.region), []).append(row.score)
        cases[row.group].add(row.case_id)
    return PercentileReport(
        [
            GroupBlock(
                g,
                len(cases[g]),
                [(r, _stratum(by_stratum[(g, r)])) for r in region_order[g]],
            )
            for g in group_order
        ]
    )


def compare_reports(a: PercentileReport, b: PercentileReport) -> ReportComparison:
    """Cellwise b − a, keyed and ordered like ``a``; key sets must match."""
    keys_a, keys_b = a.keys(), b.keys()
    if set(keys_a) != set(keys_b):
        only_a = sorted(set(keys_a) - set(keys_b))
        only_b = sorted(set(keys_b) - set(keys_a))
        raise ValueError(
            f"reports cover different strata: only in first {only_a}, only in second {only_b}"
        )
    lookup = {(g.name, region): s for g in b.groups for region, s in g.regions}
    groups = []
    for block in a.groups:
        deltas = []
        for region, stats in block.regions:
            other = lookup[(block.name, region)]
            deltas.append(
                (region, tuple(ob - ours for ours, ob in zip(stats.cells(), other.cells())))
            )
        groups.append(GroupBlock(block.name, block.cases, deltas))
    return ReportComparison(groups)


def render_value(value: float) -> str:
    """One decimal, half away from zero: 80.25 -> '80.3' (not banker's)."""
    rounded = math.copysign(math.floor(abs(value) * 10.0 + 0.5) / 10.0, value)
    return f"{abs(rounded):.1f}" if rounded == 0 else f"{rounded:.1f}"


def render_delta(value: float) -> str:
    """Signed one-decimal delta; anything rounding to zero is '+0.0'."""
    magnitude = math.floor(abs(value) * 10.0 + 0.5) / 10.0
    if magnitude == 0.0:
        return "+0.0"
    return ("+" if value > 0 else "-") + f"{magnitude:.1f}"


def _layout(groups) -> tuple:
    region_w = max([len("Region")] + [len(r) for g in groups for r, _ in g.regions])
    return region_w, 8


def _header_line(region_w: int, cell_w: int) -> str:
    return "  " + "Region".ljust(region_w) + "".join(
        name.rjust(cell_w) for name in ("Mean", "Std", "p50", "p25", "p10", "p5")
    )


def render_text(report: PercentileReport) -> str:
    """Aligned per-group blocks; byte-stable for a given report."""
    region_w, cell_w = _layout(report.groups)
    lines = []
    for block in report.groups:
        lines.append(f"{block.name} ({block.cases} cases)")
        lines.append(_header_line(region_w, cell_w))
        for region, stats in block.regions:
            cells = "".join(render_value(v).rjust(cell_w) for v in stats.cells())
            lines.append("  " + region.ljust(region_w) + cells)
        lines.append("")
    return "\n".join(lines)


def render_comparison_text(comparison: ReportComparison) -> str:
    region_w, cell_w = _layout(comparison.groups)
    lines = []
    for block in comparison.groups:
        lines.append(block.name)
        lines.append(_header_line(region_w, cell_w))
        for region, deltas in block.regions:
            cells = "".join(render_delta(v).rjust(cell_w) for v in deltas)
            lines.append("  " + region.ljust(region_w) + cells)
        lines.append("")
    return "\n".join(lines)


def render_json(report: PercentileReport) -> str:
    """Machine-readable form: full-precision percent values, stable order."""
    doc = {
        "groups": [
            {
                "name": g.name,
                "cases": g.cases,
                "regions": [
                    {"name": region, "count": stats.count}
                    | {name: value for name, value in zip(CELL_NAMES, stats.cells())}
                    for region, stats in g.regions
                ],
            }
            for g in report.groups
        ]
    }
    return json.dumps(doc, indent=2) + "\n"


def render_comparison_json(comparison: ReportComparison) -> str:
    doc = {
        "groups": [
            {
                "name": g.name,
                "regions": [
                    {"name": region} | {name: value for name, value in zip(CELL_NAMES, deltas)}
                    for region, deltas in g.regions
                ],
            }
            for g in comparison.groups
        ]
    }
    return json.dumps(doc, indent=2) + "\n"
