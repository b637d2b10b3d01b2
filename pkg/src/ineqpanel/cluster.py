"""Institutional clustering and inequality measurement utilities.

Median split of countries on an institutions score (pillar or any of its 21
sub-indices), cluster-stability profiling across all 22 criteria, Pearson
correlation, and the Gini coefficient from grouped income shares.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "ClusterError",
    "SUBINDEX_NAMES",
    "SUBINDEX_COLUMNS",
    "InstitutionScores",
    "ClusterAssignment",
    "IncomeDistribution",
    "StabilityReport",
    "median_split",
    "subindex_stability",
    "pearson_corr",
    "gini_from_distribution",
    "load_scores_csv",
    "write_assignment_csv",
    "write_stability_csv",
]


class ClusterError(ValueError):
    """Raised for malformed score input or degenerate splits."""


# The 21 sub-indices of the institutions pillar, in canonical order. All are
# scored on 1-7 except the last one, which is scored on 1-10.
SUBINDEX_NAMES: tuple[str, ...] = (
    "Property rights",
    "Intellectual property protection",
    "Diversion of public funds",
    "Public trust in politicians",
    "Irregular payments and bribes",
    "Judicial independence",
    "Favoritism in decisions of government officials",
    "Efficiency of government spending",
    "Burden of government regulation",
    "Efficiency of legal framework in settling disputes",
    "Efficiency of legal framework in challenging regulations",
    "Transparency of government policymaking",
    "Business costs of terrorism",
    "Business costs of crime and violence",
    "Organized crime",
    "Reliability of police services",
    "Ethical behavior of firms",
    "Strength of auditing and reporting standards",
    "Efficacy of corporate boards",
    "Protection of minority shareholders interests",
    "Strength of investor protection",
)

SUBINDEX_COLUMNS: tuple[str, ...] = tuple(f"sub{i:02d}" for i in range(1, 22))

_MAIN_SCALE = (1.0, 7.0)
_INVESTOR_PROTECTION_SCALE = (1.0, 10.0)


@dataclass(frozen=True)
class InstitutionScores:
    """Pillar score plus the 21 sub-index scores for one country."""

    country: str
    pillar: float
    subindices: dict[str, float]

    def __post_init__(self) -> None:
        if set(self.subindices) != set(SUBINDEX_NAMES):
            missing = set(SUBINDEX_NAMES) - set(self.subindices)
            extra = set(self.subindices) - set(SUBINDEX_NAMES)
            raise ClusterError(
                f"{self.country}: sub-index names mismatch (missing {sorted(missing)}, extra {sorted(extra)})"
            )
        lo, hi = _MAIN_SCALE
        if not lo <= self.pillar <= hi:
            raise ClusterError(f"{self.country}: pillar score {self.pillar} outside [{lo}, {hi}]")
        for name, value in self.subindices.items():
            lo, hi = _INVESTOR_PROTECTION_SCALE if name == SUBINDEX_NAMES[-1] else _MAIN_SCALE
            if not lo <= value <= hi:
                raise ClusterError(
                    f"{self.country}: {name!r} score {value} outside [{lo}, {hi}]"
                )


@dataclass(frozen=True)
class ClusterAssignment:
    """Two-way partition of countries around the median of a score."""

    criterion: str
    threshold: float
    inclusive: tuple[str, ...]  # score strictly above the threshold
    extractive: tuple[str, ...]  # score at or below the threshold


@dataclass(frozen=True)
class StabilityReport:
    """Cluster membership of every country across the pillar + 21 sub-indices."""

    countries: tuple[str, ...]
    criteria: tuple[str, ...]  # "pillar" followed by sub-index names
    membership: dict[str, dict[str, bool]]  # country -> criterion -> inclusive?
    inclusive_counts: dict[str, int]
    flip_counts: dict[str, int]  # criteria where membership differs from the pillar split
    fully_stable: tuple[str, ...]
    stable_except: dict[int, tuple[str, ...]]
    matching_subindices: tuple[str, ...]  # sub-indices splitting exactly like the pillar


def median_split(scores, criterion: str = "pillar", tie_rule: str = "extractive") -> ClusterAssignment:
    """Split countries at the sample median; strictly-above goes inclusive.

    Ties at the threshold default to the extractive side; pass
    tie_rule="inclusive" for the opposite convention.
    """
    if tie_rule not in ("extractive", "inclusive"):
        raise ClusterError(f"unknown tie rule {tie_rule!r}")
    items = list(scores.items()) if isinstance(scores, dict) else list(scores)
    if len(items) < 2:
        raise ClusterError("need at least 2 countries to split")
    values = [float(v) for _, v in items]
    if any(not math.isfinite(v) for v in values):
        raise ClusterError("scores must be finite")
    if max(values) == min(values):
        raise ClusterError("all scores equal; the median split is uninformative")
    ranked = sorted(values)
    m = len(ranked)
    if m % 2:
        threshold = ranked[m // 2]
    else:
        threshold = 0.5 * (ranked[m // 2 - 1] + ranked[m // 2])

    def is_inclusive(v: float) -> bool:
        if v == threshold:
            return tie_rule == "inclusive"
        return v > threshold

    inclusive = tuple(sorted(c for c, v in items if is_inclusive(float(v))))
    extractive = tuple(sorted(c for c, v in items if not is_inclusive(float(v))))
    return ClusterAssignment(
        criterion=criterion, threshold=threshold, inclusive=inclusive, extractive=extractive
    )


def subindex_stability(scores) -> StabilityReport:
    """Profile every country's cluster membership across all 22 criteria."""
    records = list(scores)
    if not records:
        raise ClusterError("no score records")
    countries = tuple(sorted(r.country for r in records))
    if len(set(countries)) != len(countries):
        raise ClusterError("duplicate country in score records")

    criteria = ("pillar",) + SUBINDEX_NAMES
    membership: dict[str, dict[str, bool]] = {c: {} for c in countries}
    matching: list[str] = []

    main = median_split([(r.country, r.pillar) for r in records], criterion="pillar")
    main_inclusive = set(main.inclusive)
    for c in countries:
        membership[c]["pillar"] = c in main_inclusive
    for name in SUBINDEX_NAMES:
        split = median_split([(r.country, r.subindices[name]) for r in records], criterion=name)
        inc = set(split.inclusive)
        for c in countries:
            membership[c][name] = c in inc
        if inc == main_inclusive:
            matching.append(name)

    inclusive_counts = {c: sum(membership[c].values()) for c in countries}
    flip_counts = {
        c: sum(membership[c][k] != membership[c]["pillar"] for k in criteria) for c in countries
    }
    fully_stable = tuple(c for c in countries if flip_counts[c] == 0)
    stable_except: dict[int, list[str]] = {}
    for c in countries:
        k = flip_counts[c]
        if k > 0:
            stable_except.setdefault(k, []).append(c)
    return StabilityReport(
        countries=countries,
        criteria=criteria,
        membership=membership,
        inclusive_counts=inclusive_counts,
        flip_counts=flip_counts,
        fully_stable=fully_stable,
        stable_except={k: tuple(v) for k, v in sorted(stable_except.items())},
        matching_subindices=tuple(matching),
    )


def pearson_corr(x, y) -> float:
    """Product-moment correlation of two equally long, nonconstant vectors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ClusterError("inputs must be equally long vectors")
    if len(x) < 3:
        raise ClusterError("need at least 3 observations")
    xd = x - x.mean()
    yd = y - y.mean()
    sx = float(xd @ xd)
    sy = float(yd @ yd)
    if sx == 0.0 or sy == 0.0:
        raise ClusterError("correlation undefined for a constant input")
    return float((xd @ yd) / math.sqrt(sx * sy))


@dataclass(frozen=True)
class IncomeDistribution:
    """Grouped income distribution, groups ordered poorest to richest.

    Both share vectors must sum to one; per-capita income (income share over
    population share) must be non-decreasing across groups.
    """

    population_shares: tuple[float, ...]
    income_shares: tuple[float, ...]

    def __post_init__(self) -> None:
        p = np.asarray(self.population_shares, dtype=float)
        s = np.asarray(self.income_shares, dtype=float)
        if p.shape != s.shape or p.ndim != 1 or len(p) == 0:
            raise ClusterError("share vectors must be equally long and non-empty")
        if (p < 0).any() or (s < 0).any():
            raise ClusterError("shares must be non-negative")
        if abs(p.sum() - 1.0) > 1e-9 or abs(s.sum() - 1.0) > 1e-9:
            raise ClusterError(
                f"share sums must equal 1 (got population {p.sum()!r}, income {s.sum()!r})"
            )
        if (p == 0).any():
            raise ClusterError("population shares must be positive")
        per_capita = s / p
        if np.any(np.diff(per_capita) < -1e-12):
            raise ClusterError("groups must be ordered by non-decreasing per-capita income")


def gini_from_distribution(d: IncomeDistribution) -> float:
    """Gini coefficient in [0, 1] from grouped quantile shares.

    G = 1 - sum_i s_i (p_i + 2 r_i), with s_i the group's income share, p_i
    its population share and r_i the population share strictly richer. On
    equal-population groups this coincides with the pairwise mean-absolute-
    difference definition.
    """
    p = np.asarray(d.population_shares, dtype=float)
    s = np.asarray(d.income_shares, dtype=float)
    richer = np.concatenate([np.cumsum(p[::-1])[::-1][1:], [0.0]])
    g = 1.0 - float(np.sum(s * (p + 2.0 * richer)))
    return max(g, 0.0)


def load_scores_csv(path) -> list[InstitutionScores]:
    """Read a scores CSV with header country,pillar,sub01,...,sub21."""
    path = Path(path)
    expected = ("country", "pillar") + SUBINDEX_COLUMNS
    records: list[InstitutionScores] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        got = tuple(reader.fieldnames or ())
        if got != expected:
            missing = [c for c in expected if c not in got]
            raise ClusterError(f"{path}: bad scores header; missing columns {missing}")
        for lineno, rec in enumerate(reader, start=2):
            try:
                pillar = float(rec["pillar"])
                subs = {
                    name: float(rec[col])
                    for name, col in zip(SUBINDEX_NAMES, SUBINDEX_COLUMNS)
                }
            except (TypeError, ValueError):
                raise ClusterError(f"{path}:{lineno}: non-numeric score") from None
            records.append(InstitutionScores(rec["country"].strip(), pillar, subs))
    if not records:
        raise ClusterError(f"{path}: no score rows")
    return records


def write_assignment_csv(assignment: ClusterAssignment, path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["country", "cluster", "criterion", "threshold"])
        for c in assignment.inclusive:
            writer.writerow([c, "inclusive", assignment.criterion, repr(assignment.threshold)])
        for c in assignment.extractive:
            writer.writerow([c, "extractive", assignment.criterion, repr(assignment.threshold)])


def write_stability_csv(report: StabilityReport, path) -> None:
    """Country x criterion matrix of I/E cells."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["country"] + list(report.criteria) + ["inclusive_count", "flips_vs_pillar"])
        for c in report.countries:
            cells = ["I" if report.membership[c][k] else "E" for k in report.criteria]
            writer.writerow([c] + cells + [report.inclusive_counts[c], report.flip_counts[c]])
