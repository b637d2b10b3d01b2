"""Balanced-panel container and the transforms the estimators are built on.

A :class:`PanelDataset` stores every variable as an N x T grid over the
rectangular hull of observed entities and years; missing cells are NaN-masked,
never absent. Datasets are immutable: every transform returns a new dataset.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "PanelDataError",
    "PanelDataset",
    "VariableSpec",
    "WithinTransform",
    "EstimationFrame",
    "load_long_csv",
    "load_wide_csv",
    "write_long_csv",
    "lag",
    "lag_name",
    "within_demean",
    "estimation_frame",
]

LONG_SCHEMA = ("entity", "year", "variable", "value")


class PanelDataError(ValueError):
    """Raised for malformed panel input or an invalid transform request."""


def _frozen(grid: np.ndarray) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    grid.flags.writeable = False
    return grid


@dataclass(frozen=True)
class PanelDataset:
    """Balanced country-by-year panel of named numeric series.

    ``series[name]`` is an (N, T) float grid aligned to ``cross_sections`` and
    ``periods``; NaN marks a masked (missing) cell.
    """

    cross_sections: tuple[str, ...]
    periods: tuple[int, ...]
    series: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        if len(set(self.cross_sections)) != len(self.cross_sections):
            raise PanelDataError("cross-section identifiers must be unique")
        diffs = np.diff(self.periods)
        if len(self.periods) and not np.all(diffs == 1):
            raise PanelDataError("periods must be strictly increasing with unit step")
        n, t = len(self.cross_sections), len(self.periods)
        for name, grid in self.series.items():
            if grid.shape != (n, t):
                raise PanelDataError(
                    f"series {name!r} has shape {grid.shape}, expected {(n, t)}"
                )

    @property
    def n_entities(self) -> int:
        return len(self.cross_sections)

    @property
    def n_periods(self) -> int:
        return len(self.periods)

    def observed(self, var: str) -> np.ndarray:
        """Boolean (N, T) grid, True where the cell holds a value."""
        return ~np.isnan(self.values(var))

    def values(self, var: str) -> np.ndarray:
        if var not in self.series:
            raise PanelDataError(f"unknown variable {var!r}")
        return self.series[var]

    def with_series(self, name: str, grid: np.ndarray) -> "PanelDataset":
        new = dict(self.series)
        new[name] = _frozen(np.array(grid, dtype=float))
        return PanelDataset(self.cross_sections, self.periods, new)

    def entity_index(self, entity: str) -> int:
        try:
            return self.cross_sections.index(entity)
        except ValueError:
            raise PanelDataError(f"unknown entity {entity!r}") from None

    def subset_entities(self, entities) -> "PanelDataset":
        """Panel restricted to the given entities (kept in panel order)."""
        keep = [e for e in self.cross_sections if e in set(entities)]
        missing = set(entities) - set(self.cross_sections)
        if missing:
            raise PanelDataError(f"entities not in panel: {sorted(missing)}")
        rows = [self.entity_index(e) for e in keep]
        series = {k: _frozen(v[rows, :]) for k, v in self.series.items()}
        return PanelDataset(tuple(keep), self.periods, series)


@dataclass(frozen=True)
class VariableSpec:
    """A variable as it enters a regression: name, lag depth and role."""

    name: str
    lag: int = 0
    role: str = "regressor"  # "dependent" | "regressor"

    def __post_init__(self) -> None:
        if self.lag < 0:
            raise PanelDataError(f"lag must be non-negative, got {self.lag}")
        if self.role not in ("dependent", "regressor"):
            raise PanelDataError(f"unknown role {self.role!r}")

    @property
    def label(self) -> str:
        return lag_name(self.name, self.lag)


def lag_name(name: str, k: int) -> str:
    return name if k == 0 else f"{name}(-{k})"


def load_long_csv(path, schema: tuple[str, str, str, str] = LONG_SCHEMA) -> PanelDataset:
    """Read a long-form CSV (entity, year, variable, value) into a balanced panel.

    The panel spans the rectangular hull of observed entities x years; cells
    never observed in the file stay masked. Entities are ordered
    lexicographically, years ascending.
    """
    ent_col, year_col, var_col, val_col = schema
    rows: list[tuple[str, int, str, float]] = []
    seen: set[tuple[str, int, str]] = set()
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not set(schema) <= set(reader.fieldnames):
            raise PanelDataError(
                f"{path}: header must contain columns {schema}, got {reader.fieldnames}"
            )
        for lineno, rec in enumerate(reader, start=2):
            entity = rec[ent_col].strip()
            try:
                year = int(rec[year_col])
            except ValueError:
                raise PanelDataError(f"{path}:{lineno}: non-integer year {rec[year_col]!r}") from None
            variable = rec[var_col].strip()
            raw = rec[val_col].strip()
            if raw == "":
                continue  # blank value row = masked cell
            try:
                value = float(raw)
            except ValueError:
                raise PanelDataError(f"{path}:{lineno}: non-numeric value {raw!r}") from None
            key = (entity, year, variable)
            if key in seen:
                raise PanelDataError(f"{path}: duplicate observation for {key}")
            seen.add(key)
            rows.append((entity, year, variable, value))
    if not rows:
        raise PanelDataError(f"{path}: no observations")
    entities = tuple(sorted({r[0] for r in rows}))
    years = tuple(range(min(r[1] for r in rows), max(r[1] for r in rows) + 1))
    if len(years) < 3:
        raise PanelDataError(f"{path}: need at least 3 periods, found {len(years)}")
    variables = sorted({r[2] for r in rows})
    e_idx = {e: i for i, e in enumerate(entities)}
    y_idx = {y: j for j, y in enumerate(years)}
    series = {
        v: np.full((len(entities), len(years)), np.nan) for v in variables
    }
    for entity, year, variable, value in rows:
        series[variable][e_idx[entity], y_idx[year]] = value
    return PanelDataset(entities, years, {k: _frozen(v) for k, v in series.items()})


def load_wide_csv(path) -> PanelDataset:
    """Read a wide CSV (entity, year, var1, var2, ...); empty cell = masked.

    Thin adapter: rows are rewritten to long form and loaded through the long
    reader's hull/ordering rules.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 3 or header[0] != "entity" or header[1] != "year":
            raise PanelDataError(f"{path}: wide header must start with entity,year")
        variables = header[2:]
        long_rows = []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(header):
                raise PanelDataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(rec)}")
            entity, year = rec[0].strip(), rec[1].strip()
            for var, raw in zip(variables, rec[2:]):
                if raw.strip() == "":
                    continue
                long_rows.append((entity, year, var, raw.strip()))
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(LONG_SCHEMA)
    writer.writerows(long_rows)
    buf.seek(0)
    tmp = path.with_suffix(".long.tmp.csv")
    tmp.write_text(buf.getvalue(), encoding="utf-8")
    try:
        return load_long_csv(tmp)
    finally:
        tmp.unlink(missing_ok=True)


def write_long_csv(panel: PanelDataset, path) -> None:
    """Write the panel in canonical long form; masked cells are omitted.

    Values are written with shortest round-trip float repr so that
    load(write(p)) reproduces every finite cell bit-for-bit.
    """
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LONG_SCHEMA)
        for var in sorted(panel.series):
            grid = panel.series[var]
            for i, entity in enumerate(panel.cross_sections):
                for j, year in enumerate(panel.periods):
                    v = grid[i, j]
                    if not np.isnan(v):
                        writer.writerow([entity, year, var, repr(float(v))])


def lag(panel: PanelDataset, var: str, k: int) -> PanelDataset:
    """Add ``var`` lagged by ``k`` periods as a new masked-head series."""
    if k < 1:
        raise PanelDataError(f"lag depth must be >= 1, got {k}")
    if k >= panel.n_periods:
        raise PanelDataError(
            f"lag {k} >= panel length {panel.n_periods}; nothing would remain"
        )
    src = panel.values(var)
    out = np.full_like(src, np.nan)
    out[:, k:] = src[:, :-k]
    return panel.with_series(lag_name(var, k), out)


@dataclass(frozen=True)
class WithinTransform:
    """Per-entity demeaned series and the group means removed from them."""

    demeaned: dict[str, np.ndarray]
    group_means: dict[str, np.ndarray]


def within_demean(panel: PanelDataset, variables) -> WithinTransform:
    """Subtract each entity's mean from every listed variable.

    Means are taken over each variable's own unmasked cells per entity; every
    entity must contribute at least two values per variable.
    """
    demeaned: dict[str, np.ndarray] = {}
    means: dict[str, np.ndarray] = {}
    for var in variables:
        grid = panel.values(var)
        obs = ~np.isnan(grid)
        counts = obs.sum(axis=1)
        short = counts < 2
        if short.any():
            bad = panel.cross_sections[int(np.argmax(short))]
            raise PanelDataError(
                f"cross-section {bad!r} has fewer than 2 observed values for {var!r}"
            )
        m = np.nansum(grid, axis=1) / counts
        demeaned[var] = grid - m[:, None]
        means[var] = m
    return WithinTransform(demeaned=demeaned, group_means=means)


@dataclass(frozen=True)
class EstimationFrame:
    """Aligned regression rows: y, X and the (entity, period) of every row.

    Rows are entity-major, year-ascending, and keep exactly the cells where
    the dependent and all regressors are simultaneously observed.
    """

    y: np.ndarray
    X: np.ndarray
    y_name: str
    x_names: tuple[str, ...]
    row_entities: np.ndarray  # entity label per row
    row_periods: np.ndarray  # integer year per row
    entities: tuple[str, ...]  # entities contributing at least one row
    entity_counts: dict[str, int] = field(default_factory=dict)

    @property
    def n_rows(self) -> int:
        return len(self.y)

    @property
    def is_balanced(self) -> bool:
        """True when every contributing entity covers the same period set."""
        per_entity = {}
        for e, p in zip(self.row_entities, self.row_periods):
            per_entity.setdefault(e, set()).add(int(p))
        sets = list(per_entity.values())
        return all(s == sets[0] for s in sets)

    @property
    def periods_included(self) -> tuple[int, ...]:
        return tuple(sorted(set(int(p) for p in self.row_periods)))


def _shifted(panel: PanelDataset, spec: VariableSpec) -> np.ndarray:
    grid = panel.values(spec.name)
    if spec.lag == 0:
        return grid
    if spec.lag > panel.n_periods - 2:
        raise PanelDataError(
            f"lag {spec.lag} leaves fewer than 2 usable periods for {spec.name!r}"
        )
    out = np.full_like(grid, np.nan)
    out[:, spec.lag:] = grid[:, : -spec.lag]
    return out


def estimation_frame(panel: PanelDataset, specs) -> EstimationFrame:
    """Build the common-sample regression frame for the given variable specs."""
    specs = list(specs)
    dep = [s for s in specs if s.role == "dependent"]
    regs = [s for s in specs if s.role == "regressor"]
    if len(dep) != 1:
        raise PanelDataError(f"exactly one dependent variable required, got {len(dep)}")
    if not regs:
        raise PanelDataError("at least one regressor required")
    labels = [s.label for s in regs]
    if len(set(labels)) != len(labels):
        raise PanelDataError("regressor labels must be distinct")
    if dep[0].label in labels:
        raise PanelDataError("dependent variable may not appear among the regressors at the same lag")

    grids = [_shifted(panel, dep[0])] + [_shifted(panel, s) for s in regs]
    usable = ~np.isnan(grids[0])
    for g in grids[1:]:
        usable &= ~np.isnan(g)
    if not usable.any():
        raise PanelDataError("estimation frame is empty after alignment")

    ys, xs, row_e, row_p = [], [], [], []
    counts: dict[str, int] = {}
    for i, entity in enumerate(panel.cross_sections):
        js = np.nonzero(usable[i])[0]
        if len(js) == 0:
            continue
        counts[entity] = len(js)
        ys.append(grids[0][i, js])
        xs.append(np.column_stack([g[i, js] for g in grids[1:]]))
        row_e.extend([entity] * len(js))
        row_p.extend(panel.periods[j] for j in js)
    return EstimationFrame(
        y=np.concatenate(ys),
        X=np.vstack(xs),
        y_name=dep[0].label,
        x_names=tuple(labels),
        row_entities=np.array(row_e, dtype=object),
        row_periods=np.array(row_p, dtype=int),
        entities=tuple(e for e in panel.cross_sections if e in counts),
        entity_counts=counts,
    )
