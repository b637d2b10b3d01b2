"""Pipeline commands: cluster, unitroot, estimate, diagnose, replicate.

Defaults reproduce the bundled two-cluster configuration end to end: median
split of the institutions scores, the 12-slot stationarity battery per
variable and cluster, one-step cross-section-weighted EGLS with fixed
effects and White cross-section covariance, and the assumption battery.

Exit codes: 0 success, 1 partial (some rows or one cluster errored),
2 input/config error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from . import JSON_SCHEMA_VERSION, __version__
from .cluster import (
    ClusterError,
    load_scores_csv,
    median_split,
    subindex_stability,
    write_assignment_csv,
    write_stability_csv,
    SUBINDEX_NAMES,
)
from .diagnostics import DiagnosticError, run_diagnostics
from .estimators import (
    EstimationError,
    EstimationSpec,
    fixed_effects_within,
    panel_egls_fe,
    pooled_ols,
    random_effects_swamy_arora,
)
from .linreg import LinAlgSpecError
from .paneldata import PanelDataError, PanelDataset, VariableSpec, load_long_csv
from .report import (
    battery_to_csv_rows,
    battery_to_dict,
    diagnostics_to_csv_rows,
    diagnostics_to_dict,
    dump_json,
    estimate_to_csv_rows,
    estimate_to_dict,
    render_battery_text,
    render_diagnostics_text,
    render_estimate_text,
)
from .unitroot import UnitRootError, summary_battery

__all__ = ["RunConfig", "main"]

DATA_DIR = Path(__file__).parent / "data"
DEFAULT_PANEL = DATA_DIR / "synthetic_panel.csv"
DEFAULT_SCORES = DATA_DIR / "wef_institutions_2017_2018.csv"
BENCHMARKS = DATA_DIR / "benchmarks.json"
OUT_ENV_VAR = "INEQPANEL_OUT"

DEFAULT_REGRESSORS = ("gini:1", "poverty:0", "neetsrate:1", "social:0", "creditb:0")


@dataclass(frozen=True)
class RunConfig:
    """Pipeline configuration; the defaults mirror the bundled study setup."""

    data: str = str(DEFAULT_PANEL)
    scores: str = str(DEFAULT_SCORES)
    out: str = ""
    dependent: str = "gini"
    regressors: tuple[str, ...] = DEFAULT_REGRESSORS
    criterion: str = "pillar"
    threshold: float = 0.05
    max_lag: int = 1
    sigma_divisor: str = "periods"
    covariance: str = "white_cross_section"
    formats: tuple[str, ...] = ("text", "csv", "json")
    seed: int = 0
    benchmark: bool = False

    def out_dir(self) -> Path:
        if self.out:
            return Path(self.out)
        return Path(os.environ.get(OUT_ENV_VAR, "ineqpanel_out"))


class ConfigError(ValueError):
    pass


def _parse_variable(token: str) -> tuple[str, int]:
    name, _, lag = token.partition(":")
    name = name.strip()
    if not name:
        raise ConfigError(f"empty variable name in {token!r}")
    if lag.strip() == "":
        return name, 0
    try:
        k = int(lag)
    except ValueError:
        raise ConfigError(f"bad lag in variable token {token!r}") from None
    if k < 0:
        raise ConfigError(f"negative lag in variable token {token!r}")
    return name, k


def build_estimation_spec(config: RunConfig) -> EstimationSpec:
    if not config.regressors:
        raise ConfigError("empty regressor list")
    dep_name, dep_lag = _parse_variable(config.dependent)
    regs = tuple(
        VariableSpec(name, lag=k, role="regressor")
        for name, k in (_parse_variable(t) for t in config.regressors)
    )
    return EstimationSpec(
        dependent=VariableSpec(dep_name, lag=dep_lag, role="dependent"),
        regressors=regs,
        effects="cross_section_fixed",
        weighting="cross_section_weights",
        covariance=config.covariance,
    )


def load_config_file(path) -> dict:
    """Flat key = value lines; # starts a comment."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def config_from_sources(file_values: dict, args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    updates: dict = {}
    str_keys = ("data", "scores", "out", "dependent", "criterion", "sigma_divisor", "covariance")
    for key in str_keys:
        if key in file_values:
            updates[key] = file_values[key]
    if "regressors" in file_values:
        updates["regressors"] = tuple(t.strip() for t in file_values["regressors"].split(",") if t.strip())
    if "threshold" in file_values:
        updates["threshold"] = float(file_values["threshold"])
    if "max_lag" in file_values:
        updates["max_lag"] = int(file_values["max_lag"])
    if "format" in file_values:
        updates["formats"] = tuple(t.strip() for t in file_values["format"].split(",") if t.strip())
    if "seed" in file_values:
        updates["seed"] = int(file_values["seed"])
    cfg = replace(cfg, **updates)

    cli_updates: dict = {}
    for key in ("data", "scores", "out", "dependent", "criterion", "sigma_divisor", "covariance"):
        v = getattr(args, key, None)
        if v is not None:
            cli_updates[key] = v
    if getattr(args, "regressors", None):
        cli_updates["regressors"] = tuple(args.regressors)
    if getattr(args, "threshold", None) is not None:
        cli_updates["threshold"] = args.threshold
    if getattr(args, "max_lag", None) is not None:
        cli_updates["max_lag"] = args.max_lag
    if getattr(args, "format", None):
        cli_updates["formats"] = tuple(args.format.split(","))
    if getattr(args, "seed", None) is not None:
        cli_updates["seed"] = args.seed
    if getattr(args, "benchmark", False):
        cli_updates["benchmark"] = True
    cfg = replace(cfg, **cli_updates)

    unknown = [f for f in cfg.formats if f not in ("text", "csv", "json")]
    if unknown:
        raise ConfigError(f"unknown report formats: {unknown}")
    return cfg


def _write(path: Path, content: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(content, encoding="utf-8", newline="\n")


def _write_csv(path: Path, rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)


def _clusters(config: RunConfig, panel: PanelDataset):
    """(assignment, {label: sub-panel}) from the scores file."""
    records = load_scores_csv(config.scores)
    if config.criterion == "pillar":
        pairs = [(r.country, r.pillar) for r in records]
    else:
        if config.criterion not in SUBINDEX_NAMES:
            raise ConfigError(f"unknown cluster criterion {config.criterion!r}")
        pairs = [(r.country, r.subindices[config.criterion]) for r in records]
    assignment = median_split(pairs, criterion=config.criterion)
    panels: dict[str, PanelDataset] = {}
    for label, members in (("inclusive", assignment.inclusive), ("extractive", assignment.extractive)):
        present = [e for e in members if e in panel.cross_sections]
        if len(present) >= 2:
            panels[label] = panel.subset_entities(present)
    if not panels:
        raise ConfigError("no cluster has at least 2 entities present in the panel")
    return assignment, panels


def cmd_cluster(config: RunConfig) -> int:
    out = config.out_dir()
    try:
        records = load_scores_csv(config.scores)
        if config.criterion == "pillar":
            pairs = [(r.country, r.pillar) for r in records]
        else:
            if config.criterion not in SUBINDEX_NAMES:
                raise ConfigError(f"unknown cluster criterion {config.criterion!r}")
            pairs = [(r.country, r.subindices[config.criterion]) for r in records]
        assignment = median_split(pairs, criterion=config.criterion)
        stability = subindex_stability(records)
    except (ClusterError, ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out.mkdir(parents=True, exist_ok=True)
    write_assignment_csv(assignment, out / "cluster_assignment.csv")
    write_stability_csv(stability, out / "cluster_stability.csv")
    if "json" in config.formats:
        payload = {
            "schema_version": JSON_SCHEMA_VERSION,
            "criterion": assignment.criterion,
            "threshold": assignment.threshold,
            "inclusive": list(assignment.inclusive),
            "extractive": list(assignment.extractive),
            "fully_stable": list(stability.fully_stable),
            "matching_subindices": list(stability.matching_subindices),
        }
        _write(out / "cluster_assignment.json", dump_json(payload))
    if "text" in config.formats:
        lines = [
            f"Cluster criterion: {assignment.criterion}",
            f"Median threshold: {assignment.threshold!r}",
            f"Inclusive ({len(assignment.inclusive)}): {', '.join(assignment.inclusive)}",
            f"Extractive ({len(assignment.extractive)}): {', '.join(assignment.extractive)}",
            f"Stable across all criteria: {', '.join(stability.fully_stable)}",
            f"Sub-indices matching the main split: {', '.join(stability.matching_subindices)}",
            "",
        ]
        _write(out / "cluster_assignment.txt", "\n".join(lines))
    print(f"cluster: wrote {out}/cluster_assignment.* ({len(assignment.inclusive)}/{len(assignment.extractive)} split)")
    return 0


def _battery_variables(config: RunConfig, panel: PanelDataset) -> list[tuple[str, str, int]]:
    """(report name, source variable, lag) for dependent + regressors."""
    out = []
    dep_name, dep_lag = _parse_variable(config.dependent)
    out.append((dep_name if dep_lag == 0 else f"{dep_name}(-{dep_lag})", dep_name, dep_lag))
    for token in config.regressors:
        name, k = _parse_variable(token)
        out.append((name if k == 0 else f"{name}(-{k})", name, k))
    return out


def cmd_unitroot(config: RunConfig) -> int:
    out = config.out_dir()
    try:
        if not config.regressors:
            raise ConfigError("empty regressor list")
        panel = load_long_csv(config.data)
        _, panels = _clusters(config, panel)
    except (PanelDataError, ClusterError, ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    from .paneldata import lag as add_lag

    row_errors = 0
    for label, sub in panels.items():
        verdicts = []
        for report_name, source, k in _battery_variables(config, sub):
            try:
                work = add_lag(sub, source, k) if k > 0 else sub
                verdicts.append(
                    summary_battery(work, report_name, max_lag=config.max_lag, threshold=config.threshold)
                )
            except (PanelDataError, UnitRootError) as exc:
                row_errors += 1
                print(f"unitroot[{label}] {report_name}: {exc}", file=sys.stderr)
        title = f"Stationarity battery - {label} cluster (threshold {config.threshold})"
        if "text" in config.formats:
            _write(out / f"unitroot_{label}.txt", render_battery_text(verdicts, title))
        if "csv" in config.formats:
            _write_csv(out / f"unitroot_{label}.csv", battery_to_csv_rows(verdicts, label))
        if "json" in config.formats:
            _write(out / f"unitroot_{label}.json", dump_json(battery_to_dict(verdicts, label)))
        print(f"unitroot: wrote {out}/unitroot_{label}.* ({len(verdicts)} variables)")
    return 1 if row_errors else 0


def _estimate_cluster(config: RunConfig, sub: PanelDataset):
    spec = build_estimation_spec(config)
    return panel_egls_fe(sub, spec, sigma_divisor=config.sigma_divisor)


def cmd_estimate(config: RunConfig) -> int:
    out = config.out_dir()
    try:
        panel = load_long_csv(config.data)
        _, panels = _clusters(config, panel)
        spec = build_estimation_spec(config)
    except (PanelDataError, ClusterError, ConfigError, EstimationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    failures = 0
    for label, sub in panels.items():
        title = f"Estimation - {label} cluster"
        try:
            result = _estimate_cluster(config, sub)
        except (EstimationError, PanelDataError, LinAlgSpecError) as exc:
            failures += 1
            msg = f"{title}\nestimation failed: {exc}\n"
            if "text" in config.formats:
                _write(out / f"estimate_{label}.txt", msg)
            if "json" in config.formats:
                _write(
                    out / f"estimate_{label}.json",
                    dump_json({"label": label, "error": str(exc)}),
                )
            print(f"estimate[{label}]: {exc}", file=sys.stderr)
            continue
        dep = spec.dependent.label
        if "text" in config.formats:
            _write(out / f"estimate_{label}.txt", render_estimate_text(result, dep, title))
        if "json" in config.formats:
            _write(out / f"estimate_{label}.json", dump_json(estimate_to_dict(result, dep, label)))
        if "csv" in config.formats:
            _write_csv(out / f"estimate_{label}.csv", estimate_to_csv_rows(result, dep, label))
        print(f"estimate: wrote {out}/estimate_{label}.*")
    # a single failed cluster is carried in its report section; the command
    # only exits nonzero when no cluster could be estimated at all
    return 2 if failures == len(panels) else 0


def cmd_diagnose(config: RunConfig) -> int:
    out = config.out_dir()
    try:
        panel = load_long_csv(config.data)
        _, panels = _clusters(config, panel)
        spec = build_estimation_spec(config)
    except (PanelDataError, ClusterError, ConfigError, EstimationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    failures = 0
    for label, sub in panels.items():
        title = f"Assumption battery - {label} cluster"
        try:
            classical = replace(spec, weighting="none", covariance="classical")
            fe = fixed_effects_within(sub, classical)
            pooled = pooled_ols(sub, replace(classical, effects="none"))
            re, _ = random_effects_swamy_arora(sub, replace(classical, effects="cross_section_random"))
            egls = panel_egls_fe(sub, spec, sigma_divisor=config.sigma_divisor)
            report = run_diagnostics(fe, pooled, re, residual_source=egls)
        except (DiagnosticError, EstimationError, PanelDataError, LinAlgSpecError) as exc:
            failures += 1
            print(f"diagnose[{label}]: {exc}", file=sys.stderr)
            if "text" in config.formats:
                _write(out / f"diagnostics_{label}.txt", f"{title}\ndiagnostics failed: {exc}\n")
            continue
        if "text" in config.formats:
            _write(out / f"diagnostics_{label}.txt", render_diagnostics_text(report, title))
        if "json" in config.formats:
            _write(out / f"diagnostics_{label}.json", dump_json(diagnostics_to_dict(report, label)))
        if "csv" in config.formats:
            _write_csv(out / f"diagnostics_{label}.csv", diagnostics_to_csv_rows(report, label))
        print(f"diagnose: wrote {out}/diagnostics_{label}.*")
    if failures == len(panels):
        return 2
    return 0 if failures == 0 else 1


def _sha256(path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


def _benchmark_diff(config: RunConfig, out: Path) -> None:
    """Side-by-side deltas against the embedded reference estimates.

    Differences are reported, never fatal: the reference data vintage cannot
    be regenerated from live sources.
    """
    targets = json.loads(BENCHMARKS.read_text(encoding="utf-8"))
    lines = ["Benchmark comparison (reference estimates vs this run)", ""]
    payload: dict = {"schema_version": JSON_SCHEMA_VERSION, "clusters": {}}
    for label in ("inclusive", "extractive"):
        est_path = out / f"estimate_{label}.json"
        if not est_path.exists():
            continue
        run = json.loads(est_path.read_text(encoding="utf-8"))
        if "error" in run:
            continue
        got = {row["variable"]: row["coefficient"] for row in run["coefficients"]}
        want = targets["estimates"][label]["coefficients"]
        rows = []
        lines.append(f"[{label}] {'variable':<16}{'reference':>12}{'this run':>12}{'delta':>12}  status")
        for var, ref in want.items():
            if var not in got:
                continue
            delta = got[var] - ref
            status = "ok" if abs(delta) <= 0.05 else "warn"
            lines.append(f"  {var:<16}{ref:>12.6f}{got[var]:>12.6f}{delta:>+12.6f}  {status}")
            rows.append({"variable": var, "reference": ref, "estimate": got[var], "delta": delta, "status": status})
        lines.append("")
        payload["clusters"][label] = rows
    _write(out / "benchmark_diff.txt", "\n".join(lines) + "\n")
    _write(out / "benchmark_diff.json", dump_json(payload))
    print(f"replicate: wrote {out}/benchmark_diff.*")


def cmd_replicate(config: RunConfig) -> int:
    out = config.out_dir()
    manifest: dict = {
        "schema_version": JSON_SCHEMA_VERSION,
        "package_version": __version__,
        "config": {
            "data": str(config.data),
            "scores": str(config.scores),
            "dependent": config.dependent,
            "regressors": list(config.regressors),
            "criterion": config.criterion,
            "threshold": config.threshold,
            "max_lag": config.max_lag,
            "sigma_divisor": config.sigma_divisor,
            "covariance": config.covariance,
            "formats": list(config.formats),
        },
        "inputs": {},
        "stages": {},
    }
    try:
        manifest["inputs"]["data"] = {"path": str(config.data), "sha256": _sha256(config.data)}
        manifest["inputs"]["scores"] = {"path": str(config.scores), "sha256": _sha256(config.scores)}
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        manifest["stages"] = {}
        out.mkdir(parents=True, exist_ok=True)
        _write(out / "manifest.json", dump_json(manifest))
        return 2

    stages = (
        ("cluster", cmd_cluster),
        ("unitroot", cmd_unitroot),
        ("estimate", cmd_estimate),
        ("diagnose", cmd_diagnose),
    )
    worst = 0
    for name, fn in stages:
        code = fn(config)
        manifest["stages"][name] = "ok" if code == 0 else ("partial" if code == 1 else "failed")
        worst = max(worst, code)
        if code == 2:
            break
    if config.benchmark and worst < 2:
        _benchmark_diff(config, out)
    _write(out / "manifest.json", dump_json(manifest))
    summary = ["Pipeline summary", ""]
    summary += [f"  {name}: {status}" for name, status in manifest["stages"].items()]
    summary.append("")
    _write(out / "summary.txt", "\n".join(summary))
    print(f"replicate: wrote {out}/manifest.json")
    return worst


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ineqpanel",
        description="Two-cluster panel pipeline: clustering, stationarity, EGLS estimation, diagnostics.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("cluster", "median-split countries on the institutions scores"),
        ("unitroot", "run the 12-slot stationarity battery per cluster and variable"),
        ("estimate", "fit the weighted fixed-effects model per cluster"),
        ("diagnose", "run the assumption battery per cluster"),
        ("replicate", "full pipeline into one reproducible output directory"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--data", help="long-form panel CSV (entity,year,variable,value)")
        p.add_argument("--scores", help="scores CSV (country,pillar,sub01..sub21)")
        p.add_argument("--out", help=f"output directory (default ${OUT_ENV_VAR} or ./ineqpanel_out)")
        p.add_argument("--format", help="comma list of report formats: text,csv,json")
        p.add_argument("--seed", type=int, help="seed for Monte Carlo tooling")
        p.add_argument("--dependent", help="dependent variable, name[:lag]")
        p.add_argument("--regressors", nargs="+", help="regressor tokens, name[:lag]")
        p.add_argument("--criterion", help="cluster criterion: pillar or a sub-index name")
        p.add_argument("--threshold", type=float, help="stationarity vote threshold")
        p.add_argument("--max-lag", dest="max_lag", type=int, help="maximum augmentation lag")
        p.add_argument("--sigma-divisor", dest="sigma_divisor", choices=("periods", "periods_minus_k"))
        p.add_argument("--covariance", choices=("classical", "white_cross_section"))
        if name == "replicate":
            p.add_argument("--benchmark", action="store_true", help="diff against the embedded reference estimates")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        file_values = load_config_file(args.config) if args.config else {}
        config = config_from_sources(file_values, args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    command = {
        "cluster": cmd_cluster,
        "unitroot": cmd_unitroot,
        "estimate": cmd_estimate,
        "diagnose": cmd_diagnose,
        "replicate": cmd_replicate,
    }[args.command]
    try:
        return command(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
