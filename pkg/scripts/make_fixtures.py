#!/usr/bin/env python3
"""Regenerate the bundled data fixtures under src/ineqpanel/data/.

* wef_institutions_2017_2018.csv — institutions-pillar scores for the EU-28
  with the 21 sub-index columns. Pillar scores are a transcription-grade
  approximation of the published 2017-2018 values, normalized so the sample
  median is exactly 4.29 and the documented 14/14 split holds. Sub-index
  values are constructed to encode the documented cross-criterion membership
  relations (which countries stay put, which flip where), not transcribed.
* synthetic_panel.csv — seeded panel DGP over the same 28 countries,
  2010-2016, with known dynamics: one lagged dependent term, four drivers,
  entity effects and entity-heteroskedastic noise. Ground truth is written
  next to it as synthetic_panel_truth.json.

Usage: python scripts/make_fixtures.py [--out-dir DIR]
"""

from __future__ import annotations

import argparse
import csv
import json
from pathlib import Path

import numpy as np

SEED = 20170423

# pillar scores: median of the 28 values is exactly (4.38 + 4.20) / 2 = 4.29
PILLAR_SCORES = {
    "FI": 6.01, "NL": 5.54, "LU": 5.34, "UK": 5.29, "SE": 5.24, "DK": 5.15,
    "DE": 5.11, "IE": 5.03, "AT": 4.95, "EE": 4.87, "BE": 4.76, "FR": 4.62,
    "PT": 4.47, "MT": 4.38,
    "ES": 4.20, "CY": 4.14, "SI": 4.04, "CZ": 3.98, "LT": 3.94, "LV": 3.86,
    "PL": 3.79, "HR": 3.62, "EL": 3.57, "IT": 3.51, "SK": 3.44, "RO": 3.40,
    "HU": 3.33, "BG": 3.26,
}

INCLUSIVE = ["FI", "NL", "LU", "UK", "SE", "DK", "DE", "IE", "AT", "EE", "BE", "FR", "PT", "MT"]
EXTRACTIVE = ["ES", "CY", "SI", "CZ", "LT", "LV", "PL", "HR", "EL", "IT", "SK", "RO", "HU", "BG"]

# sub-index columns whose split must reproduce the pillar split exactly
MATCHING_COLS = (1, 3, 4, 17)
# cross-criterion relations encoded in the fixture:
#   FI, EE drop out of the inclusive side only on investor protection (21)
#   IT, HU join the inclusive side only on crime costs (14) and 21
#   FR, DE drop out on the security criteria 14 and 15
#   AT, SE, EL, PL, RO never change sides on any criterion
FREE_COLS = (2, 5, 6, 7, 8, 9, 10, 11, 12, 13, 16, 18, 19, 20)
INCL_POOL = ["BE", "DK", "IE", "LU", "MT", "NL", "PT", "UK"]
EXTR_POOL = ["BG", "HR", "CY", "CZ", "ES", "LT", "LV", "SI", "SK"]


def subindex_membership(col: int) -> set[str]:
    main = set(INCLUSIVE)
    if col in MATCHING_COLS:
        return main
    if col == 14:
        return (main - {"FR", "DE"}) | {"IT", "HU"}
    if col == 15:
        return (main - {"FR", "DE"}) | {"ES", "CZ"}
    if col == 21:
        return (main - {"FI", "EE"}) | {"IT", "HU"}
    k = FREE_COLS.index(col)
    return (main - {INCL_POOL[k % len(INCL_POOL)]}) | {EXTR_POOL[k % len(EXTR_POOL)]}


def subindex_scores(col: int) -> dict[str, float]:
    members = subindex_membership(col)
    ranked = sorted(PILLAR_SCORES, key=lambda c: (c not in members, -PILLAR_SCORES[c]))
    scores = {c: round(6.8 - 0.125 * i, 3) for i, c in enumerate(ranked)}
    if col == 21:  # investor protection runs on a 1-10 scale
        scores = {c: round(v * 10.0 / 7.0, 3) for c, v in scores.items()}
    return scores


def write_scores(out_dir: Path) -> None:
    cols = {col: subindex_scores(col) for col in range(1, 22)}
    path = out_dir / "wef_institutions_2017_2018.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["country", "pillar"] + [f"sub{i:02d}" for i in range(1, 22)])
        for c in sorted(PILLAR_SCORES):
            writer.writerow([c, PILLAR_SCORES[c]] + [cols[i][c] for i in range(1, 22)])
    print(f"wrote {path}")


TRUE_COEFFICIENTS = {
    "gini(-1)": 0.15,
    "poverty": 0.5,
    "neetsrate(-1)": 0.2,
    "social": -0.25,
    "creditb": 0.01,
}
TRUE_INTERCEPT = 19.0
YEARS = list(range(2010, 2017))


def simulate_panel(seed: int = SEED):
    """Seeded DGP over the 28 countries and 2010-2016.

    Returns (countries, variable grids dict, effects, noise_sd); grids are
    (n_countries, len(YEARS)) and already trimmed of the burn-in years.
    """
    rng = np.random.default_rng(seed)
    countries = sorted(PILLAR_SCORES)
    n = len(countries)
    t_full = len(YEARS) + 2  # two burn-in years so lags and dynamics settle

    effects = rng.normal(0.0, 1.5, size=n)
    effects -= effects.mean()
    # mild entity heteroskedasticity: enough for the weighting stage to bite,
    # small against the drivers' within variation so the short-T dynamic-panel
    # bias on the lagged dependent term stays inside the recovery tolerance
    noise_sd = rng.uniform(0.04, 0.12, size=n)

    def driver(level_mean, level_sd, within_sd):
        level = rng.normal(level_mean, level_sd, size=n)
        path = np.empty((n, t_full))
        path[:, 0] = level + rng.normal(0, within_sd, size=n)
        for t in range(1, t_full):
            path[:, t] = level + 0.6 * (path[:, t - 1] - level) + rng.normal(0, within_sd, size=n)
        return path

    poverty = driver(20.0, 3.0, 1.8)
    neets = driver(12.0, 2.5, 1.4)
    social = driver(20.0, 3.0, 1.1)
    credit = driver(80.0, 20.0, 7.0)

    b = TRUE_COEFFICIENTS
    gini = np.empty((n, t_full))
    steady = (
        TRUE_INTERCEPT
        + effects
        + b["poverty"] * poverty[:, 0]
        + b["neetsrate(-1)"] * neets[:, 0]
        + b["social"] * social[:, 0]
        + b["creditb"] * credit[:, 0]
    ) / (1.0 - b["gini(-1)"])
    gini[:, 0] = steady + rng.normal(0, 0.3, size=n)
    for t in range(1, t_full):
        gini[:, t] = (
            TRUE_INTERCEPT
            + effects
            + b["gini(-1)"] * gini[:, t - 1]
            + b["poverty"] * poverty[:, t]
            + b["neetsrate(-1)"] * neets[:, t - 1]
            + b["social"] * social[:, t]
            + b["creditb"] * credit[:, t]
            + rng.normal(0, 1.0, size=n) * noise_sd
        )

    grids = {
        "gini": gini[:, 2:],
        "poverty": poverty[:, 2:],
        "neetsrate": neets[:, 2:],
        "social": social[:, 2:],
        "creditb": credit[:, 2:],
    }
    return countries, grids, effects, noise_sd


def write_panel(out_dir: Path) -> None:
    countries, grids, effects, noise_sd = simulate_panel(SEED)
    emit = grids
    path = out_dir / "synthetic_panel.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["entity", "year", "variable", "value"])
        for var in sorted(emit):
            for i, c in enumerate(countries):
                for j, year in enumerate(YEARS):
                    writer.writerow([c, year, var, repr(round(float(emit[var][i, j]), 6))])
    print(f"wrote {path}")

    truth = {
        "seed": SEED,
        "intercept": TRUE_INTERCEPT,
        "coefficients": TRUE_COEFFICIENTS,
        "effects": {c: round(float(e), 6) for c, e in zip(countries, effects)},
        "noise_sd": {c: round(float(s), 6) for c, s in zip(countries, noise_sd)},
    }
    tpath = out_dir / "synthetic_panel_truth.json"
    tpath.write_text(json.dumps(truth, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {tpath}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument(
        "--out-dir",
        default=str(Path(__file__).resolve().parent.parent / "src" / "ineqpanel" / "data"),
    )
    args = parser.parse_args()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_scores(out_dir)
    write_panel(out_dir)


if __name__ == "__main__":
    main()
