import sys
from pathlib import Path

import numpy as np
import pytest

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "scripts"))

from ineqpanel.paneldata import PanelDataset, VariableSpec  # noqa: E402
from ineqpanel.estimators import EstimationSpec  # noqa: E402

DATA_DIR = REPO / "src" / "ineqpanel" / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def scores_path() -> Path:
    return DATA_DIR / "wef_institutions_2017_2018.csv"


@pytest.fixture(scope="session")
def panel_path() -> Path:
    return DATA_DIR / "synthetic_panel.csv"


def make_panel(seed: int = 0, n: int = 6, t: int = 8, entity_effects=None, noise_sd=0.5,
               slope: float = 1.5) -> PanelDataset:
    """Small seeded one-regressor panel with known slope and entity effects."""
    rng = np.random.default_rng(seed)
    effects = np.asarray(entity_effects) if entity_effects is not None else rng.normal(0, 2, n)
    x = rng.normal(0, 1, size=(n, t))
    y = effects[:, None] + slope * x + rng.normal(0, noise_sd, size=(n, t))
    entities = tuple(f"E{i:02d}" for i in range(n))
    return PanelDataset(entities, tuple(range(2000, 2000 + t)), {"y": y, "x": x})


def one_regressor_spec(**overrides) -> EstimationSpec:
    base = dict(
        dependent=VariableSpec("y", role="dependent"),
        regressors=(VariableSpec("x"),),
        effects="cross_section_fixed",
        weighting="none",
        covariance="classical",
    )
    base.update(overrides)
    return EstimationSpec(**base)


@pytest.fixture
def two_entity_panel() -> PanelDataset:
    """Entity A: (x, y) = (0,1), (1,3); entity B: (0,5), (1,6)."""
    return PanelDataset(
        ("A", "B"),
        (2000, 2001),
        {
            "y": np.array([[1.0, 3.0], [5.0, 6.0]]),
            "x": np.array([[0.0, 1.0], [0.0, 1.0]]),
        },
    )
