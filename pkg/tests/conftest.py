import os

# Tests never write to the real ledger unless they opt in
os.environ.setdefault("LEDGER_ENABLED", "false")
os.environ.setdefault("LOG_DIR", os.path.join(os.path.dirname(__file__), ".logs"))

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from app.config import get_settings  # noqa: E402
from app.core.curves import LaurentMap, ellipse, from_laurent  # noqa: E402
from app.core.singlelayer import ForwardModel  # noqa: E402

TABLE_COEFFICIENTS = [0.5, -1.0, 0.085, -0.06j, -0.035, 0.06j, 0.0, -0.01j, -0.005]
CONFIG_DIR = os.path.join(os.path.dirname(os.path.dirname(__file__)), "configs")


@pytest.fixture(autouse=True)
def fresh_settings():
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture(scope="session")
def table_map() -> LaurentMap:
    return LaurentMap.from_coefficients(TABLE_COEFFICIENTS)


@pytest.fixture(scope="session")
def benchmark_model(table_map) -> ForwardModel:
    """Ellipse 1.9 x 1.1 around the table cavity, N = 256 on both boundaries"""
    return ForwardModel.build(ellipse(1.9, 1.1, 256), from_laurent(table_map, 256))


@pytest.fixture(scope="session")
def annulus_model() -> ForwardModel:
    """Concentric circles of radii 0.4 and 0.1, no rescaling"""
    outer = from_laurent(LaurentMap(0.4), 128)
    inner = from_laurent(LaurentMap(0.1), 128)
    return ForwardModel.build(outer, inner, rescale=False)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def config_dir() -> str:
    return CONFIG_DIR


@pytest.fixture
def random_map(rng):
    return lambda order, **kwargs: make_random_map(rng, order, **kwargs)


def make_random_map(rng, order: int, a1_range=(0.3, 1.0), center_radius=0.5) -> LaurentMap:
    """Small random perturbation of a disk; stays univalent since sum m |a_-m| < a1"""
    a1 = rng.uniform(*a1_range)
    a0 = center_radius * rng.uniform() * np.exp(2j * np.pi * rng.uniform())
    budget = 0.4 * a1
    negative = []
    for m in range(1, order + 1):
        magnitude = rng.uniform(0, budget / (order * m))
        negative.append(magnitude * np.exp(2j * np.pi * rng.uniform()))
    return LaurentMap(a1, a0, tuple(negative))
