import io
import math

import numpy as np
import pytest

from src.engine.constants import AU, MU_SUN, TWO_PI
from src.engine.state import StateVector
from src.engine.catalog import MAX_ASTEROID_ID, AsteroidCatalog, load_asteroid_catalog, write_asteroid_catalog
from src.engine.verifier import ValidatorConfig

CATALOG_TEXT = (
    "ID epoch(MJD) a(AU) e i(deg) LAN(deg) argperi(deg) M(deg)\n"
    "1 64328 3.073000e+00 1.177000e-01 1.745000e+01 1.403000e+01 1.830000e+00 3.053207e+02\n"
    "2 64328 3.193000e+00 2.341000e-01 2.631000e+01 2.170900e+02 1.312800e+02 1.726297e+02\n"
    "3 64328 3.142000e+00 5.460000e-02 5.280000e+00 2.139500e+02 1.776000e+01 1.329012e+02\n"
)


@pytest.fixture
def catalog_text() -> str:
    return CATALOG_TEXT


@pytest.fixture
def small_catalog() -> AsteroidCatalog:
    return load_asteroid_catalog(io.StringIO(CATALOG_TEXT))


@pytest.fixture
def circular_state() -> StateVector:
    """1 AU circular orbit in the ecliptic, 1000 kg."""
    return StateVector([AU, 0.0, 0.0], [0.0, math.sqrt(MU_SUN / AU), 0.0], 64328.0, 1000.0)


@pytest.fixture
def elliptic_state() -> StateVector:
    return StateVector([1.1 * AU, 0.2 * AU, 0.05 * AU], [-4.0, 31.0, 1.5], 64500.0, 2000.0)


@pytest.fixture
def config() -> ValidatorConfig:
    return ValidatorConfig()



@pytest.fixture(scope="session")
def full_catalog_path(tmp_path_factory) -> str:
    """Every ID 1..60000 on random main-belt orbits, written in the competition format."""
    rng = np.random.default_rng(12)
    count = MAX_ASTEROID_ID
    elements = np.column_stack(
        [
            rng.uniform(2.2, 3.3, count) * AU,
            rng.uniform(0.0, 0.3, count),
            rng.uniform(0.0, math.radians(30.0), count),
            rng.uniform(0.0, TWO_PI, count),
            rng.uniform(0.0, TWO_PI, count),
            rng.uniform(0.0, TWO_PI, count),
        ]
    )
    path = tmp_path_factory.mktemp("catalog") / "asteroids.txt"
    with open(path, "w", encoding="utf-8") as file:
        write_asteroid_catalog(AsteroidCatalog(range(1, count + 1), elements), file)
    return str(path)


@pytest.fixture(scope="session")
def full_catalog(full_catalog_path) -> AsteroidCatalog:
    return load_asteroid_catalog(full_catalog_path)
