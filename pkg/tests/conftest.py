import numpy as np
import pytest

from cocyclelab import CocycleField, SuspensionModel, TrigPolynomial
from cocyclelab.base import RoofFunction
from cocyclelab.config import DEFAULT_ROTATION, ExperimentConfig

# symplectic shear [[I, S], [0, I]] with S = [[0, .5], [.5, 0]]; couples the two planes
SHEAR = "constant 1.0 0.0 0.0 0.5 0.0 1.0 0.5 0.0 0.0 0.0 1.0 0.0 0.0 0.0 0.0 1.0"


@pytest.fixture(scope="session")
def model():
    return SuspensionModel()


@pytest.fixture(scope="session")
def wavy_model():
    """Cat map under a non-constant roof."""
    return SuspensionModel(roof=RoofFunction(TrigPolynomial.parse("1.0 + 0.2*cos(1,0,0) + 0.1*sin(0,1,0)")))


@pytest.fixture(scope="session")
def rotation_cocycle(model):
    return CocycleField.from_config(model, {"d": "1", "alpha": "1.0", "term0": DEFAULT_ROTATION})


@pytest.fixture(scope="session")
def sp4_cocycle(model):
    """Non-commuting Sp(4) cocycle; the shear keeps it from splitting into two Sp(2) copies."""
    return CocycleField.from_config(
        model,
        {
            "d": "2",
            "alpha": "1.0",
            "term0": "rotation 0.3*sin(1,0,0) + 0.2*cos(0,1,1)",
            "term1": "diagonal 0.2*cos(1,1,0)",
            "term2": SHEAR,
        },
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def default_config():
    return ExperimentConfig()
