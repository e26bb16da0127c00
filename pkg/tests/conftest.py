import numpy as np
import pytest

from qybe import DeformParams, OSPQ12, SLQ2


@pytest.fixture(scope="session")
def params_sl():
    return DeformParams(q=1.3, algebra=SLQ2)


@pytest.fixture(scope="session")
def params_osp():
    return DeformParams(q=1.3, algebra=OSPQ12)


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def params_for(algebra):
    return DeformParams(q=1.3, algebra=algebra)
