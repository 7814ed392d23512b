import numpy as np
import pytest

from ergomoment.core import Observable, center
from ergomoment.systems import doeblin_chain, iid_chain

SYMMETRIC = [[0.75, 0.25], [0.25, 0.75]]
ASYMMETRIC = [[0.9, 0.1], [0.5, 0.5]]
WALK = [[0.5, 0.5, 0.0], [0.25, 0.5, 0.25], [0.0, 0.5, 0.5]]
FOUR = [[0.1, 0.6, 0.2, 0.1], [0.3, 0.1, 0.4, 0.2], [0.25, 0.25, 0.25, 0.25], [0.5, 0.0, 0.1, 0.4]]


def centred(model, values, q=2.0):
    return center(Observable.from_values(values, q=q), model)


@pytest.fixture
def rademacher():
    m = iid_chain([0.5, 0.5], states=[1, -1])
    return m, centred(m, [1.0, -1.0])


@pytest.fixture
def symmetric():
    m = doeblin_chain(SYMMETRIC)
    return m, centred(m, [1.0, -1.0])


@pytest.fixture
def asymmetric():
    m = doeblin_chain(ASYMMETRIC)
    return m, centred(m, [0.0, 1.0])


@pytest.fixture
def walk():
    m = doeblin_chain(WALK)
    return m, centred(m, [1.0, 0.0, -1.0])


@pytest.fixture
def four_state():
    m = doeblin_chain(FOUR)
    return m, centred(m, [2.0, -1.0, 0.5, -3.0])


@pytest.fixture
def zoo(rademacher, symmetric, asymmetric, walk, four_state):
    return {"rademacher": rademacher, "symmetric": symmetric, "asymmetric": asymmetric,
            "walk": walk, "four_state": four_state}


def random_chain(rng, s):
    P = rng.random((s, s)) + 0.05
    return P / P.sum(axis=1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
