"""
Shared fixtures for the test suite.
"""

import pytest

from acceptance import GENERALIZED, NOREF
from model_zoo import (
    GaussianRandomWalk, IndependentGaussian, bimodal_target, levy_target,
    make_weight, smiling_face_target,
)
from sampler import SamplerConfig
from sampling_model import RngStream


@pytest.fixture
def bimodal():
    return bimodal_target()


@pytest.fixture
def levy():
    return levy_target(0.0, 2.0)


@pytest.fixture
def smiling():
    return smiling_face_target()


@pytest.fixture
def rng():
    return RngStream(seed=12345, stream_id=0)


@pytest.fixture
def importance():
    return make_weight("importance")


@pytest.fixture
def rw_config(importance):
    """Five random walk tries with sigma=2, generalized acceptance"""
    return SamplerConfig.repeated(GaussianRandomWalk(2.0), 5, importance, GENERALIZED)


@pytest.fixture
def ind_noref_config(importance):
    """Five independent tries, no reference points"""
    return SamplerConfig.repeated(IndependentGaussian(mu=(0.0,), sigma=3.0), 5, importance, NOREF)
