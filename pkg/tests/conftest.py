import numpy as np
import pytest

from dlmcov.beliefs import shampoo_beliefs
from dlmcov.model import ModelSpec, shampoo_model


@pytest.fixture(scope="session")
def example_model():
    return shampoo_model()


@pytest.fixture(scope="session")
def example_beliefs():
    return shampoo_beliefs()


def random_psd(rng, d, rank=None, scale=1.0):
    rank = d if rank is None else rank
    A = rng.standard_normal((d, rank))
    return scale * A @ A.T


def random_vec_cov(rng, d):
    """Random PSD vec-covariance of a symmetric random matrix."""
    from dlmcov.products import symmetric_basis

    B = symmetric_basis(d)
    k = B.shape[1]
    L = rng.standard_normal((k, k))
    return B @ (L @ L.T) @ B.T


def random_beliefs(rng, r, p=None):
    from dlmcov.beliefs import FourthOrderBeliefs

    p = r if p is None else p
    return FourthOrderBeliefs(random_vec_cov(rng, p), random_vec_cov(rng, r),
                              random_vec_cov(rng, p), random_vec_cov(rng, r))


def identity_model(rng, r):
    return ModelSpec.local_level(np.zeros(r), random_psd(rng, r), random_psd(rng, r),
                                 random_psd(rng, r))
