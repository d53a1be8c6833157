import numpy as np
import pytest

from dlmcov.appendix import (
    PRINTED_ERRATA, NotIdentityModel, Relation, appendix_covariance, engine_covariance,
    relation_operands,
)
from dlmcov.model import ModelSpec, shampoo_model
from dlmcov.simulate import ResidualGenerator, generator_beliefs, monte_carlo_cov

from conftest import random_beliefs, random_psd

TOL = 1e-10


def _scale(M):
    return max(1.0, np.abs(M).max())


@pytest.mark.parametrize("case", list(Relation))
def test_engine_matches_appendix_example(case, example_model, example_beliefs):
    oracle = appendix_covariance(case, example_beliefs, example_model)
    got = engine_covariance(case, example_beliefs, example_model)
    assert np.abs(got - oracle).max() <= TOL * _scale(oracle)


@pytest.mark.parametrize("seed", range(25))
def test_engine_matches_appendix_random(seed):
    rng = np.random.default_rng(100 + seed)
    r = int(rng.integers(1, 5))
    spec = ModelSpec.local_level(np.zeros(r), np.eye(r), random_psd(rng, r), random_psd(rng, r))
    b = random_beliefs(rng, r)
    for case in Relation:
        oracle = appendix_covariance(case, b, spec)
        assert np.abs(engine_covariance(case, b, spec) - oracle).max() <= TOL * _scale(oracle), case


def test_relation_count():
    assert len(Relation) == 17
    assert set(PRINTED_ERRATA) <= set(Relation)


def test_non_identity_rejected(example_beliefs):
    m = shampoo_model()
    spec = ModelSpec(F=m.F, G=2 * m.G, mu0=m.mu0, Sigma=m.Sigma, V=m.V, W=m.W)
    with pytest.raises(NotIdentityModel):
        appendix_covariance(Relation.X1_LAG0, example_beliefs, spec)


@pytest.mark.slow
def test_monte_carlo_rejects_printed_coefficients():
    r = 2
    gen = ResidualGenerator.mixture(np.eye(r), np.eye(r), np.eye(r), 10 * np.eye(r))
    spec = ModelSpec.local_level(np.zeros(r), np.eye(r), gen.mean_V, gen.mean_W)
    truth = generator_beliefs(gen)
    for case in PRINTED_ERRATA:
        a, b = relation_operands(case, spec, t=8, s=3)
        est, se = monte_carlo_cov(a, b, gen, 100_000, 5, spec, np.eye(r))
        se = np.where(se > 0, se, np.inf)
        right = appendix_covariance(case, truth, spec)
        printed = appendix_covariance(case, truth, spec, printed=True)
        assert np.max(np.abs(est - right) / se) < 4.5, case
        assert np.max(np.abs(est - printed) / se) > 10, case
