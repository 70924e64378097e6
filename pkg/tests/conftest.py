import numpy as np
import pytest

from swipt import DistributionSpec, FadingEnsemble, LinkParams, sample_ensemble

FIG_SETUP = dict(mean_h=1.0, mean_i=3.0, sigma2=0.5, p_avg=5.0, p_peak=20.0)


def random_ensemble(rng, n, mean_h=1.0, mean_i=3.0):
    """Small equal-weight test ensemble with exponential-ish draws."""
    return FadingEnsemble(h=rng.exponential(mean_h, n),
                          intf=rng.exponential(mean_i, n),
                          w=np.full(n, 1.0 / n))


@pytest.fixture(scope="session")
def big_ensemble():
    """The evaluation-scale ensemble: 1e5 states, exp(1) x exp(3), seed 42."""
    return sample_ensemble(DistributionSpec.exponential(1.0),
                           DistributionSpec.exponential(3.0), 100_000, 42)


@pytest.fixture(scope="session")
def fig_params():
    return LinkParams(sigma2=0.5, r0=0.3)
