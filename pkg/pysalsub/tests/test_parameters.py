import numpy as np
import pytest

from pysalsub.parameters import (TrainingStats, residual_variance, saliency_stats, training_stats, derive_alpha, derive_params,
                                 update_beta, BetaTracker, background_energy)
from pysalsub.optimizer import ParameterError, SolverParams
from pysalsub.subspace import SubspaceState
from pysalsub.utils import setup_logging


def line_subspace(N=2):
    U = np.zeros((N,1))
    U[0,0] = 1.
    return SubspaceState(U)


def test_residual_variance():
    subspace = line_subspace()
    assert np.isclose(residual_variance(subspace,[np.array([0.,2.])]),2.)
    assert np.isclose(residual_variance(subspace,[np.array([1.,np.sqrt(2.)]),np.array([-3.,np.sqrt(6.)])]),2.)
    assert residual_variance(subspace,[np.array([3.,0.])]) == 0.
    with pytest.raises(ParameterError):
        residual_variance(subspace,[])
    stats = training_stats(subspace,[np.array([0.,2.])],variance_scale='pixel')
    assert np.isclose(stats.sigma_hat_sq,1.) and stats.s_M == stats.s_m == 0. and stats.omega_size == 1
    stats = training_stats(subspace,[np.array([0.,2.])],training_saliency=[np.array([0.,1.])])
    assert np.isclose(stats.sigma_hat_sq,2.) and stats.s_M == 0.5 and stats.s_m == 0.5
    with pytest.raises(ParameterError):
        training_stats(subspace,[np.array([0.,2.])],variance_scale='other')


def test_saliency_stats():
    assert saliency_stats([np.array([0.,0.,1.,1.])]) == (0.5,0.5)
    assert saliency_stats([np.array([0.,0.]),np.array([1.,1.])]) == (0.5,0.5)
    s_M,s_m = saliency_stats([np.full(7,0.7)])
    assert np.isclose(s_M,0.7) and s_m == 0.
    assert saliency_stats([np.zeros(10)]) == (0.,0.)
    with pytest.raises(ParameterError):
        saliency_stats([])
    with pytest.raises(ParameterError):
        TrainingStats(-1.)
    with pytest.raises(ParameterError):
        TrainingStats(1.,s_M=2.)


def test_derive_params():
    params = derive_params(TrainingStats(2.))
    assert isinstance(params,SolverParams)
    assert np.isclose(params['beta'],9.) and np.isclose(params['lambda'],45.)
    assert params['mu0'] == 0.1 and params['t'] == 0.5
    # all-zero training saliency: alpha at its cap
    assert np.isclose(params['alpha'],6.5 * 9.)
    stats = training_stats(line_subspace(),[np.array([0.,2.])],training_saliency=[np.zeros(2)])
    assert stats.s_M == stats.s_m == 0. and np.isclose(derive_alpha(stats,4.5),6.5 * 4.5)
    assert derive_params(stats,overrides={'alpha':0.})['alpha'] == 0.
    params = derive_params(TrainingStats(1.,s_M=0.2,s_m=0.6))
    assert np.isclose(params['alpha'],0.6)
    # capped
    stats = TrainingStats(1.,s_M=0.499,s_m=0.5)
    assert np.isclose(derive_alpha(stats,4.5),6.5 * 4.5)
    # s_m <= s_M
    assert np.isclose(derive_alpha(TrainingStats(1.,s_M=0.6,s_m=0.2),4.5),6.5 * 4.5 * 0.2)
    rng = np.random.default_rng(seed=42)
    for i in range(100):
        stats = TrainingStats(rng.uniform(0.,10.),s_M=rng.random(),s_m=rng.random())
        params = derive_params(stats)
        assert 0. <= params['alpha'] <= 6.5 * params['beta'] * (1. + 1e-12)
    # overrides win
    params = derive_params(TrainingStats(2.),overrides={'beta':3.,'t':0.4})
    assert params['beta'] == 3. and np.isclose(params['lambda'],15.) and params['t'] == 0.4
    params = derive_params(TrainingStats(2.),overrides={'lambda':1.},beta=4.)
    assert params['beta'] == 4. and params['lambda'] == 1.
    # vanishing residual
    params = derive_params(TrainingStats(0.))
    assert params['beta'] == SolverParams.defaults['beta_floor']
    with pytest.raises(ParameterError):
        derive_params(TrainingStats(2.),overrides={'gamma':1.})


def test_update_beta():
    assert update_beta(10.,2.) == 9.
    assert update_beta(100.,2.) == 50.
    assert update_beta(0.,0.) == 0.
    with pytest.raises(ParameterError):
        update_beta(-1.,2.)
    beta = 1000.
    for i in range(20):
        beta = update_beta(beta,2.)
    assert beta == 9.


def test_beta_tracker():
    stats = TrainingStats(2.)
    tracker = BetaTracker(stats,overrides={'beta':3.})
    assert not tracker.enabled
    params = tracker.params
    assert tracker.update(100.) is params
    assert tracker.params['beta'] == 3.

    tracker = BetaTracker(stats)
    assert tracker.enabled and np.isclose(tracker.beta,9.)
    params = tracker.update(2.)
    assert np.isclose(tracker.sigma_hat_sq,2.) and np.isclose(params['beta'],9.)
    params = tracker.update(0.)
    assert np.isclose(tracker.sigma_hat_sq,1.9) and np.isclose(params['beta'],8.55) and np.isclose(params['lambda'],42.75)
    for i in range(1000):
        params = tracker.update(0.)
    assert params['beta'] == params['beta_floor']

    tracker = BetaTracker(stats,variance_scale='pixel',npixels=4,overrides={'t':0.3})
    params = tracker.update(8.)
    assert np.isclose(tracker.sigma_hat_sq,2.) and params['t'] == 0.3
    with pytest.raises(ParameterError):
        BetaTracker(stats,decay=1.)


def test_background_energy():
    subspace = line_subspace(N=4)
    frame = np.array([5.,1.,1.,1.])
    assert np.isclose(background_energy(subspace,frame,np.array([0,1,0,0])),4. / 3.)
    assert np.isclose(background_energy(subspace,frame,np.zeros(4)),1.5)
    assert np.isclose(background_energy(subspace,frame,np.ones(4)),1.5)


if __name__ == '__main__':

    setup_logging()
    test_residual_variance()
    test_saliency_stats()
    test_derive_params()
    test_update_beta()
    test_beta_tracker()
    test_background_energy()
