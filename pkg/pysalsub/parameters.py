"""
Empirical parameter rules: training residual variance, saliency statistics,
and the derivation (and per-frame update) of the solver weights.
"""

import math

import numpy as np

from .optimizer import ParameterError, SolverParams
from .utils import BaseClass


beta_factor = 4.5
lambda_factor = 5.
alpha_cap_factor = 6.5


class TrainingStats(BaseClass):
    """
    Statistics of the training window.

    Attributes
    ----------
    sigma_hat_sq : float
        Residual variance of the training frames.

    s_M : float
        Mean training saliency.

    s_m : float
        Fraction of training saliency values strictly above :attr:`s_M`.

    omega_size : int
        Number of training frames.
    """
    def __init__(self, sigma_hat_sq, s_M=0., s_m=0., omega_size=1):
        self.sigma_hat_sq = float(sigma_hat_sq)
        self.s_M = float(s_M)
        self.s_m = float(s_m)
        self.omega_size = int(omega_size)
        if not self.sigma_hat_sq >= 0:
            raise ParameterError('sigma_hat_sq must be >= 0, found {}.'.format(self.sigma_hat_sq))
        for name in ['s_M','s_m']:
            if not 0. <= getattr(self,name) <= 1.:
                raise ParameterError('{} must be in [0, 1], found {}.'.format(name,getattr(self,name)))

    def to_dict(self):
        return {'sigma_hat_sq':self.sigma_hat_sq,'s_M':self.s_M,'s_m':self.s_m,'omega_size':self.omega_size}

    def __repr__(self):
        return '{}({})'.format(self.__class__.__name__,', '.join('{}={}'.format(name,value) for name,value in self.to_dict().items()))


def residual_variance(subspace, training_frames):
    r"""
    Return residual variance of ``training_frames``:
    :math:`\frac{1}{2 |\Omega|} \sum_{o \in \Omega} \|U v - o\|_{2}^{2}`, with :math:`v = U^{T} o` for each frame.
    """
    training_frames = list(training_frames)
    if not training_frames:
        raise ParameterError('Residual variance requires at least one training frame.')
    total = 0.
    for frame in training_frames:
        frame = np.asarray(frame,dtype='f8')
        total += np.sum((subspace.reconstruct(subspace.coefficients(frame)) - frame)**2)
    return total / (2. * len(training_frames))


def saliency_stats(training_saliency):
    """
    Return mean saliency ``s_M`` and fraction ``s_m`` of saliency values strictly above ``s_M``,
    over all pixels of all maps of ``training_saliency``.
    """
    values = [np.asarray(saliency,dtype='f8').ravel() for saliency in training_saliency]
    if not values:
        raise ParameterError('Saliency statistics require at least one saliency map.')
    values = np.concatenate(values)
    # the mean of a constant map may round above its value
    s_M = float(np.clip(np.mean(values),values.min(),values.max()))
    s_m = float(np.mean(values > s_M))
    return s_M, s_m


def training_stats(subspace, training_frames, training_saliency=None, variance_scale='frame'):
    """
    Return :class:`TrainingStats` of the training window.

    Parameters
    ----------
    subspace : SubspaceState
        Subspace initialized from the training frames.

    training_frames : list
        Training frames.

    training_saliency : list, default=None
        Training saliency maps. If ``None``, saliency statistics are 0.

    variance_scale : string, default='frame'
        If 'frame', residual variance as is (summed over the frame pixels).
        If 'pixel', residual variance divided by the number of pixels.
    """
    training_frames = list(training_frames)
    sigma_hat_sq = residual_variance(subspace,training_frames)
    if variance_scale == 'pixel':
        sigma_hat_sq /= subspace.N
    elif variance_scale != 'frame':
        raise ParameterError('variance_scale must be one of pixel, frame; found {}.'.format(variance_scale))
    s_M,s_m = 0., 0.
    if training_saliency is not None:
        s_M,s_m = saliency_stats(training_saliency)
    return TrainingStats(sigma_hat_sq,s_M=s_M,s_m=s_m,omega_size=len(training_frames))


def derive_alpha(stats, beta):
    """
    Return saliency weight: ``min(floor(s_m/(s_m - s_M)) * sigma_hat * s_m, 6.5 * beta)``,
    or ``6.5 * beta * s_m`` if ``s_m <= s_M`` or ``s_m = 0``.
    If the training saliency is zero everywhere (``s_M = 0``), as expected for object-free training frames
    with an accurate detector, the weight is the cap ``6.5 * beta``.
    """
    cap = alpha_cap_factor * beta
    if stats.s_M == 0.:
        return cap
    if stats.s_m <= stats.s_M or stats.s_m == 0.:
        return cap * stats.s_m
    return min(math.floor(stats.s_m / (stats.s_m - stats.s_M)) * math.sqrt(stats.sigma_hat_sq) * stats.s_m,cap)


def derive_params(stats, overrides=None, beta=None):
    """
    Derive :class:`SolverParams` from training statistics.

    Parameters
    ----------
    stats : TrainingStats
        Training statistics.

    overrides : dict, default=None
        Parameter values that take precedence over the derived ones.

    beta : float, default=None
        Current sparsity weight (e.g. after per-frame updates). If ``None``, initialized to ``4.5 * sigma_hat_sq``.
        If it is 0 (and not overridden), a warning is emitted and the ``beta_floor`` parameter is used.

    Returns
    -------
    params : SolverParams
    """
    overrides = dict(overrides or {})
    beta_floor = overrides.get('beta_floor',SolverParams.defaults['beta_floor'])
    if 'beta' in overrides:
        beta = overrides['beta']
    else:
        if beta is None:
            beta = beta_factor * stats.sigma_hat_sq
        if beta <= 0.:
            TrainingStats.log_warning('Training residual variance is 0; setting beta to floor {}.'.format(beta_floor),rank=0)
            beta = beta_floor
    params = {'beta':beta,'lambda':lambda_factor * beta,'alpha':derive_alpha(stats,beta)}
    params.update(overrides)
    return SolverParams(params)


def update_beta(current_beta, sigma_hat_sq):
    """Return ``max(current_beta/2, 4.5 * sigma_hat_sq)``."""
    if current_beta < 0 or sigma_hat_sq < 0:
        raise ParameterError('update_beta inputs must be >= 0, found beta = {}, sigma_hat_sq = {}.'.format(current_beta,sigma_hat_sq))
    return max(current_beta / 2.,beta_factor * sigma_hat_sq)


class BetaTracker(BaseClass):
    """
    Per-frame update of the sparsity weight, driven by an exponential moving average of the frame residual energy
    :math:`\\frac{1}{2}\\|U v - o\\|^{2}` (divided by the number of pixels if ``variance_scale`` is 'pixel').
    Lambda and alpha follow beta, unless overridden.

    >>> tracker = BetaTracker(stats, overrides={})
    >>> params = tracker.update(energy)
    """
    def __init__(self, stats, overrides=None, decay=0.95, variance_scale='frame', npixels=1):
        """
        Initialize :class:`BetaTracker`.

        Parameters
        ----------
        stats : TrainingStats
            Training statistics, whose residual variance initializes the moving average.

        overrides : dict, default=None
            Parameter overrides.

        decay : float, default=0.95
            Decay of the moving average.

        variance_scale : string, default='frame'
            'pixel' to divide frame residual energies by ``npixels``.

        npixels : int, default=1
            Number of pixels per frame.
        """
        if not 0. <= decay < 1.:
            raise ParameterError('decay must be in [0, 1), found {}.'.format(decay))
        self.stats = stats
        self.overrides = dict(overrides or {})
        self.decay = float(decay)
        self.scale = float(npixels) if variance_scale == 'pixel' else 1.
        self.sigma_hat_sq = stats.sigma_hat_sq
        self.params = derive_params(stats,overrides=self.overrides)
        self.beta = self.params['beta']

    @property
    def enabled(self):
        """Whether beta is updated, i.e. not overridden."""
        return 'beta' not in self.overrides

    def update(self, energy):
        """
        Update the moving average with frame residual ``energy`` and return the new :class:`SolverParams`
        (unchanged if beta is overridden).
        """
        if not self.enabled:
            return self.params
        self.sigma_hat_sq = self.decay * self.sigma_hat_sq + (1. - self.decay) * energy / self.scale
        self.beta = max(update_beta(self.beta,self.sigma_hat_sq),self.params['beta_floor'])
        self.params = derive_params(self.stats,overrides=self.overrides,beta=self.beta)
        return self.params


def background_energy(subspace, frame, mask):
    r"""
    Return frame residual energy :math:`\frac{1}{2}\|U v - o\|^{2}`, summed over background pixels (``mask`` = 0)
    and extrapolated to the whole frame. If there are no background pixels, returns the residual energy of the whole frame.
    """
    residual = (subspace.reconstruct(subspace.coefficients(frame)) - frame)**2
    background = np.asarray(mask) == 0
    nbackground = np.sum(background)
    if nbackground == 0:
        return 0.5 * np.sum(residual)
    return 0.5 * np.sum(residual[background]) * residual.size / nbackground
