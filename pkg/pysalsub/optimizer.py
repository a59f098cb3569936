r"""
Per-frame alternating minimization of the saliency-regularized background objective.

The objective, for background vector :math:`b \in [0,1]^{N}`, is

.. math::

    L = \sum_{i} \left[ \frac{1}{2} b_{i} (U_{i} v - o_{i})^{2} + \beta (1 - b_{i}) - \alpha b_{i} (1 - s_{i}) \right] + \lambda \|D b\|_{1}

and is minimized with the splitting :math:`w = b`, :math:`c = D w` (duals :math:`x`, :math:`y`, penalty :math:`\mu`),
alternating with geodesic updates of the background subspace :math:`U` and coefficient updates of :math:`v`.
"""

import json
from collections import UserDict

import numpy as np

from .difference import SolverError
from .utils import BaseClass, savefile


__all__ = ['ParameterError','SolverError','SolverParams','AblationMode','SolverState','FrameResult',
           'b_step','soft_threshold','c_step','w_step','dual_step','objective','binarize','process_frame','StreamSolver']


class ParameterError(Exception):

    """Exception raised when issue with solver parameters or the statistics they are derived from."""


class SolverParams(UserDict):
    """
    Solver parameters, a dictionary with the following keys:

    - m: subspace dimension
    - alpha: saliency weight (>= 0)
    - beta: sparsity weight (> 0)
    - lambda: connectivity weight (>= 0)
    - mu0: initial penalty (> 0), reset at each frame
    - a: penalty growth factor (> 1)
    - t: binarization threshold, in (0, 1)
    - eta: manifold step size (>= 0)
    - outer_iters, admm_inner_iters, u_inner_iters: loop counts
    - cg_tol: relative tolerance of the smoothing system solve
    - beta_floor: lower bound for beta when the training residual vanishes
    """
    defaults = {'m':5,'alpha':0.,'beta':1.,'lambda':5.,'mu0':0.1,'a':1.25,'t':0.5,'eta':1e-4,
                'outer_iters':10,'admm_inner_iters':5,'u_inner_iters':3,
                'cg_tol':1e-8,'beta_floor':1e-6}

    def __init__(self, data=None, **kwargs):
        super(SolverParams,self).__init__(self.defaults)
        self.update(data or {})
        self.update(kwargs)
        self.check()

    def check(self):
        """Raise :class:`ParameterError` if parameters are unknown or out of their allowed range."""
        unknown = [name for name in self.data if name not in self.defaults]
        if unknown:
            raise ParameterError('Unknown solver parameters {}; allowed are {}.'.format(unknown,list(self.defaults)))

        def check(name, condition, message):
            try:
                ok = condition(self.data[name])
            except TypeError:
                ok = False
            if not ok:
                raise ParameterError('Parameter {} = {} must be {}.'.format(name,self.data[name],message))

        def is_integer(value):
            return isinstance(value,(int,np.integer)) and not isinstance(value,bool)

        check('m',lambda x: is_integer(x) and x >= 1,'an integer >= 1')
        for name in ['outer_iters']:
            check(name,lambda x: is_integer(x) and x >= 1,'an integer >= 1')
        for name in ['admm_inner_iters','u_inner_iters']:
            check(name,lambda x: is_integer(x) and x >= 0,'an integer >= 0')
        for name in ['alpha','lambda','eta']:
            check(name,lambda x: np.isfinite(x) and x >= 0,'>= 0')
        for name in ['beta','mu0','cg_tol','beta_floor']:
            check(name,lambda x: np.isfinite(x) and x > 0,'> 0')
        check('a',lambda x: np.isfinite(x) and x > 1,'> 1')
        check('t',lambda x: 0 < x < 1,'in (0, 1)')
        return self

    def effective(self, mode):
        """Return (alpha, lambda) effectively used in ablation ``mode``."""
        mode = AblationMode(mode)
        alpha,lambda_ = self.data['alpha'],self.data['lambda']
        if mode != AblationMode.SALIENCY:
            alpha = 0.
        if mode == AblationMode.BASELINE:
            lambda_ = 0.
        return alpha,lambda_

    def to_json(self, **kwargs):
        """Return flat *json* string."""
        return json.dumps({name:(value.item() if isinstance(value,np.generic) else value) for name,value in self.data.items()},**kwargs)

    @classmethod
    def from_json(cls, string):
        return cls(json.loads(string))

    def save(self, filename):
        """Save parameters to *json* file ``filename``."""
        with open(filename,'w') as file:
            file.write(self.to_json(indent=2,sort_keys=True))

    @classmethod
    def load(cls, filename):
        """Load parameters from *json* file ``filename``."""
        with open(filename,'r') as file:
            return cls.from_json(file.read())


class AblationMode(object):
    """
    Objective variant:

    - BASELINE: reconstruction and sparsity terms only (alpha = lambda = 0)
    - CONNECTIVITY: plus the connectivity term (alpha = 0)
    - SALIENCY: full objective, with the saliency term
    """
    strs = ['BASELINE','CONNECTIVITY','SALIENCY']
    ints = list(range(len(strs)))
    aliases = {'ADDCONNECTIVITY':'CONNECTIVITY','ADDSALIENCYMAP':'SALIENCY','FULL':'SALIENCY'}

    def __new__(cls, mode):
        if isinstance(mode,str):
            name = mode.upper().replace('_','').replace('-','')
            name = cls.aliases.get(name,name)
            if name not in cls.strs:
                raise ValueError('Unknown mode {}; should be in {}.'.format(mode,cls.strs))
            mode = cls.strs.index(name)
        if mode not in cls.ints:
            raise ValueError('Unknown mode {}; should be in {} or {}.'.format(mode,cls.strs,cls.ints))
        return mode

    @classmethod
    def as_str(cls, mode):
        return cls.strs[AblationMode(mode)].lower()


for i,s in zip(AblationMode.ints,AblationMode.strs):
    setattr(AblationMode,s,i)


class SolverState(BaseClass):
    """
    Per-frame splitting variables.

    Attributes
    ----------
    b : array
        Background vector, N-vector in [0, 1].

    c : array
        Split variable for :math:`D w`, 2N-vector.

    w : array
        Split variable for :math:`b`, N-vector.

    x : array
        Dual of :math:`w = b`, N-vector.

    y : array
        Dual of :math:`c = D w`, 2N-vector.

    mu : float
        Current penalty.
    """
    def __init__(self, b, c, w, x, y, mu):
        self.b, self.c, self.w, self.x, self.y = (np.asarray(array,dtype='f8') for array in (b,c,w,x,y))
        self.mu = float(mu)

    @classmethod
    def start(cls, diff, b, mu0):
        """State at frame start: background ``b``, :math:`w = b`, :math:`c = D w`, zero duals and penalty ``mu0``."""
        b = np.array(b,dtype='f8')
        w = b.copy()
        return cls(b=b,c=diff.apply(w),w=w,x=np.zeros_like(b),y=np.zeros(2*b.size,dtype='f8'),mu=mu0)

    def copy(self):
        return self.__class__(*(array.copy() for array in (self.b,self.c,self.w,self.x,self.y)),mu=self.mu)

    def isfinite(self):
        """Whether all variables are finite."""
        return all(np.all(np.isfinite(array)) for array in (self.b,self.c,self.w,self.x,self.y)) and np.isfinite(self.mu)


class FrameResult(BaseClass):
    """
    Result of the processing of one frame.

    Attributes
    ----------
    mask : array
        Foreground mask, ``uint8`` N-vector of 0 and 1.

    b : array
        Background vector.

    objective_trace : list
        Objective value at the end of each outer iteration.

    converged : bool
        Whether all relative objective changes from outer iteration :attr:`converged_from` on
        (or the last one, for shorter traces) are below :attr:`converged_tol`.

    diagnostics : dict
        Feasibility gaps and conjugate gradient iteration counts per outer iteration,
        and feasibility gaps per inner round of the last outer iteration.
    """
    converged_tol = 1e-3
    converged_from = 9

    def __init__(self, mask, b, objective_trace, diagnostics=None):
        self.mask = mask
        self.b = b
        self.objective_trace = list(objective_trace)
        if not self.objective_trace:
            raise SolverError('Objective trace is empty.')
        self.diagnostics = dict(diagnostics or {})
        changes = self.relative_changes()
        # changes[k-2] compares iterations k-1 and k (1-based)
        start = min(self.converged_from - 2,len(changes) - 1)
        self.converged = changes.size > 0 and bool(np.all(changes[start:] < self.converged_tol))

    def relative_changes(self):
        r"""Return :math:`|L_{k} - L_{k-1}| / \max(1, |L_{1}|)` for each outer iteration :math:`k > 1`."""
        trace = np.array(self.objective_trace)
        return np.abs(np.diff(trace)) / max(1.,abs(trace[0]))

    def to_dict(self):
        """Return per-frame diagnostics as a dictionary."""
        toret = {'objective':self.objective_trace,'converged':bool(self.converged),'mask_area':int(np.sum(self.mask))}
        toret.update(self.diagnostics)
        return toret


def _check_mu(mu):
    if not mu > 0:
        raise SolverError('Penalty mu must be positive, found {}.'.format(mu))


def b_step(state, subspace, frame, saliency, params, mode=AblationMode.SALIENCY, clamp=True):
    r"""
    Background vector update:

    .. math::

        b_{i} = \left[\beta + \mu w_{i} + x_{i} - \frac{1}{2} (U_{i} v - o_{i})^{2} + \alpha (1 - s_{i})\right] / \mu

    then clipped into [0, 1] if ``clamp``.
    ``saliency`` may be ``None`` when the effective alpha is 0.
    """
    _check_mu(state.mu)
    alpha,_ = params.effective(mode)
    toret = params['beta'] + state.mu * state.w + state.x - 0.5 * (subspace.reconstruct() - frame)**2
    if alpha:
        if saliency is None:
            raise ParameterError('A saliency map is required in {} mode.'.format(AblationMode.as_str(mode)))
        toret += alpha * (1. - saliency)
    toret /= state.mu
    if clamp:
        return np.clip(toret,0.,1.)
    return toret


def soft_threshold(x, eps):
    r"""Shrinkage operator: :math:`x - \epsilon` if :math:`x > \epsilon`, :math:`x + \epsilon` if :math:`x < -\epsilon`, else 0."""
    x = np.asarray(x,dtype='f8')
    return np.where(x > eps,x - eps,np.where(x < -eps,x + eps,0.))


def c_step(state, diff, params, mode=AblationMode.SALIENCY):
    r"""Split variable update :math:`c = S_{\lambda/\mu}(D w - y / \mu)`."""
    _check_mu(state.mu)
    _,lambda_ = params.effective(mode)
    return soft_threshold(diff.apply(state.w) - state.y / state.mu,lambda_ / state.mu)


def w_step(state, diff, params, return_niterations=False):
    r"""
    Split variable update :math:`w = (I + D^{T} D)^{-1} [D^{T} (c + y / \mu) + b - x / \mu]`,
    by conjugate gradient warm-started from the current :math:`w`.
    """
    _check_mu(state.mu)
    rhs = diff.apply_transpose(state.c + state.y / state.mu) + state.b - state.x / state.mu
    return diff.solve_smoothing_system(rhs,tol=params['cg_tol'],x0=state.w,return_niterations=return_niterations)


def dual_step(state, diff, params):
    r"""
    Dual and penalty updates, with the penalty before update in both dual updates:
    :math:`x \leftarrow x + \mu (w - b)`, :math:`y \leftarrow y + \mu (c - D w)`, :math:`\mu \leftarrow a \mu`.

    Returns
    -------
    x, y, mu : array, array, float
    """
    _check_mu(state.mu)
    x = state.x + state.mu * (state.w - state.b)
    y = state.y + state.mu * (state.c - diff.apply(state.w))
    return x, y, params['a'] * state.mu


def objective(state, subspace, frame, saliency, params, diff, mode=AblationMode.SALIENCY):
    r"""
    Return the objective of ablation ``mode`` for the current background vector :attr:`SolverState.b`,
    with the connectivity term evaluated as :math:`\|D b\|_{1}`.
    """
    alpha,lambda_ = params.effective(mode)
    b = state.b
    toret = np.sum(0.5 * b * (subspace.reconstruct() - frame)**2 + params['beta'] * (1. - b))
    if alpha:
        toret -= alpha * np.sum(b * (1. - saliency))
    if lambda_:
        toret += lambda_ * np.sum(np.abs(diff.apply(b)))
    return float(toret)


def binarize(b, t):
    """Return foreground mask: 1 where ``b`` < ``t``, else 0 (ties go to background)."""
    if not 0 < t < 1:
        raise ParameterError('Threshold t must be in (0, 1), found {}.'.format(t))
    return (np.asarray(b) < t).astype('u1')


def process_frame(subspace, frame, saliency, params, mode, diff, b0=None):
    """
    Process one frame.

    Each outer iteration runs a background vector update, then ``admm_inner_iters`` rounds of split and dual updates,
    then ``u_inner_iters`` geodesic updates of the subspace, then a coefficient update; the objective is recorded
    at its end. Geodesic step angles are ``eta`` times the manifold gradient norm divided by the squared frame norm. Coefficients are also updated at frame start, before the first background vector update.

    Parameters
    ----------
    subspace : SubspaceState
        Current background subspace; not modified.

    frame : array
        N-vector of intensities.

    saliency : array, None
        N-vector in [0, 1]. May be ``None`` if ``mode`` does not use it.

    params : SolverParams
        Solver parameters.

    mode : int, string
        Ablation mode, see :class:`AblationMode`.

    diff : DifferenceOperator
        Difference operator of the frame grid.

    b0 : array, default=None
        Background vector to start from (e.g. that of the previous frame). Defaults to ones.

    Returns
    -------
    result : FrameResult
        Mask, background vector, objective trace and diagnostics.

    subspace : SubspaceState
        Updated subspace.
    """
    mode = AblationMode(mode)
    frame = np.asarray(frame,dtype='f8')
    diff.grid.check(frame,name='Frame')
    if saliency is not None:
        diff.grid.check(saliency,name='Saliency')
    if b0 is None:
        b0 = np.ones_like(frame)
    state = SolverState.start(diff,b0,params['mu0'])
    subspace = subspace.copy()
    subspace.set_coefficients(frame)
    # geodesic step angle in units of the frame energy
    scale = np.linalg.norm(frame) or 1.
    trace, gaps_w, gaps_c, cg_iterations = [], [], [], []
    for iteration in range(params['outer_iters']):
        state.b = b_step(state,subspace,frame,saliency,params,mode=mode)
        niterations = 0
        inner_gaps_w, inner_gaps_c = [], []
        for inner in range(params['admm_inner_iters']):
            state.c = c_step(state,diff,params,mode=mode)
            state.w,nit = w_step(state,diff,params,return_niterations=True)
            niterations += nit
            state.x,state.y,state.mu = dual_step(state,diff,params)
            inner_gaps_w.append(float(np.linalg.norm(state.w - state.b)))
            inner_gaps_c.append(float(np.linalg.norm(state.c - diff.apply(state.w))))
        for inner in range(params['u_inner_iters']):
            subspace = subspace.grassmann_update(subspace.residual(frame,state.b),scale=scale)
        subspace.set_coefficients(frame)
        value = objective(state,subspace,frame,saliency,params,diff,mode=mode)
        if not (np.isfinite(value) and state.isfinite()):
            raise SolverError('Non-finite objective {} at outer iteration {:d}.'.format(value,iteration))
        trace.append(value)
        gaps_w.append(float(np.linalg.norm(state.w - state.b)))
        gaps_c.append(float(np.linalg.norm(state.c - diff.apply(state.w))))
        cg_iterations.append(niterations)
    diagnostics = {'gap_w':gaps_w,'gap_c':gaps_c,'cg_iterations':cg_iterations,
                   'inner_gap_w':inner_gaps_w,'inner_gap_c':inner_gaps_c}
    result = FrameResult(binarize(state.b,params['t']),state.b,trace,diagnostics=diagnostics)
    return result, subspace


class StreamSolver(BaseClass):
    """
    Solver for one video stream: holds the subspace and the previous background vector,
    and processes frames strictly in order.

    >>> solver = StreamSolver(subspace, grid, params, mode='saliency')
    >>> result = solver.process(frame, saliency)
    """
    def __init__(self, subspace, grid, params, mode=AblationMode.SALIENCY):
        """
        Initialize :class:`StreamSolver`.

        Parameters
        ----------
        subspace : SubspaceState
            Initial subspace.

        grid : ImageGrid
            Frame grid.

        params : SolverParams, dict
            Solver parameters.

        mode : int, string, default=AblationMode.SALIENCY
            Ablation mode.
        """
        from .difference import DifferenceOperator
        self.subspace = subspace
        self.grid = grid
        if subspace.N != grid.N:
            raise SolverError('Subspace dimension N = {:d} does not match grid {}.'.format(subspace.N,grid))
        self.diff = DifferenceOperator(grid)
        self.params = params if isinstance(params,SolverParams) else SolverParams(params)
        self.subspace.eta = self.params['eta']
        self.mode = AblationMode(mode)
        self.b = None
        self.nframes = 0

    def process(self, frame, saliency=None):
        """Process next frame, warm-started from the previous background vector; return :class:`FrameResult`."""
        result,self.subspace = process_frame(self.subspace,frame,saliency,self.params,self.mode,self.diff,b0=self.b)
        self.b = result.b
        self.nframes += 1
        return result

    @savefile
    def save_basis(self, filename):
        """Save current subspace basis."""
        self.subspace.save_basis(filename)
