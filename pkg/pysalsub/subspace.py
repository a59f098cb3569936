"""Orthonormal background subspace: initialization, coefficients, residual, gradient and geodesic update."""

import numpy as np

from .utils import BaseClass, savefile


class SubspaceError(Exception):

    """Exception raised when issue with subspace dimensions or values."""


def fix_signs(U):
    """Flip columns of ``U`` such that the entry of largest magnitude of each column is positive."""
    U = np.array(U,dtype='f8')
    index = np.argmax(np.abs(U),axis=0)
    signs = np.sign(U[index,np.arange(U.shape[1])])
    signs[signs == 0] = 1.
    return U * signs


def orthonormalize(U):
    """Return orthonormal basis of the span of ``U`` columns, by QR decomposition with positive diagonal."""
    Q,R = np.linalg.qr(U)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.
    return Q * signs


class SubspaceState(BaseClass):
    """
    Background model: orthonormal basis :attr:`U` (N x m), current coefficients :attr:`v` (m) and manifold step size :attr:`eta`.

    A state is updated by a single writer, frame after frame;
    :meth:`grassmann_update` returns a new state and leaves ``self`` untouched.
    """
    def __init__(self, U, v=None, eta=1e-4):
        """
        Initialize :class:`SubspaceState`.

        Parameters
        ----------
        U : array
            Basis, of shape (N, m), with orthonormal columns.

        v : array, default=None
            Coefficients, of length m. Defaults to zeros.

        eta : float, default=1e-4
            Manifold step size.
        """
        U = np.asarray(U,dtype='f8')
        if U.ndim != 2:
            raise SubspaceError('Basis must be 2D, found shape {}.'.format(U.shape))
        N,m = U.shape
        if not 1 <= m <= N:
            raise SubspaceError('Subspace dimension m = {:d} must be in [1, N = {:d}].'.format(m,N))
        self.U = U
        if v is None:
            v = np.zeros(m,dtype='f8')
        self.v = np.asarray(v,dtype='f8')
        if self.v.shape != (m,):
            raise SubspaceError('Coefficients must be of shape ({:d},), found {}.'.format(m,self.v.shape))
        if not eta >= 0:
            raise SubspaceError('Step size eta must be non-negative, found {}.'.format(eta))
        self.eta = float(eta)

    @property
    def N(self):
        """Number of pixels."""
        return self.U.shape[0]

    @property
    def m(self):
        """Subspace dimension."""
        return self.U.shape[1]

    def copy(self):
        """Return copy of ``self``, with copied arrays."""
        return self.__class__(self.U.copy(),v=self.v.copy(),eta=self.eta)

    def orthonormality_error(self):
        r"""Return :math:`\|U^{T} U - I\|_{F}`."""
        return np.linalg.norm(self.U.T.dot(self.U) - np.eye(self.m))

    def _check_vector(self, vec, name='Frame'):
        vec = np.asarray(vec,dtype='f8')
        if vec.shape != (self.N,):
            raise SubspaceError('{} of shape {} does not match subspace dimension N = {:d}.'.format(name,vec.shape,self.N))
        return vec

    def coefficients(self, frame):
        """Return coefficients of ``frame`` in the basis, :math:`U^{T} o`."""
        return self.U.T.dot(self._check_vector(frame))

    def set_coefficients(self, frame):
        """Set :attr:`v` to the coefficients of ``frame``."""
        self.v = self.coefficients(frame)
        return self.v

    def reconstruct(self, v=None):
        """Return background estimate :math:`U v`."""
        return self.U.dot(self.v if v is None else v)

    def residual(self, frame, b):
        """Return residual vector :math:`R_{i} = b_{i} ((U v)_{i} - o_{i})`."""
        frame = self._check_vector(frame)
        b = self._check_vector(b,name='Background vector')
        return b * (self.reconstruct() - frame)

    def euclidean_gradient(self, R):
        """Return the gradient of the weighted reconstruction loss with respect to :attr:`U`, :math:`R v^{T}`."""
        R = self._check_vector(R,name='Residual')
        return np.outer(R,self.v)

    def reconstruction_loss(self, frame, b):
        r"""Return :math:`\frac{1}{2} \sum_{i} b_{i} ((U v)_{i} - o_{i})^{2}`."""
        frame = self._check_vector(frame)
        b = self._check_vector(b,name='Background vector')
        return 0.5 * np.sum(b * (self.reconstruct() - frame)**2)

    def grassmann_update(self, R, scale=1.):
        """
        Move :attr:`U` along the Grassmannian geodesic in the descent direction of the weighted reconstruction loss.

        The residual is first projected onto the orthogonal complement of the span of :attr:`U`; the geodesic step
        has angle :attr:`eta` times the norm of the (rank-one) manifold gradient. The new basis is re-orthonormalized.

        Parameters
        ----------
        R : array
            Residual vector, see :meth:`residual`.

        scale : float, default=1.
            The step angle is computed with residual and coefficients divided by ``scale``,
            i.e. it is :attr:`eta` times the gradient norm divided by ``scale**2``.
            The frame solver passes the frame norm, so that the angle does not depend on the frame energy.

        Returns
        -------
        new : SubspaceState
            Updated state. If the residual, the coefficients or the step size are zero, a copy with unchanged :attr:`U`.
        """
        R = self._check_vector(R,name='Residual')
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(self.U)) and np.all(np.isfinite(self.v))):
            raise SubspaceError('Non-finite values in subspace update inputs.')
        norm_v = np.linalg.norm(self.v)
        if self.eta == 0. or norm_v == 0. or not np.any(R):
            return self.copy()
        R = R - self.U.dot(self.U.T.dot(R))
        norm_r = np.linalg.norm(R)
        if norm_r == 0.:
            return self.copy()
        sigma = norm_r * norm_v
        angle = sigma * self.eta / scale**2
        U = self.U + (np.cos(angle) - 1.) * np.outer(self.reconstruct(),self.v) / norm_v**2 - np.sin(angle) * np.outer(R / norm_r,self.v / norm_v)
        return self.__class__(orthonormalize(U),v=self.v.copy(),eta=self.eta)

    @savefile
    def save_basis(self, filename):
        """
        Save :attr:`U` to ``filename``: a header of two little-endian ``uint64`` (N, m),
        followed by :attr:`U` entries as row-major little-endian ``float64``.
        """
        with open(filename,'wb') as file:
            file.write(np.array([self.N,self.m],dtype='<u8').tobytes())
            file.write(np.ascontiguousarray(self.U,dtype='<f8').tobytes())

    @classmethod
    def load_basis(cls, filename, eta=1e-4):
        """Load state from basis file ``filename`` (see :meth:`save_basis`), with zero coefficients."""
        cls.log_info('Loading basis {}.'.format(filename),rank=0)
        with open(filename,'rb') as file:
            buffer = file.read()
        if len(buffer) < 16:
            raise SubspaceError('Basis file {} is truncated.'.format(filename))
        N,m = (int(n) for n in np.frombuffer(buffer[:16],dtype='<u8'))
        if len(buffer) != 16 + 8*N*m:
            raise SubspaceError('Basis file {} has size {:d}, expected {:d} for N = {:d}, m = {:d}.'.format(filename,len(buffer),16 + 8*N*m,N,m))
        U = np.frombuffer(buffer[16:],dtype='<f8').reshape(N,m).astype('f8')
        return cls(U,eta=eta)


def init_subspace(training_frames, m, eta=1e-4, seed=42):
    """
    Initialize subspace from training frames.

    Parameters
    ----------
    training_frames : list
        List of N-vectors, assumed object-free.

    m : int
        Subspace dimension.

    eta : float, default=1e-4
        Manifold step size.

    seed : int, default=42
        Random seed, for the orthonormal complement used to pad a rank-deficient training matrix.

    Returns
    -------
    state : SubspaceState
        State with :attr:`SubspaceState.U` the top-m left singular vectors of the (N, |training set|) training matrix,
        and :attr:`SubspaceState.v` the coefficients of the last training frame.
    """
    training_frames = list(training_frames)
    if len(training_frames) < m:
        raise SubspaceError('Need at least m = {:d} training frames, found {:d}.'.format(m,len(training_frames)))
    X = np.column_stack([np.asarray(frame,dtype='f8') for frame in training_frames])
    N = X.shape[0]
    if not 1 <= m <= N:
        raise SubspaceError('Subspace dimension m = {:d} must be in [1, N = {:d}].'.format(m,N))
    if not np.all(np.isfinite(X)):
        raise SubspaceError('Non-finite values in training frames.')
    U,s,_ = np.linalg.svd(X,full_matrices=False)
    threshold = s.max(initial=0.) * max(X.shape) * np.finfo('f8').eps
    rank = min(int(np.sum(s > threshold)),m)
    U = fix_signs(U[:,:rank])
    if rank < m:
        SubspaceState.log_warning('Training matrix has rank {:d} < m = {:d}; padding with random orthonormal vectors.'.format(rank,m),rank=0)
        rng = np.random.default_rng(seed=seed)
        complement = rng.normal(size=(N,m-rank))
        complement -= U.dot(U.T.dot(complement))
        complement = fix_signs(orthonormalize(complement))
        U = np.column_stack([U,complement])
    state = SubspaceState(U,eta=eta)
    state.set_coefficients(training_frames[-1])
    return state
