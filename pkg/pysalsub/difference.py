"""
Matrix-free first-difference operator over an :class:`~pysalsub.imagegrid.ImageGrid`,
and the solve of the smoothing system :math:`(I + D^{T} D) w = r` by preconditioned conjugate gradient.
"""

import math

import numpy as np

from .utils import BaseClass


class SolverError(Exception):

    """Exception raised when a solver fails; :attr:`residual` holds the achieved residual norm, if relevant."""

    def __init__(self, message, residual=None):
        super(SolverError,self).__init__(message)
        self.residual = residual


class DifferenceOperator(BaseClass):
    """
    First-difference operator :math:`D`, of shape (2N, N).
    The N first output entries are horizontal forward differences ``value(col+1) - value(col)``,
    the N last vertical forward differences ``value(row+1) - value(row)``; both are 0 at the last column / row.
    :math:`D^{T} D` is the 4-neighbor graph Laplacian.

    The operator holds no mutable state: :meth:`apply`, :meth:`apply_transpose` and :meth:`solve_smoothing_system`
    can be called concurrently.
    """
    def __init__(self, grid):
        """
        Initialize :class:`DifferenceOperator`.

        Parameters
        ----------
        grid : ImageGrid
            Image grid.
        """
        self.grid = grid
        height,width = grid.shape
        row,col = np.indices(grid.shape)
        degree = (col < width-1).astype('f8') + (col > 0) + (row < height-1) + (row > 0)
        # diagonal of I + D^T D, the Jacobi preconditioner
        self.diagonal = 1. + degree.ravel()
        self.maxiter = int(math.ceil(10.*math.sqrt(grid.N)))

    @property
    def N(self):
        return self.grid.N

    def apply(self, vec):
        """Return :math:`D` ``vec`` (2N-vector)."""
        self.grid.check(vec,name='Input vector')
        image = np.asarray(vec,dtype='f8').reshape(self.grid.shape)
        toret = np.zeros((2,) + self.grid.shape,dtype='f8')
        toret[0,:,:-1] = image[:,1:] - image[:,:-1]
        toret[1,:-1,:] = image[1:,:] - image[:-1,:]
        return toret.ravel()

    def apply_transpose(self, vec):
        """Return :math:`D^{T}` ``vec`` (N-vector), the adjoint of :meth:`apply`."""
        self.grid.check(vec,size=2,name='Input vector')
        horizontal,vertical = np.asarray(vec,dtype='f8').reshape((2,) + self.grid.shape)
        toret = np.zeros(self.grid.shape,dtype='f8')
        toret[:,1:] += horizontal[:,:-1]
        toret[:,:-1] -= horizontal[:,:-1]
        toret[1:,:] += vertical[:-1,:]
        toret[:-1,:] -= vertical[:-1,:]
        return toret.ravel()

    def apply_normal(self, vec):
        """Return :math:`(I + D^{T} D)` ``vec``."""
        return vec + self.apply_transpose(self.apply(vec))

    def to_dense(self):
        """Return dense (2N, N) matrix :math:`D`; only meant for small grids."""
        return np.column_stack([self.apply(column) for column in np.eye(self.N)])

    def solve_smoothing_system(self, rhs, tol=1e-8, x0=None, maxiter=None, return_niterations=False):
        r"""
        Solve :math:`(I + D^{T} D) w =` ``rhs`` with Jacobi-preconditioned conjugate gradient.

        Parameters
        ----------
        rhs : array
            N-vector.

        tol : float, default=1e-8
            The returned solution satisfies :math:`\|(I + D^{T} D) w - \mathrm{rhs}\|_{2} \leq \mathrm{tol} \max(1, \|\mathrm{rhs}\|_{2})`.

        x0 : array, default=None
            Starting point (e.g. previous solution). Defaults to 0.

        maxiter : int, default=None
            Iteration cap. Defaults to :math:`10 \sqrt{N}`.

        return_niterations : bool, default=False
            Whether to return the number of iterations as well.

        Returns
        -------
        w : array
            Solution.

        niterations : int
            Number of iterations, if ``return_niterations``.
        """
        if not tol > 0:
            raise ValueError('tol must be positive, found {}.'.format(tol))
        self.grid.check(rhs,name='Right-hand side')
        rhs = np.asarray(rhs,dtype='f8')
        if maxiter is None: maxiter = self.maxiter
        bound = tol * max(1.,np.linalg.norm(rhs))

        def finish(x, niterations):
            if return_niterations:
                return x, niterations
            return x

        if x0 is None:
            x = np.zeros_like(rhs)
            residual = rhs.copy()
        else:
            self.grid.check(x0,name='Starting point')
            x = np.array(x0,dtype='f8')
            residual = rhs - self.apply_normal(x)
        if np.linalg.norm(residual) <= bound:
            return finish(x,0)

        z = residual / self.diagonal
        direction = z.copy()
        rz = residual.dot(z)
        for niterations in range(1,maxiter+1):
            Ad = self.apply_normal(direction)
            step = rz / direction.dot(Ad)
            x += step * direction
            residual -= step * Ad
            if np.linalg.norm(residual) <= bound:
                # recursive residual drifts; check the true one, else restart from x
                residual = rhs - self.apply_normal(x)
                if np.linalg.norm(residual) <= bound:
                    return finish(x,niterations)
                z = residual / self.diagonal
                direction = z.copy()
                rz = residual.dot(z)
                continue
            z = residual / self.diagonal
            rz_new = residual.dot(z)
            direction = z + rz_new / rz * direction
            rz = rz_new
        residual = np.linalg.norm(rhs - self.apply_normal(x))
        raise SolverError('Conjugate gradient did not reach residual {:.4g} after {:d} iterations (residual {:.4g}).'.format(bound,maxiter,residual),residual=residual)
