"""Current MPI communicator, used to tag log records and distribute independent runs over processes."""

import functools

from mpi4py import MPI


class CurrentMPIComm(object):
    """Access to the current MPI communicator, ``MPI.COMM_WORLD``."""
    _mpicomm = MPI.COMM_WORLD

    @staticmethod
    def enable(func):
        """
        Decorator to attach the current MPI communicator to the input
        keyword arguments of ``func``, via the ``mpicomm`` keyword.
        """
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            if kwargs.get('mpicomm',None) is None:
                kwargs['mpicomm'] = CurrentMPIComm.get()
            return func(*args, **kwargs)

        return wrapper

    @classmethod
    def get(cls):
        """Return the current MPI communicator."""
        return cls._mpicomm
