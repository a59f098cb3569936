"""Logging, type checks, JSON and task mapping helpers shared by **pysalsub** modules."""

import os
import sys
import re
import time
import json
import functools
import logging
import traceback
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import mpi


def exception_handler(exc_type, exc_value, exc_traceback):
    """Log uncaught exception ``exc_value`` with its traceback at critical level; installed as :func:`sys.excepthook`."""
    log = logging.getLogger('Exception')
    rule = '-'*80
    log.critical('{0}\n{1}{0}'.format(rule,''.join(traceback.format_exception(exc_type,exc_value,exc_traceback))))
    log.critical('Interrupted.' if exc_type is KeyboardInterrupt else 'Run failed.')


class _RunFormatter(logging.Formatter):
    """Prefix records with the time elapsed since logging was set up, and with MPI rank / size."""

    def __init__(self, t0=None, **kwargs):
        super(_RunFormatter,self).__init__(**kwargs)
        self.t0 = time.time() if t0 is None else t0

    @mpi.CurrentMPIComm.enable
    def format(self, record, mpicomm=None):
        width = len(str(mpicomm.size))
        prefix = '[{:09.2f}] [{:{width}d}/{:d}]'.format(time.time() - self.t0,mpicomm.rank,mpicomm.size,width=width)
        self._style._fmt = prefix.replace('%','%%') + ' %(asctime)s %(name)-20s %(levelname)-8s %(message)s'
        return super(_RunFormatter,self).format(record)


def setup_logging(level=logging.INFO, stream=sys.stdout, filename=None, filemode='w', **kwargs):
    """
    Send log records of all **pysalsub** classes to ``stream``, or to file ``filename``,
    replacing previously installed root handlers.

    Parameters
    ----------
    level : string, int, default=logging.INFO
        Logging level, or one of 'warning', 'info', 'debug'.

    stream : _io.TextIOWrapper, default=sys.stdout
        Output stream, if ``filename`` is ``None``.

    filename : string, default=None
        Log file name.

    filemode : string, default='w'
        Mode to open ``filename`` with.

    kwargs : dict
        Other arguments for :func:`logging.basicConfig`.
    """
    if isinstance(level,str):
        level = {'warning':logging.WARNING,'info':logging.INFO,'debug':logging.DEBUG}[level.lower()]
    for handler in list(logging.root.handlers):
        logging.root.removeHandler(handler)
    if filename is None:
        handler = logging.StreamHandler(stream=stream)
    else:
        mkdir(os.path.dirname(filename))
        handler = logging.FileHandler(filename,mode=filemode)
    handler.setFormatter(_RunFormatter(datefmt='%m-%d %H:%M:%S'))
    logging.basicConfig(level=level,handlers=[handler],**kwargs)
    sys.excepthook = exception_handler


def mkdir(dirname):
    """Create directory ``dirname`` and its parents, if any is missing."""
    if dirname:
        os.makedirs(dirname,exist_ok=True)


def savefile(func):
    """Decorate method ``func(self, filename, ...)`` writing to ``filename``: create its directory and log the write."""
    @functools.wraps(func)
    def wrapper(self, filename, *args, **kwargs):
        if filename is not None:
            mkdir(os.path.dirname(filename))
            self.log_debug('Writing {}.'.format(filename),rank=0)
        return func(self,filename,*args,**kwargs)
    return wrapper


_builtin_types = {'bool':bool,'int':int,'float':float,'string':str,'str':str,'list':list,'dict':dict}
_numpy_types = {'bool':np.bool_,'int':np.integer,'float':np.floating,'string':np.str_,'str':np.str_}


def _matches(value, type_):
    if not isinstance(type_,str):
        return isinstance(value,type_)
    if type_ in _builtin_types:
        if isinstance(value,bool) and type_ != 'bool':
            return False
        if type_ == 'float':
            return isinstance(value,(int,float,np.integer,np.floating))
        return isinstance(value,_builtin_types[type_])
    match = re.fullmatch('(.+)_array',type_)
    if match is None or match.group(1) not in _numpy_types or not isinstance(value,np.ndarray):
        return False
    return np.issubdtype(value.dtype,_numpy_types[match.group(1)])


def is_of_type(value, types):
    """
    Whether ``value`` is of any of ``types``.

    Parameters
    ----------
    value : object
        Value to check.

    types : list, string, type or class
        Type or list of types. Strings name builtins ('bool', 'int', 'float', 'string', 'list', 'dict'),
        or arrays with a dtype of that kind, e.g. 'float_array'. Integers are accepted as 'float', booleans only as 'bool'.

    Returns
    -------
    oftype : bool
    """
    if not isinstance(types,(list,tuple)):
        types = [types]
    return any(_matches(value,type_) for type_ in types)


def _make_log_method(level):

    @classmethod
    @mpi.CurrentMPIComm.enable
    def log(cls, msg, *args, rank=None, mpicomm=None, **kwargs):
        # rank=None: log on all processes
        if rank is None or mpicomm.rank == rank:
            getattr(cls.logger,level)(msg,*args,**kwargs)

    log.__doc__ = 'Log ``msg`` at level {}, on process ``rank`` only if provided.'.format(level)
    return log


class BaseMetaClass(type):

    """Meta class giving each class a logger named after it, and methods ``log_debug``, ``log_info``... with an optional ``rank``."""

    def __new__(meta, name, bases, class_dict):
        cls = super().__new__(meta, name, bases, class_dict)
        cls.logger = logging.getLogger(name)
        for level in ['debug','info','warning','error','critical']:
            setattr(cls,'log_{}'.format(level),_make_log_method(level))
        return cls


class BaseClass(object,metaclass=BaseMetaClass):
    """
    Base class of **pysalsub** objects (blocks, subspace, solver states, score tables...):
    a logger, a state dictionary and shallow copies.
    Arrays are shared by :meth:`copy`; classes holding arrays they update in place define their own.
    """
    def __setstate__(self, state):
        self.__dict__.update(state)

    def __getstate__(self):
        return self.__dict__.copy()

    def copy(self):
        """Return shallow copy of ``self``, without calling ``__init__``."""
        new = self.__class__.__new__(self.__class__)
        new.__setstate__(self.__getstate__())
        return new


def _json_default(value):
    if isinstance(value,np.integer):
        return int(value)
    if isinstance(value,np.floating):
        return float(value)
    if isinstance(value,np.bool_):
        return bool(value)
    if isinstance(value,np.ndarray):
        return value.tolist()
    raise TypeError('Object of type {} is not JSON serializable'.format(type(value).__name__))


def dump_json(obj, **kwargs):
    """Dump ``obj`` to a JSON string, converting *numpy* scalars and arrays."""
    return json.dumps(obj,default=_json_default,**kwargs)


def get_nthreads(default=None):
    """
    Return the thread count allowed by the environment variable ``MODSM_THREADS`` (or ``PYSALSUB_THREADS``),
    else ``default`` (else available cores).
    """
    for name in ['MODSM_THREADS','PYSALSUB_THREADS']:
        nthreads = os.environ.get(name,None)
        if nthreads is None:
            continue
        try:
            nthreads = int(nthreads)
        except ValueError as exc:
            raise ValueError('{} must be an integer, found {}'.format(name,nthreads)) from exc
        return max(nthreads,1)
    if default is not None:
        return default
    return os.cpu_count() or 1


class TaskManager(BaseClass):
    """
    Map a function over independent tasks, e.g. the ablation modes of a run.

    With several MPI processes, task ``i`` runs on rank ``i % size`` and results are gathered on all ranks;
    with one process, tasks run in a pool of :func:`get_nthreads` threads. Results come back in task order.

    >>> with TaskManager() as tm:
            rows = tm.map(run_mode,modes)
    """
    @mpi.CurrentMPIComm.enable
    def __init__(self, nthreads=None, mpicomm=None):
        """
        Initialize :class:`TaskManager`.

        Parameters
        ----------
        nthreads : int, default=None
            Number of threads on a single process; ``MODSM_THREADS`` takes precedence, see :func:`get_nthreads`.

        mpicomm : MPI communicator, default=None
            Communicator; defaults to the current one.
        """
        self.mpicomm = mpicomm
        self.nthreads = get_nthreads(default=nthreads)

    def __enter__(self):
        self.log_debug('Mapping tasks over {:d} process(es), {:d} thread(s).'.format(self.mpicomm.size,self.nthreads),rank=0)
        return self

    def __exit__(self, exc_type, exc_value, exc_traceback):
        if exc_value is not None:
            self.log_error('Task failed with {}: {}'.format(exc_type.__name__,exc_value))

    def map(self, function, tasks):
        """
        Return list of ``function(task)`` for ``task`` in ``tasks``; tuple tasks are unpacked as positional arguments.
        An exception raised by any task is propagated.
        """
        tasks = list(tasks)

        def call(task):
            return function(*(task if isinstance(task,tuple) else (task,)))

        if self.mpicomm.size > 1:
            rank,size = self.mpicomm.rank,self.mpicomm.size
            local = [(itask,call(task)) for itask,task in enumerate(tasks) if itask % size == rank]
            results = {}
            for chunk in self.mpicomm.allgather(local):
                results.update(chunk)
            return [results[itask] for itask in range(len(tasks))]
        if self.nthreads <= 1 or len(tasks) <= 1:
            return [call(task) for task in tasks]
        with ThreadPoolExecutor(max_workers=min(self.nthreads,len(tasks))) as executor:
            return list(executor.map(call,tasks))
