"""Definition of :class:`BaseModule`, the base class of pipeline stages."""

import time

from .block import DataBlock, SectionBlock
from .config import ConfigBlock
from .utils import BaseMetaClass


setup_function = 'setup'
execute_function = 'execute'
cleanup_function = 'cleanup'
steps = (setup_function,execute_function,cleanup_function)


def _wrap_step(step, fun):

    def wrapper(self):
        t0 = time.perf_counter()
        try:
            fun(self)
        except Exception as exc:
            raise RuntimeError('Exception in function {} of {}.'.format(step,self)) from exc
        calls,seconds = self.timings.get(step,(0,0.))
        self.timings[step] = (calls + 1,seconds + time.perf_counter() - t0)

    wrapper.__doc__ = fun.__doc__
    wrapper.__wrapped__ = fun
    return wrapper


class MetaModule(BaseMetaClass):

    """
    Meta class wrapping the :meth:`setup`, :meth:`execute` and :meth:`cleanup` methods of stages, to:

    - accumulate call counts and wall time per step in :attr:`BaseModule.timings`
    - re-raise exceptions as :class:`RuntimeError` naming the step and the stage, chained to the original exception
    """
    def __new__(meta, name, bases, class_dict):
        cls = super().__new__(meta, name, bases, class_dict)
        for step in steps:
            if step in class_dict:
                setattr(cls,step,_wrap_step(step,class_dict[step]))
        return cls


class BaseModule(object,metaclass=MetaModule):
    """
    Base stage class.
    Stages interact with the rest of the pipeline through :meth:`setup` (once, before the first frame),
    :meth:`execute` (once per frame) and :meth:`cleanup` (once, after the last frame).

    Attributes
    ----------
    name : string
        Stage name, unique within the pipeline. Stage-specific options are read from the
        :attr:`config_block` section of the same name, see :attr:`options`.

    config_block : ConfigBlock
        Run configuration, shared by all stages of a pipeline.

    data_block : DataBlock
        Data exchanged between stages.

    timings : dict
        Dictionary of step: (number of calls, total wall time in seconds).
    """
    def __init__(self, name, options=None, config_block=None, data_block=None):
        """
        Initialize :class:`BaseModule`.

        Parameters
        ----------
        name : string
            Stage name.

        options : dict, default=None
            Options for this stage, written to section ``name`` of ``config_block``.

        config_block : ConfigBlock, dict, string, default=None
            Run configuration. If ``None``, an empty one.

        data_block : DataBlock, default=None
            Data exchanged between stages. If ``None``, an empty one.
        """
        self.name = name
        self.timings = {}
        self.set_config_block(options=options,config_block=config_block)
        self.set_data_block(data_block=data_block)
        self.log_debug('Init stage {}.'.format(self),rank=0)

    def set_config_block(self, options=None, config_block=None):
        """Set :attr:`config_block` (kept as is if already a :class:`ConfigBlock`) and :attr:`options`."""
        if not isinstance(config_block,ConfigBlock):
            config_block = ConfigBlock(config_block)
        self.config_block = config_block
        for name,value in (options or {}).items():
            self.config_block[self.name,name] = value
        self.options = SectionBlock(self.config_block,self.name)

    def set_data_block(self, data_block=None):
        """Set :attr:`data_block`; it is shared, not copied."""
        self.data_block = data_block if data_block is not None else DataBlock()

    def setup(self):
        """Set up stage."""
        raise NotImplementedError

    def execute(self):
        """Process one item of the stream."""
        raise NotImplementedError

    def cleanup(self):
        """Finalize outputs and free memory."""
        raise NotImplementedError

    def __str__(self):
        return '{} [{}]'.format(self.__class__.__name__,self.name)
