"""Definition of :class:`StreamPipeline`."""

from .module import BaseModule, execute_function
from . import section_names


class StreamPipeline(BaseModule):
    """
    Extend :class:`BaseModule` to set up, execute and clean up several stages, in order, over a stream:
    stages share :attr:`data_block` (no copy), and :meth:`run` calls :meth:`execute` until entry ('stream', 'done')
    of :attr:`data_block` is ``True``.

    Attributes
    ----------
    modules : dict
        Dictionary of stage name: stage, in execution order.
    """
    def __init__(self, name='main', modules=None, options=None, config_block=None, data_block=None):
        """
        Initialize :class:`StreamPipeline`.

        Parameters
        ----------
        name : string, default='main'
            Pipeline name.

        modules : list, default=None
            List of :class:`BaseModule` instances, run in this order.

        options : dict, default=None
            Options for this pipeline.

        config_block : ConfigBlock, dict, string, default=None
            Run configuration, shared with all stages.

        data_block : DataBlock, default=None
            Data exchanged between stages. If ``None``, an empty one.
        """
        self.modules = {}
        self._ready = []
        super(StreamPipeline,self).__init__(name,options=options,config_block=config_block,data_block=data_block)
        for module in modules or []:
            self.add_module(module)

    def add_module(self, module):
        """Append stage ``module``, which then shares :attr:`config_block`."""
        if module.name in self.modules:
            raise ValueError('Stage name [{}] is already used in pipeline [{}].'.format(module.name,self.name))
        self.config_block.update(module.config_block)
        module.set_config_block(config_block=self.config_block)
        self.modules[module.name] = module
        return module

    def setup(self):
        """Set up stages."""
        self._ready = []
        for module in self.modules.values():
            module.set_data_block(self.data_block)
            module.setup()
            self._ready.append(module)

    def execute(self):
        """Execute stages."""
        for module in self.modules.values():
            module.set_data_block(self.data_block)
            module.execute()

    def cleanup(self):
        """Clean up the stages that were set up."""
        ready, self._ready = self._ready, []
        for module in ready:
            module.cleanup()

    def done(self):
        return self.data_block.get(section_names.stream,'done',False)

    def run(self):
        """
        Set up, execute until the stream is exhausted, and clean up; return the number of executions.
        Stages that were set up are cleaned up even if a step fails (e.g. open files are closed).
        """
        niterations = 0
        try:
            self.setup()
            while not self.done():
                self.execute()
                niterations += 1
        finally:
            self.cleanup()
        self.log_info('Pipeline [{}] ran {:d} iterations.'.format(self.name,niterations),rank=0)
        for module in self.modules.values():
            calls,seconds = module.timings.get(execute_function,(0,0.))
            if calls:
                self.log_debug('Stage {} spent {:.3f} s in {:d} executions.'.format(module,seconds,calls),rank=0)
        return niterations
