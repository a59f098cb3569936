"""Definition of :class:`ConfigBlock` and :class:`RunConfig`."""

import os
import re

import yaml

from .block import DataBlock, SectionBlock
from . import section_names


class ConfigError(Exception):

    """Exception raised when issue with **pysalsub** configuration."""


class ConfigLoader(yaml.SafeLoader):

    """*yaml* loader that also reads exponent floats without a dot (e.g. ``1e-4``, as written in *json*) as floats."""


ConfigLoader.add_implicit_resolver('tag:yaml.org,2002:float',
                                   re.compile(r'^[-+]?(?:[0-9][0-9_]*)(?:\.[0-9_]*)?[eE][-+]?[0-9]+$'),
                                   list('-+0123456789'))


def yaml_parser(string):
    """Parse *yaml* (or *json*, which *yaml* is a superset of) string into a dictionary."""
    try:
        toret = yaml.load(string,Loader=ConfigLoader)
    except yaml.YAMLError as exc:
        raise ConfigError('Could not parse configuration: {}'.format(exc)) from exc
    if toret is None:
        return {}
    if not isinstance(toret,dict):
        raise ConfigError('Configuration must be a mapping of sections, found {}.'.format(type(toret).__name__))
    return toret


class ConfigBlock(DataBlock):
    """
    This class handles the run configurations.
    Extends :class:`DataBlock` with an initialisation from a *yaml* or *json* file.
    """
    def __init__(self, data=None, string=None, parser=yaml_parser):
        """
        Initialize :class:`ConfigBlock`.

        Parameters
        ----------
        data : string, ConfigBlock, dict, default=None
            Path to configuration file.
            Else, :class:`ConfigBlock` instance to be (shallow) copied.
            Else, a dictionary as for initialisation of a :class:`DataBlock` instance.
            If ``None``, ignored.

        string : string, default=None
            If not ``None``, *yaml* format string to decode.
            Added on top of ``data``.

        parser : callable, default=yaml_parser
            Function that parses *yaml* string into a dictionary.
            Used when ``data`` is string, or ``string`` is not ``None``.
        """
        if isinstance(data,str):
            self.filename = data
            try:
                with open(data,'r') as file:
                    data = parser(file.read())
            except OSError as exc:
                raise ConfigError('Could not read configuration file {}.'.format(self.filename)) from exc
        else:
            self.filename = getattr(data,'filename',None)
        super(ConfigBlock,self).__init__(data=self._filter(data))
        if string is not None:
            self.update(self._filter(parser(string)))

    @staticmethod
    def _filter(data):
        if isinstance(data,DataBlock):
            return data
        # only entries matching the (section,name) format
        return {key:value for key,value in (data or {}).items() if isinstance(value,dict)}


def parse_param(string):
    """
    Parse a ``name=value`` string into a (name, value) tuple, value being decoded as a *yaml* scalar.

    >>> parse_param('beta=2.5')
    ('beta', 2.5)
    """
    name,sep,value = string.partition('=')
    name = name.strip()
    if not sep or not name:
        raise ConfigError('Parameter override must be of the form name=value, found "{}".'.format(string))
    value = yaml_parser('value: {}'.format(value.strip()))['value']
    return name,value


class RunConfig(ConfigBlock):
    """
    Configuration of a detection run, with two sections:

    - ``run``: paths, mode, training window and run switches
    - ``parameters``: solver parameter overrides

    Values provided in the constructor ``data`` (e.g. a configuration file) are completed by :attr:`defaults`;
    command-line flags are applied on top with :meth:`set_flags` and :meth:`set_params`.
    """
    defaults = {'frames_dir':None,'saliency_dir':None,'truth_dir':None,'output_dir':None,
                'pattern':None,'mode':'saliency','training_count':20,'seed':42,'verbose':False,
                'allow_missing_saliency':False,'variance_scale':'pixel','adapt_beta':True,
                'basis':None,'video':None}

    def __init__(self, data=None, string=None, parser=yaml_parser):
        super(RunConfig,self).__init__(data=data,string=string,parser=parser)
        unknown = [name for name in self.keys(section_names.run) if name[1] not in self.defaults]
        if unknown:
            raise ConfigError('Unknown options {} in section [{}].'.format([name for _,name in unknown],section_names.run))
        for name,value in self.defaults.items():
            self.setdefault(section_names.run,name,value)
        self.data.setdefault(section_names.parameters,{})
        self.options = SectionBlock(self,section_names.run)

    def set_flags(self, **flags):
        """Override ``run`` options with command-line ``flags``; ``None`` values are ignored."""
        for name,value in flags.items():
            if value is None: continue
            if name not in self.defaults:
                raise ConfigError('Unknown option {}.'.format(name))
            self[section_names.run,name] = value

    def set_params(self, params=None):
        """Override solver parameters with a list of ``name=value`` strings, or a dictionary."""
        if params is None: return
        if not isinstance(params,dict):
            params = dict(parse_param(param) for param in params)
        self.data[section_names.parameters].update(params)

    @property
    def overrides(self):
        """Solver parameter overrides."""
        return dict(self[section_names.parameters])

    def validate(self, require_saliency=None, require_truth=False):
        """
        Check paths and values before the stream starts, else raise :class:`ConfigError`.

        Parameters
        ----------
        require_saliency : bool, default=None
            Whether the saliency directory must exist. If ``None``, required in saliency mode
            unless ``allow_missing_saliency`` is set.

        require_truth : bool, default=False
            Whether the ground truth directory must exist.
        """
        from .optimizer import AblationMode
        options = self.options
        try:
            mode = AblationMode(options['mode'])
        except ValueError as exc:
            raise ConfigError('Unknown mode {}; choices are {}.'.format(options['mode'],AblationMode.strs)) from exc
        options['mode'] = AblationMode.as_str(mode)

        def check_dir(name, required=True):
            dirname = options[name]
            if dirname is None:
                if required:
                    raise ConfigError('Option {} is required.'.format(name))
                return
            if not os.path.isdir(dirname):
                raise ConfigError('Directory {} = {} does not exist.'.format(name,dirname))

        check_dir('frames_dir')
        if require_saliency is None:
            require_saliency = mode == AblationMode.SALIENCY and not options['allow_missing_saliency']
        if require_saliency or mode == AblationMode.SALIENCY:
            # other modes never read saliency maps
            check_dir('saliency_dir',required=require_saliency)
        check_dir('truth_dir',required=require_truth)
        if options['output_dir'] is None:
            raise ConfigError('Option output_dir is required.')
        basis = options['basis']
        if basis is not None and not os.path.isfile(basis):
            raise ConfigError('Basis file {} does not exist.'.format(basis))
        training_count = options['training_count']
        if not isinstance(training_count,int) or isinstance(training_count,bool):
            raise ConfigError('training_count must be an integer, found {}.'.format(training_count))
        m = self.overrides.get('m',5)
        if training_count < m:
            raise ConfigError('training_count = {:d} must be at least m = {}.'.format(training_count,m))
        if options['variance_scale'] not in ('pixel','frame'):
            raise ConfigError('variance_scale must be one of pixel, frame; found {}.'.format(options['variance_scale']))
        return self
