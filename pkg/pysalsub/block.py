"""Definition of :class:`DataBlock`, the container exchanged between pipeline stages, and its one-section view :class:`SectionBlock`."""

from . import utils
from .utils import BaseClass


class DataBlock(BaseClass):
    """
    Two-level store shared by pipeline stages: frames, subspace, solver state and scores
    are filed under ``(section, name)`` keys, see :mod:`section_names`.
    Typed accessors ``get_int``, ``get_float``... raise a :class:`TypeError` on a mismatch.

    >>> data_block = DataBlock({'run':{'mode':'saliency'}})
    >>> data_block['run','mode']
    'saliency'
    >>> data_block.get_int('run','mode')
    Traceback (most recent call last): TypeError: Entry "mode" of section [run] is not of type int.

    Attributes
    ----------
    data : dict
        Dictionary of section: dictionary of name: value.
    """
    def __init__(self, data=None):
        """
        Initialize :class:`DataBlock`.

        Parameters
        ----------
        data : dict, DataBlock, default=None
            Dictionary of section: dictionary of name: value, or another :class:`DataBlock`.
            Section dictionaries are copied, values are not.
        """
        self.data = {}
        if isinstance(data,DataBlock):
            data = data.data
        for section,values in (data or {}).items():
            self[section] = dict(values) if isinstance(values,dict) else values

    @staticmethod
    def _split_key(key):
        if not isinstance(key,tuple):
            return key, None
        if len(key) not in (1,2):
            raise KeyError('Expected key (section, name), found {}'.format(key))
        return (key + (None,))[:2]

    def __getitem__(self, key):
        """Return entry ``data_block[section,name]``, or section dictionary ``data_block[section]``."""
        section,name = self._split_key(key)
        if name is None:
            return self.data[section]
        try:
            return self.data[section][name]
        except KeyError as exc:
            raise KeyError('No entry "{}" in section [{}].'.format(name,section)) from exc

    def __setitem__(self, key, value):
        """Set entry ``data_block[section,name]``, or replace section dictionary ``data_block[section]``."""
        section,name = self._split_key(key)
        if name is not None:
            self.data.setdefault(section,{})[name] = value
        elif isinstance(value,dict):
            self.data[section] = value
        else:
            raise TypeError('Section [{}] must be a dictionary, found {}.'.format(section,type(value)))

    def __contains__(self, key):
        return self.has(*self._split_key(key))

    def __len__(self):
        """Number of sections."""
        return len(self.data)

    def has(self, section, name=None):
        """Whether section ``section`` exists, and holds ``name`` if provided."""
        if section not in self.data:
            return False
        return name is None or name in self.data[section]

    def get(self, section, name=None, *args, **kwargs):
        """
        Return entry (``section``, ``name``), or section ``section`` if ``name`` is ``None``.
        If missing, return the default value (third argument or ``default``) if provided, else raise a :class:`KeyError`.
        """
        if (args or 'default' in kwargs) and not self.has(section,name):
            return args[0] if args else kwargs['default']
        return self[section,name]

    def set(self, section, name, value):
        self[section,name] = value

    def setdefault(self, section, name, value):
        """Set entry (``section``, ``name``) to ``value``, unless it exists."""
        if not self.has(section,name):
            self[section,name] = value

    def get_type(self, section, name, types, *args, **kwargs):
        """
        Same as :meth:`get`, checking that an existing entry is of one of ``types``
        (see :func:`utils.is_of_type`); the default value is returned unchecked.

        Raises
        ------
        TypeError
            If the entry exists and is of none of ``types``.
        """
        if not self.has(section,name):
            return self.get(section,name,*args,**kwargs)
        value = self[section,name]
        if not utils.is_of_type(value,types):
            raise TypeError('Entry "{}" of section [{}] is not of type {}.'.format(name,section,types))
        return value

    def sections(self):
        return list(self.data)

    def keys(self, section=None):
        """Return list of (section, name) keys, restricted to ``section`` if provided."""
        sections = self.sections() if section is None else [section]
        return [(section,name) for section in sections for name in self.data.get(section,{})]

    def items(self, section=None):
        return [(key,self[key]) for key in self.keys(section=section)]

    def __iter__(self):
        return iter(self.keys())

    def copy(self):
        """Return copy of ``self`` with new section dictionaries; stored objects are shared."""
        return self.__class__(self)

    def update(self, other):
        """Merge ``other`` (:class:`DataBlock` or dictionary of sections) into ``self``, section by section."""
        if isinstance(other,DataBlock):
            other = other.data
        for section,values in other.items():
            self.data.setdefault(section,{}).update(values)

    def __repr__(self):
        return '{}({})'.format(self.__class__.__name__,self.data)


def _make_typed_getter(type_):

    def getter(self, section, name, *args, **kwargs):
        return self.get_type(section,name,type_,*args,**kwargs)

    getter.__doc__ = ':meth:`DataBlock.get_type` with types {}.'.format(type_)
    return getter


for type_ in ['bool','int','float','string']:
    setattr(DataBlock,'get_{}'.format(type_),_make_typed_getter(type_))


class SectionBlock(object):
    """
    View of one section of a :class:`DataBlock`, used as a single-level dictionary;
    stage options are the view of the configuration section named after the stage.

    >>> options = SectionBlock(config_block,'scorer')
    >>> options.get_int('roc_steps',101)
    """
    def __init__(self, block, section):
        """Initialize :class:`SectionBlock` on section ``section`` of :class:`DataBlock` ``block``, created if missing."""
        self.block = block
        self.section = section
        self.block.data.setdefault(section,{})

    def __str__(self):
        return str(self.block[self.section])

    def items(self):
        return self.block[self.section].items()

    def keys(self):
        return list(self.block[self.section])

    def has(self, name):
        return self.block.has(self.section,name)

    def __getitem__(self, name):
        return self.block[self.section,name]

    def __setitem__(self, name, value):
        self.block[self.section,name] = value

    def __contains__(self, name):
        return self.has(name)

    def setdefault(self, name, value):
        self.block.setdefault(self.section,name,value)


def _make_section_getter(method):

    def getter(self, name, *args, **kwargs):
        return getattr(self.block,method)(self.section,name,*args,**kwargs)

    getter.__doc__ = ':meth:`DataBlock.{}` restricted to :attr:`section`.'.format(method)
    return getter


for method in ['get','get_type'] + ['get_{}'.format(type_) for type_ in ['bool','int','float','string']]:
    setattr(SectionBlock,method,_make_section_getter(method))
