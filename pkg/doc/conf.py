# Configuration file for the Sphinx documentation builder.
#
# This file only contains a selection of the most common options. For a full
# list see the documentation:
# https://www.sphinx-doc.org/en/master/usage/configuration.html

# -- Path setup --------------------------------------------------------------

import os
import sys

sys.path.insert(0,os.path.abspath(os.path.join('..','pysalsub')))

from _version import __version__

# -- General configuration ------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.intersphinx',
    'sphinx.ext.extlinks',
    'sphinx.ext.napoleon',
    'sphinx.ext.mathjax',
    'sphinx_rtd_theme'
]

# -- Project information -----------------------------------------------------

project = 'pysalsub'

# The full version, including alpha/beta/rc tags
release = __version__

html_theme = 'sphinx_rtd_theme'

autodoc_mock_imports = ['mpi4py']

# Add any paths that contain templates here, relative to this directory.
templates_path = ['_templates']

# List of patterns, relative to source directory, that match files and
# directories to ignore when looking for source files.
exclude_patterns = ['build', '**.ipynb_checkpoints']

# -- Options for HTML output -------------------------------------------------

html_static_path = []

git_root = '../'

extlinks = {'root': (git_root + '%s','')}

intersphinx_mapping = {
    'numpy': ('https://numpy.org/doc/stable/', None),
    'scipy': ('https://docs.scipy.org/doc/scipy/', None)
}

autoclass_content = 'both'
