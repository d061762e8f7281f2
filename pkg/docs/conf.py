# Configuration file for the Sphinx documentation builder.
#
# For the full list of options see the documentation:
# https://www.sphinx-doc.org/en/master/usage/configuration.html

# -- Path setup --------------------------------------------------------------

import os
import re
import sys
sys.path.insert(0, os.path.abspath('..'))


# -- Project information -----------------------------------------------------

project = 'zaniwave'
copyright = '2026, Contributors to zaniwave'
author = 'Contributors to zaniwave'

# The release is read from setup.py so it is only maintained in one place
with open(os.path.join(os.path.dirname(os.path.dirname(__file__)), 'setup.py')) as file:
    release = re.search(r"version='([^']+)'", file.read()).group(1)

# -- General configuration ---------------------------------------------------

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.mathjax', 'sphinxcontrib.apidoc']

apidoc_module_dir = os.path.join(os.path.dirname(os.path.dirname(__file__)), 'zaniwave')
apidoc_excluded_paths = [os.path.join(apidoc_module_dir, 'templates')]

templates_path = ['_templates']

exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']

autoclass_content = 'both'

# -- Options for HTML output -------------------------------------------------

html_theme = 'alabaster'
html_theme_options = {
    'logo_name': True,
    'font_family': 'sans-serif',
    'font_size': 8
}

html_static_path = ['_static']
