# -*- coding: utf-8 -*-
#
# banditlab documentation build configuration file.

import sys
import os

import sphinx_rtd_theme

sys.path.insert(0, os.path.abspath('..'))

import banditlab

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.todo',
    'sphinx.ext.coverage',
    'sphinx.ext.viewcode',
]

templates_path = ['_templates']
todo_include_todos = True

source_suffix = '.rst'
master_doc = 'index'

project = u'banditlab'
copyright = u'2026, banditlab contributors'

version = banditlab.__version__
release = banditlab.__version__

exclude_patterns = ['_build']
pygments_style = 'sphinx'

html_theme = 'sphinx_rtd_theme'
html_theme_path = [sphinx_rtd_theme.get_html_theme_path()]
html_static_path = ['_static']
htmlhelp_basename = 'banditlabdoc'

latex_elements = {
}
latex_documents = [
  ('index', 'banditlab.tex', u'banditlab Documentation',
   u'banditlab contributors', 'manual'),
]

man_pages = [
    ('index', 'banditlab', u'banditlab Documentation',
     [u'banditlab contributors'], 1)
]
