"""Sphinx configuration of the phasetopo documentation."""

import datetime
import os
import sys

package_path = os.path.abspath("../..")
sys.path.insert(0, package_path)

import phasetopo  # noqa: E402

project = "phasetopo"
author = phasetopo.__author__
copyright = f"2024-{datetime.datetime.today().year}, {author}"
version = phasetopo.__version__
release = phasetopo.__version__
language = "en"

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.autosummary",
    "sphinx.ext.napoleon",  # numpy docstrings
    "sphinx.ext.doctest",
    "sphinx.ext.viewcode",
    "sphinx.ext.intersphinx",
    "sphinx.ext.mathjax",
]

autosummary_generate = True
autoclass_content = "class"
autodoc_member_order = "groupwise"
napoleon_google_docstring = False
napoleon_numpy_docstring = True
napoleon_use_ivar = True

intersphinx_mapping = {
    "python": ("https://docs.python.org/3", None),
    "numpy": ("https://numpy.org/doc/stable/", None),
    "scipy": ("https://docs.scipy.org/doc/scipy/", None),
    "networkx": ("https://networkx.org/documentation/stable/", None),
    "pandas": ("https://pandas.pydata.org/docs/", None),
}

source_suffix = [".rst"]
master_doc = "index"
exclude_patterns = ["build", "Thumbs.db", ".DS_Store"]
pygments_style = "sphinx"

html_theme = "pydata_sphinx_theme"
html_theme_options = {
    "show_prev_next": False,
    "github_url": "https://github.com/antoinecollet5/phasetopo/",
}
html_copy_source = False
htmlhelp_basename = "phasetopodoc"

man_pages = [(master_doc, "phasetopo", "phasetopo Documentation", [author], 1)]
