# Make the utils module a package
# This allows imports like: from mtnet.utils import run_cells

from .helpers import read_container, run_cells, setup_logging, write_container

__all__ = ['read_container', 'run_cells', 'setup_logging', 'write_container']
