# Make the cli module a package
# This allows imports like: from mtnet.cli import main

from .app import build_parser, main
from .config import ExperimentConfig

__all__ = ['ExperimentConfig', 'build_parser', 'main']
