"""Statistical assertions for quantum programs, checked on a state-vector simulator."""
import logging

from .assertions import run_program, split_at_breakpoints
from .program import parse
from .report import Report

logging.getLogger(__name__).addHandler(logging.NullHandler())

__version__ = "0.1.0"
__all__ = ["parse", "run_program", "split_at_breakpoints", "Report"]
