"""Utility functions for logging and number formatting."""

from periodic_fde.utils.helpers import format_float, parse_int_list, setup_logging

__all__ = ["format_float", "parse_int_list", "setup_logging"]
