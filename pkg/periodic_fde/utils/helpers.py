"""Helper utilities: coloured logging and number formatting."""

import logging
import sys
from typing import Iterable, List, Sequence, Union

import numpy as np


class ColoredFormatter(logging.Formatter):
    """Formatter with coloured level names on terminals and bracketed level names otherwise."""

    # ANSI color codes
    COLORS = {
        "DEBUG": "\033[37m",
        "INFO": "\033[34m",
        "WARNING": "\033[33m",
        "ERROR": "\033[31m",
        "CRITICAL": "\033[91m",
    }
    RESET = "\033[0m"

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.use_colors = hasattr(sys.stderr, "isatty") and sys.stderr.isatty()

    def format(self, record: logging.LogRecord) -> str:
        original_levelname = record.levelname
        if self.use_colors and record.levelname in self.COLORS:
            record.levelname = f"{self.COLORS[record.levelname]}[{record.levelname}]{self.RESET}"
        else:
            record.levelname = f"[{record.levelname}]"
        try:
            return super().format(record)
        finally:
            record.levelname = original_levelname


def setup_logging(level: Union[str, int] = "INFO") -> None:
    """Install the coloured stderr handler on the root logger."""
    if isinstance(level, str):
        level = getattr(logging, level.upper(), logging.INFO)

    formatter = ColoredFormatter(
        fmt="%(asctime)s %(levelname)s %(filename)s:%(funcName)s:%(lineno)d - %(message)s", datefmt="%Y-%m-%d %H:%M:%S"
    )

    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    console_handler.setLevel(level)
    root_logger.addHandler(console_handler)

    # Suppress matplotlib font-manager chatter
    logging.getLogger("matplotlib").setLevel(logging.WARNING)


def format_float(value: float) -> str:
    """17 significant digits, enough to round-trip a double."""
    return f"{float(value):.17g}"


def parse_int_list(text: Union[str, Iterable[int]]) -> List[int]:
    """'10,20,40' or an iterable of ints -> [10, 20, 40]."""
    if isinstance(text, str):
        items: Sequence = [item for item in text.replace(" ", "").split(",") if item]
    else:
        items = list(text)
    try:
        return [int(item) for item in items]
    except (TypeError, ValueError) as e:
        raise ValueError(f"Expected a comma separated list of integers, got {text!r}") from e


def format_duration(seconds: float) -> str:
    if seconds < 60:
        return f"{seconds:.2f}s"
    minutes, seconds = divmod(seconds, 60)
    return f"{int(minutes)}m {seconds:.1f}s"


def max_abs(values: np.ndarray) -> float:
    return float(np.max(np.abs(values), initial=0.0))
