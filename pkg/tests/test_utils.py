"""
Tests for helper utilities.
"""

import logging

import numpy as np
import pytest

from periodic_fde.utils.helpers import ColoredFormatter, format_duration, format_float, max_abs, parse_int_list


def make_record(level=logging.WARNING):
    return logging.LogRecord("periodic_fde", level, __file__, 1, "message", None, None)


class TestColoredFormatter:
    def test_plain_output_brackets_level(self):
        formatter = ColoredFormatter(fmt="%(levelname)s %(message)s")
        formatter.use_colors = False
        assert formatter.format(make_record()) == "[WARNING] message"

    def test_colored_output(self):
        formatter = ColoredFormatter(fmt="%(levelname)s %(message)s")
        formatter.use_colors = True
        assert formatter.format(make_record(logging.ERROR)) == "\033[31m[ERROR]\033[0m message"

    def test_record_is_left_untouched(self):
        record = make_record()
        ColoredFormatter(fmt="%(levelname)s").format(record)
        assert record.levelname == "WARNING"


@pytest.mark.parametrize(
    "value, expected",
    [(0.0, "0"), (0.5, "0.5"), (1e-10, "1e-10"), (0.1, "0.10000000000000001")],
)
def test_format_float(value, expected):
    assert format_float(value) == expected


def test_format_float_round_trips(rng):
    for value in rng.standard_normal(50) * 10.0 ** rng.integers(-12, 12, 50):
        assert float(format_float(value)) == value


@pytest.mark.parametrize(
    "text, expected",
    [("10,20,40", [10, 20, 40]), (" 3, 5 ", [3, 5]), ("7,", [7]), ([1, 2], [1, 2]), ((4,), [4])],
)
def test_parse_int_list(text, expected):
    assert parse_int_list(text) == expected


@pytest.mark.parametrize("text", ["abc", "1,2.5", [1, "x"]])
def test_parse_int_list_rejects(text):
    with pytest.raises(ValueError, match="comma separated"):
        parse_int_list(text)


def test_format_duration():
    assert format_duration(1.234) == "1.23s"
    assert format_duration(125.0) == "2m 5.0s"


def test_max_abs():
    assert max_abs(np.array([1.0, -3.0, 2.0])) == 3.0
    assert max_abs(np.array([])) == 0.0
