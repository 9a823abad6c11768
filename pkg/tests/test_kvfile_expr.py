from __future__ import annotations

import numpy as np
import pytest

from rheoflow.expr import Expression, ExpressionError, evaluate
from rheoflow.kvfile import ConfigError, parse_text


def test_sections_keys_and_lines():
    entries = parse_text("# head\n[grid]\nnx = 4\n\n[scheme]\ndt = 0.1  # step\n")
    assert [(e.section, e.key, e.value, e.line) for e in entries] == [
        ("grid", "nx", "4", 3),
        ("scheme", "dt", "0.1", 6),
    ]


@pytest.mark.parametrize("text, line", [
    ("a = 1\nb\n", 2),
    ("a = 1\na = 2\n", 2),
    ("[x\n", 1),
    ("a =\n", 1),
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(ConfigError) as err:
        parse_text(text, "f.cfg")
    assert err.value.line == line
    assert f"f.cfg:{line}:" in str(err.value)


def test_empty_file_is_error():
    with pytest.raises(ConfigError):
        parse_text("# only a comment\n")


def test_expression_evaluates_arrays():
    y = np.linspace(-1, 1, 5)
    np.testing.assert_allclose(evaluate("cos(pi*y/2)", {"y": y}), np.cos(np.pi * y / 2))


@pytest.mark.parametrize("src", ["__import__('os')", "y.real", "[1, 2]", "lambda: 1", "z + 1"])
def test_expression_rejects_unsafe_or_unknown(src):
    with pytest.raises(ExpressionError):
        Expression(src, ("y",))
