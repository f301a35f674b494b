import math
from pathlib import Path

import pytest

from spectra.config import RunConfig, load_config, parse_config, parse_value
from spectra.exceptions import ConfigError

from .conftest import write_config

BINARY = "[system]\nalphabet_size = 2\n"


def test_reference_model(reference_model, reference_config):
    assert reference_model.path == reference_config
    assert reference_model.system.alphabet_size == 2
    assert reference_model.system.bridge_length == 0
    total = reference_model.cocycle.birkhoff_sum("0011")
    assert total == pytest.approx(-2 * math.log(2))
    assert len(reference_model.sha256) == 64


def test_golden_model(golden_config):
    model = load_config(golden_config)
    assert model.system.count_words(3) == 5
    assert model.system.bridge_length == 1
    assert model.cocycle.birkhoff_sum("01") == pytest.approx(-0.5)


def test_symmetric_model(symmetric_config):
    model = load_config(symmetric_config)
    assert model.cocycle.depth == 1
    assert model.cocycle.birkhoff_sum("0111") == pytest.approx(2.0)


@pytest.mark.parametrize(
    "raw,expected",
    [
        (2, 2.0),
        (-0.5, -0.5),
        ("1.25", 1.25),
        ("log(2)", math.log(2)),
        ("log(1/4)", -math.log(4)),
        (" log( 3 / 2 ) ", math.log(1.5)),
    ],
)
def test_parse_value(raw, expected):
    assert parse_value(raw, "x") == pytest.approx(expected)


@pytest.mark.parametrize("raw", [True, "log(0)", "log(-1)", "log(1/0)", "two", None])
def test_parse_value_rejects(raw):
    with pytest.raises(ConfigError):
        parse_value(raw, "x")


def test_transitions_and_bridges():
    model = parse_config(
        b"""
[system]
alphabet_size = 2
transitions = [[1, 1], [1, 0]]

bridge_length = 1

[system.bridges]
"0-0" = "0"
"0-1" = "0"
"1-0" = "0"
"1-1" = "0"

[cocycle]
depth = 2
values = { "00" = 0.1, "01" = 0.2, "10" = 0.3 }
"""
    )
    assert model.system.count_words(3) == 5
    assert model.cocycle.depth == 2
    assert model.path == Path("<string>")


@pytest.mark.parametrize(
    "text,message",
    [
        ("[cocycle]\nvalues = [1]\n", "`[system]` section is missing"),
        ("[system]\nalphabet_size = 2\n", "`[cocycle]` section is missing"),
        ("[system]\n[cocycle]\nvalues = [1, 2]\n", "alphabet_size` is required"),
        (
            BINARY + 'forbidden = ["111"]\n[cocycle]\nvalues = [1, 2]\n',
            "only two-letter forbidden words",
        ),
        (BINARY + "[cocycle]\ndepth = 0\nvalues = [1, 2]\n", "depth"),
        (BINARY + "[cocycle]\ndepth = 2\nvalues = [1, 2]\n", "depth = 1"),
        (BINARY + "[cocycle]\n", "`cocycle.values` is required"),
        (BINARY + "[cocycle]\nvalues = [1]\n", "Invalid `[cocycle]`"),
    ],
)
def test_invalid_models(text, message):
    with pytest.raises(ConfigError) as err:
        parse_config(text.encode())
    assert message in str(err.value)


def test_syntax_error_position(tmp_path):
    path = write_config(tmp_path, "[system]\nalphabet_size = = 2\n")
    with pytest.raises(ConfigError) as err:
        load_config(path)
    assert err.value.line == 2
    assert "Cannot parse" in str(err.value)
    assert "line 2" in str(err.value)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError) as err:
        load_config(tmp_path / "nothing.toml")
    assert "Cannot read config" in str(err.value)


def test_not_utf8():
    with pytest.raises(ConfigError):
        parse_config(b"\xff\xfe[system]")


def test_run_config():
    run = RunConfig(
        command="pressure",
        tolerances={"eps": [0.4, 0.2]},
        grids={"q": [-1.0, 0.0, 1.0]},
        budgets={"tower": 10},
    )
    run.validate()
    assert run.header("1.0") == {
        "command": "pressure",
        "config_sha256": None,
        "seed": 0,
        "version": "1.0",
    }

    for broken in (
        RunConfig(command="x", tolerances={"theta": 0.0}),
        RunConfig(command="x", tolerances={"eps": [0.4, -0.1]}),
        RunConfig(command="x", grids={"q": [0.0, 0.0]}),
        RunConfig(command="x", budgets={"tower": 0}),
        RunConfig(command="x", threads=0),
        RunConfig(command="x", output_format="xml"),
    ):
        with pytest.raises(ConfigError):
            broken.validate()
