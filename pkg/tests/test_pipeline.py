import json
import math

import pytest

from spectra.config import RunConfig
from spectra.pipeline import parse_floats, parse_range, render_csv, run_pipeline


def test_parse_range():
    assert parse_range("3:6") == [3, 4, 5, 6]
    assert parse_range("10:30:10") == [10, 20, 30]
    assert parse_range("5,7, 9") == [5, 7, 9]
    for text in ("6:3", "1:5:0", "1:2:3:4"):
        with pytest.raises(ValueError):
            parse_range(text)


def test_parse_floats():
    assert parse_floats("0.4,0.2, 0.1") == [0.4, 0.2, 0.1]
    with pytest.raises(ValueError):
        parse_floats("0.4,a")


def test_render_csv():
    text = render_csv(("q", "P"), [(0.1, 1 / 3), (2, None)])
    assert text == "q,P\n0.1,0.3333333333333333\n2,\n"


def test_oracle_with_loaded_model(reference_model):
    cfg = RunConfig(command="oracle", parameters={"alphas": [0.0], "q": [0.0, 1.0]})
    result = run_pipeline(cfg, reference_model)

    assert result.exit_code == 0
    report = json.loads(result.output)
    assert report["config_sha256"] == reference_model.sha256
    assert report["pressure"][1][1] == pytest.approx(math.log(2.25))
    assert report["h_zero"] == pytest.approx(0.636514168294813)


def test_unknown_command(reference_model):
    result = run_pipeline(RunConfig(command="plot"), reference_model)
    assert result.exit_code == 2
    assert "Unknown command" in result.error


def test_model_required():
    result = run_pipeline(RunConfig(command="oracle"))
    assert result.exit_code == 2
    assert "needs a model file" in result.error
