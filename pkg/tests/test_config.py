from __future__ import annotations

import json
from fractions import Fraction

import pytest

from ospcheck.config import ConfigError, PhysicalParams, RenormConstants, load_config, parse_document


def test_defaults_recorded():
    params, consts = load_config({"lambda": 0.1, "mass": 1.0})
    assert params.lam == 0.1 and params.mass == 1.0
    assert consts == RenormConstants()
    assert set(consts.defaulted) == {"a0", "rho0", "d0", "n3_val", "n3_deriv"}
    assert not consts.any_positive()


def test_negative_lambda_rejected():
    with pytest.raises(ConfigError, match="lambda must be positive"):
        load_config({"lambda": -0.1, "mass": 1.0})


def test_gamma_max_value():
    params, consts = load_config({"lambda": 0.04, "mass": 1.0, "d0": 0.5})
    assert consts.gamma_max(params.lam) == pytest.approx(1.363456, rel=1e-14)
    assert consts.defaulted == ("a0", "rho0", "n3_val", "n3_deriv")
    assert consts.gamma_max(Fraction(1, 25)) == Fraction(1363456, 1000000)


@pytest.mark.parametrize(
    "doc, msg",
    [
        ({"lambda": 0.1}, "missing required key: mass"),
        ({"lambda": 0.1, "mass": 1, "colour": 2}, "unknown keys: colour"),
        ({"lambda": 0.1, "mass": 0}, "mass must be positive"),
        ({"lambda": 0.1, "mass": 1, "d0": -1}, "d0 must be finite"),
        ({"lambda": "abc", "mass": 1}, "cannot parse"),
        ({"lambda": True, "mass": 1}, "boolean"),
    ],
)
def test_rejections(doc, msg):
    with pytest.raises(ConfigError, match=msg):
        load_config(doc)


def test_files_and_text(tmp_path):
    j = tmp_path / "c.json"
    j.write_text(json.dumps({"lambda": "1/25", "mass": 1}))
    params, _ = load_config(str(j))
    assert params.lam == Fraction(1, 25)
    y = tmp_path / "c.yaml"
    y.write_text("lambda: 0.1\nmass: 2\nd0: 0.5\n")
    params, consts = load_config(y)
    assert params.mass == 2 and consts.d0 == 0.5
    assert parse_document("lambda: 0.2\nmass: 1\n") == {"lambda": 0.2, "mass": 1}


def test_parse_failures(tmp_path):
    with pytest.raises(ConfigError, match="parse failure"):
        parse_document("{not json")
    with pytest.raises(ConfigError, match="key/value"):
        parse_document("- 1\n- 2\n")
    with pytest.raises(ConfigError, match="cannot read"):
        parse_document(str(tmp_path / "missing.json"))


@pytest.mark.parametrize(
    "lam, flag",
    [(0.01, "construction"), (0.04, "construction"), (0.1, "weak-condition"), (1 / 6, "outside-weak-condition")],
)
def test_range_flag(lam, flag):
    assert PhysicalParams(lam, 1.0).range_flag == flag
