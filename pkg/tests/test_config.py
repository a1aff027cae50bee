import json

import pytest

from leafflow.config import ConfigError, Tolerances, build_checked, load_config, parse_config


def test_preset_config():
    cfg = parse_config('{"family": {"preset": "group", "eta": 0.5}, "output_dir": "o"}')
    assert cfg.family.preset == "group" and cfg.family.eta == 0.5
    assert cfg.output_dir == "o"
    assert cfg.tolerances == Tolerances()
    assert build_checked(cfg).name.startswith("group")


def test_custom_config_and_tolerances():
    text = json.dumps(
        {
            "family": {"custom": {"U": "3*z^2 - 1", "V": "0", "P": "0", "Q": "z^3 - z"}},
            "z_interval": [-5, 5],
            "tolerances": {"eps_red": 1e-5, "casimir_tol": 1e-9},
        }
    )
    cfg = parse_config(text)
    assert cfg.z_interval == (-5.0, 5.0)
    assert cfg.tolerances.eps_red == 1e-5 and cfg.tolerances.rtol == Tolerances().rtol
    fam = build_checked(cfg)
    assert fam.casimir((1.0, 2.0, 0.5)) == pytest.approx(2.0 + 0.125 - 0.5)


@pytest.mark.parametrize(
    "text, line, message",
    [
        ('{\n  "family": {"preset": "linear"},\n  "extra": 1\n}', 3, "unknown key 'extra'"),
        ('{\n  "family": {"preset": "linear", "colour": 1}\n}', 2, "unknown key 'colour'"),
        ('{\n  "family": {"preset": "linear"},\n  "tolerances": {\n    "eps_q": 1\n  }\n}', 4, "unknown key 'eps_q'"),
        ('{\n  "family": {"preset": "linear"},\n}', 3, "invalid JSON"),
        ('{\n  "family": {"preset": "cubic"}\n}', 2, "unknown preset"),
        ('{\n  "family": {"preset": "linear"},\n  "z_interval": [3, 1]\n}', 3, "z_min < z_max"),
        ('{\n  "family": {"preset": "linear"},\n  "tolerances": {"rtol": -1}\n}', 3, "positive"),
        ('{\n  "family": {"custom": {"U": "z", "V": "0", "P": "0"}}\n}', 2, "lacks"),
        ('{"family": {"preset": "group", "eta": "big"}}', 1, "must be a number"),
    ],
)
def test_errors_carry_line_numbers(text, line, message):
    with pytest.raises(ConfigError, match=message) as info:
        parse_config(text, "cfg.json")
    assert info.value.line == line
    assert str(info.value).startswith(f"cfg.json:{line}:")


def test_missing_family():
    with pytest.raises(ConfigError, match="missing 'family'"):
        parse_config("{}")


def test_inconsistent_custom_family_fails_at_build():
    cfg = parse_config('{"family": {"custom": {"U": "3*z^2-1", "V": "0", "P": "z", "Q": "z^3-z"}}}')
    with pytest.raises(ConfigError, match="P' = V"):
        build_checked(cfg, "cfg.json")


def test_bad_expression_is_reported():
    cfg = parse_config('{"family": {"custom": {"U": "3*z^^2", "V": "0", "P": "0", "Q": "z"}}}')
    with pytest.raises(ConfigError, match="offset"):
        build_checked(cfg)


def test_load_config_from_file(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{"family": {"preset": "quadratic"}}')
    assert load_config(p).family.preset == "quadratic"
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json")
