import math

import pytest
from hypothesis import given, strategies as st

from eit_localizer import constants
from eit_localizer.config import PRESETS, SCHEMA, build_config, load_config, parse_value
from eit_localizer.errors import ConfigError


@pytest.mark.parametrize("preset", sorted(PRESETS))
def test_presets_load(preset):
    cfg = build_config(preset=preset)
    assert cfg.preset == preset
    assert set(cfg.as_dict()) == set(SCHEMA)


def test_preset_values():
    assert build_config(preset="fig10")["coupling.omega_max"] == (208.0,)
    assert build_config(preset="fig9")["probe.duration"] == pytest.approx(25e-6)
    assert build_config(preset="fig6")["grid.x_max"] == pytest.approx(128e-9)


def test_empty_file_gives_defaults(tmp_path):
    path = tmp_path / "empty.cfg"
    path.write_text("# nothing here\n\n")
    assert load_config(path).as_dict() == build_config().as_dict()


def test_sections_and_comments(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("[probe]\nomega = 0.3gamma  # weaker\nduration = 4us\n"
                    "coupling.omega_max = 10gamma, 18gamma\n")
    cfg = load_config(path)
    assert cfg["probe.omega"] == pytest.approx(0.3)
    assert cfg["probe.duration"] == pytest.approx(4e-6)
    assert cfg["coupling.omega_max"] == (10.0, 18.0)


def test_unit_conversion():
    assert parse_value("probe.omega", "6.06MHz") == pytest.approx(1.0)
    assert parse_value("stark.omega", "1212kHz") == pytest.approx(0.2)
    assert parse_value("probe.duration", "500ns") == pytest.approx(5e-7)
    assert parse_value("trap.depth", "250uK") == pytest.approx(2.5e-4)
    assert parse_value("dipole.distance", "1.17um") == pytest.approx(1.17e-6)


@given(st.floats(1e-3, 1e3))
def test_hz_round_trip(gamma):
    f = gamma * constants.GAMMA_D2 / (2 * math.pi)
    assert parse_value("probe.omega", f"{f!r}Hz") == pytest.approx(gamma, rel=1e-12)


@pytest.mark.parametrize("key,text", [
    ("probe.omega", "0.2"),            # missing unit
    ("probe.omega", "0.2us"),          # wrong dimension
    ("sequence.repeats", "16us"),      # dimensionless with unit
    ("sequence.repeats", "1.5"),       # not an integer
    ("trap.depth", "-5mK"),
    ("repump.min_fraction", "1.5"),
    ("stark.mode", "adiabatic"),
    ("grid.adaptive", "maybe"),
    ("coupling.omega_max", ","),
    ("nonexistent.key", "1"),
])
def test_bad_values_name_the_key(key, text):
    with pytest.raises(ConfigError) as exc:
        build_config({key: text})
    assert exc.value.key == key
    assert key in str(exc.value)


def test_unknown_preset_and_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        build_config(preset="fig99")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")


def test_malformed_line(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("probe.omega 0.2gamma\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_digest_is_stable():
    a = build_config({"probe.omega": "0.2gamma"})
    b = build_config()
    assert a.digest() == b.digest()
    assert build_config({"probe.omega": "0.3gamma"}).digest() != b.digest()
