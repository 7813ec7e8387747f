"""Config resolution: defaults, overrides, rejection of unknown input."""

import pytest

from wageladder import ConfigError, OfferKernel, OutsideClosure, baseline_config_path, load_config
from wageladder.config import DEFAULTS, render_config


def test_defaults_load_without_a_file():
    cfg = load_config()
    assert cfg.params.r == 0.25
    assert cfg.numerics.n_nodes >= 3
    assert cfg.offer_kernel is OfferKernel.DENSITY
    assert cfg.closure is OutsideClosure.EFFORT
    assert cfg.entry_atoms == ()


def test_shipped_baseline_file_equals_defaults():
    # the packaged config file must stay in lockstep with the in-code defaults
    rendered = render_config({s: dict(k) for s, k in DEFAULTS.items()})
    assert baseline_config_path().read_text(encoding="utf-8") == rendered
    cfg_file = load_config(baseline_config_path())
    cfg_default = load_config()
    assert cfg_file == cfg_default


def test_config_hash_stable_and_sensitive(tmp_path):
    cfg = load_config()
    assert cfg.config_hash() == load_config().config_hash()
    over = tmp_path / "o.cfg"
    over.write_text("[policy]\nfiring_cost = 0.1\n", encoding="utf-8")
    assert load_config(over).config_hash() != cfg.config_hash()


def test_override_merges_single_key(tmp_path):
    over = tmp_path / "o.cfg"
    over.write_text("[search]\nkappa = 9.5\n", encoding="utf-8")
    cfg = load_config(over)
    assert cfg.params.kappa == 9.5
    # untouched keys keep their defaults
    assert cfg.params.eta == load_config().params.eta


def test_unknown_section_rejected(tmp_path):
    over = tmp_path / "o.cfg"
    over.write_text("[nonsense]\nx = 1\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="unknown config section"):
        load_config(over)


def test_unknown_key_rejected(tmp_path):
    over = tmp_path / "o.cfg"
    over.write_text("[search]\nkapa = 5.0\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="unknown key"):
        load_config(over)


def test_type_errors_carry_section_and_key(tmp_path):
    over = tmp_path / "o.cfg"
    over.write_text("[numerics]\nn_nodes = many\n", encoding="utf-8")
    with pytest.raises(ConfigError, match=r"\[numerics\] n_nodes"):
        load_config(over)


def test_inadmissible_parameter_becomes_config_error(tmp_path):
    over = tmp_path / "o.cfg"
    over.write_text("[wage]\ngamma = 1.5\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="gamma"):
        load_config(over)


def test_missing_file_rejected():
    with pytest.raises(ConfigError, match="cannot read"):
        load_config("/no/such/file.cfg")


def test_numeric_sanity_checks(tmp_path):
    for body, msg in [
        ("[numerics]\nz_min = 5.0\nz_max = 1.0\n", "z_min"),
        ("[numerics]\nn_nodes = 2\n", "n_nodes"),
        ("[numerics]\nomega = 0.0\n", "omega"),
        ("[numerics]\nomega = 1.5\n", "omega"),
        ("[search]\nn_actions = 1\n", "n_actions"),
        ("[simulation]\nn_trajectories = 0\n", "n_trajectories"),
        ("[simulation]\ndt_sim_years = 0.5\n", "dt_sim_years"),
        ("[benchmark]\nt_ret_years = -1\n", "t_ret"),
    ]:
        over = tmp_path / "o.cfg"
        over.write_text(body, encoding="utf-8")
        with pytest.raises(ConfigError, match=msg):
            load_config(over)


def test_enum_keys_validated(tmp_path):
    over = tmp_path / "o.cfg"
    over.write_text("[search]\noffer_kernel = gaussian\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="offer_kernel"):
        load_config(over)
    over.write_text("[outside]\nclosure = magic\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="closure"):
        load_config(over)


def test_entry_atoms_parsing(tmp_path):
    over = tmp_path / "o.cfg"
    over.write_text("[entry]\nentry_atoms = 0.1:0.7, 0.4:0.3\n", encoding="utf-8")
    cfg = load_config(over)
    assert cfg.entry_atoms == ((0.1, 0.7), (0.4, 0.3))
    over.write_text("[entry]\nentry_atoms = 0.1;0.7\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="entry_atoms"):
        load_config(over)
    over.write_text("[entry]\nentry_atoms = 0.1:-0.5\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="positive"):
        load_config(over)


def test_boolean_parsing(tmp_path):
    over = tmp_path / "o.cfg"
    for raw, want in [("true", True), ("off", False), ("1", True), ("no", False)]:
        over.write_text(f"[numerics]\nmatch_boundary = {raw}\n", encoding="utf-8")
        assert load_config(over).numerics.match_boundary is want
    over.write_text("[numerics]\nmatch_boundary = maybe\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="boolean"):
        load_config(over)
