import pytest

from bandsim.config import ConfigError, ExperimentConfig, dumps, env_overrides, load_config, parse_text


def test_empty_file_gives_defaults(tmp_path):
    f = tmp_path / "empty.ini"
    f.write_text("")
    cfg = load_config(f)
    assert cfg == ExperimentConfig()
    assert (cfg.network_size, cfg.address_bits, cfg.bucket_size, cfg.storage_depth, cfg.omega) == (10000, 16, 8,
                                                                                                     11, 16)
    assert (cfg.payment_model, cfg.reciprocity, cfg.free_service) == ("A_C", True, "constant")


def test_omega_below_depth():
    with pytest.raises(ConfigError, match="omega >= storage_depth required"):
        load_config(overrides={"omega": "10"})


def test_unknown_payment_model():
    with pytest.raises(ConfigError, match="settlement.payment_model: must be one of"):
        load_config(overrides={"payment_model": "XYZ"})


def test_errors_name_the_key():
    with pytest.raises(ConfigError) as info:
        parse_text("[network]\nbucket_size = many\nflavour = 3\n[accounting]\nstorage_depth = 4\n[extra]\nx=1\n")
    errs = info.value.errors
    assert any(e.startswith("network.bucket_size") for e in errs)
    assert "network.flavour: unknown key" in errs
    assert "accounting.storage_depth: belongs in [network]" in errs
    assert "unknown section [extra]" in errs


def test_cross_field_rules():
    with pytest.raises(ConfigError, match="pairwise"):
        ExperimentConfig(credit_model="constant", debt_limits=False, free_service="pairwise").validate()
    with pytest.raises(ConfigError, match="constant credit model"):
        ExperimentConfig(credit_model="constant").validate()
    with pytest.raises(ConfigError, match="trace_path"):
        ExperimentConfig(workload="trace").validate()
    with pytest.raises(ConfigError, match="exceeds the address space"):
        ExperimentConfig(network_size=300, address_bits=8).validate()


def test_precedence(tmp_path, caplog):
    f = tmp_path / "c.ini"
    f.write_text("[accounting]\nomega = 20\nunit_reward = 3\n[run]\nseed = 5\n")
    cfg = load_config(f, overrides={"omega": "24"}, environ={"BANDSIM_SEED": "9", "BANDSIM_UNIT_REWARD": "2"})
    assert (cfg.omega, cfg.seed, cfg.unit_reward) == (24, 9, 2)
    assert "flag overrides config file for omega" in caplog.text


def test_dotted_keys():
    assert parse_text("accounting.omega = 20\nrun.seed = 3\n") == {"omega": 20, "seed": 3}
    with pytest.raises(ConfigError, match="section prefix"):
        parse_text("omega = 20\n")


def test_env_ignores_unrelated_keys():
    assert env_overrides({"BANDSIM_OMEGA": "18", "HOME": "/", "BANDSIM_NOPE": "1"}) == {"omega": 18}


def test_round_trip():
    cfg = ExperimentConfig(omega=22, reciprocity=False, zipf_exponent=0.75, originator_cache_policy="lfu",
                           originator_bucket_size=12, trace_path="x y.csv")
    assert ExperimentConfig(**parse_text(dumps(cfg))) == cfg
    assert ExperimentConfig(**parse_text(dumps(ExperimentConfig()))) == ExperimentConfig()


def test_unreadable_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.ini")


def test_overrides_accept_section_prefix():
    cfg = load_config(overrides={"accounting.omega": "20", "run.graph_count": "2"}, environ={})
    assert (cfg.omega, cfg.graph_count) == (20, 2)
    with pytest.raises(ConfigError, match=r"belongs in \[accounting\]"):
        load_config(overrides={"run.omega": "20"}, environ={})
    with pytest.raises(ConfigError, match="unknown key"):
        load_config(overrides={"run.nope": "1"}, environ={})
