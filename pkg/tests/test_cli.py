import csv

import pytest

from bandsim.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main
from bandsim.config import ExperimentConfig, dumps, parse_text
from bandsim.presets import PRESETS, preset_configs, run_preset, table2_rows, total_rate, with_originators

TINY = ["--network-size", "500", "--duration", "2", "--graphs", "1", "--originator-fraction", "0.02"]


def rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_single_run_is_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert main([*TINY, "--seed", "3", "--out", str(tmp_path / name)]) == EXIT_OK
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert "fairness_summary.csv" in names and "manifest.txt" in names
    for name in names:
        if name != "manifest.txt":
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_manifest_reproduces_config(tmp_path):
    main([*TINY, "--omega", "20", "--out", str(tmp_path)])
    text = (tmp_path / "manifest.txt").read_text()
    assert "tool = bandsim" in text and "seed = 0" in text
    body = text[text.index("[network]"):]
    cfg = ExperimentConfig(**parse_text(body))
    assert cfg.omega == 20 and cfg.network_size == 500
    assert dumps(cfg) == body


def test_config_errors_exit_one(tmp_path, capsys):
    assert main(["--omega", "10"]) == EXIT_CONFIG
    assert "omega >= storage_depth required" in capsys.readouterr().err
    assert main(["--preset", "fig99"]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "available" in err and "table2" in err
    assert main(["--set", "omega"]) == EXIT_CONFIG
    assert main(["--parallel", "0"]) == EXIT_CONFIG


def test_runtime_error_exits_two(tmp_path):
    code = main([*TINY, "--workload", "trace", "--set", f"trace_path={tmp_path / 'none.csv'}",
                 "--out", str(tmp_path)])
    assert code == EXIT_RUNTIME


def test_config_file_and_flags(tmp_path):
    f = tmp_path / "c.ini"
    f.write_text("[network]\nnetwork_size = 400\n[run]\nduration_seconds = 1\ngraph_count = 1\n")
    assert main(["--config", str(f), "--bucket-size", "4", "--out", str(tmp_path / "o")]) == EXIT_OK
    assert "bucket_size = 4" in (tmp_path / "o" / "manifest.txt").read_text()


def test_list_presets(capsys):
    assert main(["--list-presets"]) == EXIT_OK
    out = capsys.readouterr().out
    assert all(name in out for name in PRESETS)


def test_table2_preset(tmp_path):
    assert main(["--preset", "table2", "--out", str(tmp_path)]) == EXIT_OK
    table = rows(tmp_path / "table2.csv")
    assert table[0] == ["bucket", "threshold", "refreshRate"]
    assert [int(r[1]) for r in table[1:11]] == list(range(16, 6, -1))
    assert [int(r[2]) for r in table[1:11]] == [8, 3, 3, 3, 3, 2, 2, 2, 2, 1]
    assert table2_rows(16) == [[b, max(1, 16 - b), r] for b, r in enumerate([8, 3, 3, 3, 3, 2, 2, 2, 2, 1])]


def test_preset_variants():
    base = ExperimentConfig()
    fig4 = preset_configs("fig4", base)
    assert [c.omega for c in fig4.values()] == list(range(11, 31))
    table3 = preset_configs("table3", base)
    assert [c.bucket_size for c in table3.values()] == [4, 8, 16, 20]
    assert all(not c.debt_limits for c in table3.values())
    for cfg in preset_configs("fig3", base).values():
        assert total_rate(cfg) == pytest.approx(total_rate(base), rel=0.01)
    e = preset_configs("appendixE", base)["pairwiseFreeService|16"]
    assert (e.originator_fraction, e.rate_per_originator, e.duration_seconds) == (0.2, 50, 100)
    assert with_originators(base, 1.0).rate_per_originator == 10
    with pytest.raises(KeyError, match="available"):
        preset_configs("fig99")


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_every_preset_writes_its_csvs(tmp_path, name):
    base = ExperimentConfig(network_size=300, graph_count=1, duration_seconds=1, rate_per_originator=60,
                            originator_fraction=0.02, zipf_catalog_size=2000)
    paths = run_preset(name, base, tmp_path, argv=["test"])
    assert paths[-1].name == "manifest.txt"
    for p in paths[:-1]:
        assert p.suffix == ".csv" and len(rows(p)) > 1, p.name
