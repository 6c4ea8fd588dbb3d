import csv
import dataclasses
import json

import numpy as np
import pytest

from pcnoma import cli
from pcnoma.construction import ConstructionResult
from pcnoma.simulation import (CSV_COLUMNS, BlerRecord, SimConfig, read_csv, run_bler, to_long_format,
                               version_string, write_csv)

SMALL = dict(N=64, rate=0.5, list_size=4, mc_samples=2000, batch_size=20)


def _strip(records):
    return [dataclasses.replace(r, seconds=0.0) for r in records]


def test_noiseless_point_has_no_errors():
    cfg = SimConfig(snr_db=[60.0], design_snr_db=4.0, max_blocks=40, **SMALL)
    (rec,) = run_bler(cfg)
    assert rec.blocks == 40 and sum(rec.block_errors) == 0 and rec.avg_bler == 0.0


def test_records_independent_of_worker_count():
    base = dict(snr_db=[0.0, 1.0], max_blocks=120, target_errors=15, **SMALL)
    a = run_bler(SimConfig(workers=1, **base))
    b = run_bler(SimConfig(workers=2, **base))
    assert _strip(a) == _strip(b)
    assert a[0].config_hash == b[0].config_hash


def test_stopping_rule_and_record_invariants():
    cfg = SimConfig(snr_db=[-2.0], max_blocks=500, target_errors=10, **SMALL)
    (rec,) = run_bler(cfg)
    # every batch at -2 dB fails almost every block, so the first batch suffices
    assert rec.blocks == SMALL["batch_size"]
    assert rec.error_events >= 10
    assert all(0 <= b <= 1 for b in rec.user_bler)
    assert rec.error_events <= rec.blocks


def test_rerun_is_bit_identical():
    jsc = run_bler(SimConfig(snr_db=[1.0], max_blocks=40, target_errors=1e9, **SMALL))
    again = run_bler(SimConfig(snr_db=[1.0], max_blocks=40, target_errors=1e9, **SMALL))
    assert _strip(jsc) == _strip(again)


def test_config_validation():
    with pytest.raises(ValueError):
        run_bler(SimConfig(N=64, rate=0.3, snr_db=[1.0]))
    with pytest.raises(ValueError):
        run_bler(SimConfig(snr_db=[], **SMALL))
    with pytest.raises(ValueError):
        run_bler(SimConfig(snr_db=[1.0], J=3, **SMALL))
    with pytest.raises(ValueError):
        SimConfig.from_dict({"graph": "pdma2x3", "bogus": 1})


def test_config_hash():
    a = SimConfig(seed=1)
    assert a.config_hash() == SimConfig(seed=1, workers=4, out="x.csv").config_hash()
    assert a.config_hash() != SimConfig(seed=2).config_hash()


def test_version_string():
    assert version_string().startswith("0.1.0")


def test_csv_schema_and_long_format(tmp_path):
    rec = BlerRecord(2.0, "jsc-ps", 100, [3, 0, 1], [10, 0, 2], [40, 40, 40], 1.5, "abc", "0.1.0")
    path = tmp_path / "r.csv"
    write_csv([rec], path)
    rows = read_csv(path)
    assert list(rows[0]) == CSV_COLUMNS
    assert CSV_COLUMNS[:7] == ["snr_db", "user", "blocks", "block_errors", "bler", "ber", "seconds"]
    assert [r["user"] for r in rows] == ["1", "2", "3", "avg"]
    assert float(rows[-1]["bler"]) == pytest.approx(4 / 300)
    assert all(r["config_hash"] == "abc" for r in rows)
    long = to_long_format(rows)
    assert len(long) == len(rows)
    assert long[0]["metric"] == "bler_user1" and long[-1]["metric"] == "bler_avg"


def run_cli(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_schedule(capsys):
    code, out, _ = run_cli(["schedule", "--graph", "pdma2x3", "--lambda", "1"], capsys)
    assert code == 0
    res = json.loads(out)
    assert res["order"] == [2, 3, 1] and res["theta"] == pytest.approx(4.5)
    assert res["greedy_is_optimal"] is True


def test_cli_unknown_graph(capsys):
    code, _, err = run_cli(["simulate", "--graph", "hexagon9"], capsys)
    assert code == 2
    assert "hexagon9" in err


def test_cli_missing_files(capsys, tmp_path):
    code, _, err = run_cli(["simulate", "--config", str(tmp_path / "none.json")], capsys)
    assert code != 0 and "none.json" in err
    code, _, _ = run_cli(["analyze", str(tmp_path / "none.csv")], capsys)
    assert code != 0


def test_cli_bad_flag_value(capsys):
    with pytest.raises(SystemExit) as e:
        cli.main(["simulate", "--mode", "turbo"])
    assert e.value.code == 2


def test_parse_snr_list():
    assert cli.parse_snr_list("2:8:2") == [2.0, 4.0, 6.0, 8.0]
    assert cli.parse_snr_list("1,2.5") == [1.0, 2.5]


def test_cli_construct_simulate_analyze(tmp_path, capsys):
    con = tmp_path / "con.json"
    code, _, _ = run_cli(["construct", "--graph", "pdma2x3", "-N", "64", "--samples", "2000",
                          "--design-snr", "3", "--out", str(con)], capsys)
    assert code == 0
    res = ConstructionResult.load(con)
    assert res.order is not None and sum(res.user_K) == 96
    assert res.metadata["graph"] == "pdma2x3"

    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"N": 64, "list_size": 2, "snr_db": [0.0, 9.0], "max_blocks": 40,
                               "batch_size": 20, "seed": 5}))
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    code, _, _ = run_cli(["simulate", "--config", str(cfg), "--construction", str(con),
                          "--out", str(out1)], capsys)
    assert code == 0
    meta = json.loads((tmp_path / "a.csv.meta.json").read_text())
    assert meta["config"]["construction"] == str(con) and not meta["construction_per_point"]
    code, _, _ = run_cli(["simulate", "--config", str(cfg), "--mode", "psc", "--samples", "2000",
                          "--snr", "0", "--out", str(out2)], capsys)
    assert code == 0
    rows1, rows2 = read_csv(out1), read_csv(out2)
    assert len(rows1) == 8 and len(rows2) == 4
    assert {r["scheme"] for r in rows2} == {"psc"}

    merged = tmp_path / "long.csv"
    code, _, _ = run_cli(["analyze", str(out1), str(out2), "--out", str(merged)], capsys)
    assert code == 0
    with open(merged, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == len(rows1) + len(rows2)
    assert list(rows[0]) == ["snr_db", "scheme", "metric", "value"]


def test_cli_construction_mode_mismatch(tmp_path, capsys):
    con = tmp_path / "pup.json"
    assert cli.main(["construct", "--mode", "psc", "-N", "64", "--samples", "2000", "--out", str(con)]) == 0
    code, _, err = run_cli(["simulate", "-N", "64", "--snr", "1", "--construction", str(con)], capsys)
    assert code == 2 and "scheme" in err
