import csv
import io
import json

import pytest

from payroll_ec import load_fixture
from payroll_ec.cli import BENCH_HEADER, main
from payroll_ec.ingest import parse_scenario


@pytest.fixture
def files(tmp_path, fixture_text):
    rules = tmp_path / "rules.tables"
    rules.write_text(fixture_text)
    half = tmp_path / "half.tables"
    half.write_text(load_fixture("half_hour_scenario.tables"))
    return rules, half


def run_json(capsys, *argv):
    assert main(["run", *argv, "--no-timing"]) == 0
    return json.loads(capsys.readouterr().out)


def bench_table(out):
    rows = list(csv.reader(io.StringIO(out)))
    assert tuple(rows[0]) == BENCH_HEADER
    return [dict(zip(rows[0], r)) for r in rows[1:]]


@pytest.mark.parametrize("mode", ["single", "changepoint"])
def test_run_reports_fixture_total(capsys, files, mode):
    rules, _ = files
    rep = run_json(capsys, str(rules), "--mode", mode)
    assert rep["total_wage"] == "191.00" and rep["engine"] == mode
    assert rep["steps"] == (2880 if mode == "single" else 11)


def test_coarse_granularity_on_half_hour_scenario(capsys, files):
    rules, half = files
    fine = run_json(capsys, str(rules), str(half))
    coarse = run_json(capsys, str(rules), str(half), "-g", "10")
    assert fine["total_wage"] == coarse["total_wage"] == "191.00"
    assert coarse["steps"] == 288


def test_run_output_is_reproducible(capsys, files, tmp_path):
    rules, _ = files
    outs = []
    for k in range(2):
        path = tmp_path / f"r{k}.json"
        assert main(["run", str(rules), "--no-timing", "--out", str(path)]) == 0
        outs.append(path.read_text())
    assert outs[0] == outs[1]
    assert "191.00" in capsys.readouterr().err


def test_missing_file_is_io_error(capsys, tmp_path):
    missing = tmp_path / "nope.tables"
    assert main(["run", str(missing)]) == 5
    assert str(missing) in capsys.readouterr().err


def test_parse_error_names_position(capsys, tmp_path):
    bad = tmp_path / "bad.tables"
    bad.write_text("table inertial_fluents\nname | domain | initial | relevant\nx | {a,b | a | no\n")
    assert main(["validate", str(bad)]) == 2
    err = capsys.readouterr().err
    assert err.startswith(f"{bad}:3:")


def test_non_dividing_granularity_is_invalid(capsys, files):
    rules, _ = files
    assert main(["run", str(rules), "-g", "10"]) == 3
    assert "invalid" in capsys.readouterr().err


def test_validate(capsys, files):
    rules, _ = files
    assert main(["validate", str(rules)]) == 0
    assert capsys.readouterr().out.startswith("ok: 9 fluents")


def test_validate_reports_unknown_action(capsys, files, tmp_path):
    rules, _ = files
    sc = tmp_path / "sc.tables"
    sc.write_text("table user_actions\naction | time\nteleport | 10h00\n")
    assert main(["validate", str(rules), str(sc)]) == 3
    assert "teleport" in capsys.readouterr().out


def test_inconsistent_scenario(capsys, tmp_path):
    doc = ("table inertial_fluents\nname | domain | initial | relevant\np | {true,false} | false | yes\n\n"
           "table user_actions\naction | time\non | 1h00\noff | 1h00\n\n"
           "table action_effects\naction | fluent | value\non | p | true\noff | p | false\n")
    path = tmp_path / "clash.tables"
    path.write_text(doc)
    assert main(["run", str(path)]) == 4
    assert "inconsistent" in capsys.readouterr().err


@pytest.mark.parametrize("extra", [[], ["-g", "15"]])
def test_diff_equivalent(capsys, files, extra):
    rules, _ = files
    assert main(["diff", str(rules), *extra]) == 0
    assert capsys.readouterr().out.strip() == "equivalent"


def test_diff_with_empty_scenario(capsys, files, tmp_path):
    rules, _ = files
    empty = tmp_path / "empty.tables"
    empty.write_text("table user_actions\naction | time\n")
    assert main(["diff", str(rules), str(empty)]) == 0


def test_bench_shape(capsys, files):
    rules, half = files
    assert main(["bench", str(rules), str(half), "--repeat", "2"]) == 0
    rows = bench_table(capsys.readouterr().out)
    assert len(rows) == 10
    for r in rows:
        g = int(r["granularity"])
        assert int(r["timepoints"]) == 2880 // g + 1
        assert int(r["steps"]) == (2880 // g if r["mode"] == "single" else 11)
        assert int(r["changepoints"]) == 10
        assert float(r["wall_ms"]) > 0


def test_bench_raw_rows(capsys, files):
    rules, half = files
    assert main(["bench", str(rules), str(half), "--granularities", "30,15", "--repeat", "3", "--raw"]) == 0
    assert len(bench_table(capsys.readouterr().out)) == 12


def test_bench_generated_actions_grow_changepoints(capsys, files):
    rules, _ = files
    counts = []
    for k in (4, 8, 16):
        assert main(["bench", str(rules), "--granularities", "30", "--repeat", "1", "--gen-actions", str(k)]) == 0
        rows = bench_table(capsys.readouterr().out)
        counts.append(int(rows[1]["changepoints"]))
    assert counts[0] < counts[1] < counts[2]


def test_bad_granularity_list_is_usage_error(files):
    rules, _ = files
    with pytest.raises(SystemExit) as err:
        main(["bench", str(rules), "--granularities", "5,x"])
    assert err.value.code == 2


def test_gen_writes_parseable_scenario(capsys, files, tmp_path):
    rules, _ = files
    out = tmp_path / "gen.tables"
    assert main(["gen", str(rules), "--actions", "6", "--seed", "3", "--step", "15", "--out", str(out)]) == 0
    sc = parse_scenario(out.read_text())
    assert len(sc.user_actions) == 6 and all(t % 15 == 0 for _, t in sc.user_actions)
    assert main(["diff", str(rules), str(out)]) == 0


def test_gen_by_changepoints(capsys, files):
    rules, _ = files
    assert main(["gen", str(rules), "--changepoints", "20"]) == 0
    captured = capsys.readouterr()
    got = int(captured.err.split()[-2])
    assert got <= 20
    assert parse_scenario(captured.out).user_actions
