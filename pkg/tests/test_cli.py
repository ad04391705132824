import json

import pytest

from myopic_paging.cli import main
from myopic_paging.core import load_trace


@pytest.fixture
def trace_file(tmp_path):
    path = tmp_path / "t.txt"
    assert main(["gen", "--family", "mixed", "--ell", "2", "--k", "2", "--n", "5",
                 "--T", "40", "--seed", "7", "--out", str(path)]) == 0
    return path


def test_gen_writes_a_trace(trace_file):
    tr = load_trace(trace_file.read_text())
    assert len(tr) == 40 and tr.num_classes == 2


def test_gen_is_reproducible(tmp_path, trace_file):
    again = tmp_path / "again.txt"
    main(["gen", "--family", "mixed", "--ell", "2", "--k", "2", "--n", "5",
          "--T", "40", "--seed", "7", "--out", str(again)])
    assert again.read_text() == trace_file.read_text()


def test_opt_and_run(tmp_path, trace_file):
    opt_out = tmp_path / "opt.json"
    main(["opt", str(trace_file), "--schedule", "--out", str(opt_out)])
    res = json.loads(opt_out.read_text())
    assert len(res["schedule"]) == 40
    run_out = tmp_path / "run.json"
    main(["run", str(trace_file), "--algo", "fif", "det", "--out", str(run_out)])
    rows = json.loads(run_out.read_text())
    assert [r["algorithm"] for r in rows] == ["fif", "det"]
    assert all(r["cost"] >= float(res["opt"]) for r in rows)


def test_monitor_det_and_wimp(tmp_path, trace_file, capsys):
    assert main(["monitor", str(trace_file), "--algo", "det"]) == 0
    log = tmp_path / "log.jsonl"
    assert main(["monitor", str(trace_file), "--algo", "wimp", "--c-mon", "100",
                 "--tolerance", "1e-6", "--out", str(log)]) == 0
    assert len(log.read_text().splitlines()) == 40


def test_monitor_alloc_events(tmp_path, capsys):
    ev = tmp_path / "ev.txt"
    ev.write_text("r=1 alpha=0.3 dt=0.5\nstrict r=2 c=0.6\nr=2 alpha=0.1 dt=2\n")
    assert main(["monitor", str(ev), "--algo", "alloc", "--weights", "1,4"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["violations"] == 0 and summary["checks"] > 0


def test_report_subcommand(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"generator": {"family": "cyclic", "ell": 2, "k": 2, "n": 4,
                                             "T": 30},
                               "seeds": [0, 1], "algorithms": ["det", "wimp"],
                               "monitor": True}))
    out = tmp_path / "rep"
    assert main(["report", str(cfg), "--out", str(out), "--c-mon", "100"]) == 0
    first = (out / "results.csv").read_text()
    assert len(first.splitlines()) == 5
    main(["report", str(cfg), "--out", str(out), "--c-mon", "100"])
    assert (out / "results.csv").read_text() == first
    main(["report", str(cfg), "--out", str(out), "--seed", "5"])
    assert len((out / "results.csv").read_text().splitlines()) == 3


def test_missing_subcommand_exits():
    with pytest.raises(SystemExit):
        main([])
