import json
import subprocess
import sys
from pathlib import Path

import pytest

from nomasim.harness.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, doc, name="c.json"):
    p = tmp_path / name
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return str(p)


def fig5(trials=50):
    return {"experiment": "Fig5FixedAlloc", "seed": 4, "trials": trials,
            "geometry": {"grid": [[1, 1], [3, 0]]}}


def test_list_experiments(capsys):
    assert main(["list-experiments"]) == 0
    out = capsys.readouterr().out.split()
    assert "Fig4OutageMap" in out and "MustLink" in out and len(out) == 7


def test_validate_reports_defaults(tmp_path, capsys):
    assert main(["validate", write(tmp_path, fig5())]) == 0
    out = capsys.readouterr().out
    assert out.startswith("ok: Fig5FixedAlloc")
    assert "pathloss.exponent=3.0" in out


def test_validate_bad_config_exits_1(tmp_path, capsys):
    assert main(["validate", write(tmp_path, dict(fig5(), trials=0))]) == 1
    assert "trials" in capsys.readouterr().err
    assert main(["validate", write(tmp_path, "{not json")]) == 1
    assert main(["validate", str(tmp_path / "absent.json")]) == 1


def test_run_writes_csv(tmp_path):
    out = tmp_path / "o.csv"
    assert main(["run", write(tmp_path, fig5()), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "# experiment: Fig5FixedAlloc"
    header = next(l for l in lines if not l.startswith("#"))
    assert header.startswith("x,y,noma_rate_weak")
    assert len(lines) - lines.index(header) - 1 == 2


def test_seed_override_changes_output(tmp_path):
    cfg = write(tmp_path, fig5())
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    main(["run", cfg, "--out", str(a)])
    main(["run", cfg, "--out", str(b), "--seed", "4"])
    main(["run", cfg, "--out", str(c), "--seed", "5", "--workers", "2"])
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()


def test_bad_workers_exits_1(tmp_path):
    assert main(["run", write(tmp_path, fig5()), "--out", str(tmp_path / "o"), "--workers", "0"]) == 1


def test_unwritable_output_exits_2(tmp_path, capsys):
    out = tmp_path / "nope" / "o.csv"
    assert main(["run", write(tmp_path, fig5()), "--out", str(out)]) == 2
    assert str(out) in capsys.readouterr().err


def test_missing_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == 2


def test_module_entry_point(tmp_path):
    res = subprocess.run(
        [sys.executable, "-m", "nomasim", "validate", str(CONFIGS / "fig4_outage_map.json")],
        capture_output=True, text=True, check=False,
    )
    assert res.returncode == 0, res.stderr
    assert "Fig4OutageMap" in res.stdout
