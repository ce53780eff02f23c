"""Tests for plotdata module."""

import json
import os
import tempfile
from pathlib import Path

import pytest

from pystein.plotdata import collect_results, csv_to_plotdata, emit_plotdata, report_to_plotdata

CSV = """n,eps,rate,pass,label
1,0.1,0.5,true,a
2,0.1,0.4,false,b
1,0.2,inf,true,a
"""


def write(path, text):
    with open(path, "w") as f:
        f.write(text)
    return Path(path)


def test_csv_blocks_by_eps():
    with tempfile.TemporaryDirectory() as tmpdir:
        source = write(os.path.join(tmpdir, "rates.csv"), CSV)
        target = csv_to_plotdata(source, os.path.join(tmpdir, "out", "rates.dat"))
        lines = target.read_text().splitlines()
    assert lines[0] == "# source: rates.csv"
    assert lines[1] == "# n rate pass"
    assert lines[2] == "# eps = 0.1"
    assert lines[3:5] == ["1 0.5 1", "2 0.4 0"]
    assert lines[5:7] == ["", ""]
    assert lines[7:] == ["# eps = 0.2", "1 inf 1"]


def test_csv_without_group_column():
    with tempfile.TemporaryDirectory() as tmpdir:
        source = write(os.path.join(tmpdir, "s3.csv"), "rate,n\n0.1,1\n0.2,2\n")
        lines = csv_to_plotdata(source, os.path.join(tmpdir, "s3.dat")).read_text().splitlines()
    assert lines[1] == "# n rate"
    assert lines[2:] == ["1 0.1", "2 0.2"]


def test_report_checks():
    with tempfile.TemporaryDirectory() as tmpdir:
        source = os.path.join(tmpdir, "audit.json")
        with open(source, "w") as f:
            json.dump({"checks": {"entropy budget": True, "commutation": False}}, f)
        lines = report_to_plotdata(source, os.path.join(tmpdir, "audit.dat")).read_text()
    assert lines.splitlines()[2:] == ["commutation FAIL", "entropy_budget PASS"]


class TestEmit:
    def test_empty_input(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            files = emit_plotdata([], tmpdir)
            assert [p.name for p in files] == ["empty.dat"]
            assert files[0].read_text() == "# no results\n"

    def test_results_directory(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            results = Path(tmpdir) / "results"
            results.mkdir()
            write(results / "demo_rates.csv", CSV)
            write(results / "demo.json", '{"checks": {"ok": true}}\n')
            write(results / "notes.txt", "ignored\n")
            inputs = collect_results(results)
            assert [p.name for p in inputs] == ["demo.json", "demo_rates.csv"]
            files = emit_plotdata(inputs, Path(tmpdir) / "plots")
            assert [p.name for p in files] == ["demo_checks.dat", "demo_rates.dat"]

    def test_unknown_suffix(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            path = write(os.path.join(tmpdir, "notes.txt"), "x\n")
            with pytest.raises(ValueError):
                emit_plotdata([path], tmpdir)

    def test_missing_directory(self):
        with pytest.raises(FileNotFoundError):
            collect_results("no_such_results_dir")
