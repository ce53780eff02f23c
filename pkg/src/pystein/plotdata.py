"""
Gnuplot-ready data files from experiment results.

CSV tables become whitespace-separated column files with a commented header; rows
are grouped into gnuplot index blocks by ``eps`` when that column is present. JSON
reports become one pass/fail line per check.
"""

import csv
import json
from pathlib import Path
from typing import Dict, List, Sequence, Union

GROUP_COLUMNS = ("eps", "alpha", "mu", "p")

PathLike = Union[str, Path]


def _numeric(value: str) -> str:
    if value == "true":
        return "1"
    if value == "false":
        return "0"
    if value == "":
        return "?"
    return value


def _is_numeric(values: Sequence[str]) -> bool:
    for value in values:
        if value in ("true", "false", "", "inf", "-inf", "nan"):
            continue
        try:
            float(value)
        except ValueError:
            return False
    return True


def csv_to_plotdata(source: PathLike, target: PathLike) -> Path:
    """Columns ``n`` (or the first column) first, then the remaining numeric columns."""
    source, target = Path(source), Path(target)
    with open(source, "r", newline="") as f:
        reader = csv.DictReader(f)
        rows = list(reader)
        header = list(reader.fieldnames or [])
    group = next((c for c in GROUP_COLUMNS if c in header), None)
    series = [c for c in header if c != group and _is_numeric([r[c] for r in rows])]
    if "n" in series:
        series.remove("n")
        series.insert(0, "n")
    blocks: Dict[str, List[Dict[str, str]]] = {}
    for row in rows:
        blocks.setdefault(row[group] if group else "", []).append(row)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w") as f:
        f.write(f"# source: {source.name}\n")
        f.write("# " + " ".join(series) + "\n")
        for i, (key, block) in enumerate(blocks.items()):
            if i:
                f.write("\n\n")
            if group:
                f.write(f"# {group} = {key}\n")
            for row in block:
                f.write(" ".join(_numeric(row[c]) for c in series) + "\n")
    return target


def report_to_plotdata(source: PathLike, target: PathLike) -> Path:
    """One ``name PASS|FAIL`` line per entry of the report's checks."""
    source, target = Path(source), Path(target)
    with open(source, "r") as f:
        report = json.load(f)
    checks = report.get("checks", {})
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w") as f:
        f.write(f"# source: {source.name}\n")
        f.write("# check result\n")
        for name in sorted(checks):
            f.write(f"{name.replace(' ', '_')} {'PASS' if checks[name] else 'FAIL'}\n")
    return target


def emit_plotdata(inputs: Sequence[PathLike], out_dir: PathLike) -> List[Path]:
    """Convert result files in name order; an empty input gives a header-only file."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = sorted(Path(p) for p in inputs)
    if not paths:
        target = out / "empty.dat"
        with open(target, "w") as f:
            f.write("# no results\n")
        return [target]
    files = []
    for path in paths:
        if path.suffix == ".csv":
            files.append(csv_to_plotdata(path, out / f"{path.stem}.dat"))
        elif path.suffix == ".json":
            files.append(report_to_plotdata(path, out / f"{path.stem}_checks.dat"))
        else:
            raise ValueError(f"Unknown result file type: {path.suffix}")
    return files


def collect_results(results_dir: PathLike) -> List[Path]:
    """CSV and JSON files directly inside a results directory."""
    root = Path(results_dir)
    if not root.is_dir():
        raise FileNotFoundError(f"Results directory '{root}' not found")
    return sorted(p for p in root.iterdir() if p.suffix in (".csv", ".json"))
