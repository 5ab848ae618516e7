"""Figure recipes: which runs to draw, what kind of figure, where to put it."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

KINDS = ("vrs", "eit", "ringdown")
RUN_KIND_FOR = {"vrs": "vrs-scan", "eit": "eit-scan", "ringdown": "ringdown"}

EXPECTED_COLUMNS = {
    "vrs": ("detuning_hz", "p_out_w"),
    "eit": ("detuning_hz", "p_out_w"),
    "ringdown": ("t_s", "p_out_w"),
}


class RecipeError(ValueError):
    pass


@dataclass(frozen=True)
class FigureRecipe:
    kind: str                      # vrs | eit | ringdown
    runs: tuple[Path, ...]         # run directories
    output: Path
    overlay: bool = True           # draw the closed-form curves

    def __post_init__(self):
        if self.kind not in KINDS:
            raise RecipeError(f"figure kind must be one of {KINDS}, got {self.kind!r}")
        if not self.runs:
            raise RecipeError("recipe lists no runs")


def load_recipe(path) -> FigureRecipe:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    try:
        runs = tuple((path.parent / r).resolve() if not Path(r).is_absolute()
                     else Path(r) for r in data["runs"])
        recipe = FigureRecipe(kind=data["kind"], runs=runs,
                              output=(path.parent / data["output"]).resolve()
                              if not Path(data["output"]).is_absolute()
                              else Path(data["output"]),
                              overlay=bool(data.get("overlay", True)))
    except KeyError as exc:
        raise RecipeError(f"recipe is missing key {exc}") from exc
    return recipe


@dataclass
class RunData:
    run_id: str
    summary: dict
    columns: dict = field(default_factory=dict)


def load_run(run_dir: Path, kind: str) -> RunData:
    """Read one run directory, checking kind and CSV columns."""
    run_id = run_dir.name
    if not run_dir.is_dir():
        raise RecipeError(f"run {run_id}: directory does not exist")
    with open(run_dir / "summary.json", "r", encoding="utf-8") as fh:
        summary = json.load(fh)
    expected_kind = RUN_KIND_FOR[kind]
    if summary.get("kind") != expected_kind:
        raise RecipeError(f"run {run_id}: is a {summary.get('kind')} run, "
                          f"recipe wants {expected_kind}")
    csv_path = run_dir / "scan.csv"
    with open(csv_path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    missing = [c for c in EXPECTED_COLUMNS[kind] if c not in header]
    if missing:
        raise RecipeError(f"run {run_id}: scan.csv is missing columns {missing}")
    columns = {name: [float(row[i]) for row in rows]
               for i, name in enumerate(header)}
    return RunData(run_id=run_id, summary=summary, columns=columns)
