import json

import numpy as np
import pytest

from plotkit.cli import main
from plotkit.recipe import FigureRecipe, RecipeError, load_run
from plotkit.render import render


def write_run(tmp_path, run_id, kind, columns, summary):
    run_dir = tmp_path / run_id
    run_dir.mkdir(parents=True)
    names = list(columns)
    rows = zip(*(columns[n] for n in names))
    lines = [",".join(names)]
    lines += [",".join(f"{v:.17g}" for v in row) for row in rows]
    (run_dir / "scan.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (run_dir / "summary.json").write_text(json.dumps({"kind": kind, **summary}),
                                          encoding="utf-8")
    (run_dir / "manifest.json").write_text(json.dumps({"run_id": run_id}),
                                           encoding="utf-8")
    return run_dir


def eit_run(tmp_path, run_id, n_c, fwhm_hz, peak_w):
    x = np.linspace(-3 * fwhm_hz, 3 * fwhm_hz, 120)
    y = peak_w * (fwhm_hz / 2) ** 2 / (x**2 + (fwhm_hz / 2) ** 2)
    columns = {"detuning_hz": x, "p_out_w": y, "n_bar": y / 1e-12,
               "rho_g": np.ones_like(x), "rho_e": np.zeros_like(x),
               "rho_gp": np.zeros_like(x), "rho_gpp": np.zeros_like(x)}
    return write_run(tmp_path, run_id, "eit-scan", columns,
                     {"n_c": n_c, "fwhm_eq10_hz": fwhm_hz, "peak_p_out_w": peak_w})


def ringdown_run(tmp_path, run_id, n_c, rate, i0):
    t = np.linspace(0, 6 / rate, 80)
    columns = {"t_s": t, "p_out_w": i0 * np.exp(-rate * t)}
    return write_run(tmp_path, run_id, "ringdown", columns,
                     {"n_c": n_c, "rate_eq10_per_s": rate, "steady_p_out_w": i0})


def vrs_run(tmp_path, run_id, n_c, split_hz, peak_w):
    x = np.linspace(-2 * split_hz, 2 * split_hz, 150)
    width = split_hz / 20
    y = peak_w * sum(width**2 / ((x - s) ** 2 + width**2)
                     for s in (-split_hz / 2, split_hz / 2))
    columns = {"detuning_hz": x, "p_out_w": y, "n_bar": y / 1e-12,
               "rho_g": np.ones_like(x), "rho_e": np.zeros_like(x),
               "rho_gp": np.zeros_like(x)}
    return write_run(tmp_path, run_id, "vrs-scan", columns,
                     {"n_c": n_c, "formula_splitting_hz": split_hz,
                      "peak_p_out_w": peak_w})


def test_eit_figure_three_series_with_overlays(tmp_path):
    runs = [eit_run(tmp_path, f"eit-{i}", n_c, fw, 1e-11)
            for i, (n_c, fw) in enumerate([(1e3, 6.7e5), (1e4, 1.7e5), (5e4, 4e4)])]
    recipe = FigureRecipe(kind="eit", runs=tuple(runs),
                          output=tmp_path / "fig_eit.png")
    out = render(recipe)
    assert out.exists() and out.stat().st_size > 5000


def test_render_is_byte_stable(tmp_path):
    run = eit_run(tmp_path, "eit-a", 1e3, 6.7e5, 1e-11)
    recipe = FigureRecipe(kind="eit", runs=(run,), output=tmp_path / "a.png")
    first = render(recipe).read_bytes()
    second = render(recipe).read_bytes()
    assert first == second


def test_ringdown_figure_log_scale(tmp_path):
    runs = [ringdown_run(tmp_path, "rd-1", 1e3, 4.2e6, 1.2e-11),
            ringdown_run(tmp_path, "rd-2", 5e4, 2.5e5, 1.2e-11)]
    recipe = FigureRecipe(kind="ringdown", runs=tuple(runs),
                          output=tmp_path / "fig_rd.png")
    assert render(recipe).exists()


def test_vrs_figure_with_splitting_markers(tmp_path):
    runs = [vrs_run(tmp_path, "v-1", 5e4, 98e6, 1e-11),
            vrs_run(tmp_path, "v-2", 1e6, 438e6, 1e-11)]
    recipe = FigureRecipe(kind="vrs", runs=tuple(runs),
                          output=tmp_path / "fig_vrs.png")
    assert render(recipe).exists()


def test_kind_mismatch_names_run(tmp_path):
    run = ringdown_run(tmp_path, "rd-x", 1e3, 4.2e6, 1e-11)
    with pytest.raises(RecipeError, match="rd-x"):
        load_run(run, "eit")


def test_column_mismatch_names_run(tmp_path):
    run = eit_run(tmp_path, "eit-bad", 1e3, 6.7e5, 1e-11)
    csv = run / "scan.csv"
    text = csv.read_text().replace("detuning_hz", "detuning_mhz")
    csv.write_text(text)
    with pytest.raises(RecipeError, match="eit-bad"):
        load_run(run, "eit")


def test_recipe_validation(tmp_path):
    with pytest.raises(RecipeError, match="kind"):
        FigureRecipe(kind="spectrum", runs=(tmp_path,), output=tmp_path / "x.png")
    with pytest.raises(RecipeError, match="no runs"):
        FigureRecipe(kind="eit", runs=(), output=tmp_path / "x.png")


def test_cli_round_trip(tmp_path, capsys):
    run = eit_run(tmp_path, "eit-c", 1e3, 6.7e5, 1e-11)
    recipe = {"kind": "eit", "runs": [run.name], "output": "out.png"}
    path = tmp_path / "recipe.json"
    path.write_text(json.dumps(recipe), encoding="utf-8")
    assert main([str(path)]) == 0
    assert (tmp_path / "out.png").exists()


def test_cli_reports_missing_run(tmp_path, capsys):
    recipe = {"kind": "eit", "runs": ["nope"], "output": "out.png"}
    path = tmp_path / "recipe.json"
    path.write_text(json.dumps(recipe), encoding="utf-8")
    assert main([str(path)]) == 1
    assert "nope" in capsys.readouterr().err
