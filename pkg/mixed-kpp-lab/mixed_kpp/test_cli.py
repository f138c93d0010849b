import json

import numpy as np
import pytest
from typer.testing import CliRunner

from mixed_kpp.cli import app, spread_plot
from mixed_kpp.dynamics import ReactionKPP
from mixed_kpp.fronts import FrontTrace, Regime, select_model

runner = CliRunner()

KERNEL_RUN = """
[grid]
points = 4096
half_width = 64.0

[operator]
s = 0.5

[experiment]
kernel_kind = "fractional"
kernel_times = [1.0]
"""


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    monkeypatch.delenv("DEBUG", raising=False)
    for name in ("MIXKPP_GRID_POINTS", "MIXKPP_OUTPUT_OUT_DIR", "MIXKPP_EXPERIMENT_SEED"):
        monkeypatch.delenv(name, raising=False)


def invoke(tmp_path, text, *args, out="out"):
    config = tmp_path / "run.toml"
    config.write_text(text)
    return runner.invoke(
        app, ["--quiet", "--config", str(config), "--out-dir", str(tmp_path / out), *args], catch_exceptions=False
    )


def test_kernel_run(tmp_path):
    result = invoke(tmp_path, KERNEL_RUN, "kernel", "--oracle-points", "4")
    assert result.exit_code == 0, result.output
    out = tmp_path / "out" / "kernel"
    assert sorted(p.name for p in out.iterdir()) == ["kernel.csv", "kernel.svg", "manifest.json", "report.json"]
    header = (out / "kernel.csv").read_text().splitlines()[0]
    assert header == "x,t=1"
    report = json.loads((out / "report.json").read_text())
    assert report["pass"] is True
    assert {"name", "stat", "tol", "pass"} <= set(report["checks"][0])
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["grid"]["half_width"] == 64.0


def test_reruns_are_byte_identical(tmp_path):
    first = invoke(tmp_path, KERNEL_RUN, "kernel", "--oracle-points", "4", out="a")
    second = invoke(tmp_path, KERNEL_RUN, "kernel", "--oracle-points", "4", out="b")
    assert first.exit_code == second.exit_code == 0
    a, b = tmp_path / "a" / "kernel", tmp_path / "b" / "kernel"
    assert (a / "kernel.csv").read_bytes() == (b / "kernel.csv").read_bytes()
    ma = json.loads((a / "manifest.json").read_text())
    mb = json.loads((b / "manifest.json").read_text())
    assert [o["sha256"] for o in ma["outputs"]] == [o["sha256"] for o in mb["outputs"]]


def test_kernel_default_checks(tmp_path):
    result = invoke(tmp_path, KERNEL_RUN, "kernel", "--oracle-points", "4")
    assert result.exit_code == 0, result.output
    report = json.loads((tmp_path / "out" / "kernel" / "report.json").read_text())
    names = [c["name"] for c in report["checks"]]
    assert names == ["t=1.mass", "t=1.symmetry", "t=1.positivity", "t=1.oracle_relative_error"]
    assert report["data"]["selected"] == ["mass", "symmetry", "oracle"]


def test_kernel_selected_checks(tmp_path):
    result = invoke(tmp_path, KERNEL_RUN, "kernel", "--check", "scaling", "--check", "bounds", "--check", "ck")
    assert result.exit_code == 0, result.output
    report = json.loads((tmp_path / "out" / "kernel" / "report.json").read_text())
    names = {c["name"] for c in report["checks"]}
    assert {"t=1.scaling_deviation", "t=1.fitted_B", "t=1.ck.ck_sup_error"} <= names
    assert not any(n.endswith("oracle_relative_error") for n in names)
    assert report["data"]["bounds"]["t=1"]["B"] >= 1.0


@pytest.mark.parametrize("check, kind", [("scaling", "mixed"), ("bounds", "gaussian")])
def test_kernel_check_needs_matching_kind(tmp_path, check, kind):
    text = KERNEL_RUN.replace('kernel_kind = "fractional"', f'kernel_kind = "{kind}"')
    result = invoke(tmp_path, text, "kernel", "--check", check)
    assert result.exit_code == 2
    assert not (tmp_path / "out").exists()


def test_failed_check_exits_one(tmp_path):
    # dx = 2 cannot resolve the kernel at t = 0.5, so the oracle disagrees
    text = "[grid]\npoints = 64\nhalf_width = 64.0\n[experiment]\nkernel_times = [0.5]\n"
    result = invoke(tmp_path, text, "kernel", "--oracle-points", "4")
    assert result.exit_code == 1
    assert (tmp_path / "out" / "kernel" / "manifest.json").exists()


@pytest.mark.parametrize(
    "text",
    ["[operator]\ngamma = 1.2\ns = 0.5\n", '[solver]\ndt = 1.0\nscheme = "picard_duhamel"\n', "[grid]\nn = 4096\n"],
)
def test_configuration_errors_exit_two(tmp_path, text):
    result = invoke(tmp_path, text, "kernel")
    assert result.exit_code == 2
    assert not (tmp_path / "out").exists()


def test_environment_override_is_applied(tmp_path, monkeypatch):
    monkeypatch.setenv("MIXKPP_GRID_POINTS", "1000")
    assert invoke(tmp_path, KERNEL_RUN, "kernel").exit_code == 2


def test_breakdown_exits_one(tmp_path):
    # the default fit window (4, t_end) is empty for a short run
    text = "[grid]\npoints = 1024\nhalf_width = 64.0\n[solver]\ndt = 0.05\nt_end = 2.0\n"
    result = invoke(tmp_path, text, "spread")
    assert result.exit_code == 1


def test_evolve(tmp_path):
    text = (
        "[grid]\npoints = 1024\nhalf_width = 128.0\n"
        "[solver]\ndt = 0.05\nt_end = 2.0\nsnapshot_stride = 0.5\n"
        "[experiment]\nradius = 4.0\namplitude = 0.5\n"
    )
    result = invoke(tmp_path, text, "evolve")
    assert result.exit_code == 0, result.output
    out = tmp_path / "out" / "evolve"
    lines = (out / "evolution.csv").read_text().splitlines()
    assert lines[0] == "time,mass,min,max,iters"
    assert len(lines) == 1 + 41
    snapshots = sorted(p.name for p in out.glob("snapshot_*.csv"))
    assert snapshots == ["snapshot_0.5.csv", "snapshot_0.csv", "snapshot_1.5.csv", "snapshot_1.csv", "snapshot_2.csv"]
    rows = (out / "snapshot_2.csv").read_text().splitlines()
    assert rows[0] == "x,u"
    assert len(rows) == 1 + 1024


def test_spread_plot_draws_fit_and_predicted_rate():
    t = np.linspace(0.0, 16.0, 33)
    traces = {
        Regime.MIXED: [FrontTrace(0.5, t, 2.0 * np.exp(0.48 * t), Regime.MIXED)],
        Regime.CLASSICAL: [FrontTrace(0.5, t, 1.9 * t + 1.0, Regime.CLASSICAL)],
    }
    verdicts = {r.value: select_model(per[0], (8.0, 16.0)) for r, per in traces.items()}
    plot = spread_plot(traces, verdicts, ReactionKPP.logistic(1.0), 0.5, 1)
    labels = [series.label for series in plot.series]
    assert labels == [
        "mixed lambda=0.5",
        "mixed exponential fit 0.48",
        "mixed sigma*=0.5",
        "classical lambda=0.5",
        "classical linear fit 1.9",
        "classical c*=2",
    ]
    assert not plot.logy
    sigma = plot.series[2]
    assert sigma.style == ":"
    np.testing.assert_allclose(np.diff(np.log(sigma.y)) / np.diff(sigma.x), 0.5)
    assert sigma.x[0] == 8.0
    assert sigma.y[0] == pytest.approx(2.0 * np.exp(0.48 * 8.0))
    np.testing.assert_allclose(plot.series[4].y, 1.9 * plot.series[4].x + 1.0)


def test_wave(tmp_path):
    text = "[grid]\npoints = 4096\nhalf_width = 512.0\n[experiment]\nspeed_count = 11\n"
    result = invoke(tmp_path, text, "wave")
    assert result.exit_code == 0, result.output
    rows = (tmp_path / "out" / "wave" / "wave.csv").read_text().splitlines()
    assert rows[0] == "width,c,residual"
    assert len(rows) == 1 + 3 * 11


def test_verify_suite(tmp_path):
    result = invoke(tmp_path, "", "verify", "--suite", "maxprinciple")
    assert result.exit_code == 0, result.output
    checks = (tmp_path / "out" / "verify-maxprinciple" / "checks.csv").read_text().splitlines()
    assert checks[0] == "check,stat,tol,pass"


def test_verify_unknown_suite(tmp_path):
    assert invoke(tmp_path, "", "verify", "--suite", "everything").exit_code == 2


if __name__ == "__main__":
    pytest.main([__file__])
