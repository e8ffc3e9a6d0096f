try:
    from contextlib import chdir
except ImportError:  # Python < 3.11
    import contextlib as _contextlib
    import os as _os

    @_contextlib.contextmanager
    def chdir(path):
        old = _os.getcwd()
        _os.chdir(path)
        try:
            yield
        finally:
            _os.chdir(old)
from dataclasses import dataclass
import json
import math
from pathlib import Path

import pytest

from cuspscale.cli import cuspscale
from cuspscale.config import Command, read_config, read_model
from cuspscale.errors import ConfigError
from cuspscale.program import run


@dataclass
class RunTest:
    model: str
    run: str


hyperbolic_funnel = """
core_halfwidth = 0.0

[funnel]
kind = "hyperbolic-funnel"
shift = 2.0
normalized = true
"""

parabolic_cylinder = """
n = 2
"""

zero_volume = """
[run]
model = "model.toml"
command = "zero-volume"
out = "out"
"""

validate = """
[run]
model = "model.toml"
out = "out"

[sampling]
points = 256
rays = 8
"""


def write(test: RunTest) -> Path:
    Path("model.toml").write_text(test.model)
    Path("run.toml").write_text(test.run)
    return Path("run.toml")


def json_lines(path: Path) -> list[dict]:
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# config_hash=")
    return [json.loads(line) for line in lines[1:]]


def data(path: Path):
    return json.loads(path.read_text())["data"]


async def run_command(test: RunTest) -> dict[str, Path]:
    cfg = read_config(write(test))
    written = await run(cfg, read_model(cfg.run.model))
    return {p.name: p for p in written}


def test_version():
    with pytest.raises(SystemExit) as e:
        cuspscale(version=True)
    assert e.value.code == 0


def test_no_config():
    with pytest.raises(SystemExit) as e:
        cuspscale()
    assert e.value.code == 2


def test_zero_volume(tmp_path):
    with chdir(tmp_path):
        write(RunTest(hyperbolic_funnel, zero_volume))
        cuspscale(config="run.toml")
        first = Path("out/zero-volume.json").read_text()
        data = json.loads(first)
        assert set(data) == {"config_hash", "version", "data"}
        vol = data["data"]
        assert vol["total"] == pytest.approx(vol["cusp"] - (1 - math.exp(-4)), abs=1e-9)

        cuspscale(config="run.toml")
        assert Path("out/zero-volume.json").read_text() == first


def test_computation_failure_exit_code(tmp_path):
    with chdir(tmp_path):
        write(RunTest(parabolic_cylinder, zero_volume))
        with pytest.raises(SystemExit) as e:
            cuspscale(config="run.toml")
        assert e.value.code == 3
        assert not Path("out/zero-volume.json").exists()


def test_config_errors(tmp_path):
    with chdir(tmp_path):
        Path("run.toml").write_text(zero_volume)
        with pytest.raises(ConfigError):
            read_config(Path("run.toml"))

        write(RunTest(hyperbolic_funnel, zero_volume.replace('out = "out"', "h = [0.1, 1.5]")))
        with pytest.raises(SystemExit) as e:
            cuspscale(config="run.toml")
        assert e.value.code == 2

        write(RunTest(hyperbolic_funnel, zero_volume))
        with pytest.raises(SystemExit) as e:
            cuspscale(config="run.toml", command="no-such-command")
        assert e.value.code == 2


def test_section_suffix(tmp_path):
    with chdir(tmp_path):
        Path("model.toml").write_text(hyperbolic_funnel)
        Path("runs.toml").write_text("[volume]\n" + zero_volume.replace("[run]", "[volume.run]"))
        cuspscale(config="runs.toml[volume]")
        assert Path("out/zero-volume.json").exists()


@pytest.mark.asyncio
@pytest.mark.timeout(120)
async def test_validate_geometry(tmp_path):
    with chdir(tmp_path):
        cfg = read_config(write(RunTest(parabolic_cylinder, validate)))
        assert cfg.run.command is Command.VALIDATE_GEOMETRY
        written = await run(cfg, read_model(cfg.run.model))
        assert [p.name for p in written] == ["validate-geometry.jsonl"]
        rows = json_lines(written[0])
        assert rows and all(set(row) == {"id", "pass", "margin", "witness"} for row in rows)
        assert all(row["pass"] for row in rows)
        assert len({row["id"] for row in rows}) == len(rows)


bundled_cylinder = """
n = 2
core_halfwidth = 0.0

[cross_section]
circle_length = 1.0
"""

contours = """
[run]
model = "model.toml"
command = "build-contour"

[contour]
R = 2.0
end = "funnel"
alphas = [0.0, 1.0]
"""


@pytest.mark.asyncio
@pytest.mark.timeout(120)
async def test_build_contour(tmp_path):
    with chdir(tmp_path):
        written = await run_command(RunTest(parabolic_cylinder, contours))
        assert set(written) == {"contour-funnel-0.csv", "contour-funnel-1.csv", "contour-funnel.json", "contour-funnel.svg"}
        summary = data(written["contour-funnel.json"])
        assert [c["alpha"] for c in summary] == [0.0, 1.0]
        assert all(c["branch"] == "standard" and c["breakpoints"] == [2.0, 3.0] for c in summary)
        header = written["contour-funnel-0.csv"].read_text().splitlines()[1]
        assert header == "r,f,df,ddf,region"


symbols = contours.replace('"build-contour"', '"verify-symbols"') + """
[symbols]
alphas = [0.0, 1.0]
r_points = 400
rho_points = 121
"""


@pytest.mark.asyncio
@pytest.mark.timeout(300)
async def test_verify_symbols(tmp_path):
    with chdir(tmp_path):
        written = await run_command(RunTest(parabolic_cylinder, symbols))
        assert list(written) == ["verify-symbols-funnel.json"]
        result = data(written["verify-symbols-funnel.json"])
        assert len(result["results"]) == 2
        for r in result["results"]:
            ids = [e["id"] for e in r["report"]["entries"]]
            assert ids == ["scaling-ellipticity", "no-bad-sign", "smallness-of-contour"]
            assert set(r["mollification_loss"]) <= {"scaling-ellipticity", "no-bad-sign"}
        assert result["failed"] == sum(1 for r in result["results"] if not all(
            e["passed"] for e in r["report"]["entries"]))


geodesics = """
[run]
model = "model.toml"
command = "trace-geodesics"

[dynamics]
count = 10
representatives = 2
"""


@pytest.mark.asyncio
@pytest.mark.timeout(120)
async def test_trace_geodesics(tmp_path):
    with chdir(tmp_path):
        written = await run_command(RunTest(parabolic_cylinder, geodesics))
        assert set(written) == {"trajectory-0.csv", "trajectory-1.csv", "trace-geodesics.json", "trajectories.svg"}
        result = data(written["trace-geodesics.json"])
        assert result["batch"]["count"] == 10
        assert result["batch"]["escaped_cusp"] + result["batch"]["escaped_funnel"] == 10
        assert result["batch"]["max_cusp_visits"] <= 1
        assert [r["index"] for r in result["representatives"]] == [0, 1]


escape = """
[run]
model = "model.toml"
command = "verify-escape"
"""


@pytest.mark.asyncio
@pytest.mark.timeout(300)
async def test_verify_escape(tmp_path):
    with chdir(tmp_path):
        written = await run_command(RunTest(parabolic_cylinder, escape))
        assert set(written) == {"verify-escape.json", "escape-field.csv", "escape-field.svg"}
        report = data(written["verify-escape.json"])["report"]
        assert [e["id"] for e in report["entries"]] == [
            "escape-core", "escape-collar[cusp]", "escape-collar[funnel]"]
        assert len(written["escape-field.csv"].read_text().splitlines()) == 2 + 521


resonances = """
[run]
model = "model.toml"
command = "compute-resonances"
h = [0.2]
window = 0.5

[contour]
R = 2.0

[grid]
points = 160
boundary = 16
"""


@pytest.mark.asyncio
@pytest.mark.timeout(600)
async def test_compute_resonances(tmp_path):
    with chdir(tmp_path):
        written = await run_command(RunTest(bundled_cylinder, resonances))
        assert set(written) == {"resonances-h0.2.json", "resonances-h0.2.csv", "resonances.json", "resonance-map.svg"}
        summary = data(written["resonances.json"])
        assert summary["verdicts"] == {"0.2": "empty"}
        assert summary["kappa"] > 0
        report = data(written["resonances-h0.2.json"])
        assert report["verdict"] == "empty"
        assert report["resolvent_floor"] > 0
        assert len(report["modes"]) == report["cutoff"]


resolvent = """
[run]
model = "model.toml"
command = "scan-resolvent"
h = [0.2]

[contour]
R = 2.0

[grid]
points = 160
boundary = 8

[cap]
trend_points = 3
"""


@pytest.mark.asyncio
@pytest.mark.timeout(300)
async def test_scan_resolvent(tmp_path):
    with chdir(tmp_path):
        written = await run_command(RunTest(parabolic_cylinder, resolvent))
        assert set(written) == {"resolvent-trend.csv", "resolvent.json"}
        [row] = data(written["resolvent.json"])
        assert row["h"] == 0.2
        assert row["boundary_min"] > 0 and row["kappa"] > 0
        trend = written["resolvent-trend.csv"].read_text().splitlines()
        assert trend[1] == "h,variant,im_zeta,sigma_min,ratio"
        assert len(trend) == 2 + 2 * 3
