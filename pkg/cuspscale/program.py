"""Command pipelines. Each command fans its independent computations out as
jobs and writes the artifacts once they have all returned."""

from __future__ import annotations

import asyncio
from dataclasses import dataclass
import math
from pathlib import Path
from typing import Awaitable, Callable

import numpy as np

from .config import Command, RunConfig
from .dynamics import PhasePoint, classify_batch, integrate, unit_energy_sample
from .errors import ConfigError
from .escape import ShellGrid, build_escape, escape_contours, field_table, funnel_offset, verify_escape
from .geometry import End, ModelSurface, validate_surface, zero_volume
from .jobs import JobDB
from .logging import logger
from .operators import (
    CapProfile, build_cap_operator, build_mode_operator, chart_grid, resolvent_floor, resolvent_trend,
    zero_contour,
)
from .report import ArtifactWriter, Provenance, Series, config_hash
from .resonances import (
    ScanPlan, assemble_report, boundary_samples, estimate_mode_cutoff, fitted_kappa, mode_contours,
    solve_mode, window_radius,
)
from .scaling import SymbolGrid, build_contour, eval_contour, mollification_loss, sweep_alphas, verify_symbol_bounds
from .version import __version__

log = logger()


@dataclass
class Context:
    config: RunConfig
    model: ModelSurface
    db: JobDB
    writer: ArtifactWriter

    @property
    def theta(self) -> float:
        return self.config.contour.theta or self.model.theta


def _tag(x: float) -> str:
    return f"{x:g}"


async def validate_geometry(ctx: Context):
    [report] = await ctx.db.gather([ctx.db.submit("validate", validate_surface, ctx.model, ctx.config.sampling)])
    ctx.writer.jsonl("validate-geometry.jsonl", [
        {"id": e.id, "pass": e.passed, "margin": e.margin, "witness": e.witness} for e in report.entries])
    log.info(f"geometry hypotheses {'hold' if report.passed else 'fail'}")


def _trajectory(m: ModelSurface, x: PhasePoint, cfg) -> object:
    return integrate(x, m, cfg.horizon, cfg.dt, escape_radius=cfg.escape_radius, hysteresis=cfg.hysteresis)


async def trace_geodesics(ctx: Context):
    cfg, seed = ctx.config.dynamics, ctx.config.run.seed
    keys = [ctx.db.submit("batch", lambda: classify_batch(
        ctx.model, cfg.count, cfg.horizon, seed, dt=cfg.dt,
        escape_radius=cfg.escape_radius, hysteresis=cfg.hysteresis))]
    t0, rho, alpha = unit_energy_sample(ctx.model, cfg.representatives, seed)
    for i in range(cfg.representatives):
        x = PhasePoint(float(t0[i]), float(rho[i]), float(alpha[i]))
        keys.append(ctx.db.submit(f"trajectory-{i}", _trajectory, ctx.model, x, cfg))
    batch, *trajectories = await ctx.db.gather(keys)

    summary = []
    for i, tr in enumerate(trajectories):
        ctx.writer.csv(f"trajectory-{i}.csv", [
            {"t": a, "r": b, "rho": c, "p": d} for a, b, c, d in zip(tr.t, tr.r, tr.rho, tr.p)])
        summary.append({"index": i, "exit": tr.exit, "energy_drift": tr.energy_drift,
                        "cusp_visits": tr.cusp_visits, "flagged": tr.flagged})
    ctx.writer.json("trace-geodesics.json", {"batch": batch, "representatives": summary})
    ctx.writer.svg("trajectories.svg", [
        Series(f"trajectory-{i}", list(zip(tr.t.tolist(), tr.r.tolist()))) for i, tr in enumerate(trajectories)
    ], title="representative geodesics", xlabel="time", ylabel="t")


def _contour_rows(c, r_max: float, points: int = 801) -> list[dict]:
    r = np.linspace(0.0, r_max, points)
    f, df, ddf = eval_contour(c, r)
    return [{"r": float(a), "f": float(b), "df": float(d1), "ddf": float(d2), "region": c.region(float(a))}
            for a, b, d1, d2 in zip(r, f, df, ddf)]


def _contour_summary(c) -> dict:
    return {"end": c.end, "alpha": c.alpha, "branch": c.branch, "breakpoints": c.breakpoints,
            "region_start": c.region_start, "C1": c.C1, "C2": c.C2, "slope": c.slope,
            "level_k": c.level_k, "plateau_start": c.plateau_start}


async def build_contours(ctx: Context):
    cc = ctx.config.contour
    profile = ctx.model.profile(cc.end)
    keys = [ctx.db.submit(f"contour-{cc.end}-{i}", lambda a=a: build_contour(
        cc.end, cc.R, ctx.theta, a, profile, mollifier=cc.mollifier, target_delta=cc.target_delta))
        for i, a in enumerate(cc.alphas)]
    contours = await ctx.db.gather(keys)
    series = []
    for i, c in enumerate(contours):
        rows = _contour_rows(c, max(c.breakpoints + [c.R]) + 5)
        ctx.writer.csv(f"contour-{cc.end}-{i}.csv", rows)
        series.append(Series(f"alpha={_tag(c.alpha)}", [(row["r"], row["f"]) for row in rows]))
    ctx.writer.json(f"contour-{cc.end}.json", [_contour_summary(c) for c in contours])
    ctx.writer.svg(f"contour-{cc.end}.svg", series, title=f"{cc.end} contours", xlabel="r", ylabel="f")


def _verify_one(end: End, R: float, theta: float, alpha: float, m: ModelSurface, mollifier: float, grid: SymbolGrid) -> dict:
    c = build_contour(end, R, theta, alpha, m.profile(end), mollifier=mollifier)
    report = verify_symbol_bounds(end, c, m.profile(end), grid)
    return {"report": report, "mollification_loss": mollification_loss(end, c, m.profile(end), grid)}


async def verify_symbols(ctx: Context):
    cc, sc = ctx.config.contour, ctx.config.symbols
    alphas = sc.alphas or [a for values in sweep_alphas(cc.end, cc.R, ctx.theta, sc.sweep).values() for a in values]
    grid = SymbolGrid(r_points=sc.r_points, rho_points=sc.rho_points, target_delta=cc.target_delta,
                      epsilons=sc.epsilons)
    keys = [ctx.db.submit(f"symbols-{i}", _verify_one, cc.end, cc.R, ctx.theta, a, ctx.model, cc.mollifier, grid)
            for i, a in enumerate(alphas)]
    results = await ctx.db.gather(keys)
    failed = sum(1 for r in results if not r["report"].passed)
    ctx.writer.json(f"verify-symbols-{cc.end}.json", {"failed": failed, "results": results})
    log.info(f"{len(results) - failed}/{len(results)} contours pass the symbol bounds")


def _escape(m: ModelSurface, cfg) -> tuple:
    fields = build_escape(m, cfg.escape_R, delta_p=cfg.delta_p, C_C=cfg.cusp_constant)
    chart = escape_contours(m, cfg.escape_R)
    report = verify_escape(fields, chart, ShellGrid(), band=cfg.psi_width, delta_f=cfg.delta_f)
    R_F = funnel_offset(m.theta)
    table = field_table(fields, np.linspace(-(R_F + 6), 7.0, 521), 1.0, 0.0)
    return fields, report, table


async def verify_escape_cmd(ctx: Context):
    [(fields, report, table)] = await ctx.db.gather([ctx.db.submit("escape", _escape, ctx.model, ctx.config.escape)])
    ctx.writer.json("verify-escape.json", {"constants": fields.constants, "report": report})
    ctx.writer.csv("escape-field.csv", table)
    ctx.writer.svg("escape-field.svg", [
        Series("G", [(r["t"], r["G"]) for r in table]),
        Series("HpG", [(r["t"], r["HpG"]) for r in table]),
    ], title="escape function at ρ = 1, α = 0", xlabel="t", ylabel="value")


async def compute_resonances(ctx: Context):
    m, run, plan = ctx.model, ctx.config.run, ctx.config.scan_plan()
    C = run.window
    cutoffs = await ctx.db.gather([
        ctx.db.submit(f"cutoff[{_tag(h)}]", estimate_mode_cutoff, m, h, C, plan) for h in run.h])
    levels = m.cross_section.levels()
    keys = {
        h: [ctx.db.submit(f"mode[{_tag(h)},{j}]", solve_mode, m, h, j, lam, mult, plan, window_radius(C, h))
            for j, (lam, mult) in enumerate(levels[: cut.M])]
        for h, cut in zip(run.h, cutoffs)
    }
    solved = await ctx.db.gather([k for ks in keys.values() for k in ks])

    reports, start, series = [], 0, []
    for h, cut in zip(run.h, cutoffs):
        results = solved[start: start + cut.M]
        start += cut.M
        report = assemble_report(m, h, C, cut, results)
        reports.append(report)
        ctx.writer.json(f"resonances-h{_tag(h)}.json", report)
        ctx.writer.csv(f"resonances-h{_tag(h)}.csv", report.rows(),
                       ["re_zeta", "im_zeta", "re_s", "im_s", "mode", "N", "h", "stable", "delta"])
        series.append(Series(f"h={_tag(h)}", [(r["re_zeta"], r["im_zeta"]) for r in report.rows()], dots=True))
        circle = boundary_samples(report.radius, 128)
        series.append(Series(f"window h={_tag(h)}", [(z.real, z.imag) for z in np.append(circle, circle[:1])]))
    ctx.writer.json("resonances.json", {
        "window": C, "kappa": fitted_kappa(reports),
        "verdicts": {_tag(r.h): r.verdict for r in reports},
    })
    ctx.writer.svg("resonance-map.svg", series, title="scaled eigenvalues and windows", xlabel="re ζ", ylabel="im ζ")


def _resolvent(m: ModelSurface, h: float, C: float, plan: ScanPlan, cap: CapProfile, offsets, im_values) -> dict:
    radius = window_radius(C, h)
    cc, cf = mode_contours(m, plan, 0.0)
    scaled = build_mode_operator(m, cc, cf, 0.0, h, chart_grid(m, cc, cf, plan.points, plan.scheme),
                                 window_radius=radius)
    theta = plan.theta or m.theta
    zc, zf = zero_contour(End.CUSP, plan.R, theta, 0.0), zero_contour(End.FUNNEL, plan.R, theta, 0.0)
    base = build_mode_operator(m, zc, zf, 0.0, h, chart_grid(m, zc, zf, plan.points, plan.scheme))
    absorbing = build_cap_operator(base, cap, plan.R, tuple(offsets))
    floor = resolvent_floor(scaled, boundary_samples(radius, plan.boundary))
    rows = [{"h": h, "variant": op.variant, **row}
            for op in (scaled, absorbing) for row in resolvent_trend(op, im_values)]
    lowest = min(s for _, s in floor)
    return {"h": h, "radius": radius, "boundary_min": lowest,
            "kappa": lowest / (h * math.log(1 / h)), "trend": rows}


async def scan_resolvent(ctx: Context):
    m, run, plan, cfg = ctx.model, ctx.config.run, ctx.config.scan_plan(), ctx.config.cap
    cap = CapProfile(cfg.placement, cfg.amplitude, cfg.start, cfg.strength)
    im_values = np.linspace(0.0, 5.0, cfg.trend_points)
    results = await ctx.db.gather([
        ctx.db.submit(f"resolvent[{_tag(h)}]", _resolvent, m, h, run.window, plan, cap, cfg.offsets, im_values)
        for h in run.h])
    ctx.writer.csv("resolvent-trend.csv", [row for r in results for row in r["trend"]],
                   ["h", "variant", "im_zeta", "sigma_min", "ratio"])
    ctx.writer.json("resolvent.json", [{k: v for k, v in r.items() if k != "trend"} for r in results])


async def zero_volume_cmd(ctx: Context):
    [vol] = await ctx.db.gather([ctx.db.submit("zero-volume", zero_volume, ctx.model, ctx.config.volume)])
    ctx.writer.json("zero-volume.json", vol)
    log.info(f"0-volume = {vol.total:.12g} (refinement delta {vol.refinement_delta:.2e})")


COMMANDS: dict[Command, Callable[[Context], Awaitable[None]]] = {
    Command.VALIDATE_GEOMETRY: validate_geometry,
    Command.TRACE_GEODESICS: trace_geodesics,
    Command.BUILD_CONTOUR: build_contours,
    Command.VERIFY_SYMBOLS: verify_symbols,
    Command.VERIFY_ESCAPE: verify_escape_cmd,
    Command.COMPUTE_RESONANCES: compute_resonances,
    Command.SCAN_RESOLVENT: scan_resolvent,
    Command.ZERO_VOLUME: zero_volume_cmd,
}

DESCRIPTIONS: dict[Command, str] = {
    Command.VALIDATE_GEOMETRY: "check the warp hypotheses and curvature on sampling grids",
    Command.TRACE_GEODESICS: "integrate unit-energy geodesics and classify how they escape",
    Command.BUILD_CONTOUR: "construct scaling contours for the listed mode values",
    Command.VERIFY_SYMBOLS: "certify the scaled symbol bounds per contour",
    Command.VERIFY_ESCAPE: "certify positivity of the escape functions",
    Command.COMPUTE_RESONANCES: "scan the logarithmic window for resonances",
    Command.SCAN_RESOLVENT: "resolvent floors on the window boundary and along im ζ",
    Command.ZERO_VOLUME: "regularized volume of the surface",
}


async def run(config: RunConfig, model: ModelSurface) -> list[Path]:
    """Run the configured command; returns the artifact paths written."""
    if config.run.command not in COMMANDS:
        raise ConfigError(f"Unknown command `{config.run.command}`.")
    jobs = config.run.jobs
    db: JobDB = JobDB(throttle=asyncio.Semaphore(jobs) if jobs else None)
    writer = ArtifactWriter(config.run.out, Provenance(config_hash(config), __version__))
    log.info(f"`{config.run.command}` on `{config.run.model}`")
    await COMMANDS[config.run.command](Context(config, model, db, writer))
    return writer.written
