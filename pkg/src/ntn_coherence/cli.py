"""Command-line front end.

    ntn-coherence curve   --preset default --rician-k 0.3 -o out/
    ntn-coherence tc      --config run.json --epsilon 0.5 -o out/
    ntn-coherence sweep   --preset default --axis bs_speed --values 0,4000,8000 --rician-k 0 -o out/
    ntn-coherence fig2|fig3|fig4 -o out/
    ntn-coherence mc-check --preset default --rician-k 0 --mc-n 2000 --mc-m 2000 -o out/

Data goes to CSV (or JSON) files in the output directory, alongside a
``manifest.json`` with the resolved configuration, version, quadrature
diagnostics and wall times. Exit status is 0 only if every integral
converged; errors are reported as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import subprocess
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .channel import AutocorrEvaluator, Scenario
from .coherence import TauGrid, autocorr_curve, check_epsilon, coherence_time
from .config import load_json, parse_quantity, scenario_from_dict, scenario_to_dict
from .errors import ConfigError, NtnError
from .montecarlo import mc_autocorr_many
from .quadrature import QuadSpec
from .scenarios import AXES, PRESETS, CurveSet, RunResult, SweepSpec, TcTable, run_fig2, run_fig3, run_fig4, run_sweep

COMMANDS = ("curve", "tc", "sweep", "fig2", "fig3", "fig4", "mc-check")
THREADS_ENV = "NTN_COHERENCE_THREADS"

CURVE_HEADER = ("tau_s", "re", "im", "abs")
TC_HEADER = ("axis_value", "epsilon", "tc_s", "status")
MC_HEADER = ("tau_s", "quad_re", "quad_im", "mc_re", "mc_im", "se", "z")


@dataclass
class RunConfig:
    command: str
    scenario: Scenario
    scenario_source: str
    grid: TauGrid = TauGrid()
    quad: QuadSpec = QuadSpec()
    epsilon: float = 0.5
    output_path: Path = Path(".")
    output_format: str = "csv"
    seed: int = 0
    threads: int = 1
    t: float = 0.0
    axis: str | None = None
    values: tuple = ()
    mc_n: int = 2000
    mc_m: int = 2000
    mc_points: int = 10
    echo: dict = field(default_factory=dict)


# --- number formatting ----------------------------------------------------------

def fmt(x: float) -> str:
    """Nine significant digits in scientific notation."""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0.0:
        x = 0.0   # no negative zero in files
    return f"{x:.8e}"


def _csv(path: Path, header, rows) -> None:
    lines = [",".join(header)] + [",".join(r) for r in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# --- parsing ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ntn-coherence", description="Channel autocorrelation and coherence time for moving BS/UE links.")
    p.add_argument("command", choices=COMMANDS)
    src = p.add_argument_group("scenario")
    src.add_argument("--config", help="JSON run configuration")
    src.add_argument("--preset", choices=sorted(PRESETS), help="named scenario (default: 'default' when no config scenario)")
    src.add_argument("--rician-k", help="Rician factor; 'inf' for direct path only")
    src.add_argument("--t", type=float, help="observation time in seconds (default 0)")
    q = p.add_argument_group("quadrature")
    q.add_argument("--quad-el", type=int)
    q.add_argument("--quad-az", type=int)
    q.add_argument("--quad-refine", type=int)
    q.add_argument("--quad-tol", type=float)
    g = p.add_argument_group("lag grid and threshold")
    g.add_argument("--epsilon", type=float)
    g.add_argument("--tau-min", type=float)
    g.add_argument("--tau-max", type=float)
    g.add_argument("--ppd", type=int, help="points per decade")
    s = p.add_argument_group("sweep")
    s.add_argument("--axis", choices=AXES)
    s.add_argument("--values", help="comma-separated axis values in SI units (m/s, rad)")
    m = p.add_argument_group("Monte Carlo")
    m.add_argument("--mc-n", type=int, help="scatterers per realization")
    m.add_argument("--mc-m", type=int, help="realizations")
    m.add_argument("--mc-points", type=int, help="number of log-spaced lags")
    m.add_argument("--seed", type=int)
    o = p.add_argument_group("output")
    o.add_argument("--threads", type=int, help=f"worker threads (default from ${THREADS_ENV}, else 1)")
    o.add_argument("-o", "--output", help="output directory")
    o.add_argument("--format", choices=("csv", "json"))
    return p


def _pick(flag, file_value, default):
    if flag is not None:
        return flag
    if file_value is not None:
        return file_value
    return default


def _seconds(value, path):
    if value is None:
        return None
    return parse_quantity(value, "time", path)


def _k_value(text, path="rician_k"):
    try:
        k = float(text)
    except (TypeError, ValueError):
        raise ConfigError(path, f"not a number: {text!r}") from None
    if math.isnan(k) or k < 0:
        raise ConfigError(path, "must be in [0, inf]")
    return k


def parse_config(argv=None, env=None) -> RunConfig:
    """Resolve flags over the optional config file over built-in defaults."""
    env = os.environ if env is None else env
    args = build_parser().parse_args(argv)
    data = load_json(args.config) if args.config else {}

    preset_name = _pick(args.preset, data.get("preset"), None)
    if preset_name is not None and "scenario" in data:
        raise ConfigError("scenario", "give either an inline scenario or a preset, not both")
    if preset_name is None and "scenario" not in data:
        preset_name = "default"
    if preset_name is not None:
        if preset_name not in PRESETS:
            raise ConfigError("preset", f"unknown preset {preset_name!r}")
        scen = scenario_to_dict(PRESETS[preset_name]())
    else:
        scen = data["scenario"]
        if not isinstance(scen, dict):
            raise ConfigError("scenario", "expected an object")
        scen = dict(scen)
    if args.rician_k is not None:
        scen["rician_k"] = _k_value(args.rician_k, "--rician-k")
    scenario = scenario_from_dict(scen)

    gd = data.get("grid", {})
    grid_default = TauGrid()
    if args.command == "fig4":
        # leaves room for crossings below 1 ns at high BS speed
        grid_default = TauGrid(tau_min=1e-10)
    try:
        grid = TauGrid(
            _pick(args.tau_min, _seconds(gd.get("tau_min"), "grid.tau_min"), grid_default.tau_min),
            _pick(args.tau_max, _seconds(gd.get("tau_max"), "grid.tau_max"), grid_default.tau_max),
            _pick(args.ppd, gd.get("points_per_decade"), grid_default.points_per_decade),
        )
    except ValueError as exc:
        raise ConfigError("grid", str(exc)) from None

    qd = data.get("quad", {})
    qdef = QuadSpec()
    try:
        quad = QuadSpec(
            _pick(args.quad_el, qd.get("base_el_nodes"), qdef.base_el_nodes),
            _pick(args.quad_az, qd.get("base_az_nodes"), qdef.base_az_nodes),
            _pick(args.quad_refine, qd.get("max_refinements"), qdef.max_refinements),
            _pick(args.quad_tol, qd.get("rel_tol"), qdef.rel_tol),
        )
    except ValueError as exc:
        raise ConfigError("quad", str(exc)) from None

    epsilon = check_epsilon(_pick(args.epsilon, data.get("epsilon"), 0.5))

    threads = _pick(args.threads, data.get("threads"), None)
    if threads is None:
        raw = env.get(THREADS_ENV)
        try:
            threads = int(raw) if raw else 1
        except ValueError:
            raise ConfigError(THREADS_ENV, f"not an integer: {raw!r}") from None
    if threads < 1:
        raise ConfigError("threads", "must be >= 1")

    md = data.get("mc", {})
    axis = _pick(args.axis, data.get("axis"), None)
    values = _pick(args.values, data.get("values"), None)
    if isinstance(values, str):
        values = [v for v in values.split(",") if v.strip()]
    if args.command == "sweep":
        if axis is None or not values:
            raise ConfigError("sweep", "sweep needs --axis and --values")
        values = tuple(_k_value(v, "values") if axis == "rician_k" else float(v) for v in values)
    cfg = RunConfig(
        command=args.command,
        scenario=scenario,
        scenario_source=preset_name or "inline",
        grid=grid,
        quad=quad,
        epsilon=epsilon,
        output_path=Path(_pick(args.output, data.get("output"), ".")),
        output_format=_pick(args.format, data.get("format"), "csv"),
        seed=int(_pick(args.seed, data.get("seed"), 0)),
        threads=int(threads),
        t=float(_pick(args.t, _seconds(data.get("t"), "t"), 0.0)),
        axis=axis,
        values=tuple(values or ()),
        mc_n=int(_pick(args.mc_n, md.get("n"), 2000)),
        mc_m=int(_pick(args.mc_m, md.get("m"), 2000)),
        mc_points=int(_pick(args.mc_points, md.get("points"), 10)),
    )
    if cfg.output_format not in ("csv", "json"):
        raise ConfigError("format", f"expected csv or json, got {cfg.output_format!r}")
    if min(cfg.mc_n, cfg.mc_m, cfg.mc_points) < 1:
        raise ConfigError("mc", "n, m and points must be >= 1")
    needs_k = cfg.command in ("curve", "tc", "mc-check") or (cfg.command == "sweep" and axis != "rician_k")
    if needs_k and scenario.rician_k is None:
        raise ConfigError("scenario.rician_k", f"'{cfg.command}' needs a Rician factor (--rician-k)")
    cfg.echo = {
        "command": cfg.command,
        "scenario_source": cfg.scenario_source,
        "scenario": scenario_to_dict(scenario),
        "grid": asdict(grid),
        "quad": asdict(quad),
        "epsilon": epsilon,
        "t": cfg.t,
        "seed": cfg.seed,
        "threads": cfg.threads,
        "axis": axis,
        "values": [fmt(v) for v in cfg.values],
        "mc": {"n": cfg.mc_n, "m": cfg.mc_m, "points": cfg.mc_points},
    }
    return cfg


# --- running ---------------------------------------------------------------------

def _single_curve(cfg: RunConfig) -> RunResult:
    start = time.perf_counter()
    ev = AutocorrEvaluator(cfg.scenario, cfg.t, cfg.quad, strict=False)
    curve = autocorr_curve(cfg.scenario, cfg.t, cfg.grid, cfg.quad, threads=cfg.threads, evaluator=ev)
    res = RunResult("curve", [CurveSet("curve", (), [((), curve)])], [], [ev.diagnostics()])
    if cfg.command == "tc":
        tc = coherence_time(cfg.scenario, cfg.t, cfg.epsilon, cfg.grid, cfg.quad, curve=curve, evaluator=ev)
        res.name = "tc"
        res.tc_tables.append(TcTable("tc", "rician_k", [(cfg.scenario.rician_k, tc)]))
        res.diagnostics = [ev.diagnostics()]
    res.wall_s = time.perf_counter() - start
    return res


@dataclass
class McCheck:
    rows: list            # [(tau, quad value, mc estimate, se, z)]
    diagnostics: list
    wall_s: float

    @property
    def converged(self) -> bool:
        return all(d["all_converged"] for d in self.diagnostics)


def run_mc_check(scn: Scenario, t: float, taus, quad: QuadSpec, n: int, m: int, seed: int, threads: int = 1) -> McCheck:
    """Scattered-term quadrature next to the Monte-Carlo ensemble estimate.

    ``z = |mc - quad| / se`` with the complex-magnitude standard error.
    """
    start = time.perf_counter()
    ev = AutocorrEvaluator(scn, t, quad, strict=False)
    mc = mc_autocorr_many(scn, t, taus, n, m, seed, threads=threads)
    rows = []
    for tau, est, se in zip(mc.taus, mc.estimates, mc.standard_errors):
        ref = ev.nlos(tau)
        z = abs(est - ref) / se if se > 0 else (0.0 if est == ref else math.inf)
        rows.append((float(tau), complex(ref), complex(est), float(se), float(z)))
    return McCheck(rows, [ev.diagnostics()], time.perf_counter() - start)


def execute(cfg: RunConfig):
    if cfg.command in ("curve", "tc"):
        return _single_curve(cfg)
    if cfg.command == "sweep":
        spec = SweepSpec(cfg.scenario, cfg.axis, cfg.values, cfg.epsilon, cfg.grid)
        return run_sweep(spec, cfg.quad, t=cfg.t, threads=cfg.threads)
    if cfg.command == "fig2":
        return run_fig2(cfg.grid, cfg.quad, epsilon=cfg.epsilon, threads=cfg.threads)
    if cfg.command == "fig3":
        return run_fig3(cfg.grid, cfg.quad, epsilon=cfg.epsilon, threads=cfg.threads)
    if cfg.command == "fig4":
        return run_fig4(cfg.grid, cfg.quad, threads=cfg.threads)
    if cfg.command == "mc-check":
        taus = np.logspace(math.log10(cfg.grid.tau_min), math.log10(cfg.grid.tau_max), cfg.mc_points)
        return run_mc_check(cfg.scenario, cfg.t, taus, cfg.quad, cfg.mc_n, cfg.mc_m, cfg.seed, cfg.threads)
    raise ValueError(cfg.command)


# --- output ----------------------------------------------------------------------

def _curve_rows(key, curve):
    for tau, v in curve:
        yield tuple(fmt(k) for k in key) + (fmt(tau), fmt(v.real), fmt(v.imag), fmt(abs(v)))


def _tc_rows(table: TcTable):
    for value, res in sorted(table.rows, key=lambda r: (r[0], r[1].epsilon)):
        tc = "" if res.tc is None else fmt(res.tc)
        yield (fmt(value), fmt(res.epsilon), tc, res.status)


def version_string() -> str:
    """``git describe`` of the source tree when available, else the package version."""
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True, text=True, timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def write_outputs(result, cfg: RunConfig) -> list[Path]:
    """Write data files and the manifest; returns the paths written."""
    out = cfg.output_path
    out.mkdir(parents=True, exist_ok=True)
    written = []
    as_json = cfg.output_format == "json"

    def emit(name, header, rows):
        rows = list(rows)
        if as_json:
            path = out / f"{name}.json"
            path.write_text(json.dumps({"columns": list(header), "rows": [list(r) for r in rows]}, indent=1) + "\n", encoding="utf-8")
        else:
            path = out / f"{name}.csv"
            _csv(path, header, rows)
        written.append(path)

    if isinstance(result, McCheck):
        emit("mc_check", MC_HEADER, (
            (fmt(tau), fmt(q.real), fmt(q.imag), fmt(e.real), fmt(e.imag), fmt(se), fmt(z))
            for tau, q, e, se, z in result.rows
        ))
    else:
        for cs in result.curve_sets:
            header = tuple(cs.columns) + CURVE_HEADER
            emit(cs.name, header, (row for key, curve in cs.curves for row in _curve_rows(key, curve)))
        for table in result.tc_tables:
            emit(table.name, TC_HEADER, _tc_rows(table))

    manifest = {
        "version": version_string(),
        "config": cfg.echo,
        "files": [p.name for p in written],
        "quadrature": result.diagnostics,
        "converged": result.converged,
        "wall_s": result.wall_s,
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=1, default=_json_default) + "\n", encoding="utf-8")
    written.append(path)
    return written


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    raise TypeError(type(x).__name__)


def _summary(result, cfg: RunConfig) -> str:
    lines = [f"{cfg.command}: {result.wall_s:.2f} s, converged={result.converged}"]
    if isinstance(result, McCheck):
        bad = sum(1 for r in result.rows if r[4] >= 3)
        lines.append(f"  {len(result.rows)} lags, {bad} with |z| >= 3, max |z| = {max(r[4] for r in result.rows):.2f}")
    else:
        for table in result.tc_tables:
            for value, res in table.rows:
                tc = "not reached" if res.tc is None else f"{res.tc:.4e} s"
                lines.append(f"  {table.name}: {table.axis}={value:g} eps={res.epsilon:g} -> T_c {tc}")
    return "\n".join(lines)


def _error(kind: str, message: str, **extra) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message, **extra}) + "\n")


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        _error(type(exc).__name__, exc.reason, path=exc.path)
        return 2
    except NtnError as exc:
        _error(type(exc).__name__, str(exc))
        return 2
    try:
        result = execute(cfg)
        paths = write_outputs(result, cfg)
    except NtnError as exc:
        _error(type(exc).__name__, str(exc))
        return 1
    except OSError as exc:
        _error("IoError", str(exc))
        return 1
    print(_summary(result, cfg))
    print("wrote " + ", ".join(str(p) for p in paths))
    if not result.converged:
        _error("QuadratureNotConverged", "one or more integrals did not converge; see manifest.json", diagnostics=result.diagnostics)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
