"""Preset scenarios and sweep drivers.

A sweep varies one scenario attribute over a list of values and returns the
normalized autocorrelation curve for each value, plus coherence times when
thresholds are given. The figure drivers are fixed sweeps over the default
LEO downlink geometry.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .antenna import BeamConfig, hpbw_to_q
from .channel import SPEED_OF_LIGHT, AutocorrEvaluator, Scenario
from .coherence import TauGrid, autocorr_curve, check_epsilon, coherence_time
from .geometry import BodyState, unit_between
from .quadrature import QuadSpec
from .scatter import VmfField

AXES = ("rician_k", "bs_speed", "ue_hpbw")

FIG2_K = (0.0, 0.1, 0.2, 0.5, 1.0, 2.0, math.inf)
FIG3_SPEEDS = (0.0, 4e3, 8e3)
FIG3_K = (0.0, 0.3, math.inf)
FIG4_SPEEDS = (0.0, 7e3)
FIG4_CURVE_HPBW = tuple(math.radians(d) for d in (2.0, 5.0, 10.0, 20.0))
FIG4_TC_HPBW = tuple(math.radians(10.0 ** (k / 5.0)) for k in range(-10, 9))
FIG4_EPSILONS = (0.3, 0.5, 0.7)


def default_scenario(rician_k: float | None = None) -> Scenario:
    """LEO downlink at 28 GHz: BS 500 km up moving at 7 km/s, UE walking at 2 m/s.

    Both beams and the scatter mean direction follow the line of sight at
    t = 0. The Rician factor is left unset unless given.
    """
    fc = 28e9
    lam = SPEED_OF_LIGHT / fc
    bs = BodyState([-1e3, 0.0, 5e5], [7e3, 0.0, 0.0])
    ue = BodyState([0.0, 0.0, 0.0], [0.0, 2.0, 0.0])
    los = unit_between(ue.p0, bs.p0)
    return Scenario(
        bs=bs,
        ue=ue,
        beam_bs=BeamConfig.from_hpbw(-los, math.radians(2.0)),
        beam_ue=BeamConfig.from_hpbw(los, math.radians(20.0)),
        field=VmfField(los, 30.0, 1000.0 * lam),
        rician_k=rician_k,
        fc_hz=fc,
    )


PRESETS = {"default": default_scenario}


def preset(name: str) -> Scenario:
    try:
        return PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def with_bs_speed(scn: Scenario, speed: float) -> Scenario:
    """Same BS heading at a new speed (m/s); +x when the BS is at rest."""
    v = scn.bs.v
    n = float(np.linalg.norm(v))
    heading = v / n if n > 0 else np.array([1.0, 0.0, 0.0])
    return scn.with_(bs=BodyState(scn.bs.p0, heading * speed))


def with_ue_hpbw(scn: Scenario, psi: float) -> Scenario:
    return scn.with_(beam_ue=BeamConfig(scn.beam_ue.pointing, hpbw_to_q(psi)))


def apply_axis(scn: Scenario, axis: str, value: float) -> Scenario:
    if axis == "rician_k":
        return scn.with_(rician_k=value)
    if axis == "bs_speed":
        return with_bs_speed(scn, value)
    if axis == "ue_hpbw":
        return with_ue_hpbw(scn, value)
    raise ValueError(f"unknown sweep axis {axis!r}; choose from {AXES}")


@dataclass(frozen=True)
class SweepSpec:
    """One-axis sweep. Units: ``bs_speed`` in m/s, ``ue_hpbw`` in radians."""

    base: Scenario
    axis: str
    values: tuple
    epsilon: float | tuple | None = None
    grid: TauGrid = TauGrid()

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"unknown sweep axis {self.axis!r}; choose from {AXES}")
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ValueError("sweep needs at least one value")
        for v in values:
            if math.isnan(v) or (math.isinf(v) and self.axis != "rician_k"):
                raise ValueError(f"non-finite sweep value {v!r} on axis {self.axis}")
        object.__setattr__(self, "values", values)
        eps = self.epsilon
        if eps is not None:
            eps = tuple(check_epsilon(e) for e in np.atleast_1d(eps))
            object.__setattr__(self, "epsilon", eps)

    @property
    def epsilons(self) -> tuple:
        return self.epsilon or ()


@dataclass
class CurveSet:
    """Curves keyed by the axis values that produced them.

    ``columns`` names the key fields, e.g. ``("bs_speed", "rician_k")``.
    """

    name: str
    columns: tuple
    curves: list = field(default_factory=list)   # [(key tuple, [(tau, complex)])]

    def table(self) -> dict:
        """{key: |A| array} for quick inspection."""
        return {key: np.abs([v for _, v in curve]) for key, curve in self.curves}


@dataclass
class TcTable:
    name: str
    axis: str
    rows: list = field(default_factory=list)     # [(axis value, CoherenceResult)]

    def tc(self, value: float, epsilon: float) -> float | None:
        for v, res in self.rows:
            if v == value and res.epsilon == epsilon:
                return res.tc
        raise KeyError((value, epsilon))


@dataclass
class RunResult:
    name: str
    curve_sets: list = field(default_factory=list)
    tc_tables: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)   # one dict per evaluator
    wall_s: float = 0.0

    @property
    def converged(self) -> bool:
        return all(d["all_converged"] for d in self.diagnostics)


def _diag(ev: AutocorrEvaluator, **labels) -> dict:
    return {**labels, **ev.diagnostics()}


def _label(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:g}"


def run_sweep(spec: SweepSpec, quad: QuadSpec = QuadSpec(), *, t: float = 0.0, threads: int = 1, strict: bool = False) -> RunResult:
    """Curves (and coherence times, when ``spec.epsilon`` is set) over the sweep values.

    Rician-factor sweeps share one evaluator, since the direct and
    scattered parts do not depend on K. Values are processed in sorted
    order and results are sorted by axis value.
    """
    start = time.perf_counter()
    result = RunResult(f"sweep_{spec.axis}")
    curves = CurveSet(result.name, (spec.axis,))
    tcs = TcTable(result.name + "_tc", spec.axis)
    shared = None
    if spec.axis == "rician_k":
        shared = AutocorrEvaluator(spec.base, t, quad, strict=strict)
    for value in sorted(set(spec.values)):
        scn = apply_axis(spec.base, spec.axis, value)
        ev = shared if shared is not None else AutocorrEvaluator(scn, t, quad, strict=strict)
        k = value if spec.axis == "rician_k" else scn.rician_k
        curve = autocorr_curve(scn, t, spec.grid, quad, k=k, threads=threads, evaluator=ev)
        curves.curves.append(((value,), curve))
        for eps in spec.epsilons:
            res = coherence_time(scn, t, eps, spec.grid, quad, k=k, curve=curve, evaluator=ev)
            tcs.rows.append((value, res))
        if shared is None:
            result.diagnostics.append(_diag(ev, **{spec.axis: value}))
    if shared is not None:
        result.diagnostics.append(_diag(shared))
    result.curve_sets.append(curves)
    if spec.epsilons:
        result.tc_tables.append(tcs)
    result.wall_s = time.perf_counter() - start
    return result


def run_fig2(grid: TauGrid = TauGrid(), quad: QuadSpec = QuadSpec(), *, epsilon: float = 0.5, threads: int = 1) -> RunResult:
    """Default geometry over the Rician factors 0, 0.1, 0.2, 0.5, 1, 2 and inf."""
    res = run_sweep(SweepSpec(default_scenario(), "rician_k", FIG2_K, epsilon, grid), quad, threads=threads)
    res.name = "fig2"
    res.curve_sets[0].name = "fig2"
    res.tc_tables[0].name = "fig2_tc"
    return res


def run_fig3(grid: TauGrid = TauGrid(), quad: QuadSpec = QuadSpec(), *, epsilon: float = 0.5, threads: int = 1) -> RunResult:
    """BS speeds 0, 4 and 8 km/s, each with K in {0, 0.3, inf}."""
    start = time.perf_counter()
    result = RunResult("fig3")
    curves = CurveSet("fig3", ("bs_speed", "rician_k"))
    tables = {k: TcTable(f"fig3_tc_k{_label(k)}", "bs_speed") for k in FIG3_K}
    base = default_scenario()
    for speed in FIG3_SPEEDS:
        scn = with_bs_speed(base, speed)
        ev = AutocorrEvaluator(scn, 0.0, quad, strict=False)
        for k in FIG3_K:
            curve = autocorr_curve(scn, 0.0, grid, quad, k=k, threads=threads, evaluator=ev)
            curves.curves.append(((speed, k), curve))
            tc = coherence_time(scn, 0.0, epsilon, grid, quad, k=k, curve=curve, evaluator=ev)
            tables[k].rows.append((speed, tc))
        result.diagnostics.append(_diag(ev, bs_speed=speed))
    result.curve_sets.append(curves)
    result.tc_tables.extend(tables.values())
    result.wall_s = time.perf_counter() - start
    return result


def run_fig4(
    grid: TauGrid = TauGrid(tau_min=1e-10),
    quad: QuadSpec = QuadSpec(),
    epsilons=FIG4_EPSILONS,
    *,
    curve_hpbw=FIG4_CURVE_HPBW,
    tc_hpbw=FIG4_TC_HPBW,
    speeds=FIG4_SPEEDS,
    threads: int = 1,
) -> RunResult:
    """No direct path (K = 0): curves over UE beamwidth and coherence time versus beamwidth.

    Runs at BS speeds 0 and 7 km/s. Beamwidths are in radians. The lag grid
    starts at 0.1 ns so that crossings of the fast-moving case lie inside it.
    """
    start = time.perf_counter()
    result = RunResult("fig4")
    curves = CurveSet("fig4a", ("bs_speed", "ue_hpbw"))
    base = default_scenario(0.0)
    for speed in speeds:
        moving = with_bs_speed(base, speed)
        table = TcTable(f"fig4b_v{_label(speed)}", "ue_hpbw")
        evaluators = {}
        for psi in sorted(set(curve_hpbw) | set(tc_hpbw)):
            scn = with_ue_hpbw(moving, psi)
            ev = AutocorrEvaluator(scn, 0.0, quad, strict=False)
            evaluators[psi] = ev
            curve = autocorr_curve(scn, 0.0, grid, quad, threads=threads, evaluator=ev)
            if psi in curve_hpbw:
                curves.curves.append(((speed, psi), curve))
            if psi in tc_hpbw:
                for eps in epsilons:
                    table.rows.append((psi, coherence_time(scn, 0.0, eps, grid, quad, curve=curve, evaluator=ev)))
            result.diagnostics.append(_diag(ev, bs_speed=speed, ue_hpbw=psi))
        result.tc_tables.append(table)
    result.curve_sets.append(curves)
    result.wall_s = time.perf_counter() - start
    return result
