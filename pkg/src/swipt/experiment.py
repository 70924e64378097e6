"""Experiment orchestration: configs, boundary sweeps, scheme comparisons.

A config describes one experiment (one trade-off curve or one scheme
comparison): the fading marginals, link constants, power limits, solver
tolerances, and the sweep/comparison grid. Configs are flat key-value text
files with dotted section keys; a JSON run manifest embeds the same mapping
so any run can be reproduced from its manifest alone. All CSV output is
byte-deterministic for a fixed config and seed.
"""

from __future__ import annotations

import importlib.metadata
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import baselines as bl
from .errors import ConfigError, ConvergenceError, InfeasibleTargetError, SwiptError
from .fading import DistributionSpec, FadingEnsemble, sample_ensemble
from .link import LinkParams, PowerBudget, db_to_linear, evaluate
from .outage_energy import (VertexPoints, oe_boundary_csit, oe_boundary_no_csit,
                            oe_vertices_csit, oe_vertices_no_csit)
from .rate_energy import re_boundary_csit, re_boundary_no_csit, re_vertices
from .rx_energy import oe_boundary_net

PROBLEMS = ("oe_no_csit", "oe_csit", "re_no_csit", "re_csit", "oe_net")
CURVE_HEADER = "q_bar,objective,lambda,beta,iterations,feasible"
COMPARE_HEADER = "power_db,scheme,objective,param"


def _fmt(x: float) -> str:
    if x is None:
        return ""
    if math.isnan(x):
        return "nan"
    return f"{x:.17g}"


@dataclass(frozen=True)
class SweepSpec:
    n_points: int = 25
    q_bars: tuple[float, ...] | None = None  # explicit grid overrides n_points


@dataclass(frozen=True)
class CompareSpec:
    q_bar: float = 2.0
    p_db: tuple[float, ...] = tuple(float(d) for d in range(13))


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str
    spec_h: DistributionSpec
    spec_intf: DistributionSpec
    n_samples: int = 100_000
    seed: int = 42
    sigma2: float = 0.5
    r0: float = 0.3
    alpha: float = 1.0
    p_i: float = 0.0
    q0: float = 0.0
    p_avg: float = 5.0
    p_peak: float = 20.0
    mode: str = "sweep"
    label: str = ""
    sweep: SweepSpec = field(default_factory=SweepSpec)
    compare: CompareSpec = field(default_factory=CompareSpec)
    baselines: tuple[str, ...] = ("periodic", "interference", "sinr")
    tol_solver: float = 1e-9
    tol_gap: float = 1e-4
    max_iter: int = 500
    output_dir: str = "out"

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}")
        if self.mode not in ("sweep", "compare"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        for kind in self.baselines:
            if kind not in bl.KINDS:
                raise ConfigError(f"unknown baseline {kind!r}")
        if not self.label:
            object.__setattr__(self, "label", self.problem)

    def link_params(self) -> LinkParams:
        return LinkParams(sigma2=self.sigma2, r0=self.r0, alpha=self.alpha,
                          p_i=self.p_i, q0=self.q0)

    def power_budget(self) -> PowerBudget:
        return PowerBudget(p_avg=self.p_avg, p_peak=self.p_peak)

    def build_ensemble(self, seed: int | None = None) -> FadingEnsemble:
        return sample_ensemble(self.spec_h, self.spec_intf, self.n_samples,
                               self.seed if seed is None else seed)

    def to_flat(self) -> dict[str, str]:
        """Canonical flat mapping; floats keep full precision (17 digits)."""
        out = {
            "problem": self.problem, "mode": self.mode, "label": self.label,
            "n_samples": str(self.n_samples), "seed": str(self.seed),
            "sigma2": _fmt(self.sigma2), "r0": _fmt(self.r0),
            "alpha": _fmt(self.alpha), "p_i": _fmt(self.p_i), "q0": _fmt(self.q0),
            "p_avg": _fmt(self.p_avg), "p_peak": _fmt(self.p_peak),
            "baselines": ",".join(self.baselines),
            "tol.solver": _fmt(self.tol_solver), "tol.gap": _fmt(self.tol_gap),
            "max_iter": str(self.max_iter), "output_dir": self.output_dir,
        }
        for prefix, spec in (("h", self.spec_h), ("i", self.spec_intf)):
            out[f"{prefix}.family"] = spec.family
            if spec.family == "exponential":
                out[f"{prefix}.mean"] = _fmt(spec.mean)
            else:
                out[f"{prefix}.points"] = ",".join(
                    f"{_fmt(v)}:{_fmt(w)}" for v, w in spec.points)
        if self.sweep.q_bars is not None:
            out["sweep.q_bars"] = ",".join(_fmt(q) for q in self.sweep.q_bars)
        else:
            out["sweep.n_points"] = str(self.sweep.n_points)
        out["compare.q_bar"] = _fmt(self.compare.q_bar)
        out["compare.p_db"] = ",".join(_fmt(d) for d in self.compare.p_db)
        return out


def _parse_distribution(kv, prefix: str) -> DistributionSpec:
    family = kv.get(f"{prefix}.family", "exponential")
    if family == "exponential":
        return DistributionSpec.exponential(float(kv.get(f"{prefix}.mean", "1.0")))
    if family == "point_masses":
        raw = kv.get(f"{prefix}.points")
        if raw is None:
            raise ConfigError(f"{prefix}.points required for point_masses")
        points = []
        for item in raw.split(","):
            value, _, weight = item.partition(":")
            points.append((float(value), float(weight)))
        return DistributionSpec.point_masses(points)
    raise ConfigError(f"unknown family {family!r} for {prefix}")


def config_from_flat(kv: dict[str, str]) -> ExperimentConfig:
    """Build a config from a flat string mapping (file contents or manifest)."""
    def floats(key, default=None):
        raw = kv.get(key)
        if raw is None:
            return default
        return tuple(float(v) for v in raw.split(",") if v.strip())

    sweep = SweepSpec(n_points=int(kv.get("sweep.n_points", "25")),
                      q_bars=floats("sweep.q_bars"))
    compare = CompareSpec(q_bar=float(kv.get("compare.q_bar", "2.0")),
                          p_db=floats("compare.p_db", CompareSpec().p_db))
    raw_baselines = kv.get("baselines", "periodic,interference,sinr")
    names = tuple(b.strip() for b in raw_baselines.split(",") if b.strip())
    try:
        return ExperimentConfig(
            problem=kv.get("problem", "oe_no_csit"),
            spec_h=_parse_distribution(kv, "h"),
            spec_intf=_parse_distribution(kv, "i"),
            n_samples=int(kv.get("n_samples", "100000")),
            seed=int(kv.get("seed", "42")),
            sigma2=float(kv.get("sigma2", "0.5")),
            r0=float(kv.get("r0", "0.3")),
            alpha=float(kv.get("alpha", "1.0")),
            p_i=float(kv.get("p_i", "0.0")),
            q0=float(kv.get("q0", "0.0")),
            p_avg=float(kv.get("p_avg", "5.0")),
            p_peak=float(kv.get("p_peak", "20.0")),
            mode=kv.get("mode", "sweep"),
            label=kv.get("label", ""),
            sweep=sweep, compare=compare, baselines=names,
            tol_solver=float(kv.get("tol.solver", "1e-9")),
            tol_gap=float(kv.get("tol.gap", "1e-4")),
            max_iter=int(kv.get("max_iter", "500")),
            output_dir=kv.get("output_dir", "out"),
        )
    except ValueError as err:  # int()/float() conversion failures
        raise ConfigError(f"bad config value: {err}") from err


def parse_config_text(text: str) -> dict[str, str]:
    """Parse `key = value` lines; '#' starts a comment. Errors carry line numbers."""
    kv: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value in {raw!r}")
        if key in kv:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        kv[key] = value
    return kv


def load_config(path: str | Path) -> ExperimentConfig:
    """Load a config from a flat text file or a previously written manifest."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        payload = json.loads(text)
        if "configs" in payload:
            entries = payload["configs"]
            if len(entries) != 1:
                raise ConfigError("manifest holds several configs; "
                                  "use load_manifest_configs")
            kv = entries[0]
        else:
            kv = payload.get("config", payload)
        return config_from_flat({str(k): str(v) for k, v in kv.items()})
    return config_from_flat(parse_config_text(text))


def load_manifest_configs(path: str | Path) -> list[ExperimentConfig]:
    """All configs recorded in a run manifest, in run order."""
    payload = json.loads(Path(path).read_text())
    entries = payload["configs"] if "configs" in payload else [payload["config"]]
    return [config_from_flat({str(k): str(v) for k, v in kv.items()})
            for kv in entries]


@dataclass(frozen=True)
class CurvePoint:
    q_bar: float
    objective: float
    lam: float
    beta: float | None
    iterations: int
    feasible: bool


@dataclass(frozen=True)
class TradeoffCurve:
    problem: str
    points: tuple[CurvePoint, ...]
    vertices: VertexPoints

    def csv_lines(self) -> list[str]:
        lines = [CURVE_HEADER]
        for pt in self.points:
            lines.append(",".join([
                _fmt(pt.q_bar),
                _fmt(pt.objective),
                _fmt(pt.lam),
                "" if pt.beta is None else _fmt(pt.beta),
                str(pt.iterations),
                "true" if pt.feasible else "false",
            ]))
        return lines


def compute_vertices(config: ExperimentConfig,
                     ensemble: FadingEnsemble | None = None) -> VertexPoints:
    """Vertex points of the configured problem's trade-off region."""
    ens = ensemble if ensemble is not None else config.build_ensemble()
    params = config.link_params()
    if config.problem == "oe_no_csit":
        return oe_vertices_no_csit(ens, config.p_avg, params)
    if config.problem == "oe_csit":
        return oe_vertices_csit(ens, config.power_budget(), params)
    if config.problem == "re_no_csit":
        return re_vertices(ens, config.p_avg, params, csit=False)
    if config.problem == "re_csit":
        return re_vertices(ens, config.power_budget(), params, csit=True)
    # oe_net: the flat segment ends where the net energy of the unconstrained
    # optimum runs out; the all-EH corner loses only the sensing energy.
    base = oe_vertices_no_csit(ens, config.p_avg, params)
    q_min_net = max(base.q_min - params.p_i * base.obj_max - params.q0, 0.0)
    return VertexPoints(obj_max=base.obj_max, q_min=q_min_net,
                        q_max=base.q_max - params.q0)


def _solve_point(config, ens, params, q_bar):
    if config.problem == "oe_no_csit":
        return oe_boundary_no_csit(ens, config.p_avg, params, q_bar, config.tol_solver)
    if config.problem == "re_no_csit":
        return re_boundary_no_csit(ens, config.p_avg, params, q_bar, config.tol_solver)
    if config.problem == "oe_net":
        return oe_boundary_net(ens, config.p_avg, params, q_bar, config.tol_solver)
    if config.problem == "oe_csit":
        return oe_boundary_csit(ens, config.power_budget(), params, q_bar,
                                config.tol_solver, config.max_iter, config.tol_gap)
    return re_boundary_csit(ens, config.power_budget(), params, q_bar,
                            config.tol_solver, config.max_iter, config.tol_gap)


def sweep_region(config: ExperimentConfig,
                 ensemble: FadingEnsemble | None = None) -> TradeoffCurve:
    """Trace the trade-off boundary over a grid of energy targets.

    The grid runs from the region's q_min vertex to q_max inclusive; when
    q_min > 0 a q_bar = 0 point is prepended to show the flat segment where
    the unconstrained optimum already harvests enough. Per-point failures are
    recorded as infeasible points and the sweep continues.
    """
    ens = ensemble if ensemble is not None else config.build_ensemble()
    params = config.link_params()
    vertices = compute_vertices(config, ens)
    if config.sweep.q_bars is not None:
        grid = sorted(config.sweep.q_bars)
    else:
        n = max(config.sweep.n_points, 2)
        grid = list(np.linspace(vertices.q_min, vertices.q_max, n))
        if vertices.q_min > 0:
            grid = [0.0] + grid
    csit = config.problem in ("oe_csit", "re_csit")
    points = []
    for q_bar in grid:
        if csit and vertices.q_max * (1 - 1e-12) <= q_bar <= vertices.q_max * (1 + 1e-12):
            # All-EH corner: the energy multiplier is unbounded there, so the
            # point comes from the vertex construction instead of a solve.
            points.append(CurvePoint(q_bar=q_bar, objective=0.0, lam=math.inf,
                                     beta=math.inf, iterations=0, feasible=True))
            continue
        try:
            sol = _solve_point(config, ens, params, q_bar)
            points.append(CurvePoint(q_bar=q_bar, objective=sol.objective,
                                     lam=sol.lam, beta=sol.beta,
                                     iterations=sol.iterations, feasible=True))
        except (InfeasibleTargetError, ConvergenceError):
            points.append(CurvePoint(q_bar=q_bar, objective=math.nan,
                                     lam=math.nan,
                                     beta=math.nan if csit else None,
                                     iterations=0, feasible=False))
    return TradeoffCurve(problem=config.problem, points=tuple(points),
                         vertices=vertices)


@dataclass(frozen=True)
class CompareRow:
    power_db: float
    scheme: str
    objective: float
    param: float | None
    feasible: bool = True


def compare_schemes(config: ExperimentConfig, q_bar: float | None = None,
                    ensemble: FadingEnsemble | None = None) -> list[CompareRow]:
    """Optimal vs. heuristic switching at a fixed energy target.

    Sweeps the transmit power axis in dB (average power for the CSIT
    problems, the constant power otherwise) and emits one row per
    (power, scheme). Infeasible schemes are marked, not fatal.
    """
    if config.problem == "oe_net":
        raise ConfigError("compare mode covers the consumption-free problems only")
    ens = ensemble if ensemble is not None else config.build_ensemble()
    params = config.link_params()
    q_bar = config.compare.q_bar if q_bar is None else q_bar
    csit = config.problem in ("oe_csit", "re_csit")
    outage = config.problem.startswith("oe")
    rows: list[CompareRow] = []
    for db in config.compare.p_db:
        P = db_to_linear(db)

        def emit(scheme, objective, param=None, feasible=True):
            rows.append(CompareRow(power_db=db, scheme=scheme, objective=objective,
                                   param=param, feasible=feasible))

        try:
            if csit:
                if P > config.p_peak:
                    raise InfeasibleTargetError("p_avg above p_peak", math.nan)
                budget = PowerBudget(p_avg=P, p_peak=config.p_peak)
                if outage:
                    sol = oe_boundary_csit(ens, budget, params, q_bar,
                                           config.tol_solver, config.max_iter,
                                           config.tol_gap)
                else:
                    sol = re_boundary_csit(ens, budget, params, q_bar,
                                           config.tol_solver, config.max_iter,
                                           config.tol_gap)
            elif outage:
                sol = oe_boundary_no_csit(ens, P, params, q_bar, config.tol_solver)
            else:
                sol = re_boundary_no_csit(ens, P, params, q_bar, config.tol_solver)
            emit("optimal", sol.objective)
        except SwiptError:
            emit("optimal", math.nan, feasible=False)

        for kind in config.baselines:
            try:
                if csit:
                    if P > config.p_peak:
                        raise InfeasibleTargetError("p_avg above p_peak", math.nan)
                    budget = PowerBudget(p_avg=P, p_peak=config.p_peak)
                    _, metrics, calibrated = bl.baseline_with_csit_power(
                        ens, budget, params, q_bar, bl.BaselineSpec(kind=kind),
                        "outage" if outage else "rate")
                    value = metrics.delta if outage else metrics.rate
                    emit(kind, value, calibrated.calibrated_param)
                else:
                    if kind == "periodic":
                        policy, param = bl.periodic_policy(ens, P, params, q_bar)
                    elif kind == "interference":
                        policy, param = bl.interference_policy(ens, P, params, q_bar)
                    else:
                        policy, param = bl.sinr_policy(ens, P, params, q_bar)
                    metrics = evaluate(ens, policy, None, params)
                    emit(kind, metrics.delta if outage else metrics.rate, param)
            except SwiptError:
                emit(kind, math.nan, feasible=False)
    return rows


def compare_csv_lines(rows: list[CompareRow]) -> list[str]:
    lines = [COMPARE_HEADER]
    for r in rows:
        lines.append(",".join([
            _fmt(r.power_db), r.scheme, _fmt(r.objective),
            "" if r.param is None else _fmt(r.param),
        ]))
    return lines


@dataclass(frozen=True)
class RunResult:
    exit_code: int
    csv_paths: tuple[Path, ...]
    manifest_path: Path | None


def run_experiment(configs, out_dir: str | Path,
                   seed: int | None = None) -> RunResult:
    """Run one or more configs, writing per-config CSVs and one manifest.

    Returns exit code 0 on full success and 2 when any sweep point or
    comparison row was infeasible (partial results are still written).
    Identical configs and seed produce byte-identical CSVs.
    """
    if isinstance(configs, ExperimentConfig):
        configs = [configs]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    csv_paths: list[Path] = []
    manifest_entries = []
    diagnostics = []
    partial = False
    for config in configs:
        if seed is not None:
            config = config_from_flat({**config.to_flat(), "seed": str(seed)})
        ens = config.build_ensemble()
        path = out / f"{config.label}.csv"
        if config.mode == "compare":
            rows = compare_schemes(config, ensemble=ens)
            lines = compare_csv_lines(rows)
            partial |= any(not r.feasible for r in rows)
            diagnostics.append({
                "label": config.label,
                "rows": [{"power_db": r.power_db, "scheme": r.scheme,
                          "feasible": r.feasible} for r in rows]})
        else:
            curve = sweep_region(config, ensemble=ens)
            lines = curve.csv_lines()
            partial |= any(not pt.feasible for pt in curve.points)
            diagnostics.append({
                "label": config.label,
                "vertices": {"obj_max": curve.vertices.obj_max,
                             "q_min": curve.vertices.q_min,
                             "q_max": curve.vertices.q_max},
                "points": [{"q_bar": pt.q_bar, "lambda": pt.lam,
                            "beta": pt.beta, "iterations": pt.iterations,
                            "feasible": pt.feasible} for pt in curve.points]})
        path.write_text("\n".join(lines) + "\n")
        csv_paths.append(path)
        manifest_entries.append(config.to_flat())
    try:
        version = importlib.metadata.version("swipt")
    except importlib.metadata.PackageNotFoundError:
        version = "unknown"
    manifest = {
        "configs": manifest_entries,
        "outputs": [p.name for p in csv_paths],
        "versions": {"swipt": version, "numpy": np.__version__},
        "wall_time_s": time.time() - started,
        "diagnostics": diagnostics,
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, allow_nan=True) + "\n")
    return RunResult(exit_code=2 if partial else 0,
                     csv_paths=tuple(csv_paths), manifest_path=manifest_path)
