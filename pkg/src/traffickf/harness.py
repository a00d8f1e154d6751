"""Scenario configuration, experiment execution, and result serialization.

A Scenario is a plain JSON-serializable description of one experiment:
road + discretization, partition, sensors (with the heterogeneous/large-error
pattern and the inconsistent-agent flag), ground-truth initial and boundary
data, noise envelopes, estimator selection, and Monte Carlo controls. The
runner turns it into ground truth, agents, and per-step metrics, optionally
with the certified-bound monitors attached.
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bounds as bnd
from . import metrics as mtr
from .ctm import BoundaryTrace, FundamentalDiagram, Grid, SimResult, check_cfl, simulate, sinusoid_trace
from .filters import Agent, ConsensusPipeline, CrossCovarianceFilter, NoiseModel, build_stack
from .metrics import RunMetrics, StepMetrics
from .partition import (PartitionLayout, SensorLayout, apply_heterogeneous_stds,
                        apply_inconsistent_agents, make_layout, place_boundary_sensors)
from .smm import Mode, true_mode

FILTER_NAMES = ("lkf", "zero_gain", "consensus", "central")


@dataclass
class Scenario:
    """Complete, validated description of one experiment."""

    name: str = "default"
    k_max: int = 300

    # road and discretization (normalized units)
    n_cells: int = 136
    dx: float = 1.0
    dt: float = 0.75
    v_m: float = 1.0
    rho_m: float = 1.0
    rho_c: float = 0.25

    # partition
    n_sections: int = 7
    section_len: int = 28
    overlap: int = 10

    # sensors
    sensor_std: float = 0.03
    interior_sensors: int = 0
    hs_enabled: bool = False
    hs_every: int = 3
    hs_start: int = 2          # position-ordered index of the first large-error sensor
    hs_std: float = 0.3
    ia_enabled: bool = False
    ia_wrong_std: float = 0.03

    # per-section model-parameter perturbations applied by the agents
    perturb_low: float = 0.0
    perturb_high: float = 0.0

    # noise envelopes
    q_std: float = 0.01
    q1: float = 0.5e-4
    q2: float = 2.0e-4
    r1: float = 4.0e-4
    r2: float = 0.2

    # ground truth: initial profile and ghost-cell boundary data
    ic: dict = field(default_factory=lambda: {
        "kind": "blocks", "segments": [[0.65, 0.12], [0.18, 0.82], [0.17, 0.10]]})
    bc_up: dict = field(default_factory=lambda: {
        "kind": "sinusoid", "base": 0.12, "amplitude": 0.04, "period": 60.0})
    bc_down: dict = field(default_factory=lambda: {
        "kind": "ramp", "start": 0.10, "stop": 0.85, "at": 0.3, "width": 0.1})

    # estimator initialization
    init_estimate: dict = field(default_factory=lambda: {"kind": "constant", "value": 0.5})
    cov0: float = 0.25

    # estimator selection and consensus parameters
    filters: list = field(default_factory=lambda: ["lkf", "zero_gain", "consensus"])
    c_hat: float = 0.01
    backoff: float = 0.99
    use_true_mode: bool = False

    # Monte Carlo and monitoring
    runs: int = 1
    monitors: bool = False
    nees_dof_cells: str = "boundary"

    # -- derived helpers ----------------------------------------------------

    def fd(self) -> FundamentalDiagram:
        return FundamentalDiagram(self.v_m, self.rho_m, self.rho_c)

    def grid(self) -> Grid:
        return Grid(self.dx, self.dt, self.n_cells)

    def noise(self) -> NoiseModel:
        return NoiseModel(q_std=self.q_std, q1=self.q1, q2=self.q2, r1=self.r1, r2=self.r2)

    def layout(self) -> PartitionLayout:
        return make_layout(self.n_cells, self.n_sections, self.section_len, self.overlap)

    def validate(self) -> None:
        check_cfl(self.fd(), self.grid(), strict=True)
        if self.perturb_high > 0.0:
            worst = FundamentalDiagram(self.v_m * (1.0 + self.perturb_high),
                                       self.rho_m * (1.0 - self.perturb_high),
                                       self.rho_c * (1.0 + self.perturb_high))
            check_cfl(worst, self.grid(), strict=True)
        self.layout()
        self.noise().check_sensor_std(self.sensor_std)
        if self.hs_enabled:
            self.noise().check_sensor_std(self.hs_std)
        for f in self.filters:
            if f not in FILTER_NAMES:
                raise ValueError(f"unknown filter {f!r}; choose from {FILTER_NAMES}")
        if not 0.0 <= self.perturb_low <= self.perturb_high:
            raise ValueError("need 0 <= perturb_low <= perturb_high")
        for tr in (self.initial_profile(), ):
            if tr.min() < 0.0 or tr.max() > self.rho_m:
                raise ValueError("initial profile leaves [0, rho_m]")

    # -- ground-truth construction -------------------------------------------

    def initial_profile(self) -> np.ndarray:
        kind = self.ic["kind"]
        if kind == "uniform":
            return np.full(self.n_cells, float(self.ic["value"]))
        if kind == "blocks":
            out = np.empty(self.n_cells)
            start = 0
            for frac, value in self.ic["segments"]:
                stop = start + int(round(frac * self.n_cells))
                out[start:stop] = value
                start = stop
            out[start:] = self.ic["segments"][-1][1]
            return out
        if kind == "profile":
            arr = np.asarray(self.ic["values"], dtype=float)
            if arr.shape != (self.n_cells,):
                raise ValueError("explicit profile has the wrong length")
            return arr
        raise ValueError(f"unknown initial-condition kind {kind!r}")

    def _trace(self, spec: dict) -> np.ndarray:
        kind = spec["kind"]
        if kind == "constant":
            return np.full(self.k_max, float(spec["value"]))
        if kind == "sinusoid":
            return sinusoid_trace(self.k_max, spec["base"], spec["amplitude"], spec["period"])
        if kind == "ramp":
            at = int(round(spec["at"] * self.k_max))
            width = max(1, int(round(spec["width"] * self.k_max)))
            tr = np.full(self.k_max, float(spec["start"]))
            ramp = np.linspace(spec["start"], spec["stop"], width)
            tr[at:at + width] = ramp[:max(0, min(width, self.k_max - at))]
            tr[at + width:] = spec["stop"]
            return tr
        raise ValueError(f"unknown boundary kind {kind!r}")

    def boundary(self) -> BoundaryTrace:
        return BoundaryTrace(self._trace(self.bc_up), self._trace(self.bc_down))

    # -- (de)serialization ----------------------------------------------------

    def to_json(self) -> str:
        return dumps_floats(dataclasses.asdict(self))

    @staticmethod
    def from_json(text: str) -> "Scenario":
        data = json.loads(text)
        sc = Scenario(**data)
        sc.validate()
        return sc

    @staticmethod
    def load(path: str | Path) -> "Scenario":
        return Scenario.from_json(Path(path).read_text())


def _float_str(x: float) -> str:
    return mtr.FLOAT_FMT % x


def dumps_floats(obj) -> str:
    """JSON with all floats at 17 significant digits (bit-stable round trip)."""

    def walk(o):
        if isinstance(o, float):
            return _RawFloat(o)
        if isinstance(o, dict):
            return {k: walk(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [walk(v) for v in o]
        if isinstance(o, (np.floating,)):
            return _RawFloat(float(o))
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, np.ndarray):
            return [walk(v) for v in o.tolist()]
        return o

    class _RawFloat(float):
        def __repr__(self):
            return _float_str(self)

    return json.dumps(walk(obj), indent=2, default=lambda o: repr(o))


# ---------------------------------------------------------------------------
# ground truth and agent construction
# ---------------------------------------------------------------------------

@dataclass
class TruthRun:
    sim: SimResult
    layout: PartitionLayout
    sensors: SensorLayout
    modes: list[dict[int, Mode]]          # modes[k][i]: section i's mode at step k+1
    measurements: list[dict[int, float]]  # sensor index -> reading, per step


def seeds_for(seed: int, run: int = 0) -> list[np.random.Generator]:
    ss = np.random.SeedSequence((seed, run))
    return [np.random.default_rng(s) for s in ss.spawn(4)]


def simulate_truth(sc: Scenario, seed: int, run: int = 0,
                   sensors: SensorLayout | None = None) -> TruthRun:
    """Ground-truth densities, per-section modes, and noisy sensor readings."""
    sc.validate()
    rng_truth, rng_meas, _, _ = seeds_for(seed, run)
    fd, grid, layout = sc.fd(), sc.grid(), sc.layout()
    sim = simulate(sc.initial_profile(), sc.boundary(), fd, grid,
                   q_std=sc.q_std, rng=rng_truth)
    if sensors is None:
        sensors = build_sensors(sc, layout)
    modes: list[dict[int, Mode]] = []
    for k in range(1, sc.k_max + 1):
        modes.append({sec.index: true_mode(sim.densities[k, sec.start:sec.stop], fd)
                      for sec in layout.sections})
    measurements = []
    for k in range(1, sc.k_max + 1):
        z = {s.index: sim.densities[k, s.cell] + rng_meas.normal(0.0, s.std_true)
             for s in sensors.sensors}
        measurements.append(z)
    return TruthRun(sim=sim, layout=layout, sensors=sensors, modes=modes,
                    measurements=measurements)


def build_sensors(sc: Scenario, layout: PartitionLayout) -> SensorLayout:
    sensors = place_boundary_sensors(layout, std=sc.sensor_std,
                                     interior_per_section=sc.interior_sensors)
    if sc.hs_enabled:
        apply_heterogeneous_stds(sensors, every=sc.hs_every, start_index=sc.hs_start,
                                 std_large=sc.hs_std)
        if sc.ia_enabled:
            apply_inconsistent_agents(sensors, wrong_std=sc.ia_wrong_std,
                                      large_std=sc.hs_std, agent_parity=0)
    return sensors


def section_diagrams(sc: Scenario, seed: int) -> list[FundamentalDiagram]:
    """Per-section diagrams the agents assume; perturbed from the truth when
    the scenario requests model error (signs and magnitudes are seeded)."""
    fd = sc.fd()
    if sc.perturb_high <= 0.0:
        return [fd] * sc.n_sections
    _, _, _, rng = seeds_for(seed)
    out = []
    for _ in range(sc.n_sections):
        mag = rng.uniform(sc.perturb_low, sc.perturb_high, size=3)
        sign = rng.choice([-1.0, 1.0], size=3)
        f = 1.0 + mag * sign
        out.append(FundamentalDiagram(fd.v_m * f[0], fd.rho_m * f[1], fd.rho_c * f[2]))
    return out


def _central_sensors(sensors: SensorLayout) -> SensorLayout:
    clones = [dataclasses.replace(s, owner=1) for s in sensors.sensors]
    return SensorLayout(sensors=clones)


def build_pipeline(sc: Scenario, truth: TruthRun, variant: str, seed: int,
                   run: int = 0) -> ConsensusPipeline:
    """Instantiate one estimator variant over the truth's layout/sensors."""
    fd, grid, noise = sc.fd(), sc.grid(), sc.noise()
    _, _, rng_init, _ = seeds_for(seed, run)
    if variant == "central":
        layout = make_layout(sc.n_cells, 1, sc.n_cells, 1)
        sensors = _central_sensors(truth.sensors)
        diagrams = [fd]
        share, consensus = False, False
    else:
        layout = truth.layout
        sensors = truth.sensors
        diagrams = section_diagrams(sc, seed)
        share = variant in ("zero_gain", "consensus")
        consensus = variant == "consensus"

    agents = []
    for sec in layout.sections:
        stack = build_stack(layout, sensors, sec.index, share=share, noise=noise)
        truth0 = truth.sim.densities[0, sec.start:sec.stop]
        kind = sc.init_estimate["kind"]
        cov0 = sc.cov0 * np.eye(sec.n)
        if kind == "constant":
            rho0 = np.full(sec.n, float(sc.init_estimate["value"]))
        elif kind == "truth":
            rho0 = truth0.copy()
        elif kind == "sampled":
            rho0 = truth0 + rng_init.normal(0.0, np.sqrt(sc.cov0), size=sec.n)
        else:
            raise ValueError(f"unknown init_estimate kind {kind!r}")
        mode0 = true_mode(truth0, fd)
        agents.append(Agent(sec.index, layout, stack, diagrams[sec.index - 1], grid,
                            noise, rho0=rho0, cov0=cov0, mode0=mode0))
    return ConsensusPipeline(agents, layout, share=share, consensus=consensus,
                             c_hat=sc.c_hat, backoff=sc.backoff)


# ---------------------------------------------------------------------------
# experiment runner
# ---------------------------------------------------------------------------

@dataclass
class RunRecord:
    scenario: Scenario
    seed: int
    metrics: dict[str, RunMetrics]
    timings: dict[str, float]
    violations: list[bnd.Violation]
    truth: TruthRun | None = None

    @property
    def ok(self) -> bool:
        return not self.violations


def run_filter_once(sc: Scenario, truth: TruthRun, variant: str, seed: int, run: int = 0,
                    monitors: bnd.RuntimeMonitors | None = None,
                    timing: bool = False) -> tuple[RunMetrics, ConsensusPipeline]:
    pipe = build_pipeline(sc, truth, variant, seed, run)
    out = RunMetrics()
    central = variant == "central"
    fd = sc.fd()
    for k in range(1, sc.k_max + 1):
        z = truth.measurements[k - 1]
        tm = None
        if sc.use_true_mode:
            if central:
                tm = {1: true_mode(truth.sim.densities[k], fd)}
            else:
                tm = truth.modes[k - 1]
        diag = pipe.step(z, true_modes=tm, timing=timing)
        out.append(StepMetrics.collect(k, pipe.agents, pipe.layout,
                                       truth.sim.densities[k], diag.gain_inf_norm))
        if monitors is not None and not central:
            monitors.observe(k, pipe.agents, truth.modes[k - 1], diag.consensus_norm)
    return out, pipe


def run_experiment(sc: Scenario, seed: int, keep_truth: bool = False) -> RunRecord:
    """Execute every selected filter on one seeded realization."""
    sc.validate()
    truth = simulate_truth(sc, seed)
    metrics: dict[str, RunMetrics] = {}
    timings: dict[str, float] = {}
    violations: list[bnd.Violation] = []
    if sc.monitors:
        configs = {sec.index: bnd.BoundConfig(n=sec.n, fd=sc.fd(), grid=sc.grid(),
                                              q1=sc.q1, q2=sc.q2, r1=sc.r1, r2=sc.r2,
                                              c_hat=sc.c_hat)
                   for sec in truth.layout.sections}
        cov0 = {sec.index: sc.cov0 * np.eye(sec.n) for sec in truth.layout.sections}
    for variant in sc.filters:
        mon = None
        if sc.monitors and variant == "consensus":
            mon = bnd.RuntimeMonitors(configs, cov0, sc.c_hat)
        t0 = time.perf_counter()
        metrics[variant], _ = run_filter_once(sc, truth, variant, seed, monitors=mon)
        timings[variant] = time.perf_counter() - t0
        if mon is not None:
            violations.extend(mon.violations)
    return RunRecord(scenario=sc, seed=seed, metrics=metrics, timings=timings,
                     violations=violations, truth=truth if keep_truth else None)


def monte_carlo(sc: Scenario, seed: int, variants: list[str] | None = None,
                collect_nees: bool = False):
    """Per-run totals for each variant across sc.runs seeded realizations.

    Returns (totals, nees) where totals[variant] is a list of dicts with
    keys 'disagreement' and 'error', and nees is a NeesAccumulator for the
    consensus variant (None unless requested).
    """
    sc.validate()
    variants = variants or sc.filters
    totals = {v: [] for v in variants}
    nees = None
    if collect_nees:
        nees = mtr.NeesAccumulator(runs=sc.runs,
                                   sections=[s.index for s in sc.layout().sections],
                                   dof_cells=sc.nees_dof_cells)
    for run in range(sc.runs):
        truth = simulate_truth(sc, seed, run=run)
        for v in variants:
            if collect_nees and v == "consensus":
                nees.start_run()
                pipe = build_pipeline(sc, truth, v, seed, run)
                rm = RunMetrics()
                for k in range(1, sc.k_max + 1):
                    tm = truth.modes[k - 1] if sc.use_true_mode else None
                    diag = pipe.step(truth.measurements[k - 1], true_modes=tm)
                    rm.append(StepMetrics.collect(k, pipe.agents, pipe.layout,
                                                  truth.sim.densities[k], diag.gain_inf_norm))
                    nees.record(pipe.agents, truth.sim.densities[k])
            else:
                rm, _ = run_filter_once(sc, truth, v, seed, run)
            totals[v].append({"disagreement": rm.disagreement_total,
                              "error": rm.error_total})
    return totals, nees


# ---------------------------------------------------------------------------
# benchmark
# ---------------------------------------------------------------------------

def benchmark_scenario(n_total: int, n_sections: int, section_len: int, overlap: int,
                       k_max: int = 2000) -> Scenario:
    """Shock-tracking run with uniform sensors; sized per the arguments."""
    return Scenario(
        name=f"bench-{n_total}-{section_len}-{overlap}-{n_sections}",
        k_max=k_max, n_cells=n_total, n_sections=n_sections,
        section_len=section_len, overlap=overlap,
        ic={"kind": "blocks", "segments": [[0.6, 0.15], [0.4, 0.8]]},
        bc_up={"kind": "constant", "value": 0.15},
        bc_down={"kind": "constant", "value": 0.8},
        init_estimate={"kind": "constant", "value": 0.4},
        filters=["consensus", "central"], runs=1)


@dataclass
class BenchmarkResult:
    config: dict
    per_agent_s: float
    per_agent_max_s: float
    central_s: float

    @property
    def ratio(self) -> float:
        return self.central_s / self.per_agent_s


def run_benchmark(n_total: int, section_len: int, overlap: int, n_sections: int,
                  k_max: int = 2000, seed: int = 0) -> BenchmarkResult:
    """Wall-clock agent compute: mean per-agent consensus-filter time vs the
    one-section central filter on the same truth and sensors."""
    sc = benchmark_scenario(n_total, n_sections, section_len, overlap, k_max)
    truth = simulate_truth(sc, seed)
    _, pipe_d = run_filter_once(sc, truth, "consensus", seed, timing=True)
    _, pipe_c = run_filter_once(sc, truth, "central", seed, timing=True)
    agent_times = [a.compute_time for a in pipe_d.agents]
    return BenchmarkResult(
        config={"n": n_total, "n_l": section_len, "n_hat": overlap,
                "N": n_sections, "k_max": k_max},
        per_agent_s=float(np.mean(agent_times)),
        per_agent_max_s=float(np.max(agent_times)),
        central_s=pipe_c.agents[0].compute_time)


# ---------------------------------------------------------------------------
# cross-covariance divergence demo
# ---------------------------------------------------------------------------

def divergence_demo(k0: int, n_total: int = 12, section_len: int = 8, overlap: int = 4,
                    gamma: float = 1.0, q_std: float = 0.05, seed: int = 0,
                    overflow: float = 1e12):
    """Two sections; section 1 unobservable until step k0, section 2 always
    congested-observable. Returns (|cov_2| at k0 for the cross-covariance
    filter, |cov_2| trajectory max for the plain consensus filter, and the
    uniform cap certified for section 2).
    """
    sc = Scenario(
        name="divergence", k_max=k0 + 1, n_cells=n_total, n_sections=2,
        section_len=section_len, overlap=overlap, q_std=q_std,
        q1=0.5 * q_std ** 2, q2=2.0 * q_std ** 2, r1=4e-4, r2=0.2,
        ic={"kind": "blocks", "segments": [[0.25, 0.15], [0.75, 0.8]]},
        bc_up={"kind": "constant", "value": 0.15},
        bc_down={"kind": "constant", "value": 0.8},
        init_estimate={"kind": "constant", "value": 0.4}, cov0=1e-3,
        filters=["consensus"], runs=1)
    sc.validate()
    layout = sc.layout()
    sensors = build_sensors(sc, layout)
    noise = sc.noise()
    fd, grid = sc.fd(), sc.grid()
    rng = np.random.default_rng(seed)
    s_trans = max(1, section_len - overlap - 1)
    fixed_modes = {1: Mode("FC2", max(2, s_trans)), 2: Mode("CC")}
    post_modes = {1: Mode("CC"), 2: Mode("CC")}
    profile = sc.initial_profile()

    def agents_for():
        out = []
        for sec in layout.sections:
            stack = build_stack(layout, sensors, sec.index, share=False, noise=noise)
            out.append(Agent(sec.index, layout, stack, fd, grid, noise,
                             rho0=np.full(sec.n, 0.4), cov0=sc.cov0 * np.eye(sec.n),
                             mode0=fixed_modes[sec.index]))
        return out

    def measurements():
        return {s.index: profile[s.cell] + rng.normal(0.0, s.std_true)
                for s in sensors.sensors}

    optimal = CrossCovarianceFilter(agents_for(), layout, gamma=gamma, overflow=overflow)
    for k in range(1, k0 + 2):
        optimal.step(measurements(), fixed_modes if k <= k0 else post_modes)
    opt_norm = float(np.linalg.norm(optimal.agents[1].cov, 2))

    plain = ConsensusPipeline(agents_for(), layout, share=False, consensus=True,
                              c_hat=sc.c_hat, backoff=sc.backoff)
    worst_plain = 0.0
    for k in range(1, k0 + 2):
        tm = fixed_modes if k <= k0 else post_modes
        plain.step(measurements(), true_modes=tm)
        worst_plain = max(worst_plain, float(np.linalg.norm(plain.agents[1].cov, 2)))

    cfg2 = bnd.BoundConfig(n=section_len, fd=fd, grid=grid, q1=sc.q1, q2=sc.q2,
                           r1=sc.r1, r2=sc.r2, c_hat=sc.c_hat)
    c1_all, _ = bnd.uniform_band(sc.cov0 * np.eye(section_len), cfg2)
    return opt_norm, worst_plain, 1.0 / c1_all


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------

def emit(record: RunRecord, outdir: str | Path,
         bound_reports: dict[int, bnd.BoundReport] | None = None) -> list[Path]:
    """Write metrics CSVs, the scenario echo, violations, bound constants,
    and (when truth is kept) the density field for external heatmaps."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    for variant, rm in record.metrics.items():
        p = outdir / f"metrics_{variant}.csv"
        p.write_text("\n".join(rm.csv_rows()) + "\n")
        written.append(p)

    p = outdir / "scenario.json"
    p.write_text(record.scenario.to_json() + "\n")
    written.append(p)

    summary = {
        "seed": record.seed,
        "ok": record.ok,
        "timings_s": record.timings,
        "violations": [dataclasses.asdict(v) for v in record.violations],
        "totals": {v: {"disagreement": rm.disagreement_total, "error": rm.error_total}
                   for v, rm in record.metrics.items()},
    }
    p = outdir / "summary.json"
    p.write_text(dumps_floats(summary) + "\n")
    written.append(p)

    if bound_reports:
        p = outdir / "bounds.json"
        p.write_text(dumps_floats({str(i): r.to_dict() for i, r in bound_reports.items()}) + "\n")
        written.append(p)

    if record.truth is not None:
        p = outdir / "density.csv"
        rows = [f"# schema=traffickf.density.v1 cells={record.scenario.n_cells}"]
        rows += [",".join(mtr.FLOAT_FMT % x for x in row)
                 for row in record.truth.sim.densities]
        p.write_text("\n".join(rows) + "\n")
        written.append(p)
    return written


# ---------------------------------------------------------------------------
# scenario presets
# ---------------------------------------------------------------------------

def preset(name: str) -> Scenario:
    """Named experiment configurations used by the test suite and CLI."""
    if name == "fig-truth":
        return Scenario(name=name, runs=1, filters=["consensus"])
    if name == "table-baseline":
        return Scenario(name=name, hs_enabled=False, ia_enabled=False,
                        perturb_low=0.10, perturb_high=0.20,
                        init_estimate={"kind": "sampled"}, cov0=0.01,
                        k_max=250, runs=20)
    if name == "table-hs":
        sc = preset("table-baseline")
        sc.name = name
        sc.hs_enabled = True
        return sc
    if name == "table-hs-ia":
        sc = preset("table-hs")
        sc.name = name
        sc.ia_enabled = True
        return sc
    if name == "nees":
        return Scenario(name=name, hs_enabled=True, ia_enabled=False,
                        perturb_low=0.0, perturb_high=0.0,
                        init_estimate={"kind": "sampled"}, cov0=0.01,
                        use_true_mode=False, k_max=200, runs=50,
                        filters=["consensus"])
    if name == "bench-100":
        return benchmark_scenario(100, 5, 28, 10)
    if name == "monitored":
        sc = Scenario(name=name, monitors=True, filters=["consensus"], k_max=200)
        return sc
    raise ValueError(f"unknown preset {name!r}")
