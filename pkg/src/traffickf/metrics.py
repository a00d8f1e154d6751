"""Evaluation quantities: overlap disagreement, estimation error, NEES
consistency, and the covariance-weighted Lyapunov value, plus the CSV
emission schema for per-step traces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2

CSV_SCHEMA = "traffickf.metrics.v1"

# greatest-precision decimal float formatting used across all emitted files
FLOAT_FMT = "%.17g"


def disagreement(agents, layout) -> float | None:
    """Average squared posterior disagreement per overlap cell:
    mean over overlaps of |u|^2 / n_overlap; None for a single section."""
    if layout.N < 2:
        return None
    total = 0.0
    for i in range(1, layout.N):
        a, b = agents[i - 1], agents[i]
        ua = (b.eta if b.eta is not None else b.rho)[b.ov_slice[a.i]] \
            - (a.eta if a.eta is not None else a.rho)[a.ov_slice[b.i]]
        total += float(ua @ ua) / len(ua)
    return total / (layout.N - 1)


def error(agents, truth: np.ndarray) -> float:
    """Average squared posterior error per cell: mean over sections of
    |rho_est - rho_true|^2 / n_i."""
    total = 0.0
    for a in agents:
        if a.eta is not None:
            e = a.eta
        else:
            e = a.rho - truth[a.section.start:a.section.stop]
        total += float(e @ e) / a.n
    return total / len(agents)


def lyapunov(agents, truth: np.ndarray | None = None) -> float:
    """Covariance-weighted squared error sum eta^T inv(cov) eta over sections."""
    total = 0.0
    for a in agents:
        if a.eta is not None:
            e = a.eta
        elif truth is not None:
            e = a.rho - truth[a.section.start:a.section.stop]
        else:
            raise ValueError("need truth for realization runs")
        total += float(e @ np.linalg.solve(a.cov, e))
    return total


# ---------------------------------------------------------------------------
# NEES
# ---------------------------------------------------------------------------

def nees_value(err: np.ndarray, cov: np.ndarray, cells: np.ndarray | None = None) -> float:
    """Normalized estimation error squared, optionally on a marginal subset
    of cells (default: the full state)."""
    if cells is not None:
        err = err[cells]
        cov = cov[np.ix_(cells, cells)]
    return float(err @ np.linalg.solve(cov, err))


def boundary_cells(n: int) -> np.ndarray:
    return np.array([0, n - 1])


def nees_region(runs: int, dof: int, confidence: float = 0.95) -> tuple[float, float]:
    """Two-sided acceptance interval for the run-averaged NEES statistic,
    from chi-square quantiles of runs*dof degrees of freedom."""
    if runs < 2:
        raise ValueError("NEES consistency needs >= 2 Monte Carlo runs")
    alpha = 1.0 - confidence
    df = runs * dof
    return (float(chi2.ppf(alpha / 2.0, df) / runs),
            float(chi2.ppf(1.0 - alpha / 2.0, df) / runs))


@dataclass
class NeesAccumulator:
    """Collects per-(run, step, section) NEES values and reports the
    run-averaged statistic against its chi-square region.

    dof_cells="boundary" evaluates the marginal of the two measured boundary
    cells (dof 2); "full" uses the whole section state.
    """

    runs: int
    sections: list[int]
    dof_cells: str = "boundary"
    values: dict[int, list[list[float]]] = field(default_factory=dict)
    excluded: int = 0

    def __post_init__(self):
        self.values = {i: [] for i in self.sections}

    def start_run(self) -> None:
        for i in self.sections:
            self.values[i].append([])

    def record(self, agents, truth: np.ndarray) -> None:
        for a in agents:
            e = a.rho - truth[a.section.start:a.section.stop]
            cells = boundary_cells(a.n) if self.dof_cells == "boundary" else None
            try:
                v = nees_value(e, a.cov, cells)
            except np.linalg.LinAlgError:
                self.excluded += 1
                v = np.nan
            self.values[a.i][-1].append(v)

    def dof(self, n: int) -> int:
        return 2 if self.dof_cells == "boundary" else n

    def statistic(self, i: int) -> np.ndarray:
        """Run-averaged NEES per step for section i."""
        arr = np.asarray(self.values[i])      # (runs, steps)
        return np.nanmean(arr, axis=0)

    def violation_fraction(self, i: int, n: int) -> float:
        lo, hi = nees_region(self.runs, self.dof(n))
        stat = self.statistic(i)
        return float(np.mean((stat < lo) | (stat > hi)))


# ---------------------------------------------------------------------------
# per-step traces
# ---------------------------------------------------------------------------

@dataclass
class StepMetrics:
    k: int
    disagreement: float | None
    error: float
    lyapunov: float
    lambda_lo: dict[int, float]
    lambda_hi: dict[int, float]
    gain_inf: dict[int, float]

    @staticmethod
    def collect(k: int, agents, layout, truth: np.ndarray | None,
                gain_inf: dict[int, float]) -> "StepMetrics":
        lam_lo, lam_hi = {}, {}
        for a in agents:
            vals = np.linalg.eigvalsh(np.linalg.inv(a.cov))
            lam_lo[a.i], lam_hi[a.i] = float(vals[0]), float(vals[-1])
        return StepMetrics(
            k=k,
            disagreement=disagreement(agents, layout),
            error=error(agents, truth if truth is not None else np.zeros(layout.n_total)),
            lyapunov=lyapunov(agents, truth),
            lambda_lo=lam_lo, lambda_hi=lam_hi, gain_inf=gain_inf)


@dataclass
class RunMetrics:
    """Aggregates over one run: sums of the per-step averages."""

    steps: list[StepMetrics] = field(default_factory=list)

    def append(self, m: StepMetrics) -> None:
        self.steps.append(m)

    @property
    def disagreement_total(self) -> float | None:
        vals = [m.disagreement for m in self.steps if m.disagreement is not None]
        return float(np.sum(vals)) if vals else None

    @property
    def error_total(self) -> float:
        return float(np.sum([m.error for m in self.steps]))

    def csv_rows(self) -> list[str]:
        sections = sorted(self.steps[0].lambda_lo) if self.steps else []
        header = ["k", "disagreement", "error", "lyapunov"]
        header += [f"lambda_lo_{i}" for i in sections]
        header += [f"lambda_hi_{i}" for i in sections]
        header += [f"gain_inf_{i}" for i in sections]
        rows = [f"# schema={CSV_SCHEMA}", ",".join(header)]
        for m in self.steps:
            vals = [str(m.k),
                    FLOAT_FMT % m.disagreement if m.disagreement is not None else "",
                    FLOAT_FMT % m.error, FLOAT_FMT % m.lyapunov]
            vals += [FLOAT_FMT % m.lambda_lo[i] for i in sections]
            vals += [FLOAT_FMT % m.lambda_hi[i] for i in sections]
            vals += [FLOAT_FMT % m.gain_inf.get(i, 0.0) for i in sections]
            rows.append(",".join(vals))
        return rows
