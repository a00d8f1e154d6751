"""Certified constants for the consensus filter: covariance envelopes, gain
and error bounds in unobservable stretches, contraction rates, and residence
times, plus runtime monitors checking a live run against them.

Conventions: sections of n cells with boundary sensing; noise envelopes
q1 I < Q < q2 I and r1 I < R < r2 I; T1 = max(1, n-2) is the burn-in window
after which the inverse error covariance is pinched independently of its
initial value.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .ctm import FundamentalDiagram, Grid, cfl_numbers
from .smm import Mode, boundary_output_matrix, observable_family

EIG_SLACK = 1e-9


@dataclass(frozen=True)
class BoundConfig:
    n: int
    fd: FundamentalDiagram
    grid: Grid
    q1: float
    q2: float
    r1: float
    r2: float
    c_hat: float = 0.01
    exhaustive_max_n: int = 6
    sample_count: int = 100_000

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need n >= 2")
        if not (0.0 < self.q1 < self.q2 and 0.0 < self.r1 < self.r2):
            raise ValueError("noise envelopes must satisfy 0 < q1 < q2, 0 < r1 < r2")

    @property
    def t1(self) -> int:
        return max(1, self.n - 2)

    def local_grid(self) -> Grid:
        return Grid(dx=self.grid.dx, dt=self.grid.dt, n_cells=self.n)


# ---------------------------------------------------------------------------
# steady covariance band (window extremization over observable sequences)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SteadyBand:
    """Bounds c1 I < inv(cov) < c2 I holding for every k >= t1."""

    t1: int
    a_info: float
    b_info: float
    a_ctrl: float
    b_ctrl: float
    a: float
    b: float
    c1: float
    c2: float
    exhaustive: bool
    sequences: int


def _sequences(count_matrices: int, length: int, cfg: BoundConfig,
               rng: np.random.Generator | None):
    """All index tuples of the given length, or a random sample when the
    exhaustive count is too large (result then flagged an estimate)."""
    if length == 0:
        return [()], True
    total = count_matrices ** length
    if cfg.n <= cfg.exhaustive_max_n:
        return list(itertools.product(range(count_matrices), repeat=length)), True
    rng = rng or np.random.default_rng(0)
    picks = rng.integers(0, count_matrices, size=(cfg.sample_count, length))
    return [tuple(row) for row in picks], total <= cfg.sample_count


def steady_band(cfg: BoundConfig, rng: np.random.Generator | None = None) -> SteadyBand:
    """Extremize the window information/controllability spectra over every
    observable matrix sequence (free mixing across slots)."""
    family = observable_family(cfg.n, cfg.fd, cfg.local_grid())
    inverses = [np.linalg.inv(m) for m in family]
    h_b = boundary_output_matrix(cfg.n)
    hh = h_b.T @ h_b
    t1 = cfg.t1
    eye = np.eye(cfg.n)

    seqs_info, ex1 = _sequences(len(family), t1, cfg, rng)
    a_info, b_info = np.inf, -np.inf
    for seq in seqs_info:
        acc_a = hh.copy()
        acc_b = eye.copy()
        xi = eye
        # suffix products M_iota^-1 ... M_t1^-1, iota descending
        for idx in reversed(seq):
            xi = inverses[idx] @ xi
            acc_a += xi.T @ hh @ xi
            acc_b += xi.T @ xi
        a_info = min(a_info, np.linalg.eigvalsh(acc_a)[0])
        b_info = max(b_info, np.linalg.eigvalsh(acc_b)[-1])
    a_info /= cfg.r2
    b_info /= cfg.r1

    if t1 == 1:
        a_ctrl, b_ctrl, ex2 = cfg.q1, cfg.q2, True
    else:
        seqs_ctrl, ex2 = _sequences(len(family), t1 - 1, cfg, rng)
        lo, hi = np.inf, -np.inf
        for seq in seqs_ctrl:
            acc = eye.copy()
            phi = eye
            for idx in reversed(seq):
                phi = phi @ family[idx]
                acc += phi @ phi.T
            lo = min(lo, np.linalg.eigvalsh(acc)[0])
            hi = max(hi, np.linalg.eigvalsh(acc)[-1])
        a_ctrl, b_ctrl = cfg.q1 * lo, cfg.q2 * hi

    a = min(a_info, a_ctrl)
    b = max(b_info, b_ctrl)
    return SteadyBand(t1=t1, a_info=a_info, b_info=b_info, a_ctrl=a_ctrl, b_ctrl=b_ctrl,
                      a=a, b=b, c1=a / (1.0 + a * b), c2=(1.0 + a * b) / a,
                      exhaustive=ex1 and ex2,
                      sequences=len(seqs_info))


@dataclass(frozen=True)
class AnalyticBand:
    """Closed-form envelope of the steady band: a_lower <= a, b <= b_upper."""

    theta_low: float
    theta_tilde: float
    a_lower: float
    b_upper: float
    c1_lower: float
    c2_upper: float


def analytic_band(cfg: BoundConfig) -> AnalyticBand:
    theta_v, theta_w = cfl_numbers(cfg.fd, cfg.grid)
    th_low = min(theta_v, 1.0 - theta_v, theta_w, 1.0 - theta_w)
    th_til = min(1.0 - theta_v, 1.0 - theta_w)
    n, t1 = cfg.n, cfg.t1
    root = math.sqrt(4.0 * n * (2 * t1 - 1) ** 2 * 2.0 ** (n - 2))
    geo = th_til ** (2 * n) * (1.0 - th_til ** (2 * n * (t1 - 1)))
    a_ctrl_low = cfg.q1 * (1.0 + geo / ((1.0 - th_til ** (2 * n)) * root))
    a_info_low = (th_low ** (t1 * (t1 + 1))
                  / (cfg.r2 * 2.0 * (2 * t1 + 1) * math.sqrt(4.0 * n * (t1 + 1) ** 2 * 2.0 ** (n - 2))))
    a_lower = min(a_ctrl_low, a_info_low)
    b_ctrl_up = cfg.q2 * (2 * t1 ** 2 - 1)
    b_info_up = (1.0 + t1 * (t1 + 2) * math.sqrt(4.0 * n * 2.0 ** (n - 2)) / th_til ** (2 * t1 * n)) / cfg.r1
    b_upper = max(b_ctrl_up, b_info_up)
    return AnalyticBand(theta_low=th_low, theta_tilde=th_til, a_lower=a_lower, b_upper=b_upper,
                        c1_lower=a_lower / (1.0 + a_lower * b_upper),
                        c2_upper=(1.0 + a_lower * b_upper) / a_lower)


# ---------------------------------------------------------------------------
# startup and uniform bands (functions of the initial covariance)
# ---------------------------------------------------------------------------

def startup_band(cov0: np.ndarray, cfg: BoundConfig) -> tuple[float, float]:
    """(c1_init, c2_init) pinching inv(cov) for 0 <= k < t1."""
    vals = np.linalg.eigvalsh(cov0)
    if vals[0] <= 0.0:
        raise ValueError("initial covariance must be positive definite")
    norm = float(vals[-1])
    if cfg.n >= 4:
        c1 = 1.0 / (2.0 * (2 * cfg.n - 5) * norm + (2.0 * (cfg.n - 3) ** 2 - 1.0) * cfg.q2)
    else:
        c1 = 1.0 / norm
    c2 = max(1.0 / float(vals[0]), 1.0 / cfg.q1 + 1.0 / cfg.r1)
    return c1, c2


def uniform_band(cov0: np.ndarray, cfg: BoundConfig,
                 band: SteadyBand | None = None) -> tuple[float, float]:
    """(c1_all, c2_all): the switching-independent pinch for every k >= 0."""
    band = band or steady_band(cfg)
    c1_init, c2_init = startup_band(cov0, cfg)
    return min(c1_init, band.c1), max(c2_init, band.c2)


# ---------------------------------------------------------------------------
# unobservable stretches: gain and mean-estimate envelopes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GainBound:
    a_check: float
    b_check: float
    c1_check: float
    c2_check: float
    c3_check: float
    t_bar: float
    q_bar: float
    p_bar: float
    gamma_bar: float
    kappa: float          # the actual bound on the inf-norm of the gain


def gain_bound(cov_entry_norm: float, cfg: BoundConfig) -> GainBound:
    """Uniform bound on |K|_inf while a section stays unobservable, as a
    function of the covariance norm when the stretch begins.

    The contraction factor q_bar uses the inverse of c3 = 1/c1 + 1/(q1 c1^2)
    (the Lyapunov decrement of the boundary pair is the reciprocal of that
    norm bound), which keeps 0 < q_bar < 1.
    """
    n = cfg.n
    lam = cfg.grid.dt / cfg.grid.dx
    v_m, w = cfg.fd.v_m, cfg.fd.w
    a_c = min(2.0 / cfg.r2, cfg.q1)
    b_c = max(2.0 / cfg.r1, cfg.q2)
    c1_c = a_c / (1.0 + a_c * b_c)
    c2_c = (1.0 + a_c * b_c) / a_c
    c3_c = 1.0 / c1_c + (1.0 / cfg.q1) * (1.0 / c1_c ** 2)
    t_bar = math.sqrt(2.0) * (n - 2) * math.sqrt(c2_c / c1_c)
    q_bar = math.sqrt(1.0 - 1.0 / (c3_c * c2_c))
    p_bar = 2.0 * cfg.r2 / cfg.q1 * lam * max(v_m, w) * (cfg.r2 + cfg.q2) + cfg.q2
    grow = 1.0 + lam * (w + v_m)
    g_bar = (n * math.sqrt(n) * cov_entry_norm * grow ** 2
             + n * math.sqrt(n) * cfg.q2 * grow + math.sqrt(n) * cfg.q2)
    kappa = (math.sqrt(2.0) / cfg.r1) * max(
        math.sqrt(n) * (cov_entry_norm * grow + cfg.q2),
        math.sqrt(2.0) * (cfg.r2 + cfg.q2),
        2.0 * g_bar,
        2.0 * (t_bar * q_bar * g_bar + p_bar),
        2.0 * (t_bar * p_bar * q_bar / (1.0 - q_bar) + p_bar),
    )
    return GainBound(a_check=a_c, b_check=b_c, c1_check=c1_c, c2_check=c2_c,
                     c3_check=c3_c, t_bar=t_bar, q_bar=q_bar, p_bar=p_bar,
                     gamma_bar=g_bar, kappa=kappa)


@dataclass(frozen=True)
class UnobservableEnvelope:
    c0: float
    c_growth: float       # per-cell inflation factor fed by the gain bound
    h_bound: float        # cap on |mean error| throughout the stretch


def unobservable_envelope(eps: float, cov_entry_norm: float,
                          cfg: BoundConfig) -> UnobservableEnvelope:
    """Mean-error cap sqrt(n)(rho_m + eps(c0 + (n-2)c_growth)) valid on the
    whole unobservable stretch when the entry error norm is below eps."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    gb = gain_bound(cov_entry_norm, cfg)
    c0 = max(1.0, math.sqrt(gb.c2_check / gb.c1_check) * cfg.r2 / cfg.q1)
    c_growth = c0 * cfg.grid.dx * gb.kappa / (cfg.grid.dt * min(cfg.fd.v_m, cfg.fd.w))
    h = math.sqrt(cfg.n) * (cfg.fd.rho_m + eps * (c0 + (cfg.n - 2) * c_growth))
    return UnobservableEnvelope(c0=c0, c_growth=c_growth, h_bound=h)


# ---------------------------------------------------------------------------
# observable stretches: contraction rate and residence time
# ---------------------------------------------------------------------------

def max_singular_value_sq(cfg: BoundConfig) -> float:
    family = observable_family(cfg.n, cfg.fd, cfg.local_grid())
    return max(float(np.linalg.norm(m, 2)) ** 2 for m in family)


@dataclass(frozen=True)
class ContractionRate:
    """Envelope |prod F A| <= a_hat * q_hat^steps.

    When the band [d1, d2] is extremely wide, q_hat = sqrt(1 - decrement/d2)
    is below 1 by less than an ulp and rounds to 1.0; log_q carries the exact
    (negative) logarithm so downstream geometric sums stay well defined.
    """

    decrement: float
    a_hat: float
    q_hat: float
    log_q: float
    one_minus_q: float
    sigma2_max: float


def contraction_rate(d1: float, d2: float, cfg: BoundConfig) -> ContractionRate:
    if not 0.0 < d1 <= d2:
        raise ValueError("need 0 < d1 <= d2")
    s2 = max_singular_value_sq(cfg)
    dec = 1.0 / (1.0 / d1 + (1.0 / cfg.q1) * s2 / d1 ** 2)
    a_hat = math.sqrt(d2 / d1)
    x = dec / d2
    if not (0.0 < x <= 1.0 and a_hat >= 1.0):
        raise AssertionError("contraction rate left its admissible range")
    log_q = 0.5 * math.log1p(-x)
    return ContractionRate(decrement=dec, a_hat=a_hat, q_hat=math.sqrt(1.0 - x),
                           log_q=log_q, one_minus_q=-math.expm1(log_q), sigma2_max=s2)


@dataclass(frozen=True)
class ResidencePlan:
    a_amp: float          # transient amplification across the stretch
    q_rate: float         # geometric decay base
    steady: float         # persistent consensus-driven residual
    t_min: float          # minimum observable steps to end below eps + residual
    cap: float            # error cap valid on the whole observable stretch


def residence_time(eps: float, eta_norm: float, cov_entry: np.ndarray,
                   cfg: BoundConfig, band: SteadyBand | None = None) -> ResidencePlan:
    """Steps a section must stay observable, from the entry covariance and
    entry mean-error norm, to push the mean error below eps plus the
    consensus residual."""
    c1a, c2a = uniform_band(cov_entry, cfg, band)
    rate = contraction_rate(c1a, c2a, cfg)
    a, q = rate.a_hat, rate.q_hat
    steady = cfg.c_hat * a * q / rate.one_minus_q
    if a * q * eta_norm <= steady:
        t = 0.0
    else:
        arg = eps / (a * eta_norm - cfg.c_hat * a / rate.one_minus_q)
        t = max(0.0, math.log(arg) / rate.log_q)
    cap = max(cfg.c_hat + a * q * eta_norm, cfg.c_hat + steady)
    return ResidencePlan(a_amp=a, q_rate=q, steady=steady, t_min=t, cap=cap)


# ---------------------------------------------------------------------------
# alternating schedules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Interval:
    kind: str             # "O" or "U"
    lo: int               # interval is (lo, hi]
    hi: int

    def __post_init__(self):
        if self.kind not in ("O", "U"):
            raise ValueError("interval kind must be 'O' or 'U'")
        if self.hi <= self.lo:
            raise ValueError("empty interval")

    @property
    def length(self) -> int:
        return self.hi - self.lo


@dataclass
class IntervalSchedule:
    """Alternating observable/unobservable intervals partitioning (0, k_max]."""

    intervals: list[Interval]

    def __post_init__(self):
        for a, b in zip(self.intervals, self.intervals[1:]):
            if b.lo != a.hi:
                raise ValueError("intervals must tile the run")
            if b.kind == a.kind:
                raise ValueError("intervals must alternate")

    @staticmethod
    def from_modes(modes: list[Mode]) -> "IntervalSchedule":
        kinds = ["O" if m.observable else "U" for m in modes]
        out: list[Interval] = []
        lo = 0
        for k in range(1, len(kinds) + 1):
            if k == len(kinds) or kinds[k] != kinds[lo]:
                out.append(Interval(kind=kinds[lo], lo=lo, hi=k))
                lo = k
        return IntervalSchedule(intervals=out)


def startup_error_cap(cov0: np.ndarray, cfg: BoundConfig) -> float:
    """Cap for a run that begins unobservable with a physical initial estimate."""
    env = unobservable_envelope(1.0, float(np.linalg.norm(cov0, 2)), cfg)
    n, rho_m = cfg.n, cfg.fd.rho_m
    return math.sqrt(n) * (math.sqrt(n) * rho_m * (env.c0 + (n - 2) * env.c_growth) + rho_m)


def stretch_error_cap(delta: float, cov_obs_entry: np.ndarray, cov_unobs_entry: np.ndarray,
                      cfg: BoundConfig, band: SteadyBand | None = None) -> float:
    """Cap on the mean error through an unobservable stretch entered after an
    observable stretch that satisfied its residence requirement."""
    c1a, c2a = uniform_band(cov_obs_entry, cfg, band)
    rate = contraction_rate(c1a, c2a, cfg)
    steady = cfg.c_hat * rate.a_hat * rate.q_hat / rate.one_minus_q
    env = unobservable_envelope(1.0, float(np.linalg.norm(cov_unobs_entry, 2)), cfg)
    n, rho_m = cfg.n, cfg.fd.rho_m
    return math.sqrt(n) * (rho_m + (delta + cfg.c_hat + steady)
                           * (env.c0 + (n - 2) * env.c_growth))


@dataclass
class ScheduleCheck:
    interval: Interval
    required: float | None    # residence requirement (observable intervals)
    satisfied: bool
    error_cap: float


def schedule_requirements(schedule: IntervalSchedule, snapshots: dict[int, np.ndarray],
                          delta: float, cfg: BoundConfig,
                          band: SteadyBand | None = None) -> list[ScheduleCheck]:
    """Evaluate the per-interval residence requirements and error caps.

    snapshots[k] must hold the posterior covariance at every interval
    boundary step k (including 0). Caps are those valid uniformly on each
    interval; requirements apply to observable intervals only.
    """
    band = band or steady_band(cfg)
    out: list[ScheduleCheck] = []
    n, rho_m = cfg.n, cfg.fd.rho_m
    prev_obs: Interval | None = None
    prev_unobs: Interval | None = None
    for iv in schedule.intervals:
        gamma_lo = snapshots[iv.lo]
        if iv.kind == "U":
            if prev_obs is None:
                cap = startup_error_cap(snapshots[0], cfg)
            else:
                cap = stretch_error_cap(delta, snapshots[prev_obs.lo], gamma_lo, cfg, band)
            out.append(ScheduleCheck(interval=iv, required=None, satisfied=True,
                                     error_cap=cap))
            prev_unobs = iv
        else:
            if prev_unobs is None:
                entry_err = math.sqrt(n) * rho_m
            elif prev_obs is None:
                entry_err = startup_error_cap(snapshots[0], cfg)
            else:
                entry_err = stretch_error_cap(delta, snapshots[prev_obs.lo],
                                              snapshots[prev_unobs.lo], cfg, band)
            plan = residence_time(delta, entry_err, gamma_lo, cfg, band)
            out.append(ScheduleCheck(interval=iv, required=plan.t_min,
                                     satisfied=iv.length > plan.t_min,
                                     error_cap=max(cfg.c_hat + plan.a_amp * plan.q_rate * entry_err,
                                                   cfg.c_hat + plan.steady)))
            prev_obs = iv
    return out


# ---------------------------------------------------------------------------
# full report and runtime monitors
# ---------------------------------------------------------------------------

@dataclass
class BoundReport:
    """Every certified constant for one section configuration, JSON-ready."""

    config: dict
    steady: SteadyBand
    analytic: AnalyticBand
    c1_init: float
    c2_init: float
    c1_all: float
    c2_all: float
    gain: GainBound
    envelope: UnobservableEnvelope
    rate: ContractionRate
    residence: ResidencePlan
    startup_cap: float

    def to_dict(self) -> dict:
        flat: dict[str, object] = dict(self.config)
        flat.update({
            "t1": self.steady.t1,
            "a_info": self.steady.a_info, "b_info": self.steady.b_info,
            "a_ctrl": self.steady.a_ctrl, "b_ctrl": self.steady.b_ctrl,
            "a": self.steady.a, "b": self.steady.b,
            "c1": self.steady.c1, "c2": self.steady.c2,
            "exhaustive": self.steady.exhaustive, "sequences": self.steady.sequences,
            "theta_low": self.analytic.theta_low, "theta_tilde": self.analytic.theta_tilde,
            "a_lower": self.analytic.a_lower, "b_upper": self.analytic.b_upper,
            "c1_lower": self.analytic.c1_lower, "c2_upper": self.analytic.c2_upper,
            "c1_init": self.c1_init, "c2_init": self.c2_init,
            "c1_all": self.c1_all, "c2_all": self.c2_all,
            "a_check": self.gain.a_check, "b_check": self.gain.b_check,
            "c1_check": self.gain.c1_check, "c2_check": self.gain.c2_check,
            "c3_check": self.gain.c3_check,
            "t_bar": self.gain.t_bar, "q_bar": self.gain.q_bar,
            "p_bar": self.gain.p_bar, "gamma_bar": self.gain.gamma_bar,
            "gain_cap": self.gain.kappa,
            "c0": self.envelope.c0, "c_growth": self.envelope.c_growth,
            "h_cap": self.envelope.h_bound,
            "decrement": self.rate.decrement, "a_hat": self.rate.a_hat,
            "q_hat": self.rate.q_hat, "sigma2_max": self.rate.sigma2_max,
            "a_amp": self.residence.a_amp, "q_rate": self.residence.q_rate,
            "steady_residual": self.residence.steady, "t_min": self.residence.t_min,
            "obs_cap": self.residence.cap, "startup_cap": self.startup_cap,
        })
        return flat


def bound_report(cfg: BoundConfig, cov0: np.ndarray, eps: float = 0.05,
                 eta_norm: float | None = None) -> BoundReport:
    band = steady_band(cfg)
    c1_init, c2_init = startup_band(cov0, cfg)
    c1_all, c2_all = min(c1_init, band.c1), max(c2_init, band.c2)
    norm0 = float(np.linalg.norm(cov0, 2))
    gb = gain_bound(norm0, cfg)
    env = unobservable_envelope(eps, norm0, cfg)
    rate = contraction_rate(c1_all, c2_all, cfg)
    eta0 = eta_norm if eta_norm is not None else math.sqrt(cfg.n) * cfg.fd.rho_m
    plan = residence_time(eps, eta0, cov0, cfg, band)
    return BoundReport(
        config={"n": cfg.n, "q1": cfg.q1, "q2": cfg.q2, "r1": cfg.r1, "r2": cfg.r2,
                "c_hat": cfg.c_hat, "eps": eps},
        steady=band, analytic=analytic_band(cfg), c1_init=c1_init, c2_init=c2_init,
        c1_all=c1_all, c2_all=c2_all, gain=gb, envelope=env, rate=rate,
        residence=plan, startup_cap=startup_error_cap(cov0, cfg))


@dataclass
class Violation:
    step: int
    section: int
    kind: str
    detail: str


class RuntimeMonitors:
    """Check a live run against the certified constants.

    Tracks, per section: the uniform covariance pinch while the section has
    only seen observable modes, the gain cap inside unobservable stretches,
    and the consensus-budget inequality.
    """

    def __init__(self, configs: dict[int, BoundConfig], cov0: dict[int, np.ndarray],
                 c_hat: float, slack: float = EIG_SLACK):
        self.configs = configs
        self.c_hat = c_hat
        self.slack = slack
        self.bands = {i: uniform_band(cov0[i], cfg) for i, cfg in configs.items()}
        self.always_observable = {i: True for i in configs}
        self.gain_caps: dict[int, float] = {}
        self.prev_cov = {i: np.array(cov0[i]) for i in configs}
        self.violations: list[Violation] = []

    def observe(self, k: int, agents, modes: dict[int, Mode],
                consensus_norms: dict[int, float]) -> None:
        for a in agents:
            i = a.i
            mode = modes[i]
            if mode.observable:
                self.gain_caps.pop(i, None)
            else:
                if i not in self.gain_caps:
                    # stretch begins: cap fixed by the covariance at entry,
                    # i.e. the posterior of the last observable step
                    self.gain_caps[i] = gain_bound(float(np.linalg.norm(self.prev_cov[i], 2)),
                                                   self.configs[i]).kappa
                self.always_observable[i] = False
                gain_norm = float(np.max(np.abs(a.gain).sum(axis=1))) if a.gain.size else 0.0
                if gain_norm > self.gain_caps[i] + self.slack:
                    self.violations.append(Violation(k, i, "gain_cap",
                                                     f"|K|_inf = {gain_norm:.3e} > {self.gain_caps[i]:.3e}"))
            if self.always_observable[i]:
                c1, c2 = self.bands[i]
                vals = np.linalg.eigvalsh(np.linalg.inv(a.cov))
                if vals[0] < c1 - self.slack or vals[-1] > c2 + self.slack:
                    self.violations.append(Violation(k, i, "cov_band",
                                                     f"spec(inv cov) = [{vals[0]:.3e}, {vals[-1]:.3e}] "
                                                     f"outside [{c1:.3e}, {c2:.3e}]"))
            if consensus_norms.get(i, 0.0) > self.c_hat + self.slack:
                self.violations.append(Violation(k, i, "consensus_budget",
                                                 f"consensus norm {consensus_norms[i]:.3e} > {self.c_hat}"))
            self.prev_cov[i] = a.cov

    @property
    def ok(self) -> bool:
        return not self.violations
