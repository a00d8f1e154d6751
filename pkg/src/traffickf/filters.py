"""Estimation algorithms for partitioned freeway density.

Provides the Kalman primitives, the per-section agents, and a pipeline that
runs them as: predict (parallel) -> exchange (barrier) -> correct (parallel).
Four variants share one implementation:

  * local KF         -- own sensors only, no exchange, no consensus
  * zero-gain filter -- neighbors share measurements, consensus gains zero
  * consensus filter -- adds the overlap-disagreement correction with the
                        stability-capped scaling factor
  * central KF       -- one section spanning the whole road

A cross-covariance variant (`CrossCovarianceFilter`) implements the optimal
gain recursion that couples neighboring error covariances; it exists to
demonstrate covariance divergence under non-observable neighbors and is not
used by the main pipeline.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .ctm import FundamentalDiagram, Grid
from .partition import ExchangePacket, PairCap, PartitionLayout, SensorLayout, overlap_slice
from .smm import Mode, infer_mode, mode_matrices

log = logging.getLogger(__name__)

PD_TOL = 1e-10


@dataclass(frozen=True)
class NoiseModel:
    """Process noise level and the scalar envelopes assumed by the theory."""

    q_std: float
    q1: float
    q2: float
    r1: float
    r2: float

    def __post_init__(self):
        if not (0.0 < self.q1 < self.q_std ** 2 < self.q2):
            raise ValueError("need 0 < q1 < q_std^2 < q2")
        if not (0.0 < self.r1 < self.r2):
            raise ValueError("need 0 < r1 < r2")

    def check_sensor_std(self, std: float) -> None:
        if not (self.r1 < std ** 2 < self.r2):
            raise ValueError(f"sensor variance {std ** 2:.3g} outside (r1, r2) = "
                             f"({self.r1:.3g}, {self.r2:.3g})")


def kf_predict(rho: np.ndarray, cov: np.ndarray, a: np.ndarray, q: np.ndarray,
               affine: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Time update: rho' = A rho (+ affine), cov' = A cov A^T + Q."""
    rho_p = a @ rho
    if affine is not None:
        rho_p = rho_p + affine
    return rho_p, a @ cov @ a.T + q


def kf_correct(rho: np.ndarray, cov: np.ndarray, z: np.ndarray, h: np.ndarray,
               r: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Measurement update; returns (posterior state, posterior cov, gain).

    Empty z is a no-op. The posterior covariance is symmetrized.
    """
    if z.size == 0:
        return rho.copy(), cov.copy(), np.zeros((len(rho), 0))
    ch = cov @ h.T
    innov_cov = h @ ch + r
    gain = np.linalg.solve(innov_cov, ch.T).T
    rho_c = rho + gain @ (z - h @ rho)
    cov_c = cov - gain @ ch.T
    return rho_c, 0.5 * (cov_c + cov_c.T), gain


def posterior_transition(cov_post: np.ndarray, cov_prior: np.ndarray) -> np.ndarray:
    """F = cov_post @ cov_prior^-1, the I - K H factor of the error recursion."""
    return np.linalg.solve(cov_prior.T, cov_post.T).T


# ---------------------------------------------------------------------------
# agents
# ---------------------------------------------------------------------------

@dataclass
class MeasurementStack:
    """Fixed per-agent stacked output model (rows ordered by source section)."""

    h: np.ndarray
    r: np.ndarray                           # diagonal covariance matrix
    sensor_indices: list[int]
    rows_by_source: dict[int, np.ndarray]   # source section -> row positions

    @property
    def s_matrix(self) -> np.ndarray:
        if self.h.shape[0] == 0:
            return np.zeros((self.h.shape[1], self.h.shape[1]))
        return self.h.T @ np.linalg.solve(self.r, self.h)


def build_stack(layout: PartitionLayout, sensors: SensorLayout, i: int,
                share: bool, noise: NoiseModel) -> MeasurementStack:
    """Output matrix/covariance agent i models for its own (and, when sharing,
    forwarded) sensors, in ascending source-section order."""
    sec = layout.section(i)
    sources = [i] if not share else sorted(set(layout.neighbors(i)) | {i})
    rows: list[np.ndarray] = []
    variances: list[float] = []
    indices: list[int] = []
    rows_by_source: dict[int, np.ndarray] = {}
    pos = 0
    for j in sources:
        start = pos
        for s in sensors.sensors:
            if s.owner != j or not (sec.start <= s.cell < sec.stop):
                continue
            row = np.zeros(sec.n)
            row[s.cell - sec.start] = 1.0
            std = sensors.std_for(i, s)
            noise.check_sensor_std(std)
            rows.append(row)
            variances.append(std ** 2)
            indices.append(s.index)
            pos += 1
        rows_by_source[j] = np.arange(start, pos)
    h = np.vstack(rows) if rows else np.zeros((0, sec.n))
    return MeasurementStack(h=h, r=np.diag(variances) if variances else np.zeros((0, 0)),
                            sensor_indices=indices, rows_by_source=rows_by_source)


class Agent:
    """One section's estimator: state, covariance, mode, and consensus context."""

    def __init__(self, i: int, layout: PartitionLayout, stack: MeasurementStack,
                 fd: FundamentalDiagram, grid: Grid, noise: NoiseModel,
                 rho0: np.ndarray, cov0: np.ndarray, mode0: Mode,
                 track_stability: bool = True):
        sec = layout.section(i)
        self.i = i
        self.n = sec.n
        self.section = sec
        self.neighbors = layout.neighbors(i)
        self.fd = fd
        self.grid = Grid(dx=grid.dx, dt=grid.dt, n_cells=sec.n)
        self.noise = noise
        self.stack = stack
        self.q = noise.q_std ** 2 * np.eye(sec.n)
        self.s_full = stack.s_matrix
        self.track_stability = track_stability and bool(self.neighbors)

        self.rho = np.array(rho0, dtype=float)
        self.cov = np.array(cov0, dtype=float)
        if np.linalg.eigvalsh(self.cov).min() <= PD_TOL:
            raise ValueError(f"agent {i}: initial covariance must be positive definite")
        self.mode = mode0
        self.rho_prior = self.rho.copy()
        self.cov_prior = self.cov.copy()
        self.gain = np.zeros((sec.n, 0))
        self.f_mat = np.eye(sec.n)
        self.lambda_min: float = np.inf
        self.gamma_star: float = np.inf
        self.consensus_gains: dict[int, np.ndarray] = {}
        self.disagreements: dict[int, np.ndarray] = {}
        self.compute_time = 0.0
        self._a = np.eye(sec.n)
        self._g: np.ndarray | None = None

        # overlap bookkeeping
        self.ov_slice = {j: overlap_slice(layout, i, j) for j in self.neighbors}
        ov_idx = (np.concatenate([np.arange(sec.n)[self.ov_slice[j]] for j in self.neighbors])
                  if self.neighbors else np.empty(0, dtype=int))
        self.ov_idx = ov_idx.astype(int)
        self._b_sqrt = self._edge_metric_sqrt() if self.neighbors else None

        # only the boundary sensors the agent owns drive mode inference
        self._own_boundary_rows: dict[int, int] = {}
        for p in stack.rows_by_source.get(i, []):
            cell = int(np.argmax(stack.h[p]))
            if cell in (0, sec.n - 1):
                self._own_boundary_rows[cell] = int(p)

        # mean-error propagation channel (None outside mean-mode runs)
        self.eta: np.ndarray | None = None
        self.eta_prior: np.ndarray | None = None

    def _edge_metric_sqrt(self) -> np.ndarray:
        """Square root of L~ L~^T, the constant metric of the stacked-disagreement
        map; equals sqrt(2) I when the two overlap regions are disjoint."""
        blocks = []
        for j in self.neighbors:
            row = []
            for l in self.neighbors:
                pj = np.eye(self.n)[self.ov_slice[j], :]
                pl = np.eye(self.n)[self.ov_slice[l], :]
                cross = pj @ pl.T
                if j == l:
                    cross = cross + np.eye(cross.shape[0])
                row.append(cross)
            blocks.append(row)
        b = np.block(blocks)
        vals, vecs = np.linalg.eigh(b)
        return (vecs * np.sqrt(np.maximum(vals, 0.0))) @ vecs.T

    # -- pipeline stages ----------------------------------------------------

    def matrices(self):
        return mode_matrices(self.mode, self.n, self.fd, self.grid)

    def predict(self) -> None:
        mats = self.matrices()
        self._a = mats.A
        if self.eta is not None:
            self.eta_prior = mats.A @ self.eta
        self.rho_prior, self.cov_prior = kf_predict(self.rho, self.cov, mats.A, self.q,
                                                    mats.affine)
        if self.track_stability:
            self._stability_summary()

    def _stability_summary(self) -> None:
        """lambda_min of Lambda = (A cov A^T)^-1 - G^-1 for the step just taken,
        where G = cov_prior + cov_prior S cov_prior.

        Evaluated through the exact identity Lambda^-1 = P + P W^-1 P with
        P = A cov A^T and W = G - P: this never inverts P, whose tiny singular
        values (det A = prod of 1-theta terms) would otherwise wreck the
        difference of inverses. Forced to 0 (consensus off) on numerical
        failure.
        """
        cp = self.cov_prior
        w = self.q + cp @ self.s_full @ cp
        p = cp - self.q
        lam_inv = p + p @ np.linalg.solve(w, p)
        top = float(np.linalg.eigvalsh(0.5 * (lam_inv + lam_inv.T)).max())
        self.lambda_min = 1.0 / top if top > PD_TOL else 0.0
        if self.lambda_min == 0.0:
            log.warning("agent %d: stability summary degenerate; consensus "
                        "disabled this step", self.i)
        self._g = p + w

    def own_measurements(self, z_values: dict[int, float]) -> np.ndarray:
        own = self.stack.rows_by_source.get(self.i, np.empty(0, int))
        return np.array([z_values[self.stack.sensor_indices[p]] for p in own], dtype=float)

    def packet_for(self, j: int, z_values: dict[int, float]) -> ExchangePacket:
        own = self.stack.rows_by_source.get(self.i, np.empty(0, int))
        indices = [self.stack.sensor_indices[p] for p in own]
        mine = self.rho_prior if self.eta is None else self.eta_prior
        return ExchangePacket(
            sender=self.i,
            z=np.array([z_values[s] for s in indices], dtype=float),
            sensor_indices=indices,
            prior_overlap=mine[self.ov_slice[j]].copy(),
            lambda_min=self.lambda_min,
            mode_observable=self.mode.observable,
        )

    def compute_disagreements(self, delivered: dict[int, ExchangePacket]) -> None:
        """u^j = (neighbor's prior on the shared cells) - (own prior there)."""
        self.disagreements = {}
        mine = self.rho_prior if self.eta is None else self.eta_prior
        for j, pkt in delivered.items():
            self.disagreements[j] = pkt.prior_overlap - mine[self.ov_slice[j]]

    def gamma_hat(self, j: int, c_hat: float) -> float:
        """Magnitude cap c_hat/(|neighbors| * |cov_prior I^T u|); inf when u = 0."""
        u = self.disagreements.get(j)
        if u is None:
            return np.inf
        pull = self.cov_prior[:, self.ov_slice[j]] @ u
        norm = float(np.linalg.norm(pull))
        if norm == 0.0:
            return np.inf
        return c_hat / (len(self.neighbors) * norm)

    def compute_gamma_star(self, neighbor_lambda: dict[int, float]) -> float:
        """Stability cap sqrt(lambda_min(scaled stability summaries) /
        lambda_max of the overlap-restricted G sandwich)."""
        if not self.neighbors or self._g is None:
            self.gamma_star = np.inf
            return self.gamma_star
        mu = 1.0 / (len(self.neighbors) + 1)
        lams = [self.lambda_min] + [neighbor_lambda[j] for j in neighbor_lambda]
        lam_min = mu * min(lams)
        if lam_min <= 0.0:
            self.gamma_star = 0.0
            return 0.0
        g_ov = self._g[np.ix_(self.ov_idx, self.ov_idx)]
        m = self._b_sqrt @ g_ov @ self._b_sqrt
        denom = float(np.linalg.eigvalsh(m).max())
        self.gamma_star = float(np.sqrt(lam_min / denom)) if denom > 0.0 else np.inf
        return self.gamma_star

    def correct(self, delivered: dict[int, ExchangePacket], z_values: dict[int, float],
                edge_gamma: dict[int, float], consensus_on: bool) -> None:
        # stack own rows plus the rows of neighbors whose packets arrived
        z_lookup = dict(zip((self.stack.sensor_indices[p]
                             for p in self.stack.rows_by_source.get(self.i, [])),
                            self.own_measurements(z_values)))
        for pkt in delivered.values():
            z_lookup.update(zip(pkt.sensor_indices, pkt.z))
        keep: list[int] = list(self.stack.rows_by_source.get(self.i, []))
        for j in self.neighbors:
            if j in delivered and j in self.stack.rows_by_source:
                keep.extend(self.stack.rows_by_source[j])
        keep = sorted(keep)
        h = self.stack.h[keep]
        r = self.stack.r[np.ix_(keep, keep)]
        z = np.array([z_lookup[self.stack.sensor_indices[p]] for p in keep], dtype=float)

        consensus = np.zeros(self.n)
        self.consensus_gains = {}
        if consensus_on and self.mode.observable:
            for j, pkt in delivered.items():
                gamma = edge_gamma.get(j, 0.0)
                if gamma <= 0.0 or not pkt.mode_observable:
                    continue
                c = gamma * self.cov_prior[:, self.ov_slice[j]]
                self.consensus_gains[j] = c
                consensus = consensus + c @ self.disagreements[j]

        if self.eta is not None:
            _, cov_c, gain = kf_correct(np.zeros(self.n), self.cov_prior,
                                        np.zeros(len(keep)), h, r)
            self.f_mat = np.eye(self.n) - gain @ h
            self.eta = self.f_mat @ self.eta_prior + consensus
            self.gain = gain
            self.cov = cov_c
            self.rho = self.rho_prior
            return

        rho_c, cov_c, gain = kf_correct(self.rho_prior, self.cov_prior, z, h, r)
        self.rho = rho_c + consensus
        self.cov = cov_c
        self.gain = gain
        self.f_mat = np.eye(self.n) - gain @ h

    def infer_next_mode(self, z_values: dict[int, float], true_mode: Mode | None) -> Mode:
        if true_mode is not None:
            self.mode = true_mode
            return true_mode
        try:
            up_row = self._own_boundary_rows[0]
            down_row = self._own_boundary_rows[self.n - 1]
        except KeyError:
            raise RuntimeError(f"agent {self.i}: boundary cells must carry own sensors")
        z_up = z_values[self.stack.sensor_indices[up_row]]
        z_down = z_values[self.stack.sensor_indices[down_row]]
        self.mode = infer_mode(z_up, z_down, self.fd, self.rho_prior, self.mode)
        return self.mode


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

@dataclass
class StepDiagnostics:
    gamma: dict[tuple[int, int], float] = field(default_factory=dict)
    consensus_norm: dict[int, float] = field(default_factory=dict)
    gain_inf_norm: dict[int, float] = field(default_factory=dict)
    modes: dict[int, Mode] = field(default_factory=dict)
    dropped: set[tuple[int, int]] = field(default_factory=set)


class ConsensusPipeline:
    """Barrier-synchronized multi-agent filter over one PartitionLayout.

    share=False, consensus=False  -> bank of purely local KFs
    share=True,  consensus=False  -> measurement sharing, zero consensus gain
    share=True,  consensus=True   -> full consensus filter
    """

    def __init__(self, agents: list[Agent], layout: PartitionLayout, *, share: bool = True,
                 consensus: bool = True, c_hat: float = 0.01, backoff: float = 0.99):
        self.agents = agents
        self.layout = layout
        self.share = share
        self.consensus = consensus
        self.c_hat = c_hat
        self.backoff = backoff
        for a in agents:
            a.track_stability = a.track_stability and consensus

    def by_index(self, i: int) -> Agent:
        return self.agents[i - 1]

    def step(self, z_values: dict[int, float], true_modes: dict[int, Mode] | None = None,
             dropped: set[tuple[int, int]] | None = None, timing: bool = False) -> StepDiagnostics:
        """Advance every agent one step; z_values maps sensor index -> reading."""
        diag = StepDiagnostics(dropped=dropped or set())
        spent: dict[int, float] = {a.i: 0.0 for a in self.agents}

        def timed(agent: Agent, fn, *args):
            if not timing:
                return fn(*args)
            t0 = time.perf_counter()
            out = fn(*args)
            spent[agent.i] += time.perf_counter() - t0
            return out

        for a in self.agents:
            timed(a, a.predict)
            timed(a, a.infer_next_mode, z_values,
                  None if true_modes is None else true_modes[a.i])
            diag.modes[a.i] = a.mode

        # exchange phase 1: overlap priors, measurements, stability summaries
        delivered: dict[int, dict[int, ExchangePacket]] = {a.i: {} for a in self.agents}
        if self.share:
            for a in self.agents:
                for j in a.neighbors:
                    if dropped and (a.i, j) in dropped:
                        log.info("link %d->%d dropped; receiver falls back to "
                                 "local-only correction for this step", a.i, j)
                        continue
                    delivered[j][a.i] = timed(a, a.packet_for, j, z_values)

        for a in self.agents:
            timed(a, a.compute_disagreements, delivered[a.i])

        # exchange phase 2: per-edge admissible scaling
        edge_gamma: dict[int, dict[int, float]] = {a.i: {} for a in self.agents}
        if self.consensus:
            for a in self.agents:
                timed(a, a.compute_gamma_star,
                      {j: pkt.lambda_min for j, pkt in delivered[a.i].items()})
            caps: dict[int, dict[int, float]] = {a.i: {} for a in self.agents}
            for a in self.agents:
                for j in a.neighbors:
                    if j in delivered[a.i]:
                        caps[j][a.i] = min(a.gamma_star, a.gamma_hat(j, self.c_hat))
            for a in self.agents:
                for j in a.neighbors:
                    if j in caps[a.i] and j in delivered[a.i]:
                        own = min(a.gamma_star, a.gamma_hat(j, self.c_hat))
                        gamma = self.backoff * min(own, caps[a.i][j])
                        edge_gamma[a.i][j] = gamma if np.isfinite(gamma) else 0.0
                        diag.gamma[(min(a.i, j), max(a.i, j))] = edge_gamma[a.i][j]

        for a in self.agents:
            timed(a, a.correct, delivered[a.i], z_values, edge_gamma[a.i], self.consensus)
            if timing:
                a.compute_time += spent[a.i]
            pulls = [a.consensus_gains[j] @ a.disagreements[j] for j in a.consensus_gains]
            diag.consensus_norm[a.i] = (float(np.linalg.norm(np.sum(pulls, axis=0)))
                                        if pulls else 0.0)
            diag.gain_inf_norm[a.i] = (float(np.max(np.abs(a.gain).sum(axis=1)))
                                       if a.gain.size else 0.0)
        return diag


def enable_mean_error_mode(agents: list[Agent], eta0: dict[int, np.ndarray]) -> None:
    """Switch agents to propagating the mean estimation error directly (the
    covariance recursions are unchanged; measurements become irrelevant)."""
    for a in agents:
        a.eta = np.array(eta0[a.i], dtype=float)
        a.eta_prior = a.eta.copy()


# ---------------------------------------------------------------------------
# cross-covariance (optimal-gain) variant
# ---------------------------------------------------------------------------

class CrossCovarianceFilter:
    """Consensus filter with the optimal gain and the full pairwise covariance
    recursion, including the quadratic consensus-noise term.

    Cross process/measurement noise is taken as zero (agents fuse disjoint
    sensor sets). The divergence guard raises RuntimeError when any section's
    covariance norm exceeds `overflow`, reporting the step index.
    """

    def __init__(self, agents: list[Agent], layout: PartitionLayout, gamma: float,
                 overflow: float = 1e12):
        self.agents = agents
        self.layout = layout
        self.gamma = gamma
        self.overflow = overflow
        self.cross: dict[tuple[int, int], np.ndarray] = {}
        self.cross_prior: dict[tuple[int, int], np.ndarray] = {}
        for a in agents:
            for b in agents:
                if a.i != b.i:
                    self.cross[(a.i, b.i)] = np.zeros((a.n, b.n))
        self.k = 0

    def _sl(self, i: int, j: int) -> slice:
        return overlap_slice(self.layout, i, j)

    def _prior(self, i: int, j: int) -> np.ndarray:
        if i == j:
            return self.agents[i - 1].cov_prior
        return self.cross_prior[(i, j)]

    def step(self, z_values: dict[int, float], modes: dict[int, Mode]) -> None:
        ags = {a.i: a for a in self.agents}
        for a in self.agents:
            a.mode = modes[a.i]
            a.predict()
        self.cross_prior = {(i, j): ags[i]._a @ g @ ags[j]._a.T
                            for (i, j), g in self.cross.items()}

        # consensus active only on edges with both endpoints observable
        cons: dict[int, dict[int, np.ndarray]] = {a.i: {} for a in self.agents}
        for a in self.agents:
            for j in a.neighbors:
                if a.mode.observable and modes[j].observable:
                    cons[a.i][j] = self.gamma * a.cov_prior[:, self._sl(a.i, j)]

        gains, fmats = {}, {}
        for a in self.agents:
            h, r = a.stack.h, a.stack.r
            adj = np.zeros((a.n, a.n))
            for p, c in cons[a.i].items():
                adj += c @ (self._prior(p, a.i)[self._sl(p, a.i), :]
                            - a.cov_prior[self._sl(a.i, p), :])
            innov = h @ a.cov_prior @ h.T + r
            gains[a.i] = np.linalg.solve(innov, h @ (a.cov_prior + adj).T).T
            fmats[a.i] = np.eye(a.n) - gains[a.i] @ h

        for a in self.agents:
            z = np.array([z_values[s] for s in a.stack.sensor_indices], dtype=float)
            pull = np.zeros(a.n)
            for p, c in cons[a.i].items():
                u = ags[p].rho_prior[self._sl(p, a.i)] - a.rho_prior[self._sl(a.i, p)]
                pull += c @ u
            a.rho = a.rho_prior + gains[a.i] @ (z - a.stack.h @ a.rho_prior) + pull
            a.gain = gains[a.i]

        new_cross: dict[tuple[int, int], np.ndarray] = {}
        for i in ags:
            for j in ags:
                out = fmats[i] @ self._prior(i, j) @ fmats[j].T
                if i == j:  # cross measurement noise is zero for disjoint sensor sets
                    out = out + gains[i] @ ags[i].stack.r @ gains[i].T
                for q, cq in cons[j].items():
                    out += fmats[i] @ (self._prior(i, q)[:, self._sl(q, j)]
                                       - self._prior(i, j)[:, self._sl(j, q)]) @ cq.T
                for p, cp in cons[i].items():
                    out += cp @ (self._prior(p, j)[self._sl(p, i), :]
                                 - self._prior(i, j)[self._sl(i, p), :]) @ fmats[j].T
                for p, cp in cons[i].items():
                    for q, cq in cons[j].items():
                        omega = (self._prior(p, q)[self._sl(p, i), self._sl(q, j)]
                                 - self._prior(p, j)[self._sl(p, i), self._sl(j, q)]
                                 - self._prior(i, q)[self._sl(i, p), self._sl(q, j)]
                                 + self._prior(i, j)[self._sl(i, p), self._sl(j, q)])
                        out += cp @ omega @ cq.T
                if i == j:
                    ags[i].cov = 0.5 * (out + out.T)
                else:
                    new_cross[(i, j)] = out
        self.cross = new_cross
        self.k += 1
        worst = max(float(np.linalg.norm(a.cov, 2)) for a in self.agents)
        if worst > self.overflow:
            raise RuntimeError(f"covariance overflow at step {self.k}: |cov| = {worst:.3e}")
