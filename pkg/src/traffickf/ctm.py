"""Triangular fundamental diagram and the Godunov-discretized scalar
conservation law used as the nonlinear ground truth for freeway density.

All quantities are in consistent units (normalized by default: densities in
[0, rho_m] with rho_m = 1, speeds relative to v_m = 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_CONSTRUCTION_TOL = 1e-12


@dataclass(frozen=True)
class FundamentalDiagram:
    """Triangular flux law: f(rho) = v_m*rho below rho_c, w*(rho_m - rho) above.

    The congestion wave speed and capacity are derived so the two branches
    meet at the critical density:  w = rho_c*v_m/(rho_m - rho_c),
    q_m = v_m*rho_c.
    """

    v_m: float
    rho_m: float
    rho_c: float

    def __post_init__(self):
        if not (0.0 < self.rho_c < self.rho_m):
            raise ValueError(f"need 0 < rho_c < rho_m, got rho_c={self.rho_c}, rho_m={self.rho_m}")
        if self.v_m <= 0.0:
            raise ValueError(f"need v_m > 0, got {self.v_m}")

    @property
    def w(self) -> float:
        return self.rho_c * self.v_m / (self.rho_m - self.rho_c)

    @property
    def q_m(self) -> float:
        return self.v_m * self.rho_c

    def scaled(self, v_m: float = 1.0, rho_m: float = 1.0, rho_c: float = 1.0) -> "FundamentalDiagram":
        """Return a copy with each parameter multiplied by the given factor."""
        return FundamentalDiagram(self.v_m * v_m, self.rho_m * rho_m, self.rho_c * rho_c)


@dataclass(frozen=True)
class Grid:
    """Uniform space/time discretization."""

    dx: float
    dt: float
    n_cells: int

    def __post_init__(self):
        if self.dx <= 0.0 or self.dt <= 0.0:
            raise ValueError("dx and dt must be positive")
        if self.n_cells < 2:
            raise ValueError(f"need n_cells >= 2, got {self.n_cells}")

    def lam(self) -> float:
        """Ratio dt/dx multiplying every flux difference."""
        return self.dt / self.dx


def cfl_numbers(fd: FundamentalDiagram, grid: Grid) -> tuple[float, float]:
    """(v_m*dt/dx, w*dt/dx) -- both must be <= 1 for a stable Godunov update."""
    lam = grid.lam()
    return fd.v_m * lam, fd.w * lam


def check_cfl(fd: FundamentalDiagram, grid: Grid, strict: bool = False) -> None:
    """Raise if the CFL condition fails.

    strict=True additionally rejects equality, which the switched linear
    representation needs (its transition matrices must stay invertible).
    """
    theta_v, theta_w = cfl_numbers(fd, grid)
    top = max(theta_v, theta_w)
    if top > 1.0 or (strict and top >= 1.0):
        cmp = ">=" if strict else ">"
        raise ValueError(f"CFL violated: max(v_m, w)*dt/dx = {top:.6g} {cmp} 1")


def flux(rho_up, rho_down, fd: FundamentalDiagram):
    """Godunov interface flow min{v_m*rho_up, w*(rho_m - rho_down), q_m}.

    Total on nonnegative inputs; vectorizes over numpy arrays.
    """
    demand = fd.v_m * np.asarray(rho_up, dtype=float)
    supply = fd.w * (fd.rho_m - np.asarray(rho_down, dtype=float))
    return np.minimum(np.minimum(demand, supply), fd.q_m)


def ctm_step(rho, bc_up, bc_down, fd: FundamentalDiagram, grid: Grid, noise=None):
    """One conservation update rho' = rho + dt/dx*(inflow - outflow) per cell.

    bc_up/bc_down are ghost-cell densities supplying the boundary fluxes.
    `noise` (optional, same shape as rho) is added after the update; the
    caller is responsible for any clipping of the result.

    Accepts a single profile (n,) or a batch (m, n); ghost values may be
    scalars or length-m arrays in the batched case.
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(np.isnan(rho)) or np.any(rho < 0.0):
        raise ValueError("density profile contains NaN or negative entries")
    check_cfl(fd, grid)

    batched = rho.ndim == 2
    work = rho if batched else rho[None, :]
    m = work.shape[0]
    up = np.broadcast_to(np.asarray(bc_up, dtype=float), (m,))
    down = np.broadcast_to(np.asarray(bc_down, dtype=float), (m,))

    padded = np.concatenate([up[:, None], work, down[:, None]], axis=1)
    flows = flux(padded[:, :-1], padded[:, 1:], fd)  # (m, n+1) interface flows
    out = work + grid.lam() * (flows[:, :-1] - flows[:, 1:])
    if noise is not None:
        out = out + np.asarray(noise, dtype=float)
    return out if batched else out[0]


@dataclass
class BoundaryTrace:
    """Ghost-cell densities driving the domain edges, one value per step."""

    upstream: np.ndarray
    downstream: np.ndarray

    def __post_init__(self):
        self.upstream = np.asarray(self.upstream, dtype=float)
        self.downstream = np.asarray(self.downstream, dtype=float)
        if self.upstream.shape != self.downstream.shape:
            raise ValueError("boundary traces must have equal length")

    def check_range(self, fd: FundamentalDiagram) -> None:
        for name, tr in (("upstream", self.upstream), ("downstream", self.downstream)):
            if np.any(tr < 0.0) or np.any(tr > fd.rho_m):
                raise ValueError(f"{name} boundary trace leaves [0, rho_m]")

    def __len__(self) -> int:
        return len(self.upstream)


def sinusoid_trace(k_max: int, base: float, amplitude: float, period: float, phase: float = 0.0) -> np.ndarray:
    k = np.arange(k_max, dtype=float)
    return base + amplitude * np.sin(2.0 * np.pi * k / period + phase)


@dataclass
class SimResult:
    """Ground-truth run: densities[k] is the profile at step k (k=0..k_max)."""

    densities: np.ndarray          # (k_max+1, n_cells)
    boundary: BoundaryTrace
    fd: FundamentalDiagram
    grid: Grid
    noise: np.ndarray | None = field(default=None, repr=False)

    @property
    def k_max(self) -> int:
        return self.densities.shape[0] - 1


def simulate(rho0, boundary: BoundaryTrace, fd: FundamentalDiagram, grid: Grid,
             q_std: float = 0.0, rng: np.random.Generator | None = None) -> SimResult:
    """Run the Godunov model for len(boundary) steps from profile rho0.

    Model noise (std q_std per cell per step) is added after each update and
    the ground truth is clipped back to [0, rho_m]; with q_std == 0 the run
    is exactly conservative. Deterministic for a fixed rng state.
    """
    check_cfl(fd, grid)
    rho0 = np.asarray(rho0, dtype=float)
    if rho0.shape != (grid.n_cells,):
        raise ValueError(f"initial profile must have shape ({grid.n_cells},)")
    boundary.check_range(fd)

    k_max = len(boundary)
    out = np.empty((k_max + 1, grid.n_cells))
    out[0] = rho0
    noise = None
    if q_std > 0.0:
        if rng is None:
            raise ValueError("q_std > 0 requires an rng")
        noise = rng.normal(0.0, q_std, size=(k_max, grid.n_cells))

    rho = rho0.copy()
    for k in range(k_max):
        rho = ctm_step(rho, boundary.upstream[k], boundary.downstream[k], fd, grid)
        if noise is not None:
            rho = np.clip(rho + noise[k], 0.0, fd.rho_m)
        out[k + 1] = rho
    return SimResult(densities=out, boundary=boundary, fd=fd, grid=grid, noise=noise)
