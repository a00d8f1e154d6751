"""Switched linear representation of a freeway section.

A section of n cells with at most one freeflow/congestion transition evolves
as rho' = A rho + B_rho*1*rho_m + B_q*1*q_m, where (A, B_rho, B_q) depend on
the mode (FF, CC, CF, FC1, FC2) and, when a transition exists, on its cell
index s (transition between cells s and s+1, 1-based). Matches the Godunov
update of :mod:`traffickf.ctm` exactly on mode-consistent states.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .ctm import FundamentalDiagram, Grid, check_cfl

OBSERVABLE_TAGS = ("FF", "CC", "CF")
UNOBSERVABLE_TAGS = ("FC1", "FC2")


class ModeTag(str, Enum):
    FF = "FF"
    CC = "CC"
    CF = "CF"
    FC1 = "FC1"
    FC2 = "FC2"


@dataclass(frozen=True)
class Mode:
    """Mode tag plus transition index s in {1..n-1} (None for FF/CC)."""

    tag: ModeTag
    s: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "tag", ModeTag(self.tag))
        if self.tag in (ModeTag.FF, ModeTag.CC):
            if self.s is not None:
                raise ValueError(f"{self.tag.value} carries no transition index")
        elif self.s is None:
            raise ValueError(f"{self.tag.value} requires a transition index s")

    @property
    def observable(self) -> bool:
        return self.tag.value in OBSERVABLE_TAGS

    def key(self) -> tuple:
        return (self.tag.value, self.s)


def classify_observability(mode: Mode) -> str:
    """FF/CC/CF -> 'observable'; FC1/FC2 -> 'unobservable'."""
    return "observable" if mode.observable else "unobservable"


# ---------------------------------------------------------------------------
# matrix builders
# ---------------------------------------------------------------------------

def build_theta(p: int, fd: FundamentalDiagram, grid: Grid) -> np.ndarray:
    """Lower-bidiagonal freeflow block: 1-theta_v on the diagonal, theta_v below."""
    if p < 1:
        raise ValueError("build_theta requires p >= 1")
    check_cfl(fd, grid)
    theta = fd.v_m * grid.lam()
    m = (1.0 - theta) * np.eye(p)
    idx = np.arange(p - 1)
    m[idx + 1, idx] = theta
    return m


def build_delta(p: int, fd: FundamentalDiagram, grid: Grid) -> np.ndarray:
    """Upper-bidiagonal congestion block: 1-theta_w on the diagonal, theta_w above."""
    if p < 1:
        raise ValueError("build_delta requires p >= 1")
    check_cfl(fd, grid)
    theta = fd.w * grid.lam()
    m = (1.0 - theta) * np.eye(p)
    idx = np.arange(p - 1)
    m[idx, idx + 1] = theta
    return m


def build_theta_hat(p: int, fd: FundamentalDiagram, grid: Grid) -> np.ndarray:
    """(p+1)x(p+1) freeflow block with a frozen upstream cell; scalar 1 at p=0."""
    if p == 0:
        return np.array([[1.0]])
    m = np.zeros((p + 1, p + 1))
    m[0, 0] = 1.0
    m[1, 0] = fd.v_m * grid.lam()
    m[1:, 1:] = build_theta(p, fd, grid)
    return m


def build_delta_hat(p: int, fd: FundamentalDiagram, grid: Grid) -> np.ndarray:
    """(p+1)x(p+1) congestion block with a frozen downstream cell; 1 at p=0."""
    if p == 0:
        return np.array([[1.0]])
    m = np.zeros((p + 1, p + 1))
    m[:p, :p] = build_delta(p, fd, grid)
    m[p - 1, p] = fd.w * grid.lam()
    m[p, p] = 1.0
    return m


@dataclass(frozen=True)
class SmmMatrices:
    """State transition A plus the affine inputs multiplying 1*rho_m and 1*q_m."""

    A: np.ndarray
    B_rho: np.ndarray
    B_q: np.ndarray

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def affine(self) -> np.ndarray:
        """Cached b = B_rho@1*rho_m + B_q@1*q_m is attached by the builder."""
        return self._affine  # type: ignore[attr-defined]


def _attach_affine(mats: SmmMatrices, fd: FundamentalDiagram) -> SmmMatrices:
    ones = np.ones(mats.n)
    b = mats.B_rho @ ones * fd.rho_m + mats.B_q @ ones * fd.q_m
    object.__setattr__(mats, "_affine", b)
    for arr in (mats.A, mats.B_rho, mats.B_q, b):
        arr.setflags(write=False)
    return mats


def build_mode_matrices(mode: Mode, n: int, fd: FundamentalDiagram, grid: Grid) -> SmmMatrices:
    """Assemble (A, B_rho, B_q) for one mode of an n-cell section.

    Raises ValueError for an illegal (mode, s) combination, naming the legal
    range. FC1 admits s in {1..n-2} plus the s = n-1 degenerate form where the
    shock is exiting downstream; FC2 mirrors this with s = 1.
    """
    if n < 2:
        raise ValueError("sections need n >= 2")
    check_cfl(fd, grid, strict=True)
    lam = grid.lam()
    theta_v = fd.v_m * lam
    theta_w = fd.w * lam
    b_rho = np.zeros((n, n))
    b_q = np.zeros((n, n))
    tag, s = mode.tag, mode.s

    if tag is ModeTag.FF:
        a = build_theta_hat(n - 1, fd, grid)
    elif tag is ModeTag.CC:
        a = build_delta_hat(n - 1, fd, grid)
    elif tag is ModeTag.CF:
        if not 1 <= s <= n - 1:
            raise ValueError(f"CF requires s in {{1..{n - 1}}}, got s={s}")
        a = np.zeros((n, n))
        a[:s, :s] = build_delta(s, fd, grid)
        a[s:, s:] = build_theta(n - s, fd, grid)
        b_rho[s - 1, s - 1] = theta_w
        b_q[s - 1, s] = -lam
        b_q[s, s] = lam
    elif tag in (ModeTag.FC1, ModeTag.FC2):
        if not 1 <= s <= n - 1:
            raise ValueError(f"{tag.value} requires s in {{1..{n - 1}}}, got s={s}")
        if tag is ModeTag.FC1 and s == n - 1:
            a = np.zeros((n, n))
            a[: n - 1, : n - 1] = build_theta_hat(n - 2, fd, grid)
            a[n - 1, n - 1] = 1.0
        elif tag is ModeTag.FC2 and s == 1:
            a = np.zeros((n, n))
            a[0, 0] = 1.0
            a[1:, 1:] = build_delta_hat(n - 2, fd, grid)
        else:
            # generic form: s_t cells of freeflow, one coupling row, s_b of congestion
            s_t = s if tag is ModeTag.FC1 else s - 1
            s_b = n - s - 1 if tag is ModeTag.FC1 else n - s
            a = np.zeros((n, n))
            a[:s_t, :s_t] = build_theta_hat(s_t - 1, fd, grid)
            a[s_t, s_t - 1] = theta_v
            a[s_t, s_t] = 1.0
            a[s_t, s_t + 1] = theta_w
            a[s_t + 1:, s_t + 1:] = build_delta_hat(s_b - 1, fd, grid)
            b_rho[s_t, s_t + 1] = -theta_w
    else:  # pragma: no cover
        raise ValueError(f"unknown mode tag {tag!r}")

    return _attach_affine(SmmMatrices(A=a, B_rho=b_rho, B_q=b_q), fd)


@lru_cache(maxsize=4096)
def _cached_matrices(key: tuple, n: int, fd_key: tuple, grid_key: tuple) -> SmmMatrices:
    fd = FundamentalDiagram(*fd_key)
    grid = Grid(*grid_key)
    return build_mode_matrices(Mode(ModeTag(key[0]), key[1]), n, fd, grid)


def mode_matrices(mode: Mode, n: int, fd: FundamentalDiagram, grid: Grid) -> SmmMatrices:
    """Cached variant of build_mode_matrices (returned arrays are read-only)."""
    return _cached_matrices(mode.key(), n, (fd.v_m, fd.rho_m, fd.rho_c),
                            (grid.dx, grid.dt, grid.n_cells))


def smm_step(rho: np.ndarray, mats: SmmMatrices) -> np.ndarray:
    """rho' = A rho + affine terms; accepts (n,) or a batch (m, n)."""
    rho = np.asarray(rho, dtype=float)
    return rho @ mats.A.T + mats.affine


def legal_modes(n: int, observable_only: bool = False) -> list[Mode]:
    """Every legal mode of an n-cell section (FF, CC, CF^s, FC1^s, FC2^s)."""
    modes = [Mode(ModeTag.FF), Mode(ModeTag.CC)]
    modes += [Mode(ModeTag.CF, s) for s in range(1, n)]
    if not observable_only:
        modes += [Mode(ModeTag.FC1, s) for s in range(1, n)]
        modes += [Mode(ModeTag.FC2, s) for s in range(1, n)]
    return modes


def observable_family(n: int, fd: FundamentalDiagram, grid: Grid) -> list[np.ndarray]:
    """The n+1 state transition matrices of the observable modes."""
    return [mode_matrices(m, n, fd, grid).A for m in legal_modes(n, observable_only=True)]


# ---------------------------------------------------------------------------
# mode classification and inference
# ---------------------------------------------------------------------------

def _congested(value: float, fd: FundamentalDiagram) -> bool:
    # strict threshold: exactly critical counts as freeflow
    return value > fd.rho_c


def _fc_direction(rho_s: float, rho_s1: float, fd: FundamentalDiagram) -> ModeTag:
    """Shock direction from interface demand/supply (Rankine-Hugoniot sign).

    Non-negative shock speed, i.e. downstream supply >= upstream demand,
    selects FC1 (demand-limited interface); otherwise FC2.
    """
    demand = fd.v_m * rho_s
    supply = fd.w * (fd.rho_m - rho_s1)
    return ModeTag.FC1 if supply >= demand else ModeTag.FC2


def _leading_run(flags: np.ndarray) -> int:
    """Length of the True prefix."""
    idx = np.flatnonzero(~flags)
    return len(flags) if len(idx) == 0 else int(idx[0])


def infer_mode(z_up: float, z_down: float, fd: FundamentalDiagram,
               prior: np.ndarray, prev_mode: Mode | None = None) -> Mode:
    """Estimate the active mode from boundary measurements and a prior profile.

    Boundary readings fix the tag; the transition index comes from the prior
    estimate (last freeflow cell for FC, midpoint of the congested->freeflow
    changeover for CF). prev_mode supplies s when the prior carries no usable
    transition information.
    """
    prior = np.asarray(prior, dtype=float)
    n = len(prior)
    up_c = _congested(z_up, fd)
    down_c = _congested(z_down, fd)
    if not up_c and not down_c:
        return Mode(ModeTag.FF)
    if up_c and down_c:
        return Mode(ModeTag.CC)
    cong = prior > fd.rho_c
    if up_c:  # upstream congested, downstream free: expansion fan
        head = _leading_run(cong)            # congested prefix
        tail = _leading_run(~cong[::-1])     # freeflow suffix
        if head == 0 and tail == 0 and prev_mode is not None and prev_mode.s is not None:
            s = prev_mode.s
        else:
            s = int(round(0.5 * (head + (n - tail))))
        return Mode(ModeTag.CF, min(max(s, 1), n - 1))
    # upstream free, downstream congested: shock
    free = _leading_run(~cong)
    if free in (0, n) and prev_mode is not None and prev_mode.s is not None:
        s = prev_mode.s
    else:
        s = min(max(free, 1), n - 1)
    return Mode(_fc_direction(prior[s - 1], prior[s], fd), s)


def true_mode(profile: np.ndarray, fd: FundamentalDiagram) -> Mode:
    """Mode the switched model assigns to an exact section profile."""
    profile = np.asarray(profile, dtype=float)
    n = len(profile)
    up_c = _congested(profile[0], fd)
    down_c = _congested(profile[-1], fd)
    if not up_c and not down_c:
        return Mode(ModeTag.FF)
    if up_c and down_c:
        return Mode(ModeTag.CC)
    cong = profile > fd.rho_c
    if up_c:
        head = _leading_run(cong)
        tail = _leading_run(~cong[::-1])
        s = int(round(0.5 * (head + (n - tail))))
        return Mode(ModeTag.CF, min(max(s, 1), n - 1))
    free = _leading_run(~cong)
    s = min(max(free, 1), n - 1)
    return Mode(_fc_direction(profile[s - 1], profile[s], fd), s)


# ---------------------------------------------------------------------------
# observability analysis
# ---------------------------------------------------------------------------

def boundary_output_matrix(n: int) -> np.ndarray:
    """2 x n selector of the first and last cell."""
    h = np.zeros((2, n))
    h[0, 0] = 1.0
    h[1, n - 1] = 1.0
    return h


def information_matrix(a_seq: list[np.ndarray], h_seq: list[np.ndarray],
                       r_seq: list[np.ndarray]) -> np.ndarray:
    """Windowed information matrix sum Xi^T H^T R^-1 H Xi.

    a_seq holds the T transition matrices of the window; h_seq/r_seq hold the
    T+1 output matrices and measurement covariances at the window's instants.
    Xi maps each instant to the window end through inverse transitions.
    """
    if len(h_seq) != len(a_seq) + 1 or len(r_seq) != len(h_seq):
        raise ValueError("need len(h_seq) == len(r_seq) == len(a_seq) + 1")
    n = h_seq[0].shape[1]
    info = np.zeros((n, n))
    xi = np.eye(n)
    # iterate instants from the window end backwards
    for step in range(len(h_seq) - 1, -1, -1):
        h, r = h_seq[step], r_seq[step]
        hx = h @ xi
        info += hx.T @ np.linalg.solve(r, hx)
        if step > 0:
            xi = np.linalg.solve(a_seq[step - 1], xi)
    return info


def controllability_matrix(a_seq: list[np.ndarray], q_seq: list[np.ndarray]) -> np.ndarray:
    """Windowed process-noise reachability sum Xi Q Xi^T (forward transitions)."""
    if len(q_seq) != len(a_seq):
        raise ValueError("need len(q_seq) == len(a_seq)")
    n = a_seq[0].shape[0]
    ctrl = np.zeros((n, n))
    xi = np.eye(n)
    for step in range(len(a_seq) - 1, -1, -1):
        ctrl += xi @ q_seq[step] @ xi.T
        xi = xi @ a_seq[step]
    return ctrl


def observability_grammian(a_seq: list[np.ndarray], h_seq: list[np.ndarray],
                           r_seq: list[np.ndarray]) -> np.ndarray:
    """Grammian anchored at the window start; same rank as the information matrix."""
    n = h_seq[0].shape[1]
    gram = np.zeros((n, n))
    xi = np.eye(n)
    for step, (h, r) in enumerate(zip(h_seq, r_seq)):
        hx = h @ xi
        gram += hx.T @ np.linalg.solve(r, hx)
        if step < len(a_seq):
            xi = a_seq[step] @ xi
    return gram


@dataclass(frozen=True)
class SubsystemDecomposition:
    """Permutation splitting boundary cells (observable pair) from the interior."""

    U: np.ndarray
    A1: np.ndarray    # 2x2 observable block (identity)
    A21: np.ndarray   # (n-2)x2 coupling into the interior
    A2: np.ndarray    # (n-2)x(n-2) interior block

    def cov_blocks(self, gamma: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(boundary, boundary-interior, interior) blocks of U Gamma U^T."""
        g = self.U @ gamma @ self.U.T
        return g[:2, :2], g[:2, 2:], g[2:, 2:]


def subsystem_permutation(n: int) -> np.ndarray:
    """Reorder (rho_1, ..., rho_n) to (rho_1, rho_n, rho_2, ..., rho_{n-1})."""
    u = np.zeros((n, n))
    u[0, 0] = 1.0
    u[1, n - 1] = 1.0
    for i in range(2, n):
        u[i, i - 1] = 1.0
    return u


def decompose_subsystems(mode: Mode, n: int, fd: FundamentalDiagram, grid: Grid) -> SubsystemDecomposition:
    """Observable/unobservable split of an FC-mode section (n >= 3)."""
    if mode.observable:
        raise ValueError(f"{mode.tag.value} is observable; nothing to decompose")
    if n < 3:
        raise ValueError("decomposition needs n >= 3 (no interior otherwise)")
    a = mode_matrices(mode, n, fd, grid).A
    u = subsystem_permutation(n)
    a_t = u @ a @ u.T
    if not np.allclose(a_t[:2, 2:], 0.0):
        raise AssertionError("boundary rows unexpectedly coupled to the interior")
    return SubsystemDecomposition(U=u, A1=a_t[:2, :2], A21=a_t[2:, :2], A2=a_t[2:, 2:])
