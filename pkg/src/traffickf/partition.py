"""Overlapping spatial decomposition of the freeway, sensor placement, and
the one-hop message contract between neighboring agents.

Sections form a path graph: section i overlaps its predecessor and successor,
and exchanges measurements, overlap restrictions of prior estimates, and the
scalar summaries needed for the consensus scaling factor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Section:
    index: int          # 1-based, matching the neighbor conventions
    start: int          # first global cell (0-based, inclusive)
    n: int              # cell count

    @property
    def stop(self) -> int:
        return self.start + self.n

    def global_cells(self) -> np.ndarray:
        return np.arange(self.start, self.stop)


@dataclass
class PartitionLayout:
    """Sections, their overlaps, and the path-graph neighbor sets."""

    n_total: int
    sections: list[Section]

    def __post_init__(self):
        if not self.sections:
            raise ValueError("at least one section required")
        for sec in self.sections:
            if sec.n < 2:
                raise ValueError(f"section {sec.index}: state dimension n_i >= 2 required")
            if sec.start < 0 or sec.stop > self.n_total:
                raise ValueError(f"section {sec.index} leaves the global range")
        covered = np.zeros(self.n_total, dtype=bool)
        for sec in self.sections:
            covered[sec.start:sec.stop] = True
        if not covered.all():
            raise ValueError("sections do not cover every global cell")
        for a, b in zip(self.sections, self.sections[1:]):
            if b.start >= a.stop:
                raise ValueError(f"sections {a.index} and {b.index} do not overlap")
            if b.start <= a.start or b.stop <= a.stop:
                raise ValueError("sections must advance monotonically")

    @property
    def N(self) -> int:
        return len(self.sections)

    def section(self, i: int) -> Section:
        return self.sections[i - 1]

    def neighbors(self, i: int) -> tuple[int, ...]:
        if self.N == 1:
            return ()
        if i == 1:
            return (2,)
        if i == self.N:
            return (self.N - 1,)
        return (i - 1, i + 1)

    def overlap_dim(self, i: int, j: int) -> int:
        if j not in self.neighbors(i):
            raise ValueError(f"sections {i} and {j} are not neighbors")
        a, b = self.section(min(i, j)), self.section(max(i, j))
        return a.stop - b.start

    def overlap_global(self, i: int, j: int) -> np.ndarray:
        a, b = self.section(min(i, j)), self.section(max(i, j))
        return np.arange(b.start, a.stop)


def project(layout: PartitionLayout, i: int, j: int) -> np.ndarray:
    """Selector of section i's cells shared with neighbor j.

    Left block of the identity when j = i-1, right block when j = i+1, so
    each row is a distinct standard basis vector.
    """
    n_ij = layout.overlap_dim(i, j)
    n_i = layout.section(i).n
    p = np.zeros((n_ij, n_i))
    if j == i - 1:
        p[:, :n_ij] = np.eye(n_ij)
    else:
        p[:, n_i - n_ij:] = np.eye(n_ij)
    return p


def overlap_slice(layout: PartitionLayout, i: int, j: int) -> slice:
    """Index-slice equivalent of project(layout, i, j) for fast restriction."""
    n_ij = layout.overlap_dim(i, j)
    n_i = layout.section(i).n
    return slice(0, n_ij) if j == i - 1 else slice(n_i - n_ij, n_i)


def make_layout(n_total: int, n_sections: int, section_len: int, overlap: int) -> PartitionLayout:
    """Uniform layout: n_sections sections of section_len cells, fixed overlap.

    Requires n_sections*(section_len - overlap) + overlap == n_total; the
    residual is reported otherwise.
    """
    if n_sections == 1:
        if section_len != n_total:
            raise ValueError(f"single section must span all {n_total} cells")
        return PartitionLayout(n_total, [Section(1, 0, n_total)])
    if overlap < 1 or overlap >= section_len:
        raise ValueError(f"need 1 <= overlap < section_len, got {overlap} vs {section_len}")
    residual = n_sections * (section_len - overlap) + overlap - n_total
    if residual != 0:
        raise ValueError(
            f"inconsistent layout: {n_sections}*({section_len}-{overlap})+{overlap} "
            f"- {n_total} = {residual}")
    step = section_len - overlap
    sections = [Section(i + 1, i * step, section_len) for i in range(n_sections)]
    return PartitionLayout(n_total, sections)


# ---------------------------------------------------------------------------
# sensors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Sensor:
    index: int          # global sensor id, ordered by position
    cell: int           # global cell measured
    owner: int          # section whose boundary it instruments
    std_true: float     # actual measurement noise std


@dataclass
class SensorLayout:
    """Sensors plus, per agent, the modeled noise std it applies to each one.

    Every section's first and last cell carries a sensor (owned by that
    section); sensors falling inside a neighbor's range are forwarded to it.
    modeled_std[(agent, sensor_index)] may differ from the true std when the
    agent misjudges a sensor it owns.
    """

    sensors: list[Sensor]
    modeled_std: dict[tuple[int, int], float] = field(default_factory=dict)

    def std_for(self, agent: int, sensor: Sensor) -> float:
        return self.modeled_std.get((agent, sensor.index), sensor.std_true)

    def by_cell(self) -> dict[int, Sensor]:
        return {s.cell: s for s in self.sensors}


def place_boundary_sensors(layout: PartitionLayout, std: float,
                           interior_per_section: int = 0) -> SensorLayout:
    """One sensor at the first and last cell of every section, deduplicated,
    plus optionally evenly spaced interior sensors owned by each section.

    Boundary cells are claimed first so every agent owns its own boundary
    sensors (interior sensors never displace them).
    """
    cells: dict[int, int] = {}
    for sec in layout.sections:
        for cell in (sec.start, sec.stop - 1):
            cells.setdefault(cell, sec.index)
    for sec in layout.sections:
        if interior_per_section > 0:
            pos = np.linspace(sec.start, sec.stop - 1, interior_per_section + 2)[1:-1]
            for cell in np.round(pos).astype(int):
                cells.setdefault(int(cell), sec.index)
    ordered = sorted(cells.items())
    sensors = [Sensor(index=k, cell=cell, owner=owner, std_true=std)
               for k, (cell, owner) in enumerate(ordered)]
    return SensorLayout(sensors=sensors)


def apply_heterogeneous_stds(sensors: SensorLayout, every: int, start_index: int,
                             std_large: float) -> list[int]:
    """Mark every `every`-th sensor (from start_index, position order) as
    large-error; returns the affected sensor indices."""
    marked = []
    out = []
    for s in sensors.sensors:
        if s.index >= start_index and (s.index - start_index) % every == 0:
            out.append(Sensor(s.index, s.cell, s.owner, std_large))
            marked.append(s.index)
        else:
            out.append(s)
    sensors.sensors = out
    return marked


def apply_inconsistent_agents(sensors: SensorLayout, wrong_std: float,
                              large_std: float, agent_parity: int = 0) -> list[tuple[int, int]]:
    """Even-indexed agents fail to recognize the large-error sensors they own
    and keep modeling them with wrong_std; returns the (agent, sensor) pairs."""
    pairs = []
    for s in sensors.sensors:
        if s.std_true == large_std and s.owner % 2 == agent_parity:
            sensors.modeled_std[(s.owner, s.index)] = wrong_std
            pairs.append((s.owner, s.index))
    return pairs


# ---------------------------------------------------------------------------
# exchange
# ---------------------------------------------------------------------------

@dataclass
class ExchangePacket:
    """Everything agent `sender` ships to a one-hop neighbor for one step."""

    sender: int
    z: np.ndarray                 # measurements of the sender's own sensors in the overlap zone
    sensor_indices: list[int]     # which sensors those are
    prior_overlap: np.ndarray     # I_{j,i} @ rho_{j,k|k-1}, the shared prior slice
    lambda_min: float             # smallest eigenvalue of the sender's stability matrix
    mode_observable: bool


@dataclass
class PairCap:
    """Second exchange phase: the sender's admissible scaling for one edge."""

    sender: int
    cap: float                    # min of the sender's gamma* and its edge magnitude cap


def exchange(packets: dict[int, dict[int, ExchangePacket]], i: int, j: int,
             dropped: set[tuple[int, int]] | None = None) -> ExchangePacket | None:
    """Deliver j's packet to i, or None if the (j -> i) link dropped it."""
    if dropped and (j, i) in dropped:
        return None
    return packets.get(j, {}).get(i)
