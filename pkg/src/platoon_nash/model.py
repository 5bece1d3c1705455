"""Domain types shared by every solver.

Vehicles are indexed 1..n as in the platoon literature; index 0 is the
virtual leader (the reference trajectory). Arrays indexed by vehicle are
0-based internally, so ``d[0]`` is the distancing policy of vehicle 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

import numpy as np


class ScenarioError(ValueError):
    """A scenario or topology violates a modelling assumption."""


class TopologyKind(str, Enum):
    PF = "pf"
    TPF = "tpf"
    APF = "apf"
    LF = "lf"
    CUSTOM = "custom"


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class TopologyGraph:
    """Rearward information links ``(i, j, w)``: vehicle ``i`` observes ``j``.

    Zero-weight links are kept (they count as links for reporting) but carry
    no information; every vehicle needs a positive row sum.
    """

    kind: TopologyKind
    n: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "kind", TopologyKind(self.kind))
        edges = tuple((int(i), int(j), float(w)) for i, j, w in self.edges)
        object.__setattr__(self, "edges", edges)
        self._validate()

    def _validate(self):
        n = self.n
        if n < 1:
            raise ScenarioError("platoon needs at least one vehicle (n >= 1)")
        seen = set()
        for i, j, w in self.edges:
            if not 1 <= i <= n:
                raise ScenarioError(f"follower index {i} outside 1..{n}")
            if not 0 <= j < i:
                raise ScenarioError(f"rearward links only (j < i): got link {i} -> {j}")
            if not np.isfinite(w) or w < 0:
                raise ScenarioError(f"link {i} -> {j} has invalid weight {w}")
            if (i, j) in seen:
                raise ScenarioError(f"duplicate link {i} -> {j}")
            seen.add((i, j))
        sums = self.row_sums()
        for i in range(1, n + 1):
            if not any(e[0] == i for e in self.edges):
                raise ScenarioError(f"vehicle {i} has an empty neighbour set")
            if sums[i - 1] <= 0:
                raise ScenarioError(f"vehicle {i} has zero total link weight")
        self._validate_kind()

    def _validate_kind(self):
        n, kind = self.n, self.kind
        nb = self.neighbor_sets
        if kind is TopologyKind.PF:
            for i in range(1, n + 1):
                if set(nb[i]) != {i - 1} or nb[i][i - 1] <= 0:
                    raise ScenarioError(f"PF topology: vehicle {i} must observe only vehicle {i - 1} with positive weight")
        elif kind is TopologyKind.TPF:
            for i in range(1, n + 1):
                expected = {i - 1} if i < 3 else {i - 1, i - 2}
                if set(nb[i]) != expected:
                    raise ScenarioError(f"TPF topology: vehicle {i} must observe {sorted(expected)}")
        elif kind is TopologyKind.APF:
            for i in range(1, n + 1):
                expected = {0} if i == 1 else set(range(1, i))
                if set(nb[i]) != expected:
                    raise ScenarioError(f"APF topology: vehicle {i} must observe {sorted(expected)}")
        elif kind is TopologyKind.LF:
            for i in range(1, n + 1):
                expected = {0} if i == 1 else {1}
                if set(nb[i]) != expected:
                    raise ScenarioError(f"LF topology: vehicle {i} must observe {sorted(expected)}")

    @property
    def neighbor_sets(self) -> dict[int, dict[int, float]]:
        out: dict[int, dict[int, float]] = {i: {} for i in range(1, self.n + 1)}
        for i, j, w in self.edges:
            out[i][j] = w
        return out

    def row_sums(self) -> np.ndarray:
        s = np.zeros(self.n)
        for i, _, w in self.edges:
            s[i - 1] += w
        return s

    def removable_edges(self) -> list[tuple[int, int, float]]:
        """Zero-weight links, which contribute nothing to any cost."""
        return [e for e in self.edges if e[2] == 0.0]

    @classmethod
    def from_neighbor_sets(cls, kind, nb: Mapping[int, Mapping[int, float]]) -> "TopologyGraph":
        n = max(nb) if nb else 0
        edges = [(i, j, w) for i in sorted(nb) for j, w in sorted(nb[i].items())]
        return cls(kind, n, tuple(edges))

    @classmethod
    def pf(cls, omega) -> "TopologyGraph":
        omega = list(omega)
        return cls(TopologyKind.PF, len(omega), tuple((i, i - 1, w) for i, w in enumerate(omega, 1)))

    @classmethod
    def tpf(cls, omega, omega_tilde) -> "TopologyGraph":
        """``omega_tilde[k]`` is the V2V weight of vehicle ``k + 3``."""
        omega = list(omega)
        omega_tilde = list(omega_tilde)
        n = len(omega)
        if len(omega_tilde) != max(n - 2, 0):
            raise ScenarioError(f"TPF needs {max(n - 2, 0)} second-predecessor weights, got {len(omega_tilde)}")
        edges = [(i, i - 1, w) for i, w in enumerate(omega, 1)]
        edges += [(i, i - 2, w) for i, w in enumerate(omega_tilde, 3)]
        return cls(TopologyKind.TPF, n, tuple(sorted(edges)))


@dataclass(frozen=True, eq=False)
class Scenario:
    """A platoon game instance.

    ``x0`` holds ``x_0(0) .. x_n(0)`` (leader first); ``d`` holds
    ``d_1 .. d_n``. ``reference_speed`` only shifts absolute positions and
    never enters the relative game.
    """

    n: int
    t_f: float
    x0: np.ndarray
    d: np.ndarray
    topology: TopologyGraph
    reference_speed: float = 0.0
    name: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "x0", _frozen(self.x0))
        object.__setattr__(self, "d", _frozen(self.d))
        object.__setattr__(self, "t_f", float(self.t_f))
        n = self.n
        if n < 1:
            raise ScenarioError("platoon needs at least one vehicle (n >= 1)")
        if not self.t_f > 0:
            raise ScenarioError("terminal time must be positive")
        if self.x0.shape != (n + 1,):
            raise ScenarioError(f"expected {n + 1} initial positions, got {self.x0.size}")
        if self.d.shape != (n,):
            raise ScenarioError(f"expected {n} distancing policies, got {self.d.size}")
        if np.any(np.diff(self.x0) >= 0):
            raise ScenarioError("initial ordering violated: need x_0(0) > x_1(0) > ... > x_n(0)")
        if np.any(self.d >= 0):
            raise ScenarioError("distancing policy must be negative")
        if self.topology.n != n:
            raise ScenarioError(f"topology has {self.topology.n} vehicles, scenario has {n}")

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return (
            self.n == other.n
            and self.t_f == other.t_f
            and np.array_equal(self.x0, other.x0)
            and np.array_equal(self.d, other.d)
            and self.topology == other.topology
            and self.reference_speed == other.reference_speed
        )

    __hash__ = None

    @property
    def y0(self) -> np.ndarray:
        return relative_initial(self).y

    @property
    def e0(self) -> np.ndarray:
        return self.y0 + self.d

    def with_horizon(self, t_f: float) -> "Scenario":
        return Scenario(self.n, t_f, self.x0, self.d, self.topology, self.reference_speed, self.name)

    def absolute_positions(self, y: np.ndarray, t: np.ndarray | float = 0.0) -> np.ndarray:
        """Recover ``x_0 .. x_n`` from relative displacements by prefix sums."""
        y = np.atleast_2d(y)
        lead = self.x0[0] + self.reference_speed * np.atleast_1d(t)
        lead = np.broadcast_to(lead, (y.shape[0],))
        return np.column_stack([lead, lead[:, None] + np.cumsum(y, axis=1)])


@dataclass(frozen=True)
class RelativeState:
    y: np.ndarray


@dataclass(frozen=True)
class TrajectoryTable:
    """Sampled trajectories; rows are time samples, columns vehicles."""

    t: np.ndarray
    y: np.ndarray
    e: np.ndarray
    u: np.ndarray

    @classmethod
    def from_y(cls, t, y, u, d) -> "TrajectoryTable":
        y = np.asarray(y, dtype=float)
        return cls(np.asarray(t, dtype=float), y, y + np.asarray(d, dtype=float), np.asarray(u, dtype=float))

    @property
    def n(self) -> int:
        return self.y.shape[1]

    def control_effort(self) -> float:
        """Trapezoidal integral of ``sum_i u_i(t)^2`` over the table's grid."""
        return float(np.trapezoid(np.sum(self.u**2, axis=1), self.t))


def relative_initial(scenario: Scenario) -> RelativeState:
    y = np.diff(scenario.x0)
    y.flags.writeable = False
    return RelativeState(y)


def build_scenario(kind, params: Mapping) -> Scenario:
    """Validate ``params`` and assemble a :class:`Scenario`.

    ``params`` needs ``x0``, ``d`` and ``t_f``; the topology comes from
    ``omega`` (PF), ``omega`` plus ``omega_tilde`` (TPF) or ``edges`` as
    ``(i, j, w)`` triples (APF, LF, custom).
    """
    kind = TopologyKind(str(getattr(kind, "value", kind)).lower())
    x0 = np.asarray(params["x0"], dtype=float)
    d = np.asarray(params["d"], dtype=float)
    n = int(params.get("n", d.size))
    if kind is TopologyKind.PF:
        topo = TopologyGraph.pf(params["omega"])
    elif kind is TopologyKind.TPF:
        topo = TopologyGraph.tpf(params["omega"], params.get("omega_tilde", ()))
    else:
        topo = TopologyGraph(kind, n, tuple(_edges(params["edges"])))
    return Scenario(
        n=n,
        t_f=float(params.get("t_f", 10.0)),
        x0=x0,
        d=d,
        topology=topo,
        reference_speed=float(params.get("reference_speed", 0.0)),
        name=str(params.get("name", "")),
    )


def _edges(raw: Iterable) -> Iterable[tuple[int, int, float]]:
    for e in raw:
        i, j, w = e
        yield int(i), int(j), float(w)
