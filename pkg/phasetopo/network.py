"""
Multi-phase radial network model.

Provide the phase types, the line and network containers, the structural
validation of radial networks, the line impedance condition under which phase
matching by covariance is exact, random test feeders and the JSON format.

Node ids are dense integers ``0..n-1`` and lines are oriented away from the
reference: ``from_node`` is the upstream end and ``to_node`` the downstream end
whose phases the line carries.
"""

import itertools
import logging
from dataclasses import dataclass
from enum import IntEnum
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
import numpy.typing as npt

from phasetopo.exceptions import ConfigurationError, LineModelError, NetworkError
from phasetopo.utils import (
    NDArrayComplex,
    NDArrayFloat,
    complex_to_pairs,
    pairs_to_complex,
    read_json,
    write_json,
)

# pylint: disable=C0103 # does not confrom to snake case naming style
# pylint: disable=R0913 # too many arguments
# pylint: disable=R0914 # too many local variables

logger = logging.getLogger(__name__)

#: Smallest accepted reciprocal condition number of a matrix to invert.
RCOND_MIN: float = 1e-12

#: Relative tolerance under which two scores are considered tied.
TIE_RTOL: float = 1e-12


class Phase(IntEnum):
    """One of the three conductors of a three-phase system, ordered a < b < c."""

    A = 0
    B = 1
    C = 2

    @property
    def label(self) -> str:
        """Lower case label of the phase."""
        return "abc"[self.value]

    @classmethod
    def from_label(cls, label: str) -> "Phase":
        """Get the phase from its label (case insensitive)."""
        try:
            return cls("abc".index(label.lower()))
        except ValueError as e:
            raise ConfigurationError(
                f'"{label}" is not a phase label, expected one of "a", "b", "c"!'
            ) from e

    def __str__(self) -> str:
        return self.label


@dataclass(frozen=True)
class PhaseSet:
    """Non empty, canonically sorted set of phases present at a bus or on a line."""

    members: Tuple[Phase, ...]

    def __post_init__(self) -> None:
        members = tuple(Phase(p) for p in self.members)
        if len(members) == 0:
            raise ConfigurationError("A phase set cannot be empty!")
        if len(set(members)) != len(members):
            raise ConfigurationError(
                f"The phases {[str(p) for p in members]} contain duplicates!"
            )
        object.__setattr__(self, "members", tuple(sorted(members)))

    @classmethod
    def parse(cls, value: Union[str, "PhaseSet", Iterable[Any]]) -> "PhaseSet":
        """
        Build a phase set from a label string such as ``"ac"`` or phases.

        Parameters
        ----------
        value : Union[str, PhaseSet, Iterable[Any]]
            Labels string, existing phase set, or iterable of phases/labels.

        Returns
        -------
        PhaseSet
            The canonical phase set.
        """
        if isinstance(value, PhaseSet):
            return value
        if isinstance(value, str):
            return cls(tuple(Phase.from_label(c) for c in value))
        return cls(
            tuple(Phase.from_label(p) if isinstance(p, str) else Phase(p) for p in value)
        )

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[Phase]:
        return iter(self.members)

    def __contains__(self, phase: object) -> bool:
        return phase in self.members

    def __str__(self) -> str:
        return "".join(p.label for p in self.members)

    def issubset(self, other: "PhaseSet") -> bool:
        """Whether all phases of this set are in `other`."""
        return set(self.members) <= set(other.members)

    def index(self, phase: Phase) -> int:
        """Position of `phase` in the canonical order of the set."""
        return self.members.index(phase)


ABC = PhaseSet((Phase.A, Phase.B, Phase.C))


@dataclass(frozen=True, eq=False)
class LineModel:
    """
    Multi-phase line between two buses.

    Attributes
    ----------
    from_node : int
        Upstream bus (closer to the reference).
    to_node : int
        Downstream bus.
    phases : PhaseSet
        Phases carried by the line.
    z : NDArrayComplex
        Per-unit impedance matrix, rows and columns in the order of `phases`.
    """

    from_node: int
    to_node: int
    phases: PhaseSet
    z: NDArrayComplex

    def __post_init__(self) -> None:
        object.__setattr__(self, "phases", PhaseSet.parse(self.phases))
        z = np.array(self.z, dtype=np.complex128, ndmin=2)
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    @property
    def name(self) -> str:
        """Readable identifier of the line."""
        return f"{self.from_node}->{self.to_node}"

    def violations(self) -> List[str]:
        """
        List the violated line model invariants.

        Returns
        -------
        List[str]
            Empty if the impedance matrix is square with the size of the phase
            set, symmetric, invertible and with positive diagonal resistances.
        """
        out: List[str] = []
        n = len(self.phases)
        if self.z.shape != (n, n):
            return [
                f"line {self.name}: impedance shape {self.z.shape} does not match "
                f"phases '{self.phases}'"
            ]
        if not np.allclose(self.z, self.z.T, rtol=1e-12, atol=1e-15):
            out.append(f"line {self.name}: impedance matrix is not symmetric")
        if np.any(self.z.diagonal().real <= 0.0):
            out.append(f"line {self.name}: diagonal resistances must be positive")
        if reciprocal_condition(self.z) < RCOND_MIN:
            out.append(f"line {self.name}: impedance matrix is singular")
        return out

    def check(self) -> None:
        """Raise a :class:`LineModelError` if any invariant is violated."""
        violations = self.violations()
        if len(violations) != 0:
            raise LineModelError("; ".join(violations) + "!")

    def padded(self) -> NDArrayComplex:
        """Impedance zero-padded to a 3x3 matrix indexed by phase a, b, c."""
        out = np.zeros((3, 3), dtype=np.complex128)
        idx = [p.value for p in self.phases]
        out[np.ix_(idx, idx)] = self.z
        return out


def reciprocal_condition(matrix: npt.ArrayLike) -> float:
    """
    Reciprocal 2-norm condition number of a square matrix.

    Returns 0 for singular or empty-rank matrices.
    """
    arr = np.asarray(matrix, dtype=np.complex128)
    if arr.size == 0:
        return 1.0
    s = np.linalg.svd(arr, compute_uv=False)
    if s[0] == 0.0 or not np.all(np.isfinite(s)):
        return 0.0
    return float(s[-1] / s[0])


@dataclass(frozen=True, eq=False)
class RadialNetwork:
    """
    Rooted tree of multi-phase buses and lines, the ground truth of a feeder.

    The container does not validate its structure on construction so that
    :func:`validate_network` can report on invalid networks.
    """

    nodes: Tuple[Tuple[int, PhaseSet], ...]
    edges: Tuple[LineModel, ...]
    reference: int = 0
    name: str = "network"

    def __post_init__(self) -> None:
        object.__setattr__(
            self,
            "nodes",
            tuple((int(i), PhaseSet.parse(m)) for i, m in self.nodes),
        )
        object.__setattr__(self, "edges", tuple(self.edges))

    @cached_property
    def phase_sets(self) -> Dict[int, PhaseSet]:
        """Phase set of every bus."""
        return dict(self.nodes)

    @property
    def node_ids(self) -> List[int]:
        """Sorted node ids."""
        return sorted(self.phase_sets.keys())

    @property
    def n_nodes(self) -> int:
        """Number of buses."""
        return len(self.nodes)

    @property
    def n_channels(self) -> int:
        """Number of (node, phase) channels of the network."""
        return sum(len(m) for _, m in self.nodes)

    @cached_property
    def graph(self) -> nx.MultiGraph:
        """Undirected multigraph of the buses, edge keys are line positions."""
        g = nx.MultiGraph()
        g.add_nodes_from(i for i, _ in self.nodes)
        for k, line in enumerate(self.edges):
            g.add_edge(line.from_node, line.to_node, key=k)
        return g

    @cached_property
    def parents(self) -> Dict[int, int]:
        """Parent of every bus reachable from the reference (BFS orientation)."""
        if self.reference not in self.phase_sets:
            return {}
        return {
            child: parent
            for parent, child in nx.bfs_edges(nx.Graph(self.graph), self.reference)
        }

    @cached_property
    def children(self) -> Dict[int, List[int]]:
        """Sorted children of every bus."""
        out: Dict[int, List[int]] = {i: [] for i in self.phase_sets}
        for child, parent in sorted(self.parents.items()):
            out[parent].append(child)
        return out

    @cached_property
    def _edge_lookup(self) -> Dict[Tuple[int, int], int]:
        return {
            (min(line.from_node, line.to_node), max(line.from_node, line.to_node)): k
            for k, line in enumerate(self.edges)
        }

    def edge_position(self, u: int, v: int) -> int:
        """Position in `edges` of the line between `u` and `v`."""
        try:
            return self._edge_lookup[(min(u, v), max(u, v))]
        except KeyError as e:
            raise NetworkError(f"There is no line between {u} and {v}!") from e

    def path_to_root(self, node: int) -> List[int]:
        """
        Positions of the lines on the unique path from `node` to the reference.

        Parameters
        ----------
        node : int
            The bus id.

        Returns
        -------
        List[int]
            Line positions, from `node` upwards. Empty for the reference.
        """
        path: List[int] = []
        current = node
        while current != self.reference:
            if current not in self.parents:
                raise NetworkError(f"Node {node} is not connected to the reference!")
            parent = self.parents[current]
            path.append(self.edge_position(current, parent))
            current = parent
        return path

    @cached_property
    def depths(self) -> Dict[int, int]:
        """Number of lines between each bus and the reference."""
        return {i: len(self.path_to_root(i)) for i in self.node_ids}

    def tree_edges(self) -> List[Tuple[int, int]]:
        """The (child, parent) pairs of the tree, sorted by child."""
        return sorted(self.parents.items())

    def relabel(self, mapping: Dict[int, int]) -> "RadialNetwork":
        """
        Return a copy of the network with node ids renamed by `mapping`.

        Ids missing from `mapping` are kept.
        """

        def _m(i: int) -> int:
            return mapping.get(i, i)

        return RadialNetwork(
            nodes=tuple(sorted((_m(i), m) for i, m in self.nodes)),
            edges=tuple(
                LineModel(_m(e.from_node), _m(e.to_node), e.phases, e.z)
                for e in self.edges
            ),
            reference=_m(self.reference),
            name=self.name,
        )


@dataclass(frozen=True)
class Violation:
    """One violated network invariant."""

    kind: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    """Diagnostics returned by :func:`validate_network`."""

    violations: Tuple[Violation, ...] = ()

    @property
    def is_valid(self) -> bool:
        """True iff no invariant is violated."""
        return len(self.violations) == 0

    @property
    def kinds(self) -> List[str]:
        """Kinds of the violated invariants, in report order."""
        return [v.kind for v in self.violations]


def validate_network(net: RadialNetwork) -> ValidationReport:
    """
    Check every structural invariant of a radial network.

    Parameters
    ----------
    net : RadialNetwork
        The network to check.

    Returns
    -------
    ValidationReport
        Lists every violated invariant; empty iff the network is valid. The
        function never raises.

    Examples
    --------
    >>> validate_network(toynet()).is_valid
    True
    """
    out: List[Violation] = []
    ids = [i for i, _ in net.nodes]
    n = len(ids)
    if len(set(ids)) != n:
        out.append(Violation("node ids", f"duplicated node ids in {sorted(ids)}"))
    elif sorted(ids) != list(range(n)):
        out.append(Violation("node ids", f"node ids {sorted(ids)} are not 0..{n - 1}"))

    known = set(ids)
    for line in net.edges:
        for end in (line.from_node, line.to_node):
            if end not in known:
                out.append(
                    Violation(
                        "unknown node", f"line {line.name} uses unknown node {end}"
                    )
                )
        for msg in line.violations():
            out.append(Violation("line model", msg))

    if net.reference not in known:
        out.append(Violation("reference", f"reference {net.reference} is not a node"))
    elif len(net.phase_sets[net.reference]) != 3:
        out.append(
            Violation(
                "reference phases",
                f"reference {net.reference} has phases "
                f"'{net.phase_sets[net.reference]}' instead of 'abc'",
            )
        )

    if any(v.kind == "unknown node" for v in out) or n == 0:
        return ValidationReport(tuple(out))

    m = len(net.edges)
    n_components = nx.number_connected_components(net.graph)
    if m != n - 1:
        out.append(
            Violation("not spanning", f"{m} lines for {n} nodes, expected {n - 1}")
        )
    if n_components > 1:
        out.append(Violation("disconnected", f"{n_components} connected components"))
    if m - n + n_components > 0:
        out.append(Violation("cycle", "the lines contain at least one cycle"))

    if not out or all(v.kind in ("line model", "reference phases") for v in out):
        if net.reference in known and n_components == 1 and m == n - 1:
            out.extend(_oriented_violations(net))
    return ValidationReport(tuple(out))


def _oriented_violations(net: RadialNetwork) -> List[Violation]:
    """Orientation and phase invariants, only meaningful on a tree."""
    out: List[Violation] = []
    for line in net.edges:
        child, parent = line.to_node, line.from_node
        if net.parents.get(child) != parent:
            out.append(
                Violation(
                    "orientation",
                    f"line {line.name} is not oriented away from the reference",
                )
            )
            child, parent = parent, child
        m_child, m_parent = net.phase_sets[child], net.phase_sets[parent]
        if not m_child.issubset(m_parent):
            out.append(
                Violation(
                    "phase monotonicity",
                    f"node {child} phases '{m_child}' are not a subset of its parent "
                    f"{parent} phases '{m_parent}'",
                )
            )
        if line.phases != m_child:
            out.append(
                Violation(
                    "edge phases",
                    f"line {line.name} phases '{line.phases}' differ from node "
                    f"{child} phases '{m_child}'",
                )
            )
    return out


def check_valid(net: RadialNetwork) -> None:
    """Raise a :class:`NetworkError` listing the violations of an invalid network."""
    report = validate_network(net)
    if not report.is_valid:
        raise NetworkError(
            f"The network '{net.name}' is not a valid radial network: "
            + "; ".join(v.message for v in report.violations)
            + "!"
        )


@dataclass(frozen=True)
class ConditionViolation:
    """Lines and phase set for which the identity matching is not the strict maximizer."""

    edges: Tuple[Tuple[int, int], Tuple[int, int]]
    phases: PhaseSet
    ordering: Tuple[Phase, ...]
    gap: float


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of :func:`check_line_condition`."""

    violations: Tuple[ConditionViolation, ...] = ()

    @property
    def holds(self) -> bool:
        """True iff the condition holds for every line pair and phase set."""
        return len(self.violations) == 0

    def to_dict(self) -> Dict[str, Any]:
        """JSON friendly representation."""
        return {
            "holds": self.holds,
            "violations": [
                {
                    "edges": [list(e) for e in v.edges],
                    "phases": str(v.phases),
                    "ordering": "".join(p.label for p in v.ordering),
                    "gap": v.gap,
                }
                for v in self.violations
            ],
        }


def check_line_condition(net: RadialNetwork) -> ConditionReport:
    """
    Check that correct phase matchings maximize the line impedance products.

    For every nodal phase set M of the network and every ordered pair of lines
    (st, kl) carrying M, the identity ordering must be the strict maximizer of
    ``Re[vec(Z_st^M)^H vec(Z_kl^O(M))]`` over the injective maps O from M into
    the phases of kl. Columns are aligned by phase label, missing couplings
    count as zero. Ties against the identity are violations.

    Parameters
    ----------
    net : RadialNetwork
        A valid network.

    Raises
    ------
    LineModelError
        If a line impedance matrix violates the line model invariants.

    Returns
    -------
    ConditionReport
        The violations found, empty when the condition holds.
    """
    for line in net.edges:
        line.check()

    padded = np.array([line.padded() for line in net.edges]).reshape(-1, 3, 3)
    names = [(line.from_node, line.to_node) for line in net.edges]
    masks = np.array([[p in line.phases for p in Phase] for line in net.edges]).reshape(
        -1, 3
    )

    out: List[ConditionViolation] = []
    for phases in sorted({m for _, m in net.nodes}, key=lambda s: (len(s), str(s))):
        rows = [p.value for p in phases]
        carriers = np.flatnonzero(masks[:, rows].all(axis=1)) if len(masks) else []
        if len(carriers) == 0:
            continue
        lhs = padded[carriers][:, rows, :]
        identity = tuple(rows)
        scores: Dict[Tuple[int, ...], NDArrayFloat] = {}
        for ordering in itertools.permutations(range(3), len(rows)):
            valid = masks[carriers][:, list(ordering)].all(axis=1)
            rhs = padded[carriers][:, list(ordering), :]
            score = np.einsum("spc,kpc->sk", lhs.conj(), rhs).real
            score[:, ~valid] = -np.inf
            scores[ordering] = score
        ref = scores[identity]
        others = [o for o in scores if o != identity]
        if len(others) == 0:
            continue
        stacked = np.stack([scores[o] for o in others])
        best_other = stacked.argmax(axis=0)
        best_value = stacked.max(axis=0)
        gap = ref - best_value
        tol = TIE_RTOL * np.maximum(np.abs(ref), np.finfo(float).tiny)
        for s_pos, k_pos in zip(*np.nonzero(gap <= tol)):
            ordering = others[best_other[s_pos, k_pos]]
            out.append(
                ConditionViolation(
                    edges=(names[carriers[s_pos]], names[carriers[k_pos]]),
                    phases=phases,
                    ordering=tuple(Phase(o) for o in ordering),
                    gap=float(gap[s_pos, k_pos]),
                )
            )
    logger.debug(f"Line condition on '{net.name}': {len(out)} violation(s).")
    return ConditionReport(tuple(out))


@dataclass(frozen=True)
class ImpedanceParams:
    """
    Bounds of the random line impedances of :func:`random_radial`.

    Attributes
    ----------
    r_min, r_max : float
        Band of the per-line resistance (per-unit).
    x_min, x_max : float
        Band of the per-line reactance (per-unit).
    dominance : float
        Lower bound of |diagonal| / |off-diagonal| for every line.
    jitter : float
        Relative spread of the entries around the line's base impedance, in
        [0, 1). With ``jitter=0`` and ``dominance=1`` all entries are equal.
    """

    r_min: float = 0.005
    r_max: float = 0.02
    x_min: float = 0.005
    x_max: float = 0.02
    dominance: float = 3.0
    jitter: float = 0.05

    def __post_init__(self) -> None:
        if not 0.0 < self.r_min <= self.r_max:
            raise ConfigurationError(
                f"Expected 0 < r_min <= r_max, got {self.r_min} and {self.r_max}!"
            )
        if not 0.0 <= self.x_min <= self.x_max:
            raise ConfigurationError(
                f"Expected 0 <= x_min <= x_max, got {self.x_min} and {self.x_max}!"
            )
        if self.dominance < 1.0:
            raise ConfigurationError(
                f"The dominance ratio must be >= 1, got {self.dominance}!"
            )
        if not 0.0 <= self.jitter < 1.0:
            raise ConfigurationError(f"The jitter must be in [0, 1), got {self.jitter}!")


def random_line_impedance(
    rng: np.random.Generator, n_phases: int, params: ImpedanceParams
) -> NDArrayComplex:
    """
    Draw a symmetric, diagonally dominant line impedance matrix.

    Parameters
    ----------
    rng : np.random.Generator
        Random generator.
    n_phases : int
        Size of the matrix.
    params : ImpedanceParams
        Bounds of the draw.

    Returns
    -------
    NDArrayComplex
        The (n_phases x n_phases) impedance.
    """
    base = rng.uniform(params.r_min, params.r_max) + 1j * rng.uniform(
        params.x_min, params.x_max
    )
    diag = base * (1.0 + params.jitter * rng.uniform(-1.0, 1.0, size=n_phases))
    off = (
        base
        * (1.0 - params.jitter)
        / params.dominance
        * rng.uniform(1.0 - params.jitter, 1.0, size=(n_phases, n_phases))
    )
    z = np.triu(off, 1)
    z = z + z.T
    z[np.diag_indices(n_phases)] = diag
    return z


def random_radial(
    n3: int,
    n2: int = 0,
    n1: int = 0,
    impedance_params: Optional[ImpedanceParams] = None,
    seed: Optional[int] = None,
    name: Optional[str] = None,
) -> RadialNetwork:
    """
    Generate a random valid radial feeder with a given phase mix.

    The reference (id 0) is three-phase. A single feeder head hangs below it
    and every other bus is attached below the feeder head to a uniformly drawn,
    already placed bus whose phases contain its own, so phase monotonicity
    holds by construction. Ids 1..n-1 are shuffled at the end.

    Parameters
    ----------
    n3 : int
        Number of three-phase buses, the reference included (>= 1).
    n2 : int, optional
        Number of two-phase buses. The default is 0.
    n1 : int, optional
        Number of single-phase buses. The default is 0.
    impedance_params : Optional[ImpedanceParams], optional
        Bounds of the line impedances. The default is :class:`ImpedanceParams()`.
    seed : Optional[int], optional
        Seed of the generator. The default is None.
    name : Optional[str], optional
        Network name. The default is derived from the phase mix.

    Raises
    ------
    ConfigurationError
        If ``n3 < 1`` or a count is negative.

    Returns
    -------
    RadialNetwork
        The generated network.

    Examples
    --------
    >>> net = random_radial(37, seed=7)
    >>> net.n_nodes, len(net.edges)
    (37, 36)
    """
    if n3 < 1:
        raise ConfigurationError(
            f"The reference must be three-phase, so n3 must be >= 1, got {n3}!"
        )
    if n2 < 0 or n1 < 0:
        raise ConfigurationError(f"Negative node counts n2={n2}, n1={n1}!")
    params = ImpedanceParams() if impedance_params is None else impedance_params
    rng = np.random.default_rng(seed)

    phase_sets: List[PhaseSet] = [ABC]
    parents: List[int] = [-1]

    def _candidates(size: int) -> List[int]:
        # Everything hangs below the feeder head (node 1) once it exists.
        if len(phase_sets) == 1:
            return [0]
        return [i for i in range(1, len(phase_sets)) if len(phase_sets[i]) >= size]

    for size, count in ((3, n3 - 1), (2, n2), (1, n1)):
        for _ in range(count):
            candidates = _candidates(size)
            parent = int(candidates[rng.integers(len(candidates))])
            parent_phases = phase_sets[parent]
            chosen = sorted(
                rng.choice(len(parent_phases), size=size, replace=False).tolist()
            )
            phase_sets.append(PhaseSet(tuple(parent_phases.members[c] for c in chosen)))
            parents.append(parent)

    n = len(phase_sets)
    perm = [0] + (1 + rng.permutation(n - 1)).tolist()
    edges = []
    for child in range(1, n):
        m = phase_sets[child]
        edges.append(
            LineModel(
                from_node=perm[parents[child]],
                to_node=perm[child],
                phases=m,
                z=random_line_impedance(rng, len(m), params),
            )
        )
    nodes = sorted((perm[i], phase_sets[i]) for i in range(n))
    net = RadialNetwork(
        nodes=tuple(nodes),
        edges=tuple(sorted(edges, key=lambda e: e.to_node)),
        reference=0,
        name=name if name is not None else f"radial-{n3}-{n2}-{n1}",
    )
    logger.debug(f"Generated '{net.name}' with {n} nodes (seed={seed}).")
    return net


#: Phase mixes (n3, n2, n1) of the distribution test feeders.
FEEDER_PRESETS: Dict[str, Tuple[int, int, int]] = {
    "ieee13": (8, 3, 2),
    "ieee34": (26, 0, 8),
    "ieee37": (37, 0, 0),
}


def toynet(impedance_params: Optional[ImpedanceParams] = None) -> RadialNetwork:
    """
    The running-example feeder with three, two and one phase buses.

    Bus 0 is the substation reference above the eight buses 1..8::

        0 abc - 1 abc - 2 abc - 5 abc - 6 ac - 7 c
                  |                       \\
                  3 ab - 4 b               8 a

    Line impedances are drawn once with a fixed seed.

    Parameters
    ----------
    impedance_params : Optional[ImpedanceParams], optional
        Bounds of the line impedances. The default is :class:`ImpedanceParams()`.

    Returns
    -------
    RadialNetwork
        The network.
    """
    params = ImpedanceParams() if impedance_params is None else impedance_params
    rng = np.random.default_rng(0)
    layout = [
        (0, 1, "abc"),
        (1, 2, "abc"),
        (1, 3, "ab"),
        (3, 4, "b"),
        (2, 5, "abc"),
        (5, 6, "ac"),
        (6, 7, "c"),
        (6, 8, "a"),
    ]
    nodes = [(0, ABC)] + [(child, PhaseSet.parse(m)) for _, child, m in layout]
    edges = [
        LineModel(parent, child, m, random_line_impedance(rng, len(m), params))
        for parent, child, m in layout
    ]
    return RadialNetwork(tuple(sorted(nodes)), tuple(edges), reference=0, name="toynet")


def preset_network(
    name: str,
    seed: Optional[int] = None,
    impedance_params: Optional[ImpedanceParams] = None,
) -> RadialNetwork:
    """
    Build a network from a preset name.

    Parameters
    ----------
    name : str
        ``"toynet"`` or one of :data:`FEEDER_PRESETS`.
    seed : Optional[int], optional
        Seed of the random feeder. Ignored for ``"toynet"``.
    impedance_params : Optional[ImpedanceParams], optional
        Bounds of the line impedances.

    Raises
    ------
    ConfigurationError
        If the name is unknown.

    Returns
    -------
    RadialNetwork
        The network.
    """
    if name == "toynet":
        return toynet(impedance_params)
    if name not in FEEDER_PRESETS:
        raise ConfigurationError(
            f'Unknown preset "{name}", expected "toynet" or one of '
            f"{sorted(FEEDER_PRESETS)}!"
        )
    n3, n2, n1 = FEEDER_PRESETS[name]
    return random_radial(n3, n2, n1, impedance_params, seed=seed, name=name)


def network_to_dict(net: RadialNetwork) -> Dict[str, Any]:
    """Convert a network to the JSON schema."""
    return {
        "name": net.name,
        "reference": net.reference,
        "nodes": [{"id": i, "phases": str(m)} for i, m in sorted(net.nodes)],
        "edges": [
            {
                "from": e.from_node,
                "to": e.to_node,
                "phases": str(e.phases),
                "z": complex_to_pairs(e.z),
            }
            for e in net.edges
        ],
    }


def network_from_dict(data: Dict[str, Any]) -> RadialNetwork:
    """
    Build a network from the JSON schema.

    Raises
    ------
    ConfigurationError
        If a mandatory key is missing.
    """
    try:
        return RadialNetwork(
            nodes=tuple(
                (int(n["id"]), PhaseSet.parse(n["phases"])) for n in data["nodes"]
            ),
            edges=tuple(
                LineModel(
                    int(e["from"]),
                    int(e["to"]),
                    PhaseSet.parse(e["phases"]),
                    pairs_to_complex(e["z"]),
                )
                for e in data["edges"]
            ),
            reference=int(data.get("reference", 0)),
            name=str(data.get("name", "network")),
        )
    except KeyError as e:
        raise ConfigurationError(f"Missing key {e} in the network description!") from e


def save_network(net: RadialNetwork, fpath: Union[str, Path]) -> Path:
    """Write a network JSON file."""
    return write_json(network_to_dict(net), fpath)


def load_network(fpath: Union[str, Path]) -> RadialNetwork:
    """Read a network JSON file."""
    return network_from_dict(read_json(fpath))


def phase_labels(
    net: RadialNetwork, nodes: Optional[Sequence[int]] = None
) -> Dict[int, Tuple[Phase, ...]]:
    """Canonical phase labels of the given (default all) nodes."""
    ids = net.node_ids if nodes is None else nodes
    return {i: net.phase_sets[i].members for i in ids}
