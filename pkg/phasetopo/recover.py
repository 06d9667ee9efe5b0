"""
Greedy joint recovery of the topology and of the phase labels.

Nodes are attached one at a time to the already placed node minimizing the
difference variance, all three-phase nodes first, then the two-phase and
finally the single-phase ones. The phase labels of an attached node are its
best matching with the parent composed with the parent's labels.

The reference channels are identically zero. Nodes attached to it keep their
declared labels, which are the ones metered at the substation.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, NamedTuple, Optional, Set, Tuple, Union

import networkx as nx
import numpy as np

from phasetopo.exceptions import (
    ConfigurationError,
    MissingScoreError,
    NetworkError,
)
from phasetopo.network import ABC, TIE_RTOL, Phase
from phasetopo.simulate import VoltagePanel
from phasetopo.stats import (
    CovarianceTable,
    PairScores,
    as_table,
    best_phase_match,
    pairwise_scores,
)
from phasetopo.utils import read_json, write_json

# pylint: disable=R0913 # too many arguments

logger = logging.getLogger(__name__)

PhaseAssignment = Dict[int, Tuple[Phase, ...]]


@dataclass(frozen=True)
class RecoveryStep:
    """Diagnostics of one greedy step."""

    added: int
    parent: int
    d: float
    margin: Optional[float]
    tie: bool


@dataclass(frozen=True)
class RecoveryResult:
    """
    Estimated tree and phase labels.

    Attributes
    ----------
    root : int
        Seed node of the recovery.
    edges : Tuple[Tuple[int, int], ...]
        The (child, parent) edges in the order they were added.
    phases : Dict[int, Tuple[Phase, ...]]
        Global phase label of every local channel of every node.
    steps : Tuple[RecoveryStep, ...]
        Per-step diagnostics, empty for the phase-only variant.
    """

    root: int
    edges: Tuple[Tuple[int, int], ...]
    phases: PhaseAssignment
    steps: Tuple[RecoveryStep, ...] = ()

    @property
    def parents(self) -> Dict[int, int]:
        """Parent of every non root node."""
        return dict(self.edges)

    def to_dict(self) -> Dict[str, Any]:
        """JSON friendly representation."""
        return {
            "root": self.root,
            "edges": [[c, p] for c, p in self.edges],
            "phases": {
                str(n): "".join(p.label for p in labels)
                for n, labels in sorted(self.phases.items())
            },
            "steps": [
                {
                    "added": s.added,
                    "parent": s.parent,
                    "d": s.d,
                    "margin": s.margin,
                    "tie": s.tie,
                }
                for s in self.steps
            ],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RecoveryResult":
        """Inverse of :meth:`to_dict`."""
        try:
            return cls(
                root=int(data["root"]),
                edges=tuple((int(c), int(p)) for c, p in data["edges"]),
                phases={
                    int(n): tuple(Phase.from_label(c) for c in labels)
                    for n, labels in data["phases"].items()
                },
                steps=tuple(RecoveryStep(**s) for s in data.get("steps", [])),
            )
        except KeyError as e:
            raise ConfigurationError(f"Missing key {e} in the recovery result!") from e


def save_result(result: RecoveryResult, fpath: Union[str, Path]) -> Path:
    """Write a recovery result JSON file."""
    return write_json(result.to_dict(), fpath)


def load_result(fpath: Union[str, Path]) -> RecoveryResult:
    """Read a recovery result JSON file."""
    return RecoveryResult.from_dict(read_json(fpath))


@dataclass
class FrontierState:
    """
    Placed nodes and remaining nodes grouped by number of phases.

    The placed list and the remaining sets partition the nodes.
    """

    placed: List[int]
    remaining: Dict[int, Set[int]] = field(default_factory=dict)

    @classmethod
    def start(cls, phase_counts: Dict[int, int], seed: int) -> "FrontierState":
        """Place `seed` and group the other nodes by phase count."""
        remaining: Dict[int, Set[int]] = {3: set(), 2: set(), 1: set()}
        for node, count in phase_counts.items():
            if node != seed:
                remaining[count].add(node)
        return cls(placed=[seed], remaining=remaining)

    def place(self, node: int) -> None:
        """Move `node` from the remaining sets to the placed list."""
        for group in self.remaining.values():
            group.discard(node)
        self.placed.append(node)


class NextChoice(NamedTuple):
    """Pair selected by :func:`get_next`."""

    i: int
    j: int
    d: float
    margin: Optional[float]
    tie: bool


def get_next(
    scores: PairScores,
    placed: Iterable[int],
    candidates: Iterable[int],
    allow_missing: bool = False,
) -> NextChoice:
    """
    Select the (candidate, placed) pair with the smallest difference variance.

    Pairs are scanned in ascending (i, j) order and only a strictly smaller
    distance replaces the current best, so ties resolve to the smallest pair.

    Parameters
    ----------
    scores : PairScores
        Pair scores.
    placed : Iterable[int]
        Nodes already in the tree.
    candidates : Iterable[int]
        Nodes to choose from, non empty.
    allow_missing : bool, optional
        Skip pairs absent from `scores` instead of raising. The default is False.

    Raises
    ------
    MissingScoreError
        If a required pair has no score.

    Returns
    -------
    NextChoice
        The pair, its distance, the margin to the runner-up (None if there is
        no other pair) and the tie flag.
    """
    best: Optional[Tuple[int, int]] = None
    best_d = np.inf
    runner_up = np.inf
    for i in sorted(candidates):
        for j in sorted(placed):
            if (i, j) not in scores:
                if allow_missing:
                    continue
                raise MissingScoreError(f"No score for the pair {(i, j)}!")
            d = scores[(i, j)].d
            if d < best_d:
                best, best_d, runner_up = (i, j), d, best_d
            elif d < runner_up:
                runner_up = d
    if best is None:
        raise MissingScoreError(
            f"No scored pair between the candidates {sorted(candidates)} and the "
            "placed nodes!"
        )
    margin = None if np.isinf(runner_up) else float(runner_up - best_d)
    tie = margin is not None and margin <= TIE_RTOL * max(
        abs(best_d), np.finfo(float).tiny
    )
    return NextChoice(best[0], best[1], float(best_d), margin, bool(tie))


def _seed_node(table: CovarianceTable, reference: Optional[int]) -> int:
    counts = table.phase_counts
    if reference is not None and counts.get(reference) == 3:
        return reference
    three = sorted(n for n, c in counts.items() if c == 3)
    if len(three) == 0:
        raise NetworkError("The recovery needs at least one three-phase node!")
    return three[0]


def _seed_labels(table: CovarianceTable, seed: int) -> Tuple[Phase, ...]:
    if table.is_silent(seed):
        return table.labels[seed]
    return ABC.members


def _compose(
    table: CovarianceTable,
    child: int,
    parent: int,
    ordering: Tuple[int, ...],
    phases: PhaseAssignment,
) -> Tuple[Phase, ...]:
    """Global labels of `child` from its matching with `parent`."""
    if table.is_silent(parent):
        return table.labels[child]
    return tuple(phases[parent][o] for o in ordering)


def _check_phase_counts(
    table: CovarianceTable, phase_counts: Optional[Dict[int, int]]
) -> None:
    if phase_counts is None:
        return
    counts = table.phase_counts
    for node, count in phase_counts.items():
        if counts.get(node, count) != count:
            raise ConfigurationError(
                f"Node {node} has {counts[node]} channels but {count} phases were "
                "declared!"
            )


def _greedy(
    table: CovarianceTable,
    scores: PairScores,
    seed: int,
    allow_missing: bool,
    labels: Optional[PhaseAssignment] = None,
) -> RecoveryResult:
    state = FrontierState.start(table.phase_counts, seed)
    phases: PhaseAssignment = {seed: _seed_labels(table, seed)}
    edges: List[Tuple[int, int]] = []
    steps: List[RecoveryStep] = []
    for size in (3, 2, 1):
        while len(state.remaining[size]) != 0:
            choice = get_next(
                scores, state.placed, state.remaining[size], allow_missing
            )
            i, j = choice.i, choice.j
            if labels is not None:
                phases[i] = labels[i]
            else:
                phases[i] = _compose(table, i, j, scores[(i, j)].ordering, phases)
            state.place(i)
            edges.append((i, j))
            steps.append(RecoveryStep(i, j, choice.d, choice.margin, choice.tie))
            logger.debug(
                f"Attached {i} to {j}: d={choice.d:.6e}, margin={choice.margin}, "
                f"tie={choice.tie}."
            )
    if labels is not None:
        phases[seed] = labels[seed]
    return RecoveryResult(seed, tuple(edges), phases, tuple(steps))


def gpt(
    data: Union[VoltagePanel, CovarianceTable],
    phase_counts: Optional[Dict[int, int]] = None,
    reference: Optional[int] = 0,
    normalize: bool = False,
) -> RecoveryResult:
    """
    Greedy joint recovery of the topology and the phase labels.

    Parameters
    ----------
    data : Union[VoltagePanel, CovarianceTable]
        Panel (local phase order unknown) or covariance table. Panels are
        completed with the silent channels of `reference`.
    phase_counts : Optional[Dict[int, int]], optional
        Declared number of phases per node, checked against the data. The
        default is None.
    reference : Optional[int], optional
        The reference node, seed of the recovery when three-phase. None seeds
        the lowest-id three-phase node, whose local order anchors (a, b, c).
        The default is 0.
    normalize : bool, optional
        Match phases with correlations instead of covariances. The default is
        False.

    Raises
    ------
    NetworkError
        If there is no three-phase node.
    DegenerateChannelError
        If a panel channel has zero variance.
    MissingScoreError
        If a required pair score is missing.

    Returns
    -------
    RecoveryResult
        The estimated tree and labels.

    Examples
    --------
    >>> from phasetopo import analytic_cov, toynet
    >>> result = gpt(analytic_cov(toynet()))
    >>> sorted(result.edges)[:2]
    [(1, 0), (2, 1)]
    """
    table = as_table(data, reference=reference)
    _check_phase_counts(table, phase_counts)
    seed = _seed_node(table, reference)
    scores = pairwise_scores(table, ordering="best", normalize=normalize)
    result = _greedy(table, scores, seed, allow_missing=False)
    logger.info(f"Recovered {len(result.edges)} edges from seed {seed}.")
    return result


def phase_id_known_topology(
    data: Union[VoltagePanel, CovarianceTable],
    edges: Iterable[Tuple[int, int]],
    reference: Optional[int] = 0,
    normalize: bool = False,
) -> PhaseAssignment:
    """
    Recover the phase labels when the tree is known.

    Nodes are visited breadth-first from the seed and matched against their
    parent.

    Parameters
    ----------
    data : Union[VoltagePanel, CovarianceTable]
        Panel or covariance table.
    edges : Iterable[Tuple[int, int]]
        The true edges, in any orientation.
    reference : Optional[int], optional
        The reference node. The default is 0.
    normalize : bool, optional
        Match phases with correlations. The default is False.

    Raises
    ------
    NetworkError
        If the edges do not connect every node.

    Returns
    -------
    PhaseAssignment
        Global labels of every node.
    """
    table = as_table(data, reference=reference)
    seed = _seed_node(table, reference)
    graph = nx.Graph()
    graph.add_nodes_from(table.nodes)
    graph.add_edges_from(edges)
    if set(graph.nodes) != set(table.nodes) or not nx.is_connected(graph):
        raise NetworkError(
            "The given edges do not connect exactly the measured nodes!"
        )
    phases: PhaseAssignment = {seed: _seed_labels(table, seed)}
    for parent, child in nx.bfs_edges(graph, seed):
        match = best_phase_match(table, child, parent, normalize=normalize)
        phases[child] = _compose(table, child, parent, match.ordering, phases)
    return phases


def topology_known_phases(
    data: Union[VoltagePanel, CovarianceTable],
    phase_labels: Optional[PhaseAssignment] = None,
    reference: Optional[int] = 0,
) -> RecoveryResult:
    """
    Greedy spanning tree learning when the phase labels are known.

    Distances are computed under the label matching; pairs whose label sets
    are not nested cannot be attached.

    Parameters
    ----------
    data : Union[VoltagePanel, CovarianceTable]
        Panel or covariance table.
    phase_labels : Optional[PhaseAssignment], optional
        Global label of every column of every node. The default is the
        declared labels.
    reference : Optional[int], optional
        The reference node. The default is 0.

    Returns
    -------
    RecoveryResult
        The estimated tree, with the given labels as phases.
    """
    table = as_table(data, reference=reference)
    if phase_labels is not None:
        channels = tuple(
            (node, phase_labels.get(node, table.labels[node])[k])
            for node in table.nodes
            for k in range(len(table.columns(node)))
        )
        table = CovarianceTable(
            channels, table.cov, table.reference, table.source, table.n_samples
        )
    seed = _seed_node(table, reference)
    scores = pairwise_scores(table, ordering="labels")
    return _greedy(table, scores, seed, allow_missing=True, labels=table.labels)


def recover_from_magnitudes(
    panel: VoltagePanel,
    phase_counts: Optional[Dict[int, int]] = None,
    reference: Optional[int] = 0,
    normalize: bool = False,
) -> RecoveryResult:
    """
    Joint recovery from a voltage magnitude panel.

    Raises
    ------
    ConfigurationError
        If the panel holds phasors.
    """
    if panel.mode != "magnitude":
        raise ConfigurationError(
            f'Expected a magnitude panel, got a "{panel.mode}" panel!'
        )
    return gpt(panel, phase_counts, reference=reference, normalize=normalize)
