"""
Decision statistics of the recovery.

Two statistics are computed for ordered node pairs (i, j) with |M_i| <= |M_j|:
the phase matching score, the summed covariance of matched channels, and the
difference variance, the summed variance of the matched voltage differences.
Both are evaluated from a :class:`CovarianceTable` estimated from a panel or
computed analytically from the reduced impedance.

Phase orderings are tuples of local channel positions at j: ``ordering[k]``
is the column of j matched with the k-th column of i.
"""

import itertools
import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt
import pandas as pd
from typing_extensions import Literal

from phasetopo.admittance import BlockIndex, impedance_by_paths
from phasetopo.exceptions import (
    ConfigurationError,
    DegenerateChannelError,
    InvalidOrderingError,
    MissingScoreError,
)
from phasetopo.network import ABC, TIE_RTOL, Phase, RadialNetwork
from phasetopo.simulate import InjectionSpec, VoltagePanel
from phasetopo.utils import NDArrayComplex, NDArrayFloat

# pylint: disable=C0103 # does not confrom to snake case naming style

logger = logging.getLogger(__name__)

Ordering = Tuple[int, ...]
OrderingRule = Literal["best", "labels"]


@dataclass(frozen=True, eq=False)
class CovarianceTable:
    """
    Real covariance of the voltage difference channels.

    Attributes
    ----------
    channels : Tuple[Tuple[int, Phase], ...]
        Declared (node, phase) label of every row/column. Channels of a node
        are contiguous.
    cov : NDArrayFloat
        Channel x channel covariance.
    reference : Optional[int]
        Reference node, whose channels are identically zero. None if absent.
    source : str
        "phasor", "magnitude" or "analytic".
    n_samples : Optional[int]
        Number of samples of the estimate, None for analytic tables.
    """

    channels: Tuple[Tuple[int, Phase], ...]
    cov: NDArrayFloat
    reference: Optional[int] = None
    source: str = "analytic"
    n_samples: Optional[int] = None

    @cached_property
    def _columns(self) -> Dict[int, List[int]]:
        out: Dict[int, List[int]] = {}
        for k, (node, _) in enumerate(self.channels):
            out.setdefault(node, []).append(k)
        return out

    @property
    def nodes(self) -> List[int]:
        """Node ids, in channel order."""
        return list(self._columns.keys())

    @cached_property
    def labels(self) -> Dict[int, Tuple[Phase, ...]]:
        """Declared phase labels of every node."""
        return {
            node: tuple(self.channels[k][1] for k in cols)
            for node, cols in self._columns.items()
        }

    @property
    def phase_counts(self) -> Dict[int, int]:
        """Number of channels of every node."""
        return {node: len(cols) for node, cols in self._columns.items()}

    def columns(self, node: int) -> List[int]:
        """Positions of the channels of `node`."""
        try:
            return self._columns[node]
        except KeyError as e:
            raise ConfigurationError(f"Node {node} is not in the table!") from e

    def is_silent(self, node: int) -> bool:
        """Whether all channels of `node` have zero variance."""
        cols = self.columns(node)
        return bool(np.all(self.cov[cols, cols] == 0.0))


def empirical_cov(x: npt.ArrayLike, y: npt.ArrayLike) -> float:
    """
    Sample covariance of two series, ``Re(sum((x - mx) conj(y - my)) / (T - 1))``.

    Parameters
    ----------
    x, y : npt.ArrayLike
        Real or complex series of equal length T >= 2.

    Raises
    ------
    ConfigurationError
        If the lengths differ or are below 2.

    Returns
    -------
    float
        The covariance; the ordinary sample covariance for real series.

    Examples
    --------
    >>> empirical_cov([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    1.0
    """
    _x = np.asarray(x)
    _y = np.asarray(y)
    if _x.shape != _y.shape or _x.ndim != 1:
        raise ConfigurationError(
            f"Series of shapes {_x.shape} and {_y.shape} cannot be compared!"
        )
    if _x.size < 2:
        raise ConfigurationError("At least two samples are needed for a covariance!")
    xc = _x - _x.mean()
    yc = _y - _y.mean()
    return float(np.real(np.sum(xc * np.conj(yc))) / (_x.size - 1))


def _with_reference(
    channels: Sequence[Tuple[int, Phase]], cov: NDArrayFloat, reference: Optional[int]
) -> Tuple[Tuple[Tuple[int, Phase], ...], NDArrayFloat]:
    """Insert silent channels for the reference, keeping the nodes sorted."""
    nodes = {n for n, _ in channels}
    if reference is None or reference in nodes:
        return tuple(channels), cov
    pos = sum(1 for n, _ in channels if n < reference)
    full = tuple(channels[:pos]) + tuple((reference, p) for p in ABC) + tuple(
        channels[pos:]
    )
    out = np.zeros((len(full), len(full)))
    keep = [k for k, (n, _) in enumerate(full) if n != reference]
    out[np.ix_(keep, keep)] = cov
    return full, out


def covariance_from_panel(
    panel: VoltagePanel,
    reference: Optional[int] = 0,
    noise_level: Optional[float] = None,
) -> CovarianceTable:
    """
    Estimate the channel covariance of a panel.

    Calibrated white noise of level L only inflates the variances, by a factor
    1 + L. They are divided by this factor so that difference variances are
    not biased towards the silent reference.

    Parameters
    ----------
    panel : VoltagePanel
        Phasor or magnitude panel with T >= 2.
    reference : Optional[int], optional
        Reference node added with three silent channels if absent from the
        panel. None to add nothing. The default is 0.
    noise_level : Optional[float], optional
        Calibrated noise level of the panel. None to read
        ``panel.meta["noise_level"]`` (0 when absent). The default is None.

    Raises
    ------
    ConfigurationError
        If the panel has fewer than two samples or the noise level is
        negative.
    DegenerateChannelError
        If a channel has zero empirical variance.

    Returns
    -------
    CovarianceTable
        The estimated table.
    """
    if panel.n_samples < 2:
        raise ConfigurationError("At least two samples are needed for a covariance!")
    X = panel.samples
    Xc = X - X.mean(axis=0)
    cov = np.real(Xc.T @ np.conj(Xc)) / (panel.n_samples - 1)
    for k, var in enumerate(cov.diagonal()):
        if not var > 0.0:
            node, phase = panel.channels[k]
            raise DegenerateChannelError(
                panel.channels[k],
                f"The channel {node}_{phase} has a zero empirical variance!",
            )
    level = (
        float(panel.meta.get("noise_level") or 0.0)
        if noise_level is None
        else float(noise_level)
    )
    if not level >= 0.0:
        raise ConfigurationError(f"The noise level must be >= 0, got {level}!")
    if level > 0.0:
        cov[np.diag_indices_from(cov)] /= 1.0 + level
    channels, cov = _with_reference(panel.channels, cov, reference)
    return CovarianceTable(channels, cov, reference, panel.mode, panel.n_samples)


def analytic_cov(
    net: RadialNetwork,
    spec: Optional[InjectionSpec] = None,
    z_red: Optional[NDArrayComplex] = None,
) -> CovarianceTable:
    """
    Exact covariance under the linear model, ``Re(Z W Z^H)``.

    W is the diagonal of the injection variances, so per-node overrides weight
    the inner products.

    Parameters
    ----------
    net : RadialNetwork
        The network.
    spec : Optional[InjectionSpec], optional
        Injection statistics with ``epsilon == 0``. The default is
        :class:`InjectionSpec()`.
    z_red : Optional[NDArrayComplex], optional
        Precomputed reduced impedance. The default is None.

    Raises
    ------
    ConfigurationError
        If the injections are correlated.

    Returns
    -------
    CovarianceTable
        Table over all nodes, reference included.
    """
    _spec = InjectionSpec() if spec is None else spec
    if _spec.epsilon != 0.0:
        raise ConfigurationError(
            "The analytic covariance assumes uncorrelated injections, got "
            f"epsilon={_spec.epsilon}!"
        )
    Z = impedance_by_paths(net) if z_red is None else np.asarray(z_red)
    index = BlockIndex.from_network(net, exclude=[net.reference])
    w = _spec.channel_variances(index)
    cov = np.real((Z * w) @ Z.conj().T)
    channels, cov = _with_reference(index.channels, cov, net.reference)
    return CovarianceTable(channels, cov, net.reference, "analytic", None)


def as_table(
    data: Union[VoltagePanel, CovarianceTable], reference: Optional[int] = 0
) -> CovarianceTable:
    """Return `data` if it is a table, its estimated covariance otherwise."""
    if isinstance(data, CovarianceTable):
        return data
    return covariance_from_panel(data, reference=reference)


def _check_ordering(table: CovarianceTable, i: int, j: int, ordering: Ordering) -> None:
    mi, mj = len(table.columns(i)), len(table.columns(j))
    if mi > mj:
        raise InvalidOrderingError(
            f"Node {i} has more phases ({mi}) than node {j} ({mj})!"
        )
    if len(ordering) != mi or len(set(ordering)) != mi or not all(
        0 <= o < mj for o in ordering
    ):
        raise InvalidOrderingError(
            f"{tuple(ordering)} is not an injective ordering of the {mi} phases of "
            f"node {i} into the {mj} phases of node {j}!"
        )


def _blocks(
    table: CovarianceTable, i: int, j: int, normalize: bool
) -> Tuple[NDArrayFloat, NDArrayFloat, NDArrayFloat, NDArrayFloat]:
    """Cross block, its normalized variant and both variance vectors."""
    ci, cj = table.columns(i), table.columns(j)
    cross = table.cov[np.ix_(ci, cj)]
    var_i = table.cov[ci, ci]
    var_j = table.cov[cj, cj]
    if not normalize:
        return cross, cross, var_i, var_j
    scale = np.sqrt(np.outer(var_i, var_j))
    corr = np.divide(cross, scale, out=np.zeros_like(cross), where=scale > 0)
    return cross, corr, var_i, var_j


def phase_match_score(
    data: Union[VoltagePanel, CovarianceTable],
    i: int,
    j: int,
    ordering: Ordering,
    normalize: bool = False,
) -> float:
    """
    Summed covariance of the channels of i and their matches at j.

    Parameters
    ----------
    data : Union[VoltagePanel, CovarianceTable]
        Panel or covariance table.
    i, j : int
        Node ids, |M_i| <= |M_j|.
    ordering : Ordering
        Local positions at j matched with the channels of i.
    normalize : bool, optional
        Sum correlations instead of covariances. The default is False.

    Raises
    ------
    InvalidOrderingError
        If the ordering is not injective into the channels of j.

    Returns
    -------
    float
        The score.
    """
    table = as_table(data)
    _check_ordering(table, i, j, ordering)
    _, block, _, _ = _blocks(table, i, j, normalize)
    return float(block[np.arange(len(ordering)), list(ordering)].sum())


@dataclass(frozen=True)
class PhaseMatch:
    """Best ordering of a node pair."""

    ordering: Ordering
    score: float
    tie: bool


def _best_ordering(block: NDArrayFloat) -> PhaseMatch:
    mi, mj = block.shape
    rows = np.arange(mi)
    best: Optional[Ordering] = None
    best_score = -np.inf
    runner_up = -np.inf
    for ordering in itertools.permutations(range(mj), mi):
        score = float(block[rows, list(ordering)].sum())
        if score > best_score:
            best, best_score, runner_up = ordering, score, best_score
        elif score > runner_up:
            runner_up = score
    assert best is not None
    tie = bool(
        np.isfinite(runner_up)
        and best_score - runner_up
        <= TIE_RTOL * max(abs(best_score), np.finfo(float).tiny)
    )
    return PhaseMatch(tuple(int(o) for o in best), best_score, tie)


def best_phase_match(
    data: Union[VoltagePanel, CovarianceTable],
    i: int,
    j: int,
    normalize: bool = False,
) -> PhaseMatch:
    """
    Enumerate the injective orderings of i into j and keep the best score.

    Ties are broken by the lexicographically smallest ordering and flagged.

    Parameters
    ----------
    data : Union[VoltagePanel, CovarianceTable]
        Panel or covariance table.
    i, j : int
        Node ids, |M_i| <= |M_j|.
    normalize : bool, optional
        Score with correlations. The default is False.

    Returns
    -------
    PhaseMatch
        Best ordering, its score and the tie flag.
    """
    table = as_table(data)
    mi, mj = len(table.columns(i)), len(table.columns(j))
    if mi > mj:
        raise InvalidOrderingError(
            f"Node {i} has more phases ({mi}) than node {j} ({mj})!"
        )
    _, block, _, _ = _blocks(table, i, j, normalize)
    return _best_ordering(block)


def diff_variance(
    data: Union[VoltagePanel, CovarianceTable],
    i: int,
    j: int,
    ordering: Ordering,
) -> float:
    """
    Summed variance of the matched voltage differences.

    ``sum_k var(v_i[k] - v_j[ordering[k]])`` computed as
    ``var(x) + var(y) - 2 cov(x, y)`` per matched channel.

    Raises
    ------
    InvalidOrderingError
        If the ordering is not injective into the channels of j.
    """
    table = as_table(data)
    _check_ordering(table, i, j, ordering)
    cross, _, var_i, var_j = _blocks(table, i, j, False)
    o = list(ordering)
    rows = np.arange(len(o))
    return float(np.sum(var_i + var_j[o] - 2.0 * cross[rows, o]))


@dataclass(frozen=True)
class PairScore:
    """Scores of an ordered node pair."""

    i: int
    j: int
    ordering: Ordering
    c: float
    d: float
    tie: bool
    cross_set: bool


@dataclass(frozen=True, eq=False)
class PairScores:
    """Scores of every admissible ordered node pair, keyed by (i, j)."""

    entries: Dict[Tuple[int, int], PairScore]
    labels: Dict[int, Tuple[Phase, ...]]

    def __getitem__(self, pair: Tuple[int, int]) -> PairScore:
        try:
            return self.entries[pair]
        except KeyError as e:
            raise MissingScoreError(f"No score for the pair {pair}!") from e

    def __contains__(self, pair: object) -> bool:
        return pair in self.entries

    def __iter__(self) -> Iterator[PairScore]:
        return iter(self.entries.values())

    def __len__(self) -> int:
        return len(self.entries)

    def to_frame(self) -> pd.DataFrame:
        """
        Tabular view: i, j, ordering (matched labels of j), c, d, cross_set, tie.
        """
        rows = [
            {
                "i": s.i,
                "j": s.j,
                "ordering": "".join(self.labels[s.j][o].label for o in s.ordering),
                "c": s.c,
                "d": s.d,
                "cross_set": s.cross_set,
                "tie": s.tie,
            }
            for _, s in sorted(self.entries.items())
        ]
        return pd.DataFrame(
            rows, columns=["i", "j", "ordering", "c", "d", "cross_set", "tie"]
        )

    def to_csv(self, fpath: Union[str, Path]) -> Path:
        """Write the scores as CSV."""
        _fpath = Path(fpath)
        _fpath.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(_fpath, index=False, float_format="%.17g")
        return _fpath


def label_ordering(
    labels_i: Sequence[Phase], labels_j: Sequence[Phase]
) -> Optional[Ordering]:
    """Ordering matching equal labels, None if the labels of i are not all at j."""
    if not set(labels_i) <= set(labels_j):
        return None
    return tuple(list(labels_j).index(p) for p in labels_i)


def pairwise_scores(
    data: Union[VoltagePanel, CovarianceTable],
    ordering: OrderingRule = "best",
    normalize: bool = False,
    reference: Optional[int] = 0,
) -> PairScores:
    """
    Score every ordered pair (i, j), i != j, with |M_i| <= |M_j|.

    Parameters
    ----------
    data : Union[VoltagePanel, CovarianceTable]
        Panel or covariance table. Panels are completed with the silent
        reference channels.
    ordering : OrderingRule, optional
        "best" keeps the maximizer of the matching score, "labels" matches the
        declared labels and skips pairs whose label sets are not nested. The
        default is "best".
    normalize : bool, optional
        Score the matching with correlations. The distance is unaffected. The
        default is False.
    reference : Optional[int], optional
        Reference added to panels. The default is 0.

    Returns
    -------
    PairScores
        The scores.
    """
    if ordering not in ("best", "labels"):
        raise ConfigurationError(
            f'Unknown ordering rule "{ordering}", expected "best" or "labels"!'
        )
    table = as_table(data, reference=reference)
    labels = table.labels
    entries: Dict[Tuple[int, int], PairScore] = {}
    for i in table.nodes:
        for j in table.nodes:
            if i == j or len(labels[i]) > len(labels[j]):
                continue
            cross, block, var_i, var_j = _blocks(table, i, j, normalize)
            if ordering == "labels":
                o = label_ordering(labels[i], labels[j])
                if o is None:
                    continue
                score = float(block[np.arange(len(o)), list(o)].sum())
                match = PhaseMatch(o, score, False)
            else:
                match = _best_ordering(block)
            o_list = list(match.ordering)
            rows = np.arange(len(o_list))
            d = float(np.sum(var_i + var_j[o_list] - 2.0 * cross[rows, o_list]))
            entries[(i, j)] = PairScore(
                i=i,
                j=j,
                ordering=match.ordering,
                c=match.score,
                d=d,
                tie=match.tie,
                cross_set=not set(labels[i]) <= set(labels[j]),
            )
    logger.debug(f"Scored {len(entries)} ordered pairs ({ordering}).")
    return PairScores(entries, labels)
