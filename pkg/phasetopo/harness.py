"""
Experiment harness.

Score recoveries against the ground truth, repeat simulated trials from a
master seed and sweep the sample count, noise level, injection correlation and
measurement mode. Results are pandas DataFrames ready to be written as CSV.
"""

import dataclasses
import itertools
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import yaml
from typing_extensions import Literal

from phasetopo.admittance import impedance_by_paths
from phasetopo.exceptions import (
    ConfigurationError,
    EvaluationError,
    PhaseTopoError,
    TrialError,
)
from phasetopo.network import (
    FEEDER_PRESETS,
    ImpedanceParams,
    RadialNetwork,
    load_network,
    preset_network,
    random_radial,
)
from phasetopo.recover import (
    PhaseAssignment,
    gpt,
    phase_id_known_topology,
    topology_known_phases,
)
from phasetopo.simulate import InjectionSpec, Mode, simulate_panel, true_labels_from_meta
from phasetopo.utils import derive_seed

# pylint: disable=R0902 # too many instance attributes
# pylint: disable=R0914 # too many local variables

logger = logging.getLogger(__name__)

Variant = Literal["joint", "phase_only", "topology_only"]
NetworkSource = Union[str, Dict[str, Any]]

_NETWORK_STREAM = 0

SWEEP_COLUMNS: List[str] = [
    "cell",
    "trial",
    "samples",
    "noise",
    "epsilon",
    "mode",
    "variant",
    "seed",
    "topology_error",
    "phase_error",
    "wall_time",
]


def topology_error(
    est_edges: Iterable[Tuple[int, int]], true_edges: Iterable[Tuple[int, int]]
) -> float:
    """
    Share of wrong plus missing edges, edges compared as unordered pairs.

    Parameters
    ----------
    est_edges : Iterable[Tuple[int, int]]
        Estimated edges.
    true_edges : Iterable[Tuple[int, int]]
        True edges, non empty.

    Raises
    ------
    ConfigurationError
        If there is no true edge.

    Returns
    -------
    float
        ``(wrong + missing) / len(true_edges)`` capped at 1.

    Examples
    --------
    >>> topology_error([(1, 0), (2, 0)], [(0, 1), (2, 1)])
    1.0
    """
    est = {frozenset(e) for e in est_edges}
    true = {frozenset(e) for e in true_edges}
    if len(true) == 0:
        raise ConfigurationError("The topology error needs at least one true edge!")
    wrong = len(est - true)
    missing = len(true - est)
    return min(1.0, (wrong + missing) / len(true))


def phase_error(
    est_phases: PhaseAssignment,
    true_phases: PhaseAssignment,
    reference: Optional[int] = 0,
) -> float:
    """
    Share of channels whose global label is wrong, reference excluded.

    Parameters
    ----------
    est_phases : PhaseAssignment
        Estimated label of every column of every node.
    true_phases : PhaseAssignment
        True labels.
    reference : Optional[int], optional
        Node left out of the count. The default is 0.

    Raises
    ------
    EvaluationError
        If the node sets or the channel counts differ.

    Returns
    -------
    float
        The error in [0, 1], 0 when there is no channel to score.
    """
    est = {n: m for n, m in est_phases.items() if n != reference}
    true = {n: m for n, m in true_phases.items() if n != reference}
    if set(est) != set(true):
        raise EvaluationError(
            f"The estimated nodes {sorted(est)} differ from the true nodes "
            f"{sorted(true)}!"
        )
    wrong, total = 0, 0
    for node, labels in true.items():
        if len(est[node]) != len(labels):
            raise EvaluationError(
                f"Node {node} has {len(est[node])} estimated labels for "
                f"{len(labels)} channels!"
            )
        wrong += sum(1 for a, b in zip(est[node], labels) if a != b)
        total += len(labels)
    return 0.0 if total == 0 else wrong / total


def _apply_default_random_network_kwargs(
    network_kwargs: Optional[Dict[str, Any]]
) -> Dict[str, Any]:
    """Apply default values to the given random network kwargs dictionary."""
    _network_kwargs: Dict[str, Any] = {"n3": 13, "n2": 0, "n1": 0}
    if network_kwargs is not None:
        _network_kwargs.update(network_kwargs)
    allowed = {"n3", "n2", "n1", "name"} | {
        f.name for f in dataclasses.fields(ImpedanceParams)
    }
    unknown = sorted(set(_network_kwargs) - allowed)
    if unknown:
        raise ConfigurationError(f"Unknown random network keys {unknown}!")
    return _network_kwargs


def build_network(source: NetworkSource, seed: Optional[int] = None) -> RadialNetwork:
    """
    Build the network of a trial.

    Parameters
    ----------
    source : NetworkSource
        Preset name, network JSON path or mapping of :func:`random_radial`
        arguments (counts and :class:`ImpedanceParams` fields).
    seed : Optional[int], optional
        Seed of random and preset networks. The default is None.

    Raises
    ------
    ConfigurationError
        If the source is neither a preset, an existing file nor a mapping.

    Returns
    -------
    RadialNetwork
        The network.
    """
    if isinstance(source, dict):
        kwargs = _apply_default_random_network_kwargs(source)
        params = ImpedanceParams(
            **{
                k: v
                for k, v in kwargs.items()
                if k not in ("n3", "n2", "n1", "name")
            }
        )
        return random_radial(
            int(kwargs["n3"]),
            int(kwargs["n2"]),
            int(kwargs["n1"]),
            params,
            seed=seed,
            name=kwargs.get("name"),
        )
    if source == "toynet" or source in FEEDER_PRESETS:
        return preset_network(source, seed=seed)
    if Path(source).exists():
        return load_network(source)
    raise ConfigurationError(
        f'The network "{source}" is neither a preset nor an existing file!'
    )


def _is_fixed(source: NetworkSource) -> bool:
    return isinstance(source, str) and source not in FEEDER_PRESETS and source != "toynet"


@dataclass(frozen=True)
class TrialConfig:
    """
    Configuration of a series of trials.

    Attributes
    ----------
    network : NetworkSource
        Preset name, network file or random network arguments. Presets and
        random networks are drawn again for every trial.
    samples : int
        Number of samples T (>= 2).
    noise : float
        Noise level.
    epsilon : float
        Injection correlation.
    mode : Mode
        "phasor" or "magnitude".
    variant : Variant
        "joint", "phase_only" (tree known) or "topology_only" (labels known).
    seed : int
        Master seed.
    trials : int
        Number of repetitions (>= 1).
    s2 : float
        Injection variance.
    v_ref : float
        Reference voltage magnitude of magnitude panels.
    normalize : bool
        Match phases with correlations.
    n_jobs : int
        Number of threads running the trials.
    """

    network: NetworkSource = "ieee13"
    samples: int = 7200
    noise: float = 0.0
    epsilon: float = 0.0
    mode: Mode = "phasor"
    variant: Variant = "joint"
    seed: int = 0
    trials: int = 30
    s2: float = 1e-6
    v_ref: float = 1.0
    normalize: bool = False
    n_jobs: int = 1

    def __post_init__(self) -> None:
        if self.samples < 2:
            raise ConfigurationError(f"Expected at least 2 samples, got {self.samples}!")
        if self.trials < 1:
            raise ConfigurationError(f"Expected at least 1 trial, got {self.trials}!")
        if self.mode not in ("phasor", "magnitude"):
            raise ConfigurationError(
                f'Unknown mode "{self.mode}", expected "phasor" or "magnitude"!'
            )
        if self.variant not in ("joint", "phase_only", "topology_only"):
            raise ConfigurationError(
                f'Unknown variant "{self.variant}", expected "joint", "phase_only" '
                'or "topology_only"!'
            )
        if self.n_jobs < 1:
            raise ConfigurationError(f"Expected n_jobs >= 1, got {self.n_jobs}!")
        # Validates s2 and epsilon.
        InjectionSpec(s2=self.s2, epsilon=self.epsilon)

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> "TrialConfig":
        """Build a config from a mapping merged over the defaults."""
        _data = dict(data or {})
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(_data) - names)
        if unknown:
            raise ConfigurationError(f"Unknown trial configuration keys {unknown}!")
        return cls(**_data)


@dataclass(frozen=True)
class TrialDetail:
    """Outcome of one trial."""

    trial: int
    seed: int
    topology_error: float
    phase_error: float
    wall_time: float
    true_edges: Tuple[Tuple[int, int], ...]
    est_edges: Tuple[Tuple[int, int], ...]


@dataclass(frozen=True)
class TrialReport:
    """Per-trial details and aggregates of a series of trials."""

    config: TrialConfig
    details: Tuple[TrialDetail, ...]

    @property
    def topology_errors(self) -> List[float]:
        """Topology error of every trial."""
        return [d.topology_error for d in self.details]

    @property
    def phase_errors(self) -> List[float]:
        """Phase error of every trial."""
        return [d.phase_error for d in self.details]

    @property
    def mean_topology_error(self) -> float:
        """Mean topology error."""
        return float(np.mean(self.topology_errors))

    @property
    def std_topology_error(self) -> float:
        """Standard deviation of the topology error."""
        return float(np.std(self.topology_errors))

    @property
    def mean_phase_error(self) -> float:
        """Mean phase error."""
        return float(np.mean(self.phase_errors))

    @property
    def std_phase_error(self) -> float:
        """Standard deviation of the phase error."""
        return float(np.std(self.phase_errors))

    @property
    def wall_time(self) -> float:
        """Total recovery time in seconds."""
        return float(sum(d.wall_time for d in self.details))

    @property
    def edge_counts(self) -> Dict[Tuple[int, int], int]:
        """Number of trials in which each true (child, parent) edge was recovered."""
        counts: Dict[Tuple[int, int], int] = {}
        for detail in self.details:
            est = {frozenset(e) for e in detail.est_edges}
            for edge in detail.true_edges:
                counts[edge] = counts.get(edge, 0) + int(frozenset(edge) in est)
        return dict(sorted(counts.items()))

    def to_frame(self) -> pd.DataFrame:
        """One row per trial."""
        return pd.DataFrame(
            [
                {
                    "trial": d.trial,
                    "seed": d.seed,
                    "topology_error": d.topology_error,
                    "phase_error": d.phase_error,
                    "wall_time": d.wall_time,
                }
                for d in self.details
            ],
            columns=["trial", "seed", "topology_error", "phase_error", "wall_time"],
        )


def edge_frequency_frame(report: TrialReport) -> pd.DataFrame:
    """
    Recovery frequency of every true edge.

    Columns: child, parent, count, frequency (count over the number of
    trials in which the edge existed).
    """
    present: Dict[Tuple[int, int], int] = {}
    for detail in report.details:
        for edge in detail.true_edges:
            present[edge] = present.get(edge, 0) + 1
    rows = [
        {
            "child": c,
            "parent": p,
            "count": count,
            "frequency": count / present[(c, p)],
        }
        for (c, p), count in report.edge_counts.items()
    ]
    return pd.DataFrame(rows, columns=["child", "parent", "count", "frequency"])


def _true_phases(net: RadialNetwork, meta: Dict[str, Any]) -> PhaseAssignment:
    labels = true_labels_from_meta(meta)
    truth: PhaseAssignment = {i: net.phase_sets[i].members for i in net.node_ids}
    if labels is not None:
        truth.update(labels)
    return truth


def run_trial(
    cfg: TrialConfig,
    trial: int,
    network: Optional[RadialNetwork] = None,
) -> TrialDetail:
    """
    Simulate, recover and score one trial.

    Parameters
    ----------
    cfg : TrialConfig
        The configuration.
    trial : int
        Trial number, the trial seed is derived from it and the master seed.
    network : Optional[RadialNetwork], optional
        Fixed network. The default draws one from ``cfg.network``.

    Raises
    ------
    TrialError
        Wrapping any library error, with the trial number.

    Returns
    -------
    TrialDetail
        Errors and timing of the trial.
    """
    seed = derive_seed(cfg.seed, trial)
    try:
        net = (
            network
            if network is not None
            else build_network(cfg.network, seed=derive_seed(seed, _NETWORK_STREAM))
        )
        panel = simulate_panel(
            net,
            InjectionSpec(s2=cfg.s2, epsilon=cfg.epsilon),
            n_samples=cfg.samples,
            seed=seed,
            noise=cfg.noise,
            mode=cfg.mode,
            v_ref=cfg.v_ref,
            scramble=cfg.variant != "topology_only",
            z_red=impedance_by_paths(net),
        )
        truth = _true_phases(net, panel.meta)
        true_edges = tuple(net.tree_edges())

        start = time.perf_counter()
        if cfg.variant == "joint":
            result = gpt(panel, reference=net.reference, normalize=cfg.normalize)
            est_edges, est_phases = result.edges, result.phases
        elif cfg.variant == "phase_only":
            est_edges = true_edges
            est_phases = phase_id_known_topology(
                panel, true_edges, reference=net.reference, normalize=cfg.normalize
            )
        else:
            result = topology_known_phases(panel, reference=net.reference)
            est_edges, est_phases = result.edges, result.phases
        wall_time = time.perf_counter() - start

        detail = TrialDetail(
            trial=trial,
            seed=seed,
            topology_error=topology_error(est_edges, true_edges),
            phase_error=phase_error(est_phases, truth, reference=net.reference),
            wall_time=wall_time,
            true_edges=true_edges,
            est_edges=tuple(est_edges),
        )
    except PhaseTopoError as e:
        if isinstance(e, TrialError):
            raise
        raise TrialError(trial, f"Trial {trial} failed: {e}") from e
    logger.debug(
        f"Trial {trial}: topology error {detail.topology_error:.4f}, phase error "
        f"{detail.phase_error:.4f} in {detail.wall_time:.3f} s."
    )
    return detail


def run_trials(cfg: TrialConfig) -> TrialReport:
    """
    Run ``cfg.trials`` independent trials.

    File networks are loaded once; preset and random networks are drawn for
    every trial. Trials may run in ``cfg.n_jobs`` threads, the details are
    always ordered by trial.

    Parameters
    ----------
    cfg : TrialConfig
        The configuration.

    Returns
    -------
    TrialReport
        Deterministic given the master seed, wall times aside.
    """
    network = build_network(cfg.network) if _is_fixed(cfg.network) else None
    trials = range(cfg.trials)
    if cfg.n_jobs == 1:
        details = [run_trial(cfg, t, network) for t in trials]
    else:
        with ThreadPoolExecutor(max_workers=cfg.n_jobs) as executor:
            details = list(executor.map(lambda t: run_trial(cfg, t, network), trials))
    report = TrialReport(cfg, tuple(details))
    logger.info(
        f"{cfg.trials} trial(s) T={cfg.samples} noise={cfg.noise} "
        f"epsilon={cfg.epsilon} {cfg.mode}/{cfg.variant}: topology error "
        f"{report.mean_topology_error:.4f} +/- {report.std_topology_error:.4f}, "
        f"phase error {report.mean_phase_error:.4f}."
    )
    return report


@dataclass(frozen=True)
class SweepGrid:
    """Values swept for each axis, None keeps the base configuration value."""

    samples: Optional[Sequence[int]] = None
    noise: Optional[Sequence[float]] = None
    epsilon: Optional[Sequence[float]] = None
    mode: Optional[Sequence[Mode]] = None

    def __post_init__(self) -> None:
        for f in dataclasses.fields(self):
            values = getattr(self, f.name)
            if values is not None and len(values) == 0:
                raise ConfigurationError(f'The sweep axis "{f.name}" is empty!')

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> "SweepGrid":
        """Build a grid from a mapping of axis name to values."""
        _data = dict(data or {})
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(_data) - names)
        if unknown:
            raise ConfigurationError(f"Unknown sweep axes {unknown}!")
        return cls(**{k: list(v) for k, v in _data.items()})

    def cells(self, base: TrialConfig) -> List[TrialConfig]:
        """Configurations of every cell, in (samples, noise, epsilon, mode) order."""
        axes = [
            (name, getattr(self, name) or [getattr(base, name)])
            for name in ("samples", "noise", "epsilon", "mode")
        ]
        return [
            dataclasses.replace(base, **dict(zip([a for a, _ in axes], values)))
            for values in itertools.product(*[v for _, v in axes])
        ]


def sweep(
    grid: SweepGrid, base: Optional[TrialConfig] = None, timings: bool = True
) -> pd.DataFrame:
    """
    Run the trials of every cell of a grid.

    Parameters
    ----------
    grid : SweepGrid
        Swept values.
    base : Optional[TrialConfig], optional
        Values of the other fields. The default is :class:`TrialConfig()`.
    timings : bool, optional
        Whether to keep the measured ``wall_time`` column, the only one that
        differs between identical runs. The default is True.

    Returns
    -------
    pd.DataFrame
        One row per cell and trial with the :data:`SWEEP_COLUMNS` (minus
        ``wall_time`` without timings), ordered by (cell, trial).
    """
    _base = TrialConfig() if base is None else base
    rows: List[Dict[str, Any]] = []
    for cell, cfg in enumerate(grid.cells(_base)):
        report = run_trials(cfg)
        for d in report.details:
            rows.append(
                {
                    "cell": cell,
                    "trial": d.trial,
                    "samples": cfg.samples,
                    "noise": cfg.noise,
                    "epsilon": cfg.epsilon,
                    "mode": cfg.mode,
                    "variant": cfg.variant,
                    "seed": d.seed,
                    "topology_error": d.topology_error,
                    "phase_error": d.phase_error,
                    "wall_time": d.wall_time,
                }
            )
    frame = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
    return frame if timings else frame.drop(columns="wall_time")


def summarize_sweep(frame: pd.DataFrame) -> pd.DataFrame:
    """Mean and standard deviation of both errors per cell."""
    return (
        frame.groupby(["cell", "samples", "noise", "epsilon", "mode", "variant"])
        .agg(
            topology_error_mean=("topology_error", "mean"),
            topology_error_std=("topology_error", "std"),
            phase_error_mean=("phase_error", "mean"),
            phase_error_std=("phase_error", "std"),
            trials=("trial", "count"),
        )
        .reset_index()
    )


def load_sweep_config(fpath: Union[str, Path]) -> Tuple[SweepGrid, TrialConfig]:
    """
    Read a YAML sweep configuration ``{base: {...}, grid: {...}}``.

    Raises
    ------
    ConfigurationError
        If the file is not a mapping or holds unknown keys.
    """
    with open(fpath, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f) or {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"The sweep configuration {fpath} is not a mapping!")
    unknown = sorted(set(data) - {"base", "grid"})
    if unknown:
        raise ConfigurationError(f"Unknown sweep configuration sections {unknown}!")
    return SweepGrid.from_dict(data.get("grid")), TrialConfig.from_dict(data.get("base"))


def save_sweep(frame: pd.DataFrame, fpath: Union[str, Path]) -> Path:
    """Write sweep rows as CSV."""
    _fpath = Path(fpath)
    _fpath.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(_fpath, index=False, float_format="%.17g")
    logger.info(f"Sweep results written to {_fpath}.")
    return _fpath
