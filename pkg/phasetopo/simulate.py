"""
Synthetic measurement panels.

Draw nodal current injections with a prescribed covariance, map them to
voltage differences with the reduced impedance, add white measurement noise,
optionally keep only voltage magnitudes and scramble the local phase order of
the channels. Panels are stored as CSV with a JSON sidecar.
"""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
import numpy.typing as npt
import pandas as pd
from typing_extensions import Literal

from phasetopo.admittance import BlockIndex, impedance_by_paths
from phasetopo.exceptions import ConfigurationError, DegenerateChannelError
from phasetopo.network import Phase, RadialNetwork
from phasetopo.utils import (
    NDArrayComplex,
    NDArrayFloat,
    derive_seed,
    read_json,
    sidecar_path,
    write_json,
)

# pylint: disable=R0913 # too many arguments

logger = logging.getLogger(__name__)

Mode = Literal["phasor", "magnitude"]
Distribution = Literal["gaussian", "laplace"]

#: Reporting rate of the simulated PMUs.
DEFAULT_RATE_HZ: float = 120.0

# Sub-seed streams of simulate_panel.
_INJECTION_STREAM = 1
_NOISE_STREAM = 2
_SCRAMBLE_STREAM = 3


@dataclass(frozen=True)
class InjectionSpec:
    """
    Statistical model of the nodal current injections.

    Attributes
    ----------
    s2 : float
        Variance of the fluctuation of every channel (per-unit squared).
    epsilon : float
        Correlation between any two channels, in [0, 1).
    base : Optional[complex]
        Constant complex mean added to every channel. The default is None (0).
    per_node_variance : Optional[Dict[int, float]]
        Variance overriding `s2` for the listed nodes.
    distribution : Distribution
        Marginal law of the real and imaginary fluctuations.
    """

    s2: float = 1e-6
    epsilon: float = 0.0
    base: Optional[complex] = None
    per_node_variance: Optional[Dict[int, float]] = None
    distribution: Distribution = "gaussian"

    def __post_init__(self) -> None:
        if not self.s2 > 0.0:
            raise ConfigurationError(
                f"The injection variance must be > 0, got {self.s2}!"
            )
        if not 0.0 <= self.epsilon < 1.0:
            raise ConfigurationError(
                f"The correlation epsilon must be in [0, 1), got {self.epsilon}!"
            )
        for node, var in (self.per_node_variance or {}).items():
            if not var > 0.0:
                raise ConfigurationError(
                    f"The variance override of node {node} must be > 0, got {var}!"
                )
        if self.distribution not in ("gaussian", "laplace"):
            raise ConfigurationError(
                f'Unknown distribution "{self.distribution}", expected "gaussian" or '
                '"laplace"!'
            )

    def node_variance(self, node: int) -> float:
        """Injection variance of `node`."""
        return (self.per_node_variance or {}).get(node, self.s2)

    def channel_variances(self, index: BlockIndex) -> NDArrayFloat:
        """Injection variance of every channel of `index`."""
        return np.array([self.node_variance(n) for n, _ in index.channels])


@dataclass(frozen=True)
class NoiseSpec:
    """White measurement noise, `level` being var(noise) / var(signal)."""

    level: float = 0.0
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        if not self.level >= 0.0:
            raise ConfigurationError(f"The noise level must be >= 0, got {self.level}!")


@dataclass(frozen=True, eq=False)
class InjectionPanel:
    """Time series of the nodal injections, one column per channel."""

    channels: Tuple[Tuple[int, Phase], ...]
    samples: NDArrayComplex
    meta: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class VoltagePanel:
    """
    Time series of the voltage differences to the reference.

    Attributes
    ----------
    mode : Mode
        "phasor" (complex samples) or "magnitude" (real samples, non negative
        unless ``meta["noise_level"]`` is positive).
    channels : Tuple[Tuple[int, Phase], ...]
        Declared (node, phase) label of every column. The phases of a node are
        listed in canonical order; the column content may be scrambled.
    samples : npt.NDArray
        T x C samples.
    rate_hz : float
        Sampling rate.
    meta : Dict[str, Any]
        Provenance: seed, s2, epsilon, noise level...
    """

    mode: Mode
    channels: Tuple[Tuple[int, Phase], ...]
    samples: npt.NDArray[Any]
    rate_hz: float = DEFAULT_RATE_HZ
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.mode not in ("phasor", "magnitude"):
            raise ConfigurationError(
                f'Unknown panel mode "{self.mode}", expected "phasor" or "magnitude"!'
            )
        samples = np.asarray(self.samples)
        samples = samples.astype(
            np.complex128 if self.mode == "phasor" else np.float64, copy=False
        )
        if samples.ndim != 2 or samples.shape[1] != len(self.channels):
            raise ConfigurationError(
                f"Expected a (T, {len(self.channels)}) sample matrix, got "
                f"{samples.shape}!"
            )
        if samples.shape[0] < 1:
            raise ConfigurationError("A panel needs at least one sample!")
        if (
            self.mode == "magnitude"
            and not self.meta.get("noise_level")
            and np.any(samples < 0.0)
        ):
            raise ConfigurationError(
                "Noise free magnitude samples must be non negative!"
            )
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "channels", tuple(self.channels))

    @property
    def n_samples(self) -> int:
        """Number of samples T."""
        return self.samples.shape[0]

    @property
    def nodes(self) -> List[int]:
        """Measured node ids, in column order."""
        return list(dict.fromkeys(n for n, _ in self.channels))

    @property
    def labels(self) -> Dict[int, Tuple[Phase, ...]]:
        """Declared phase labels of every node, in column order."""
        out: Dict[int, List[Phase]] = {}
        for node, phase in self.channels:
            out.setdefault(node, []).append(phase)
        return {node: tuple(phases) for node, phases in out.items()}

    @property
    def phase_counts(self) -> Dict[int, int]:
        """Number of channels of every node."""
        return {node: len(phases) for node, phases in self.labels.items()}

    def columns(self, node: int) -> List[int]:
        """Column positions of `node`."""
        return [k for k, (n, _) in enumerate(self.channels) if n == node]


def sample_injections(
    net: RadialNetwork,
    spec: InjectionSpec,
    n_samples: int,
    seed: Optional[int] = None,
) -> InjectionPanel:
    """
    Draw complex injection fluctuations around a constant base.

    The real and imaginary parts are independent, each with covariance
    ``Sigma / 2`` where ``Sigma = D^1/2 ((1 - eps) I + eps 11^T) D^1/2`` and D
    holds the channel variances, so that ``E|i - mean|^2`` is the channel
    variance.

    Parameters
    ----------
    net : RadialNetwork
        The network, the reference is not injected.
    spec : InjectionSpec
        Injection statistics.
    n_samples : int
        Number of samples T (>= 1).
    seed : Optional[int], optional
        Seed of the generator. The default is None.

    Raises
    ------
    ConfigurationError
        If ``n_samples < 1``.

    Returns
    -------
    InjectionPanel
        The injections, channels ordered as the reduced index.
    """
    if n_samples < 1:
        raise ConfigurationError(f"Expected at least one sample, got {n_samples}!")
    index = BlockIndex.from_network(net, exclude=[net.reference])
    rng = np.random.default_rng(seed)
    shape = (n_samples, index.size)

    def _draw(size: Tuple[int, int]) -> NDArrayFloat:
        if spec.distribution == "laplace":
            return rng.laplace(scale=1.0 / np.sqrt(2.0), size=size)
        return rng.standard_normal(size)

    parts = []
    for _ in range(2):
        x = np.sqrt(1.0 - spec.epsilon) * _draw(shape)
        x += np.sqrt(spec.epsilon) * _draw((n_samples, 1))
        parts.append(x)
    scale = np.sqrt(spec.channel_variances(index) / 2.0)
    samples = scale * (parts[0] + 1j * parts[1])
    if spec.base is not None:
        samples = samples + complex(spec.base)
    return InjectionPanel(
        channels=index.channels,
        samples=samples,
        meta={"seed": seed, "s2": spec.s2, "epsilon": spec.epsilon},
    )


def voltages_from_injections(
    net: RadialNetwork,
    injections: InjectionPanel,
    z_red: Optional[NDArrayComplex] = None,
    rate_hz: float = DEFAULT_RATE_HZ,
) -> VoltagePanel:
    """
    Map injections to voltage differences, ``v = Z_red i`` for every sample.

    Parameters
    ----------
    net : RadialNetwork
        The network.
    injections : InjectionPanel
        Injections ordered as the reduced index.
    z_red : Optional[NDArrayComplex], optional
        Precomputed reduced impedance. The default is :func:`impedance_by_paths`.
    rate_hz : float, optional
        Sampling rate. The default is 120.

    Returns
    -------
    VoltagePanel
        Phasor panel.
    """
    Z = impedance_by_paths(net) if z_red is None else np.asarray(z_red)
    if Z.shape[0] != len(injections.channels):
        raise ConfigurationError(
            f"The injections have {len(injections.channels)} channels but the "
            f"reduced impedance has {Z.shape[0]}!"
        )
    return VoltagePanel(
        mode="phasor",
        channels=injections.channels,
        samples=injections.samples @ Z.T,
        rate_hz=rate_hz,
        meta=dict(injections.meta),
    )


def _check_channel_variances(panel: VoltagePanel) -> NDArrayFloat:
    var = np.var(panel.samples, axis=0, ddof=1)
    for k, v in enumerate(var):
        if not v > 0.0:
            raise DegenerateChannelError(
                panel.channels[k],
                f"The channel {panel.channels[k][0]}_{panel.channels[k][1]} has a zero "
                "empirical variance!",
            )
    return var


def add_noise(panel: VoltagePanel, noise: NoiseSpec) -> VoltagePanel:
    """
    Add white noise calibrated to the empirical variance of every channel.

    Phasor panels receive circular complex noise (half the variance on each
    part), magnitude panels real Gaussian noise. Channel means are kept, so
    noisy magnitudes may fall below zero.

    Parameters
    ----------
    panel : VoltagePanel
        Input panel with T >= 2.
    noise : NoiseSpec
        Noise level and seed.

    Raises
    ------
    ConfigurationError
        If the panel has fewer than two samples.
    DegenerateChannelError
        If a channel has zero variance and the level is positive.

    Returns
    -------
    VoltagePanel
        The noisy panel, or `panel` itself for a zero level.
    """
    if noise.level == 0.0:
        return panel
    if panel.n_samples < 2:
        raise ConfigurationError("At least two samples are needed to calibrate noise!")
    var = _check_channel_variances(panel)
    rng = np.random.default_rng(noise.seed)
    shape = panel.samples.shape
    if panel.mode == "phasor":
        n = np.sqrt(noise.level * var / 2.0) * (
            rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        )
    else:
        n = np.sqrt(noise.level * var) * rng.standard_normal(shape)
    samples = panel.samples + n
    return replace(
        panel, samples=samples, meta={**panel.meta, "noise_level": noise.level}
    )


def balanced_reference(v_ref: float = 1.0) -> NDArrayComplex:
    """Balanced reference phasors of phases a, b, c (0, -120 and +120 degrees)."""
    return v_ref * np.exp(1j * np.deg2rad([0.0, -120.0, 120.0]))


def to_magnitudes(
    panel: VoltagePanel, reference: Optional[npt.ArrayLike] = None
) -> VoltagePanel:
    """
    Keep only voltage magnitudes.

    Parameters
    ----------
    panel : VoltagePanel
        Phasor panel.
    reference : Optional[npt.ArrayLike], optional
        Reference phasor of phases a, b, c (see :func:`balanced_reference`).
        When given, the magnitude of ``reference + difference`` is returned,
        otherwise the modulus of the stored samples. The default is None.

    Raises
    ------
    ConfigurationError
        If the panel is already a magnitude panel.

    Returns
    -------
    VoltagePanel
        Magnitude panel.

    Examples
    --------
    >>> p = VoltagePanel("phasor", ((1, Phase.A),), np.array([[3 + 4j]]))
    >>> to_magnitudes(p).samples.tolist()
    [[5.0]]
    """
    if panel.mode != "phasor":
        raise ConfigurationError("Magnitudes can only be taken from a phasor panel!")
    samples = panel.samples
    meta = dict(panel.meta)
    if reference is not None:
        ref = np.asarray(reference, dtype=np.complex128)
        samples = samples + ref[[p.value for _, p in panel.channels]]
        meta["v_ref"] = float(np.abs(ref).max())
    return replace(panel, mode="magnitude", samples=np.abs(samples), meta=meta)


def scramble_phases(
    panel: VoltagePanel, seed: Optional[int] = None, keep: Iterable[int] = ()
) -> Tuple[VoltagePanel, Dict[int, Tuple[Phase, ...]]]:
    """
    Randomly permute the columns of every node, hiding the phase labels.

    Declared labels stay canonical, only the column content moves.

    Parameters
    ----------
    panel : VoltagePanel
        Input panel.
    seed : Optional[int], optional
        Seed of the permutations. The default is None.
    keep : Iterable[int], optional
        Nodes left untouched. The default is ().

    Returns
    -------
    Tuple[VoltagePanel, Dict[int, Tuple[Phase, ...]]]
        The scrambled panel and the true label of every column of every node.
    """
    rng = np.random.default_rng(seed)
    kept = set(keep)
    order = np.arange(len(panel.channels))
    true_labels: Dict[int, Tuple[Phase, ...]] = {}
    for node, labels in panel.labels.items():
        cols = panel.columns(node)
        perm = np.arange(len(cols)) if node in kept else rng.permutation(len(cols))
        order[cols] = np.asarray(cols)[perm]
        true_labels[node] = tuple(labels[k] for k in perm)
    meta = {
        **panel.meta,
        "true_labels": {
            str(n): "".join(p.label for p in m) for n, m in true_labels.items()
        },
    }
    return replace(panel, samples=panel.samples[:, order], meta=meta), true_labels


def simulate_panel(
    net: RadialNetwork,
    spec: Optional[InjectionSpec] = None,
    n_samples: int = 7200,
    seed: Optional[int] = None,
    noise: float = 0.0,
    mode: Mode = "phasor",
    v_ref: float = 1.0,
    scramble: bool = False,
    z_red: Optional[NDArrayComplex] = None,
    rate_hz: float = DEFAULT_RATE_HZ,
) -> VoltagePanel:
    """
    Simulate a measurement panel of a network.

    Runs injections, voltages, magnitudes (if requested), noise and phase
    scrambling (if requested), each stage with its own seed derived from
    `seed`. Magnitudes are taken around the balanced reference of `v_ref`.
    Scrambling leaves the children of the reference untouched.

    Parameters
    ----------
    net : RadialNetwork
        The network.
    spec : Optional[InjectionSpec], optional
        Injection statistics. The default is :class:`InjectionSpec()`.
    n_samples : int, optional
        Number of samples. The default is 7200 (one minute at 120 Hz).
    seed : Optional[int], optional
        Master seed. The default is None (fresh entropy).
    noise : float, optional
        Noise level. The default is 0.
    mode : Mode, optional
        "phasor" or "magnitude". The default is "phasor".
    v_ref : float, optional
        Reference voltage magnitude in per-unit. The default is 1.0.
    scramble : bool, optional
        Whether to scramble the local phase order. The default is False.
    z_red : Optional[NDArrayComplex], optional
        Precomputed reduced impedance. The default is None.
    rate_hz : float, optional
        Sampling rate. The default is 120.

    Returns
    -------
    VoltagePanel
        The panel, with the true labels in ``meta["true_labels"]`` when scrambled.
    """
    _spec = InjectionSpec() if spec is None else spec
    _seed = int(np.random.default_rng().integers(2**63)) if seed is None else seed
    injections = sample_injections(
        net, _spec, n_samples, seed=derive_seed(_seed, _INJECTION_STREAM)
    )
    panel = voltages_from_injections(net, injections, z_red=z_red, rate_hz=rate_hz)
    if mode == "magnitude":
        panel = to_magnitudes(panel, balanced_reference(v_ref))
    elif mode != "phasor":
        raise ConfigurationError(
            f'Unknown panel mode "{mode}", expected "phasor" or "magnitude"!'
        )
    panel = add_noise(panel, NoiseSpec(noise, seed=derive_seed(_seed, _NOISE_STREAM)))
    if scramble:
        keep = net.children.get(net.reference, [])
        panel, _ = scramble_phases(
            panel, seed=derive_seed(_seed, _SCRAMBLE_STREAM), keep=keep
        )
    meta = {
        **panel.meta,
        "seed": _seed,
        "s2": _spec.s2,
        "epsilon": _spec.epsilon,
        "distribution": _spec.distribution,
        "noise_level": noise,
        "rate_hz": rate_hz,
        "T": n_samples,
        "mode": mode,
        "v_ref": v_ref,
    }
    logger.debug(
        f"Simulated a {mode} panel of '{net.name}': T={n_samples}, "
        f"{len(panel.channels)} channels, noise {noise}."
    )
    return replace(panel, meta=meta)


def channel_column_names(panel: VoltagePanel) -> List[str]:
    """CSV column names of the channels of a panel."""
    if panel.mode == "phasor":
        return [f"{n}_{p}_{part}" for n, p in panel.channels for part in ("re", "im")]
    return [f"{n}_{p}_mag" for n, p in panel.channels]


def panel_to_frame(panel: VoltagePanel) -> pd.DataFrame:
    """Tabular view of a panel with a leading time column."""
    if panel.mode == "phasor":
        data = np.empty((panel.n_samples, 2 * len(panel.channels)))
        data[:, 0::2] = panel.samples.real
        data[:, 1::2] = panel.samples.imag
    else:
        data = panel.samples
    df = pd.DataFrame(data, columns=channel_column_names(panel))
    df.insert(0, "t", np.arange(panel.n_samples) / panel.rate_hz)
    return df


def save_panel(
    panel: VoltagePanel,
    fpath: Union[str, Path],
    network: Optional[Union[str, Path]] = None,
) -> Path:
    """
    Write a panel CSV and its JSON sidecar.

    Parameters
    ----------
    panel : VoltagePanel
        The panel.
    fpath : Union[str, Path]
        CSV path; the sidecar is written next to it with a ``.json`` suffix.
    network : Optional[Union[str, Path]], optional
        Network file recorded in the sidecar. The default is None.

    Returns
    -------
    Path
        The CSV path.
    """
    _fpath = Path(fpath)
    _fpath.parent.mkdir(parents=True, exist_ok=True)
    panel_to_frame(panel).to_csv(_fpath, index=False, float_format="%.17g")
    sidecar = {
        **panel.meta,
        "mode": panel.mode,
        "rate_hz": panel.rate_hz,
        "T": panel.n_samples,
        "network": None if network is None else str(network),
    }
    write_json(sidecar, sidecar_path(_fpath))
    logger.info(f"Panel written to {_fpath}.")
    return _fpath


def _parse_column(name: str) -> Tuple[int, Phase, str]:
    try:
        node, phase, part = name.split("_")
        return int(node), Phase.from_label(phase), part
    except ValueError as e:
        raise ConfigurationError(f'Cannot parse the panel column "{name}"!') from e


def load_panel(fpath: Union[str, Path]) -> VoltagePanel:
    """
    Read a panel CSV and, when present, its JSON sidecar.

    Raises
    ------
    ConfigurationError
        If the header does not follow the panel schema.
    """
    df = pd.read_csv(fpath, float_precision="round_trip")
    names = [c for c in df.columns if c != "t"]
    parsed = [_parse_column(c) for c in names]
    parts = {part for _, _, part in parsed}
    side = sidecar_path(fpath)
    meta: Dict[str, Any] = read_json(side) if side.exists() else {}
    rate_hz = float(meta.get("rate_hz", DEFAULT_RATE_HZ))
    if parts == {"mag"}:
        channels = tuple((n, p) for n, p, _ in parsed)
        return VoltagePanel("magnitude", channels, df[names].to_numpy(), rate_hz, meta)
    if parts != {"re", "im"} or len(parsed) % 2 != 0:
        raise ConfigurationError(
            f"The columns of {fpath} mix or miss the re/im/mag suffixes!"
        )
    channels = tuple((n, p) for n, p, part in parsed if part == "re")
    values = df[names].to_numpy()
    samples = values[:, 0::2] + 1j * values[:, 1::2]
    return VoltagePanel("phasor", channels, samples, rate_hz, meta)


def true_labels_from_meta(
    meta: Dict[str, Any]
) -> Optional[Dict[int, Tuple[Phase, ...]]]:
    """True labels stored by :func:`scramble_phases`, if any."""
    if "true_labels" not in meta:
        return None
    return {
        int(n): tuple(Phase.from_label(c) for c in m)
        for n, m in meta["true_labels"].items()
    }
