"""
Test the error metrics and the experiment harness.

@author: Antoine COLLET
"""

import dataclasses
import re
from contextlib import contextmanager

import pandas as pd
import pytest

from phasetopo import harness
from phasetopo.exceptions import ConfigurationError, EvaluationError, TrialError
from phasetopo.harness import (
    SWEEP_COLUMNS,
    SweepGrid,
    TrialConfig,
    build_network,
    edge_frequency_frame,
    load_sweep_config,
    phase_error,
    run_trial,
    run_trials,
    save_sweep,
    summarize_sweep,
    sweep,
    topology_error,
)
from phasetopo.network import ABC, Phase, network_to_dict, save_network, toynet
from phasetopo.recover import gpt


@contextmanager
def does_not_raise():
    yield


@pytest.fixture
def tmp_folder(tmp_path_factory):
    """Create a temporary directory"""
    return tmp_path_factory.mktemp("tmp_folder")


def chain_edges(n: int):
    return [(i, i - 1) for i in range(1, n + 1)]


def test_topology_error() -> None:
    true = chain_edges(10)
    assert topology_error(true, true) == 0.0
    # Orientation does not matter
    assert topology_error([(p, c) for c, p in true], true) == 0.0
    # One wrong edge is also one missing edge
    est = true[:-1] + [(10, 0)]
    assert topology_error(est, true) == pytest.approx(0.2)
    assert topology_error([], true) == 1.0
    assert topology_error([(1, 0), (2, 0)], [(0, 1), (2, 1)]) == 1.0
    with pytest.raises(ConfigurationError, match="at least one true edge"):
        topology_error([(1, 0)], [])


def test_phase_error() -> None:
    true = {i: ABC.members for i in range(11)}
    assert phase_error(true, true) == 0.0
    est = dict(true)
    est[4] = (Phase.B, Phase.A, Phase.C)
    # Two channels wrong out of 30, reference excluded
    assert phase_error(est, true) == pytest.approx(2 / 30)
    est = {i: (Phase.B, Phase.C, Phase.A) for i in range(11)}
    assert phase_error(est, true) == 1.0
    assert phase_error({0: ABC.members}, {0: ABC.members}) == 0.0
    with pytest.raises(EvaluationError, match="differ from the true nodes"):
        phase_error({0: ABC.members, 1: ABC.members}, true)
    with pytest.raises(EvaluationError, match="Node 1 has 1 estimated labels"):
        phase_error({0: ABC.members, 1: (Phase.A,)}, {0: ABC.members, 1: ABC.members})


def test_build_network(tmp_folder) -> None:
    assert build_network("toynet").name == "toynet"
    net = build_network("ieee13", seed=3)
    assert net.n_nodes == 13
    assert network_to_dict(build_network("ieee13", seed=3)) == network_to_dict(net)

    random_net = build_network({"n3": 4, "n2": 1, "n1": 2, "dominance": 3.0}, seed=1)
    assert random_net.n_nodes == 7

    fpath = save_network(toynet(), tmp_folder.joinpath("toy.json"))
    assert network_to_dict(build_network(str(fpath))) == network_to_dict(toynet())

    with pytest.raises(
        ConfigurationError, match=re.escape("Unknown random network keys ['n4']")
    ):
        build_network({"n4": 2})
    with pytest.raises(ConfigurationError, match="neither a preset nor an existing"):
        build_network("ieee8500")


@pytest.mark.parametrize(
    "kwargs, expected_exception",
    [
        ({}, does_not_raise()),
        ({"samples": 1}, pytest.raises(ConfigurationError, match="2 samples")),
        ({"trials": 0}, pytest.raises(ConfigurationError, match="at least 1 trial")),
        ({"mode": "rms"}, pytest.raises(ConfigurationError, match="Unknown mode")),
        (
            {"variant": "both"},
            pytest.raises(ConfigurationError, match='Unknown variant "both"'),
        ),
        ({"n_jobs": 0}, pytest.raises(ConfigurationError, match="n_jobs >= 1")),
        ({"epsilon": 1.5}, pytest.raises(ConfigurationError, match="epsilon")),
        ({"s2": -1.0}, pytest.raises(ConfigurationError, match="variance must be > 0")),
    ],
)
def test_trial_config(kwargs, expected_exception) -> None:
    with expected_exception:
        TrialConfig(**kwargs)


def test_trial_config_from_dict() -> None:
    cfg = TrialConfig.from_dict({"samples": 120, "network": {"n3": 5}})
    assert cfg.samples == 120 and cfg.trials == 30
    assert TrialConfig.from_dict(None) == TrialConfig()
    with pytest.raises(ConfigurationError, match=re.escape("keys ['T']")):
        TrialConfig.from_dict({"T": 120})


@pytest.mark.parametrize("variant", ["joint", "phase_only", "topology_only"])
@pytest.mark.parametrize("mode", ["phasor", "magnitude"])
def test_run_trials_noiseless(variant, mode) -> None:
    cfg = TrialConfig(
        network="toynet", samples=7200, trials=3, mode=mode, variant=variant
    )
    report = run_trials(cfg)
    assert [d.trial for d in report.details] == [0, 1, 2]
    assert report.topology_errors == [0.0, 0.0, 0.0]
    assert report.phase_errors == [0.0, 0.0, 0.0]
    assert report.mean_topology_error == 0.0 and report.std_phase_error == 0.0
    assert report.wall_time >= 0.0


def test_run_trials_is_deterministic() -> None:
    cfg = TrialConfig(
        network={"n3": 5, "n2": 2, "n1": 2}, samples=200, noise=1.0, trials=4
    )
    a = run_trials(cfg).to_frame().drop(columns="wall_time")
    b = run_trials(cfg).to_frame().drop(columns="wall_time")
    pd.testing.assert_frame_equal(a, b)
    assert a["seed"].nunique() == 4

    threaded = run_trials(TrialConfig(**{**cfg.__dict__, "n_jobs": 2}))
    pd.testing.assert_frame_equal(threaded.to_frame().drop(columns="wall_time"), a)

    other = run_trials(TrialConfig(**{**cfg.__dict__, "seed": 1}))
    assert list(other.to_frame()["seed"]) != list(a["seed"])


def test_run_trial_wraps_errors() -> None:
    cfg = TrialConfig(network={"n3": 4, "r_min": -1.0}, trials=1)
    with pytest.raises(TrialError, match="Trial 2 failed") as excinfo:
        run_trial(cfg, 2)
    assert excinfo.value.trial == 2


def test_run_trial_wraps_evaluation_errors(monkeypatch) -> None:
    def drop_a_node(panel, **kwargs):
        result = gpt(panel, **kwargs)
        phases = {n: m for n, m in result.phases.items() if n != 8}
        return dataclasses.replace(result, phases=phases)

    monkeypatch.setattr(harness, "gpt", drop_a_node)
    cfg = TrialConfig(network="toynet", samples=200, trials=1)
    message = "Trial 1 failed: The estimated nodes"
    with pytest.raises(TrialError, match=message) as excinfo:
        run_trial(cfg, 1)
    assert excinfo.value.trial == 1
    assert isinstance(excinfo.value.__cause__, EvaluationError)


def test_edge_frequencies() -> None:
    report = run_trials(TrialConfig(network="toynet", samples=7200, trials=2))
    assert report.edge_counts == {e: 2 for e in toynet().tree_edges()}
    df = edge_frequency_frame(report)
    assert list(df.columns) == ["child", "parent", "count", "frequency"]
    assert len(df) == 8
    assert (df["frequency"] == 1.0).all()


def test_sweep_grid() -> None:
    base = TrialConfig(network="toynet", trials=2)
    cells = SweepGrid(samples=[100, 200], noise=[0.0, 0.1, 1.0]).cells(base)
    assert len(cells) == 6
    assert (cells[0].samples, cells[0].noise) == (100, 0.0)
    assert (cells[1].samples, cells[1].noise) == (100, 0.1)
    assert all(c.epsilon == base.epsilon and c.trials == 2 for c in cells)
    assert SweepGrid().cells(base) == [base]

    with pytest.raises(ConfigurationError, match='The sweep axis "noise" is empty'):
        SweepGrid(noise=[])
    with pytest.raises(ConfigurationError, match=re.escape("Unknown sweep axes ['T']")):
        SweepGrid.from_dict({"T": [100]})


def test_sweep(tmp_folder) -> None:
    base = TrialConfig(network="toynet", samples=300, noise=0.1, trials=2)
    frame = sweep(SweepGrid(epsilon=[0.0, 0.5]), base)
    assert list(frame.columns) == SWEEP_COLUMNS
    assert len(frame) == 4
    assert list(frame["cell"]) == [0, 0, 1, 1]
    assert list(frame["trial"]) == [0, 1, 0, 1]

    # A single cell reproduces run_trials
    single = sweep(SweepGrid(), base)
    report = run_trials(base)
    assert list(single["topology_error"]) == report.topology_errors
    assert list(single["seed"]) == [d.seed for d in report.details]

    # Without timings, identical runs give identical files
    untimed = sweep(SweepGrid(), base, timings=False)
    assert list(untimed.columns) == SWEEP_COLUMNS[:-1]
    a = save_sweep(untimed, tmp_folder.joinpath("a.csv")).read_bytes()
    again = sweep(SweepGrid(), base, timings=False)
    assert save_sweep(again, tmp_folder.joinpath("b.csv")).read_bytes() == a

    summary = summarize_sweep(frame)
    assert len(summary) == 2
    assert list(summary["trials"]) == [2, 2]
    assert "topology_error_mean" in summary.columns

    fpath = save_sweep(frame, tmp_folder.joinpath("runs", "sweep.csv"))
    loaded = pd.read_csv(fpath)
    assert list(loaded.columns) == SWEEP_COLUMNS
    assert list(loaded["topology_error"]) == list(frame["topology_error"])


def test_load_sweep_config(tmp_folder) -> None:
    fpath = tmp_folder.joinpath("sweep.yaml")
    fpath.write_text(
        "base:\n"
        "  network: toynet\n"
        "  trials: 5\n"
        "grid:\n"
        "  samples: [120, 7200]\n"
        "  noise: [0.0, 10.0]\n",
        encoding="utf-8",
    )
    grid, base = load_sweep_config(fpath)
    assert base.network == "toynet" and base.trials == 5
    assert grid.samples == [120, 7200]
    assert len(grid.cells(base)) == 4

    fpath.write_text("runs: {}\n", encoding="utf-8")
    with pytest.raises(ConfigurationError, match="sections"):
        load_sweep_config(fpath)
    fpath.write_text("- 1\n- 2\n", encoding="utf-8")
    with pytest.raises(ConfigurationError, match="not a mapping"):
        load_sweep_config(fpath)
