"""
End-to-end checks of the library guarantees on synthetic feeders.

@author: Antoine COLLET
"""

import json
import time

import numpy as np
import pytest

from phasetopo.admittance import impedance_by_inverse, system_matrices
from phasetopo.cli import main
from phasetopo.harness import TrialConfig, run_trials
from phasetopo.network import (
    RadialNetwork,
    check_line_condition,
    preset_network,
    random_radial,
    toynet,
)
from phasetopo.recover import gpt
from phasetopo.simulate import InjectionSpec, simulate_panel
from phasetopo.stats import (
    analytic_cov,
    covariance_from_panel,
    diff_variance,
    label_ordering,
    pairwise_scores,
    phase_match_score,
)

PRESETS = ["ieee13", "ieee34", "ieee37"]


@pytest.fixture
def tmp_folder(tmp_path_factory):
    """Create a temporary directory"""
    return tmp_path_factory.mktemp("tmp_folder")


def feeder_corpus(n: int = 100):
    """Mixed feeders of up to 40 buses."""
    for seed in range(n):
        rng = np.random.default_rng(seed)
        yield random_radial(
            int(rng.integers(1, 21)),
            int(rng.integers(0, 11)),
            int(rng.integers(0, 11)),
            seed=seed,
        )


def mixed_feeder(seed: int) -> RadialNetwork:
    """Small random feeder dominated by three-phase buses."""
    rng = np.random.default_rng(seed)
    return random_radial(
        int(rng.integers(3, 9)),
        int(rng.integers(0, 3)),
        int(rng.integers(0, 3)),
        seed=seed,
    )


def test_impedance_oracles() -> None:
    start = time.perf_counter()
    for net in feeder_corpus():
        m = system_matrices(net)
        z_inv = impedance_by_inverse(net)
        np.testing.assert_allclose(m.Z_red, z_inv, rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose(
            m.Z_red @ m.Y_red, np.eye(m.Y_red.shape[0]), atol=1e-10, rtol=0
        )
    assert time.perf_counter() - start < 10.0


def test_B_identity() -> None:
    for net in feeder_corpus():
        m = system_matrices(net)
        np.testing.assert_array_equal(m.B.T @ m.A_red, np.eye(m.A_red.shape[1]))


def test_analytic_matching_is_exact() -> None:
    for seed in range(1000, 1200):
        net = mixed_feeder(seed)
        assert check_line_condition(net).holds, seed
        table = analytic_cov(net)
        for s in pairwise_scores(table):
            if net.reference in (s.i, s.j) or s.cross_set:
                continue
            expected = label_ordering(table.labels[s.i], table.labels[s.j])
            assert s.ordering == expected, (seed, s.i, s.j)


@pytest.mark.parametrize("overrides", [False, True])
def test_analytic_nearest_is_a_neighbor(overrides) -> None:
    for seed in range(2000, 2500):
        net = mixed_feeder(seed)
        spec = InjectionSpec()
        if overrides:
            rng = np.random.default_rng(seed)
            spec = InjectionSpec(
                per_node_variance={
                    n: float(1e-6 * rng.uniform(0.5, 2.0)) for n in net.node_ids
                }
            )
        table = analytic_cov(net, spec)
        labels = table.labels
        scores = list(pairwise_scores(table))
        for i in net.node_ids:
            if i == net.reference:
                continue
            nearest = min(
                (s for s in scores if s.i == i and set(labels[i]) <= set(labels[s.j])),
                key=lambda s: (s.d, s.j),
            ).j
            assert nearest in set(net.children[i]) | {net.parents[i]}, (seed, i)


@pytest.mark.parametrize("mode", ["phasor", "magnitude"])
@pytest.mark.parametrize("preset", PRESETS)
def test_exact_noiseless_recovery(preset, mode) -> None:
    report = run_trials(
        TrialConfig(network=preset, samples=7200, mode=mode, trials=34, seed=11)
    )
    assert report.topology_errors == [0.0] * 34
    assert report.phase_errors == [0.0] * 34


@pytest.mark.parametrize("preset", PRESETS)
def test_low_noise_recovery(preset) -> None:
    report = run_trials(
        TrialConfig(
            network=preset, samples=7200, noise=0.001, mode="magnitude", trials=34
        )
    )
    errors = np.array(report.topology_errors)
    assert np.mean(errors == 0.0) >= 0.95
    assert report.mean_topology_error <= 0.01


def test_more_samples_help_under_noise() -> None:
    means = [
        run_trials(
            TrialConfig(network="ieee13", samples=n_samples, noise=10.0, trials=30)
        ).mean_topology_error
        for n_samples in (120, 7200)
    ]
    assert means[0] > means[1]


def test_correlated_loads_degrade_recovery() -> None:
    reports = [
        run_trials(
            TrialConfig(
                network="ieee13", samples=1200, noise=0.1, epsilon=eps, trials=30
            )
        )
        for eps in (0.0, 0.3, 0.6, 0.9)
    ]
    means = [r.mean_topology_error for r in reports]
    stds = [r.std_topology_error for r in reports]
    inversions = [k for k in range(len(means) - 1) if means[k + 1] < means[k]]
    assert len(inversions) <= 1
    for k in inversions:
        assert means[k] - means[k + 1] <= max(stds[k], stds[k + 1])


def test_estimates_are_consistent() -> None:
    net = toynet()
    exact = analytic_cov(net)
    pairs = list(pairwise_scores(exact))
    errors = []
    for k, n_samples in enumerate((1_000, 10_000, 100_000)):
        worst = []
        for rep in range(30):
            est = covariance_from_panel(
                simulate_panel(net, n_samples=n_samples, seed=1000 * k + rep)
            )
            worst.append(
                max(
                    max(
                        abs(phase_match_score(est, s.i, s.j, s.ordering) - s.c),
                        abs(diff_variance(est, s.i, s.j, s.ordering) - s.d),
                    )
                    for s in pairs
                )
            )
        errors.append(np.mean(worst))
    assert errors[0] / errors[1] >= 2.5
    assert errors[1] / errors[2] >= 2.5


def test_recovery_speed() -> None:
    net = preset_network("ieee37", seed=0)
    panel = simulate_panel(net, n_samples=7200, seed=0, scramble=True)
    gpt(simulate_panel(net, n_samples=100, seed=1))
    start = time.perf_counter()
    result = gpt(panel)
    assert time.perf_counter() - start <= 2.0
    assert sorted(result.edges) == net.tree_edges()


def test_cli_is_deterministic(tmp_folder, capsys) -> None:
    config = tmp_folder.joinpath("sweep.yaml")
    config.write_text(
        "base:\n  network: ieee13\n  samples: 600\n  trials: 2\n"
        "grid:\n  noise: [0.0, 1.0]\n",
        encoding="utf-8",
    )

    def run_all(folder):
        net, panel = folder.joinpath("net.json"), folder.joinpath("panel.csv")
        result, metrics = folder.joinpath("result.json"), folder.joinpath("eval.json")
        commands = [
            ["gen-net", "--preset", "ieee13", "--seed", "4", "--out", str(net)],
            ["simulate", "--net", "ieee13", "--seed", "4", "--samples", "2000"]
            + ["--noise", "0.01", "--mode", "magnitude", "--scramble"]
            + ["--out", str(panel)],
            ["recover", "--panel", str(panel), "--out", str(result)],
            ["eval", "--result", str(result), "--net", str(net)]
            + ["--sidecar", str(folder.joinpath("panel.json")), "--out", str(metrics)],
            ["check-cond", "--net", str(net)],
            ["sweep", "--config", str(config), "--out", str(folder.joinpath("s.csv"))],
        ]
        stdout = []
        for argv in commands:
            assert main(argv) == 0
            stdout.append(json.loads(capsys.readouterr().out))
        return stdout

    first = run_all(tmp_folder.joinpath("first"))
    second = run_all(tmp_folder.joinpath("second"))
    # Paths aside, the printed summaries agree
    assert first[3:5] == second[3:5]
    names = ("net.json", "panel.csv", "panel.json", "result.json", "eval.json")
    for name in names + ("s.csv",):
        a = tmp_folder.joinpath("first", name).read_bytes()
        assert a == tmp_folder.joinpath("second", name).read_bytes(), name
