"""
Test the system matrices.

@author: Antoine COLLET
"""

import json
import re

import numpy as np
import pytest

from phasetopo.admittance import (
    BlockIndex,
    build_admittance,
    build_B,
    build_incidence,
    dump_matrix,
    impedance_by_inverse,
    impedance_by_paths,
    invert,
    path_impedances,
    reduce,
    system_matrices,
)
from phasetopo.exceptions import NetworkError, SingularMatrixError
from phasetopo.network import ABC, LineModel, Phase, PhaseSet, RadialNetwork
from phasetopo.network import random_radial, toynet


@pytest.fixture
def tmp_folder(tmp_path_factory):
    """Create a temporary directory"""
    return tmp_path_factory.mktemp("tmp_folder")


def test_block_index() -> None:
    net = toynet()
    index = BlockIndex.from_network(net)
    assert index.size == net.n_channels
    assert index.nodes == list(range(9))
    assert index.block(3) == slice(9, 11)
    assert index.channels[index.position(4, Phase.B)] == (4, Phase.B)
    with pytest.raises(KeyError, match=re.escape("Node 4 has no phase c!")):
        index.position(4, Phase.C)

    reduced = BlockIndex.from_network(net, exclude=[0])
    assert reduced.size == net.n_channels - 3
    assert 0 not in reduced.nodes


def test_incidence() -> None:
    net = toynet()
    A_hat, index = build_incidence(net)
    assert A_hat.shape == (index.size, sum(len(e.phases) for e in net.edges))
    # One +1 and one -1 per edge-phase column
    np.testing.assert_array_equal(A_hat.sum(axis=0), 0.0)
    np.testing.assert_array_equal(np.abs(A_hat).sum(axis=0), 2.0)
    # The first column is phase a of the line 0 -> 1
    assert A_hat[index.position(0, Phase.A), 0] == 1.0
    assert A_hat[index.position(1, Phase.A), 0] == -1.0


def test_admittance_factorization() -> None:
    for seed in range(20):
        net = random_radial(4, 3, 3, seed=seed)
        m = build_admittance(net)
        np.testing.assert_allclose(
            m.Y_hat, m.A_hat @ m.D_hat @ m.A_hat.T, atol=1e-9, rtol=0
        )


def test_reduce() -> None:
    net = toynet()
    m = reduce(build_admittance(net), net)
    n = net.n_channels - 3
    assert m.Y_red.shape == (n, n)
    assert m.A_red.shape[0] == n
    np.testing.assert_allclose(m.Y_red, m.A_red @ m.D_hat @ m.A_red.T, atol=1e-9)


def test_reduce_needs_three_phase_reference() -> None:
    net = toynet()
    with pytest.raises(NetworkError, match="must carry the three phases"):
        reduce(build_admittance(net), net, reference=3)


def test_B_is_pseudo_inverse() -> None:
    for seed in range(20):
        net = random_radial(3, 4, 5, seed=seed)
        m = system_matrices(net)
        np.testing.assert_array_equal(m.B.T @ m.A_red, np.eye(m.A_red.shape[1]))
        assert set(np.unique(m.B)) <= {-1.0, 0.0}
        np.testing.assert_array_equal(m.B, build_B(net))


def test_path_impedances() -> None:
    net = toynet()
    paths = path_impedances(net)
    np.testing.assert_array_equal(paths.values[0], 0.0)
    # Additive along the root path
    for child, parent in net.tree_edges():
        line = net.edges[net.edge_position(parent, child)]
        np.testing.assert_allclose(
            paths.values[child], paths.values[parent] + line.padded()
        )
    block = paths.block(4, [Phase.B], [Phase.A, Phase.B])
    assert block.shape == (1, 2)


def test_impedance_by_paths_matches_inverse() -> None:
    for seed in range(50):
        rng = np.random.default_rng(seed)
        net = random_radial(
            1 + int(rng.integers(1, 5)),
            int(rng.integers(0, 4)),
            int(rng.integers(0, 4)),
            seed=seed,
        )
        z_paths = impedance_by_paths(net)
        z_inv = impedance_by_inverse(net)
        scale = np.abs(z_inv).max()
        np.testing.assert_allclose(z_paths, z_inv, atol=1e-9 * scale, rtol=0)
        np.testing.assert_allclose(z_paths, z_paths.T)


def test_impedance_disjoint_paths_are_zero() -> None:
    # Two branches hanging directly below the reference
    nodes = ((0, ABC), (1, ABC), (2, PhaseSet.parse("b")))
    edges = (
        LineModel(0, 1, "abc", np.eye(3) * (0.01 + 0.02j)),
        LineModel(0, 2, "b", [[0.02 + 0.01j]]),
    )
    net = RadialNetwork(nodes, edges)
    z_red = impedance_by_paths(net)
    index = BlockIndex.from_network(net, exclude=[0])
    np.testing.assert_array_equal(z_red[index.block(1), index.block(2)], 0.0)
    assert z_red[index.block(2), index.block(2)][0, 0] == 0.02 + 0.01j


def test_singular_line_is_named() -> None:
    nodes = ((0, ABC), (1, PhaseSet.parse("ab")))
    net = RadialNetwork(nodes, (LineModel(0, 1, "ab", [[1.0, 1.0], [1.0, 1.0]]),))
    # Reported by validation before any inversion
    with pytest.raises(NetworkError, match="0->1"):
        build_admittance(net)


def test_invert() -> None:
    z = np.array([[2.0, 1.0j], [1.0j, 3.0]])
    np.testing.assert_allclose(invert(z) @ z, np.eye(2), atol=1e-12)
    with pytest.raises(
        SingularMatrixError, match=re.escape("The reduced admittance is singular")
    ):
        invert(np.ones((2, 2)), "reduced admittance")


def test_dump_matrix(tmp_folder) -> None:
    fpath = dump_matrix(
        np.array([[1 + 2j, 0], [0, 3]]), tmp_folder.joinpath("z.json")
    )
    data = json.loads(fpath.read_text())
    assert data["shape"] == [2, 2]
    assert data["data"][0][0] == [1.0, 2.0]
    assert data["data"][1][1] == [3.0, 0.0]
