"""
Multi-phase system matrices of a radial network.

Build the signed incidence, line admittance, nodal admittance, pseudo-inverse
and reduced impedance matrices. The reduced impedance is available both from
root path sums and from a numeric inversion of the reduced admittance, the
latter serving as an oracle for the former.

Channels are ordered by node id, then by canonical phase within a node. Edge
phase channels follow the order of ``net.edges``, then canonical phases.
"""

import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

import networkx as nx
import numpy as np
import numpy.typing as npt
from scipy.linalg import lu_factor, lu_solve

from phasetopo.exceptions import NetworkError, SingularMatrixError
from phasetopo.network import (
    RCOND_MIN,
    Phase,
    RadialNetwork,
    check_valid,
    reciprocal_condition,
)
from phasetopo.utils import NDArrayComplex, NDArrayFloat, complex_to_pairs, write_json

# pylint: disable=C0103 # does not confrom to snake case naming style

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BlockIndex:
    """
    Position of every (node, phase) channel in the flattened channel order.

    Attributes
    ----------
    offsets : Dict[int, Tuple[int, int]]
        Node id -> (start, length) in the channel order.
    channels : Tuple[Tuple[int, Phase], ...]
        The (node, phase) label of every channel.
    """

    offsets: Dict[int, Tuple[int, int]]
    channels: Tuple[Tuple[int, Phase], ...]

    @classmethod
    def from_network(
        cls, net: RadialNetwork, exclude: Iterable[int] = ()
    ) -> "BlockIndex":
        """Index the channels of `net`, leaving out the nodes in `exclude`."""
        skipped = set(exclude)
        offsets: Dict[int, Tuple[int, int]] = {}
        channels: List[Tuple[int, Phase]] = []
        for node in net.node_ids:
            if node in skipped:
                continue
            phases = net.phase_sets[node]
            offsets[node] = (len(channels), len(phases))
            channels.extend((node, p) for p in phases)
        return cls(offsets, tuple(channels))

    @property
    def size(self) -> int:
        """Total number of channels."""
        return len(self.channels)

    @property
    def nodes(self) -> List[int]:
        """Indexed node ids, ascending."""
        return list(self.offsets.keys())

    def block(self, node: int) -> slice:
        """Slice of the channels of `node`."""
        start, length = self.offsets[node]
        return slice(start, start + length)

    def position(self, node: int, phase: Phase) -> int:
        """Position of the channel (node, phase)."""
        start, length = self.offsets[node]
        for k in range(start, start + length):
            if self.channels[k][1] == phase:
                return k
        raise KeyError(f"Node {node} has no phase {phase}!")


@dataclass(frozen=True)
class SystemMatrices:
    """
    System matrices of a network. Members not built yet are None.

    Attributes
    ----------
    index : BlockIndex
        Channel index of the full matrices.
    A_hat : Optional[NDArrayFloat]
        Signed incidence, channels x edge-phase channels.
    D_hat : Optional[NDArrayComplex]
        Block diagonal matrix of the line admittances.
    Y_hat : Optional[NDArrayComplex]
        Nodal admittance matrix (singular).
    reduced_index : Optional[BlockIndex]
        Channel index without the reference.
    A_red : Optional[NDArrayFloat]
        Incidence without the reference rows.
    Y_red : Optional[NDArrayComplex]
        Reduced admittance matrix.
    B : Optional[NDArrayFloat]
        Right pseudo-inverse of ``A_red`` transposed.
    Z_red : Optional[NDArrayComplex]
        Reduced impedance matrix.
    """

    index: BlockIndex
    A_hat: Optional[NDArrayFloat] = None
    D_hat: Optional[NDArrayComplex] = None
    Y_hat: Optional[NDArrayComplex] = None
    reduced_index: Optional[BlockIndex] = None
    A_red: Optional[NDArrayFloat] = None
    Y_red: Optional[NDArrayComplex] = None
    B: Optional[NDArrayFloat] = None
    Z_red: Optional[NDArrayComplex] = None


@dataclass(frozen=True)
class PathImpedance:
    """
    Impedance of the path from each node to the reference.

    ``values[n]`` is a 3x3 matrix indexed by phase a, b, c. Couplings absent
    from a line contribute zero.
    """

    values: Dict[int, NDArrayComplex]

    def block(
        self, node: int, rows: Iterable[Phase], cols: Iterable[Phase]
    ) -> NDArrayComplex:
        """Sub-matrix of the path impedance of `node` on the given phases."""
        r = [p.value for p in rows]
        c = [p.value for p in cols]
        return self.values[node][np.ix_(r, c)]


def invert(matrix: npt.ArrayLike, what: str = "matrix") -> NDArrayComplex:
    """
    Invert a dense matrix with a pivoted LU factorization.

    Parameters
    ----------
    matrix : npt.ArrayLike
        Square matrix.
    what : str, optional
        Name of the matrix used in the error message. The default is "matrix".

    Raises
    ------
    SingularMatrixError
        If the reciprocal condition number is below 1e-12.

    Returns
    -------
    NDArrayComplex
        The inverse.
    """
    arr = np.asarray(matrix, dtype=np.complex128)
    rcond = reciprocal_condition(arr)
    if rcond < RCOND_MIN:
        raise SingularMatrixError(
            f"The {what} is singular (reciprocal condition {rcond:.3e} < {RCOND_MIN})!"
        )
    logger.debug(f"Inverting the {what} {arr.shape}, reciprocal condition {rcond:.3e}.")
    lu_piv = lu_factor(arr)
    return lu_solve(lu_piv, np.eye(arr.shape[0], dtype=np.complex128))


def edge_channels(net: RadialNetwork) -> List[Tuple[int, Phase]]:
    """The (edge position, phase) label of every edge-phase channel."""
    return [(k, p) for k, line in enumerate(net.edges) for p in line.phases]


def build_incidence(net: RadialNetwork) -> Tuple[NDArrayFloat, BlockIndex]:
    """
    Signed node-phase x edge-phase incidence matrix.

    Entry +1 at the tail (``from_node``) and -1 at the head (``to_node``) of
    every phase of every line, 0 elsewhere.

    Parameters
    ----------
    net : RadialNetwork
        The network.

    Returns
    -------
    Tuple[NDArrayFloat, BlockIndex]
        The incidence matrix and the channel index of its rows.

    Examples
    --------
    >>> A_hat, index = build_incidence(toynet())
    >>> A_hat.sum(axis=0).tolist() == [0.0] * A_hat.shape[1]
    True
    """
    index = BlockIndex.from_network(net)
    cols = edge_channels(net)
    A_hat = np.zeros((index.size, len(cols)))
    for col, (k, phase) in enumerate(cols):
        line = net.edges[k]
        A_hat[index.position(line.from_node, phase), col] = 1.0
        A_hat[index.position(line.to_node, phase), col] = -1.0
    return A_hat, index


def line_admittances(net: RadialNetwork) -> List[NDArrayComplex]:
    """Inverse of every line impedance, in the order of ``net.edges``."""
    return [invert(line.z, f"impedance of line {line.name}") for line in net.edges]


def build_admittance(net: RadialNetwork) -> SystemMatrices:
    """
    Assemble the incidence, line admittance and nodal admittance matrices.

    The nodal admittance is assembled block by block from the line admittances
    (not from the incidence product) so that both sides of the factorization
    are built independently: off-diagonal blocks hold ``-Y_ij`` on the shared
    phases, diagonal blocks the sum of the incident line admittances.

    Parameters
    ----------
    net : RadialNetwork
        A valid network.

    Raises
    ------
    NetworkError
        If the network is not valid.
    SingularMatrixError
        If a line impedance cannot be inverted, naming the line.

    Returns
    -------
    SystemMatrices
        With ``index``, ``A_hat``, ``D_hat`` and ``Y_hat`` populated.
    """
    check_valid(net)
    A_hat, index = build_incidence(net)
    ys = line_admittances(net)

    n_cols = A_hat.shape[1]
    D_hat = np.zeros((n_cols, n_cols), dtype=np.complex128)
    start = 0
    for y in ys:
        D_hat[start : start + y.shape[0], start : start + y.shape[0]] = y
        start += y.shape[0]

    Y_hat = np.zeros((index.size, index.size), dtype=np.complex128)
    for line, y in zip(net.edges, ys):
        tail = [index.position(line.from_node, p) for p in line.phases]
        head = [index.position(line.to_node, p) for p in line.phases]
        Y_hat[np.ix_(tail, tail)] += y
        Y_hat[np.ix_(head, head)] += y
        Y_hat[np.ix_(tail, head)] -= y
        Y_hat[np.ix_(head, tail)] -= y
    return SystemMatrices(index=index, A_hat=A_hat, D_hat=D_hat, Y_hat=Y_hat)


def reduce(
    matrices: SystemMatrices, net: RadialNetwork, reference: Optional[int] = None
) -> SystemMatrices:
    """
    Remove the reference rows and columns from the nodal admittance.

    Parameters
    ----------
    matrices : SystemMatrices
        Output of :func:`build_admittance`.
    net : RadialNetwork
        The network the matrices were built from.
    reference : Optional[int], optional
        Node to remove. The default is the network reference.

    Raises
    ------
    NetworkError
        If the reference does not carry the three phases.

    Returns
    -------
    SystemMatrices
        Copy with ``reduced_index``, ``A_red`` and ``Y_red`` populated.
    """
    ref = net.reference if reference is None else reference
    if len(net.phase_sets.get(ref, ())) != 3:
        raise NetworkError(
            f"The reference {ref} must carry the three phases to be removed!"
        )
    if matrices.Y_hat is None or matrices.A_hat is None:
        matrices = build_admittance(net)
    reduced_index = BlockIndex.from_network(net, exclude=[ref])
    keep = [matrices.index.position(n, p) for n, p in reduced_index.channels]
    return replace(
        matrices,
        reduced_index=reduced_index,
        A_red=matrices.A_hat[keep, :],
        Y_red=matrices.Y_hat[np.ix_(keep, keep)],
    )


def build_B(net: RadialNetwork) -> NDArrayFloat:
    """
    Pseudo-inverse of the reduced incidence matrix.

    Entry (node i phase a, edge kl phase b) is -1 iff a == b and kl lies on
    the path from i to the reference.

    Parameters
    ----------
    net : RadialNetwork
        A valid network.

    Returns
    -------
    NDArrayFloat
        Reduced channels x edge-phase channels matrix.
    """
    check_valid(net)
    index = BlockIndex.from_network(net, exclude=[net.reference])
    col_of = {label: col for col, label in enumerate(edge_channels(net))}
    B = np.zeros((index.size, len(col_of)))
    for row, (node, phase) in enumerate(index.channels):
        for k in net.path_to_root(node):
            B[row, col_of[(k, phase)]] = -1.0
    return B


def path_impedances(net: RadialNetwork) -> PathImpedance:
    """
    Accumulate the line impedances along every root path.

    Parameters
    ----------
    net : RadialNetwork
        A valid network.

    Returns
    -------
    PathImpedance
        Zero at the reference, additive along root paths.
    """
    values: Dict[int, NDArrayComplex] = {
        net.reference: np.zeros((3, 3), dtype=np.complex128)
    }
    for parent, child in nx.bfs_edges(nx.Graph(net.graph), net.reference):
        line = net.edges[net.edge_position(parent, child)]
        values[child] = values[parent] + line.padded()
    return PathImpedance(values)


def lowest_common_ancestors(net: RadialNetwork) -> Dict[Tuple[int, int], int]:
    """Lowest common ancestor of every pair of non-reference nodes, i <= j."""
    tree = nx.DiGraph(
        [(parent, child) for child, parent in net.parents.items()]
    )
    tree.add_node(net.reference)
    nodes = [n for n in net.node_ids if n != net.reference]
    pairs = [(i, j) for a, i in enumerate(nodes) for j in nodes[a:]]
    return dict(
        nx.tree_all_pairs_lowest_common_ancestor(tree, root=net.reference, pairs=pairs)
    )


def impedance_by_paths(net: RadialNetwork) -> NDArrayComplex:
    """
    Reduced impedance matrix from shared root path impedances.

    Block (i, j) is the path impedance of the lowest common ancestor of i and
    j restricted to the rows of the phases of i and the columns of the phases
    of j. Nodes with disjoint root paths get exact zeros.

    Parameters
    ----------
    net : RadialNetwork
        A valid network.

    Returns
    -------
    NDArrayComplex
        The reduced impedance, channels ordered as the reduced index.
    """
    check_valid(net)
    index = BlockIndex.from_network(net, exclude=[net.reference])
    paths = path_impedances(net)
    Z_red = np.zeros((index.size, index.size), dtype=np.complex128)
    for (i, j), lca in lowest_common_ancestors(net).items():
        block = paths.block(lca, net.phase_sets[i], net.phase_sets[j])
        Z_red[index.block(i), index.block(j)] = block
        Z_red[index.block(j), index.block(i)] = block.T
    return Z_red


def impedance_by_inverse(net: RadialNetwork) -> NDArrayComplex:
    """
    Reduced impedance matrix as the numeric inverse of the reduced admittance.

    Raises
    ------
    SingularMatrixError
        If the reduced admittance is singular.
    """
    matrices = reduce(build_admittance(net), net)
    return invert(matrices.Y_red, "reduced admittance")


def system_matrices(net: RadialNetwork) -> SystemMatrices:
    """
    Build every system matrix of a network.

    Parameters
    ----------
    net : RadialNetwork
        A valid network with a three-phase reference.

    Returns
    -------
    SystemMatrices
        All members populated; ``Z_red`` comes from the path formula.
    """
    matrices = reduce(build_admittance(net), net)
    logger.debug(
        f"System matrices of '{net.name}': {matrices.index.size} channels, "
        f"{matrices.A_hat.shape[1]} edge-phase channels."
    )
    return replace(matrices, B=build_B(net), Z_red=impedance_by_paths(net))


def dump_matrix(matrix: npt.ArrayLike, fpath: Union[str, Path]) -> Path:
    """
    Write a matrix as JSON for cross-implementation diffing.

    The file holds ``{"shape": [rows, cols], "data": [[[re, im], ...], ...]}``
    in row-major order.
    """
    arr = np.atleast_2d(np.asarray(matrix, dtype=np.complex128))
    return write_json({"shape": list(arr.shape), "data": complex_to_pairs(arr)}, fpath)
