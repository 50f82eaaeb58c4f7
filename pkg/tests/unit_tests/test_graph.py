import networkx as nx
import numpy as np
import pytest
from pydantic import ValidationError

from src.exceptions import EmptyInterestGroupException
from src.schemas.field import FieldSystem
from src.schemas.graph import CommGraph
from src.services.graph import GraphService
from tests.conftest import make_random_system, selector_rows


def test_path_laplacian():
    laplacian = GraphService().laplacian(CommGraph(N=3, edges=[(1, 2), (2, 3)]))

    assert np.array_equal(laplacian.toarray(), [[1, -1, 0], [-1, 2, -1], [0, -1, 1]])


@pytest.mark.parametrize("graph, expected", [
    (CommGraph(N=3, edges=[(1, 2), (2, 3)]), 1.0),
    (CommGraph(N=4, edges=[(1, 2), (2, 3), (3, 4), (1, 4)]), 2.0),
    (CommGraph(N=3, edges=[(1, 2)]), 0.0),
])
def test_algebraic_connectivity(graph, expected):
    assert GraphService().algebraic_connectivity(graph) == pytest.approx(expected, abs=1e-12)


def test_algebraic_connectivity_single_vertex():
    assert GraphService().algebraic_connectivity(CommGraph(N=1)) is None


def test_edges_are_normalized_and_validated():
    graph = CommGraph(N=3, edges=[(3, 1), (2, 1)])

    assert graph.edges == ((1, 2), (1, 3))
    assert graph.neighbors == ((2, 3), (1,), (1,))
    with pytest.raises(ValidationError):
        CommGraph(N=2, edges=[(1, 1)])
    with pytest.raises(ValidationError):
        CommGraph(N=2, edges=[(1, 3)])


def test_grid_mesh_four_neighbours():
    graph = CommGraph.grid_mesh(2, 3)

    assert graph.N == 6
    assert graph.edges == ((1, 2), (1, 4), (2, 3), (2, 5), (3, 6), (4, 5), (5, 6))


def test_grid_mesh_diagonal_radius():
    graph = CommGraph.grid_mesh(2, 2, radius=1.5)

    assert len(graph.edges) == 6


def test_interest_subgraph_relabels():
    graph = CommGraph(N=3, edges=[(1, 2), (2, 3)])
    system = FieldSystem.from_matrices(
        np.array([1.0, 2.0]),
        [selector_rows([1], 2), selector_rows([2], 2), selector_rows([1], 2)],
        [(1,), (2,), (1,)],
    )
    subgraph = GraphService().interest_subgraph(graph, system, 1)

    assert subgraph.agents == (1, 3)
    assert subgraph.graph.N == 2
    assert subgraph.graph.edges == ()


def test_interest_subgraph_errors():
    system = FieldSystem.from_matrices(np.array([1.0, 2.0]), [selector_rows([1], 2)], [(1,)])
    service = GraphService()

    with pytest.raises(IndexError):
        service.interest_subgraph(CommGraph(N=1), system, 3)
    with pytest.raises(EmptyInterestGroupException):
        service.interest_subgraph(CommGraph(N=1), system, 2)


def test_check_topology_lists_disconnected_components():
    system = FieldSystem.from_matrices(
        np.array([1.0, 2.0]),
        [selector_rows([1], 2), selector_rows([2], 2), selector_rows([1], 2)],
        [(1,), (2,), (1,)],
    )
    service = GraphService()

    report = service.check_topology(CommGraph(N=3, edges=[(1, 2), (2, 3)]), system)
    assert report.disconnected == (1,)
    assert not report.passed

    report = service.check_topology(CommGraph(N=3, edges=[(1, 3), (2, 3)]), system)
    assert report.passed


def test_laplacian_spectrum_matches_traversal():
    rng = np.random.default_rng(40)
    service = GraphService()
    for N in (2, 3, 5, 10, 30, 80, 200):
        for p in (0.5 / N, 2.0 / N, 0.2):
            network = nx.gnp_random_graph(N, min(p, 1.0), seed=int(rng.integers(2**31)))
            graph = CommGraph(N=N, edges=[(u + 1, v + 1) for u, v in network.edges])
            laplacian = service.laplacian(graph)

            assert np.linalg.eigvalsh(laplacian.toarray()).min() >= -1e-9
            assert np.array_equal(
                laplacian.diagonal(), [graph.degree(n) for n in range(1, N + 1)]
            )
            assert (service.algebraic_connectivity(graph) > 1e-10) == nx.is_connected(network)


def test_random_systems_use_sparse_connected_topologies():
    rng = np.random.default_rng(41)
    service = GraphService()
    complete = []
    for _ in range(20):
        system, graph, _ = make_random_system(rng)
        assert service.check_topology(graph, system).passed
        complete.append(len(graph.edges) == system.N * (system.N - 1) // 2)

    assert not all(complete)
