# ruff: noqa
from pathlib import Path

import networkx as nx
import numpy as np
import pytest
import scipy.sparse as sp
from typer.testing import CliRunner

from src.config import settings
from src.schemas.attack import AttackMode, AttackSpec
from src.schemas.field import FieldSystem
from src.schemas.graph import CommGraph
from src.schemas.recovery import HyperParams
from src.schemas.scenario import GridScenarioParams, Scenario
from src.services.scenario import ScenarioService
from src.utils.storage_manager import StorageManager

MOCK_SCENARIO = Path(__file__).parent / "mock_scenario.yaml"


@pytest.fixture(scope="session", autouse=True)
def check_test_mode():
    assert settings.MODE == "TEST"


def selector_rows(components, M: int) -> sp.csr_matrix:
    """Строки-селекторы e_m для компонентов (с единицы)."""
    components = np.asarray(components, dtype=np.int64)
    return sp.csr_matrix(
        (np.ones(components.size), (np.arange(components.size), components - 1)),
        shape=(components.size, M),
    )


def random_connected_graph(rng: np.random.Generator, N: int, p: float = 0.35) -> nx.Graph:
    """Случайный граф G(N, p) с вершинами 1…N, перевыбирается до связного."""
    while True:
        graph = nx.gnp_random_graph(N, p, seed=int(rng.integers(2**31)))
        if nx.is_connected(graph):
            return nx.relabel_nodes(graph, {v: v + 1 for v in graph.nodes})


def grow_group(rng: np.random.Generator, graph: nx.Graph, start: int, size: int) -> set[int]:
    """Связное множество вершин из `start`: на каждом шаге добавляется случайный сосед."""
    group = {start}
    while len(group) < size:
        frontier = sorted({l for n in group for l in graph.neighbors(n)} - group)
        if not frontier:
            break
        group.add(int(rng.choice(frontier)))
    return group


def make_random_system(rng: np.random.Generator) -> tuple[FieldSystem, CommGraph, AttackSpec]:
    """
    Случайная корректная система: N ≤ 10, M ≤ 30, разреженный связный граф связи.

    Каждый компонент m закреплён селектором за агентом (m − 1) mod N, поэтому система
    наблюдаема; группа 𝓙_m растёт от этого агента по рёбрам графа, поэтому подграфы G_m
    связны. Плюс одна-две плотные единичные строки на агента внутри его интересов.
    """
    N = int(rng.integers(2, 11))
    M = int(rng.integers(N, 31))
    theta = rng.uniform(-5, 5, M)
    network = random_connected_graph(rng, N)
    groups = [
        grow_group(rng, network, m % N + 1, int(rng.integers(1, N // 2 + 2)))
        for m in range(M)
    ]
    matrices, interests = [], []
    for n in range(N):
        own = np.arange(n, M, N) + 1
        interest = [m + 1 for m in range(M) if n + 1 in groups[m]]
        rows = [selector_rows(own, M)]
        for _ in range(int(rng.integers(1, 3))):
            support = rng.choice(interest, size=min(len(interest), int(rng.integers(1, 4))), replace=False)
            values = rng.standard_normal(support.size)
            values /= np.linalg.norm(values)
            rows.append(sp.csr_matrix((values, (np.zeros(support.size), support - 1)), shape=(1, M)))
        matrices.append(sp.vstack(rows, format="csr"))
        interests.append(interest)
    system = FieldSystem.from_matrices(theta, matrices, interests)
    graph = CommGraph(N=N, edges=list(network.edges))
    attacked = rng.choice(system.P, size=int(rng.integers(0, max(system.P // 4, 1) + 1)), replace=False) + 1
    values = {int(p): float(rng.choice([-1, 1]) * rng.uniform(1, 10)) for p in attacked}
    return system, graph, AttackSpec(values=values, mode=AttackMode.ADDITIVE)


@pytest.fixture()
def tiny_system() -> FieldSystem:
    """Два агента, θ* = (1, 2, 3): агент 1 измеряет и оценивает {1, 2}, агент 2 — {2, 3}."""
    return FieldSystem.from_matrices(
        np.array([1.0, 2.0, 3.0]),
        [selector_rows([1, 2], 3), selector_rows([2, 3], 3)],
        [(1, 2), (2, 3)],
    )


@pytest.fixture()
def tiny_graph() -> CommGraph:
    return CommGraph(N=2, edges=[(1, 2)])


@pytest.fixture(scope="session")
def desk_scenario() -> Scenario:
    """
    Сетка агентов 3×3 на поле 3×3: окна измерений 3, окна интересов 5 (всё поле).

    Поле равномерно в [50, 150], атакован угловой агент 1: все его 4 измерения подменены на 255.
    Каждая клетка имеет не меньше трёх чистых измерений, поэтому λ_min(𝓖_𝓝) = 3 > Δ_𝒜 = 2.
    """
    params = GridScenarioParams(
        grid_side=3, agent_rows=3, agent_cols=3, measurement_window=3, interest_window=5,
    )
    generated = ScenarioService().generate_grid_scenario(params)
    theta = np.random.default_rng(7).uniform(50, 150, 9)
    system = FieldSystem.from_matrices(
        theta, [agent.matrix for agent in generated.system.agents], generated.system.interests
    )
    rows = system.agent_rows(1)
    attack = AttackSpec(
        values={p: 255.0 for p in range(rows.start + 1, rows.stop + 1)}, mode=AttackMode.OVERRIDE
    )
    return generated.model_copy(update={
        "system": system, "attack": attack, "attacked_agents": (1,), "field_source": None,
    })


@pytest.fixture(scope="session")
def oracle_hyperparams() -> HyperParams:
    return HyperParams(a=0.3, b=0.05)


@pytest.fixture()
def storage(tmp_path):
    with StorageManager(tmp_path / "out") as storage:
        yield storage


@pytest.fixture(scope="session")
def runner() -> CliRunner:
    return CliRunner()
