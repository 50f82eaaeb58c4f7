import logging

import networkx as nx
import numpy as np
import scipy.sparse as sp

from src.config import settings
from src.exceptions import EmptyInterestGroupException
from src.schemas.field import FieldSystem
from src.schemas.graph import CommGraph, InducedSubgraph
from src.schemas.reports import TopologyReport
from src.services.base import BaseService


class GraphService(BaseService):
    """
    Топология связи агентов: лапласиан, алгебраическая связность, подграфы G_m
    и проверка их связности.
    """

    def laplacian(self, g: CommGraph) -> sp.csr_matrix:
        """
        Лапласиан L = D − A в разреженном виде.

        Строка и столбец n − 1 соответствуют агенту n.
        """
        matrix = nx.laplacian_matrix(g.nx_graph, nodelist=range(1, g.N + 1))
        return sp.csr_matrix(matrix, dtype=float)

    def algebraic_connectivity(self, g: CommGraph) -> float | None:
        """
        Возвращает λ_2(L) — второе по величине собственное значение лапласиана.

        Для N = 1 значение не определено, для N > DENSE_EIGEN_LIMIT не вычисляется:
        в обоих случаях возвращается None. Связность при этом решается обходом графа.
        """
        if g.N < 2 or g.N > settings.DENSE_EIGEN_LIMIT:
            return None
        eigenvalues = np.linalg.eigvalsh(self.laplacian(g).toarray())
        return float(max(eigenvalues[1], 0.0))

    def interest_subgraph(self, g: CommGraph, sys: FieldSystem, m: int) -> InducedSubgraph:
        """
        Строит подграф G_m, индуцированный агентами 𝓙_m.

        Вершины перенумерованы в 1…|𝓙_m| в порядке возрастания номеров агентов,
        исходные номера возвращаются в поле `agents`.

        Исключения:
        - IndexError: если m вне 1…M.
        - EmptyInterestGroupException: если 𝓙_m пусто.
        """
        if not 1 <= m <= sys.M:
            raise IndexError(f"Компонент {m} вне диапазона 1…{sys.M}")
        group = sys.interest_groups[m - 1]
        if group.size == 0:
            raise EmptyInterestGroupException(f"Компонент {m} не интересует ни одного агента")
        return self._induce(g, tuple(int(n) for n in group))

    @staticmethod
    def _induce(g: CommGraph, agents: tuple[int, ...]) -> InducedSubgraph:
        relabel = {n: i for i, n in enumerate(agents, start=1)}
        edges = [
            (relabel[u], relabel[v]) for u, v in g.nx_graph.subgraph(agents).edges
        ]
        return InducedSubgraph(graph=CommGraph(N=len(agents), edges=edges), agents=agents)

    def check_topology(self, g: CommGraph, sys: FieldSystem) -> TopologyReport:
        """
        Проверяет связность G_m для всех компонентов m = 1…M.

        Связность решается обходом графа. Одинаковые группы 𝓙_m проверяются один раз:
        на сеточных сценариях тысячи компонентов имеют одну и ту же группу.

        Возвращает:
        - TopologyReport со списками несвязных компонентов и компонентов с пустой группой.
        """
        cache: dict[tuple[int, ...], bool] = {}
        disconnected, empty = [], []
        for m, group in enumerate(sys.interest_groups, start=1):
            if group.size == 0:
                empty.append(m)
                continue
            key = tuple(int(n) for n in group)
            if key not in cache:
                cache[key] = nx.is_connected(g.nx_graph.subgraph(key))
            if not cache[key]:
                disconnected.append(m)

        report = TopologyReport(disconnected=tuple(disconnected), empty=tuple(empty))
        logging.debug(f"Проверено {len(cache)} различных групп интересов, {report.passed=}")
        if not report.passed:
            logging.warning(
                f"Нарушена связность G_m: несвязны {disconnected[:10]}, пусты {empty[:10]}"
            )
        return report
