from functools import cached_property

import networkx as nx
from pydantic import BaseModel, ConfigDict, Field, model_validator


class CommGraph(BaseModel):
    """
    Неориентированный граф связи агентов G = (V, E).

    Поля:
    - N: Число вершин (агентов), вершины нумеруются 1…N.
    - edges: Рёбра как пары (u, v) с u < v, без петель и повторов.
    """

    N: int = Field(..., ge=1)
    edges: tuple[tuple[int, int], ...] = ()

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="before")
    @classmethod
    def normalize_edges(cls, data):
        if not isinstance(data, dict):
            return data
        edges = []
        seen = set()
        for u, v in data.get("edges", ()):
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"Петля в вершине {u} недопустима")
            edge = (min(u, v), max(u, v))
            if edge in seen:
                raise ValueError(f"Повторное ребро {edge}")
            seen.add(edge)
            edges.append(edge)
        return {**data, "edges": tuple(sorted(edges))}

    @model_validator(mode="after")
    def check_vertices(self) -> "CommGraph":
        for u, v in self.edges:
            if not (1 <= u <= self.N and 1 <= v <= self.N):
                raise ValueError(f"Ребро ({u}, {v}) выходит за пределы 1…{self.N}")
        return self

    @classmethod
    def grid_mesh(cls, rows: int, cols: int, radius: float = 1.0) -> "CommGraph":
        """
        Сеть на решётке агентов rows × cols: агент (i, j) имеет номер i·cols + j + 1 и связан
        со всеми агентами на евклидовом расстоянии не больше `radius` шагов решётки.

        radius = 1 даёт четырёхсвязную сетку.
        """
        reach = int(radius)
        offsets = [
            (di, dj)
            for di in range(0, reach + 1)
            for dj in range(-reach, reach + 1)
            if (di > 0 or dj > 0) and di * di + dj * dj <= radius * radius
        ]
        edges = []
        for i in range(rows):
            for j in range(cols):
                for di, dj in offsets:
                    k, l = i + di, j + dj
                    if k < rows and 0 <= l < cols:
                        edges.append((i * cols + j + 1, k * cols + l + 1))
        return cls(N=rows * cols, edges=edges)

    @cached_property
    def nx_graph(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(1, self.N + 1))
        graph.add_edges_from(self.edges)
        return nx.freeze(graph)

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        """Ω_n для n = 1…N в возрастающем порядке (индекс кортежа — n − 1)."""
        return tuple(
            tuple(sorted(self.nx_graph.neighbors(n))) for n in range(1, self.N + 1)
        )

    def degree(self, n: int) -> int:
        return len(self.neighbors[n - 1])


class InducedSubgraph(BaseModel):
    """
    Подграф G_m, индуцированный группой 𝓙_m, с перенумерацией вершин.

    Поля:
    - graph: Подграф с вершинами 1…|𝓙_m|.
    - agents: Исходные номера агентов; вершина i подграфа — агент agents[i − 1].
    """

    graph: CommGraph
    agents: tuple[int, ...]

    model_config = ConfigDict(frozen=True)
