from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.exceptions import ConfigException, check_window_containment
from src.schemas.attack import AttackMode, AttackSpec
from src.schemas.field import FieldSystem
from src.schemas.graph import CommGraph
from src.schemas.recovery import Algorithm, HyperParams, IterationMetrics, RoundState
from src.schemas.types import ArrayModelConfig, FloatArray

U64_MAX = 2**64 - 1


class FieldGeneratorParams(BaseModel):
    """
    Генератор гладкого случайного поля: белый шум, сглаженный гауссовым фильтром,
    нормированный в [low, high] и округлённый до целых.
    """

    kind: Literal["smooth"] = "smooth"
    rows: int = Field(..., ge=1)
    cols: int = Field(..., ge=1)
    seed: int = Field(0, ge=0, le=U64_MAX)
    smoothness: float = Field(6.0, gt=0)
    low: float = 0.0
    high: float = 255.0

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_range(self) -> "FieldGeneratorParams":
        if self.high <= self.low:
            raise ValueError("Верхняя граница поля должна быть больше нижней")
        return self


class RunSettings(BaseModel):
    iterations: int = Field(200, ge=0)
    algorithm: Algorithm = Algorithm.RESILIENT
    seed: int = Field(0, ge=0, le=U64_MAX)
    snapshot_every: int = Field(0, ge=0)

    model_config = ConfigDict(frozen=True)


class GridScenarioParams(BaseModel):
    """
    Параметры сеточного сценария.

    Поля:
    - grid_side: Сторона квадратной сетки в клетках (каждая клетка — компонент поля).
    - agent_rows, agent_cols: Размеры решётки агентов.
    - measurement_window: Сторона окна измерений агента.
    - interest_window: Сторона окна интересов (не меньше окна измерений).
    - attacked_agents: Число атакованных агентов.
    - override_value: Значение, на которое подменяются все измерения атакованного агента.
    - smoothness: Параметр сглаживания генератора поля.
    - field_file: Путь к явному файлу поля (CSV или .npy) вместо генератора.
    - anchor: "centered" — окна центрированы и обрезаны краем сетки,
      "shifted" — окна сохраняют размер и сдвигаются внутрь сетки.
    - comm_radius: Радиус связи в шагах решётки агентов (1 — четырёхсвязная сетка).
    - seed: Зерно генератора поля и выбора атакованных агентов.
    """

    grid_side: int = Field(..., ge=1)
    agent_rows: int = Field(..., ge=1)
    agent_cols: int = Field(..., ge=1)
    measurement_window: int = Field(..., ge=1)
    interest_window: int = Field(..., ge=1)
    attacked_agents: int = Field(0, ge=0)
    override_value: float = 255.0
    smoothness: float = Field(6.0, gt=0)
    field_file: str | None = None
    anchor: Literal["centered", "shifted"] = "centered"
    comm_radius: float = Field(1.0, gt=0)
    seed: int = Field(0, ge=0, le=U64_MAX)

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_params(self) -> "GridScenarioParams":
        try:
            check_window_containment(self.measurement_window, self.interest_window)
        except ConfigException as exc:
            raise ValueError(exc.detail) from exc
        if self.agent_rows > self.grid_side or self.agent_cols > self.grid_side:
            raise ValueError("Агентов по стороне больше, чем клеток сетки")
        if self.attacked_agents > self.agent_rows * self.agent_cols:
            raise ValueError("Атакованных агентов больше, чем агентов")
        return self

    @property
    def N(self) -> int:
        return self.agent_rows * self.agent_cols

    @property
    def M(self) -> int:
        return self.grid_side * self.grid_side

    def reduced(self, agents_per_side: int) -> "GridScenarioParams":
        """
        Уменьшенная копия сценария с тем же шагом решётки агентов и теми же окнами.

        Используется для проверки оракулом на больших сценариях.
        """
        rows = min(self.agent_rows, agents_per_side)
        cols = min(self.agent_cols, agents_per_side)
        spacing = self.grid_side / max(self.agent_rows, self.agent_cols)
        side = max(rows, cols, int(round(spacing * max(rows, cols))))
        return self.model_copy(update={
            "grid_side": side,
            "agent_rows": rows,
            "agent_cols": cols,
            "attacked_agents": min(self.attacked_agents, max(rows * cols // 9, 1))
            if self.attacked_agents else 0,
            "field_file": None,
        })


# === Записи файла сценария (только JSON-совместимые типы) ===
ComponentSpec = int | tuple[int, int]


class FieldSection(BaseModel):
    length: int = Field(..., ge=1)
    shape: tuple[int, int] | None = None
    values: list[float] | None = None
    generator: FieldGeneratorParams | None = None
    file: str | None = None

    @model_validator(mode="after")
    def check_source(self) -> "FieldSection":
        sources = [self.values is not None, self.generator is not None, self.file is not None]
        if sum(sources) != 1:
            raise ValueError("Поле задаётся ровно одним из: values, generator, file")
        if self.shape is not None and self.shape[0] * self.shape[1] != self.length:
            raise ValueError(f"Форма {self.shape} не согласована с длиной поля {self.length}")
        return self


class AgentSection(BaseModel):
    selectors: list[ComponentSpec] | None = None
    rows: list[tuple[int, int, float]] | None = None
    interest: list[ComponentSpec]

    @model_validator(mode="after")
    def check_rows(self) -> "AgentSection":
        if self.selectors is not None and self.rows is not None:
            raise ValueError("Строки агента задаются либо selectors, либо rows")
        return self


class GraphGeneratorParams(BaseModel):
    kind: Literal["grid_mesh"] = "grid_mesh"
    rows: int = Field(..., ge=1)
    cols: int = Field(..., ge=1)
    radius: float = Field(1.0, gt=0)


class GraphSection(BaseModel):
    edges: list[tuple[int, int]] | None = None
    generator: GraphGeneratorParams | None = None

    @model_validator(mode="after")
    def check_source(self) -> "GraphSection":
        if (self.edges is None) == (self.generator is None):
            raise ValueError("Граф задаётся ровно одним из: edges, generator")
        return self


class AttackSection(BaseModel):
    mode: AttackMode = AttackMode.OVERRIDE
    agents: list[int] = []
    target: float | None = None
    value: float | None = None
    measurements: dict[int, float] = {}

    @model_validator(mode="after")
    def check_values(self) -> "AttackSection":
        if self.agents:
            if self.mode == AttackMode.OVERRIDE and self.target is None:
                raise ValueError("Для режима override нужен target")
            if self.mode == AttackMode.ADDITIVE and self.value is None:
                raise ValueError("Для режима additive нужен value")
        return self


class ScenarioFile(BaseModel):
    """
    Запись YAML-файла сценария (схема описана в Docs/scenario_schema.md).

    Либо задаётся `grid` (параметры генератора), либо явные секции field/agents/graph;
    при наличии обоих явные секции главнее, а `grid` хранится как происхождение сценария.
    """

    version: Literal[1] = 1
    grid: GridScenarioParams | None = None
    field: FieldSection | None = None
    agents: list[AgentSection] | None = None
    graph: GraphSection | None = None
    attack: AttackSection = AttackSection()
    hyperparams: HyperParams = HyperParams()
    run: RunSettings = RunSettings()

    @model_validator(mode="after")
    def check_sections(self) -> "ScenarioFile":
        explicit = [self.field is not None, self.agents is not None, self.graph is not None]
        if any(explicit) and not all(explicit):
            raise ValueError("Секции field, agents и graph задаются вместе")
        if not any(explicit) and self.grid is None:
            raise ValueError("Нужна секция grid или явные секции field, agents, graph")
        return self


# === Доменные объекты сценария ===
class Scenario(BaseModel):
    """
    Собранный сценарий: система, граф, атака, гиперпараметры и настройки запуска.

    Поля:
    - shape: Форма сетки поля (строки, столбцы), если поле двумерное.
    - grid: Параметры генератора, если сценарий сеточный.
    - field_source: Исходная секция поля (для записи генератора вместо значений).
    - attacked_agents: Атакованные агенты (с единицы), если атака задана поагентно.
    """

    system: FieldSystem
    graph: CommGraph
    attack: AttackSpec
    hyperparams: HyperParams = HyperParams()
    run: RunSettings = RunSettings()
    shape: tuple[int, int] | None = None
    grid: GridScenarioParams | None = None
    field_source: FieldSection | None = None
    attacked_agents: tuple[int, ...] = ()

    model_config = ArrayModelConfig


class SimulationTrace(BaseModel):
    """
    Трасса моделирования.

    Поля:
    - digest: SHA-256 конфигурации, алгоритма и зерна, привязывающий трассу к запуску.
    - algorithm: Использованный алгоритм.
    - metrics: Метрики по итерациям 0…T.
    - snapshots: Состояния агентов на сохранённых итерациях (всегда 0 и T).
    - final: Итоговое состояние раунда.
    """

    digest: str
    algorithm: Algorithm
    hyperparams: HyperParams
    metrics: tuple[IterationMetrics, ...]
    snapshots: dict[int, tuple[np.ndarray, ...]]
    final: RoundState

    model_config = ArrayModelConfig

    @property
    def iterations(self) -> int:
        return self.final.t

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(row, name) for row in self.metrics], dtype=float)


class FieldDump(BaseModel):
    """
    Худшее по заинтересованным агентам восстановленное значение каждой клетки.

    Все массивы имеют длину M; `rows`/`cols` нумеруются с единицы.
    """

    rows: FloatArray
    cols: FloatArray
    true: FloatArray
    recovered: FloatArray
    abs_error: FloatArray

    model_config = ArrayModelConfig
