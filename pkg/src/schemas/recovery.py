from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.exceptions import HyperParamsException, check_hyperparams_ordering
from src.schemas.field import InterestSet
from src.schemas.types import ArrayModelConfig, FloatArray, IndexArray, SparseMatrix


class Algorithm(str, Enum):
    RESILIENT = "resilient"
    CIRFE = "cirfe"


class HyperParams(BaseModel):
    """
    Гиперпараметры весов α_t = a/(t+1)^τ1, β_t = b/(t+1)^τ2 и порога γ_t = Γ/(t+1)^τγ.

    Значения по умолчанию рассчитаны на сеточные сценарии с окнами измерений 37×37.
    Порядок показателей проверяется строго при создании.
    """

    a: float = Field(1.0, gt=0)
    b: float = Field(0.084, gt=0)
    tau1: float = 0.26
    tau2: float = 0.001
    Gamma: float = Field(40.0, gt=0)
    tau_gamma: float = 0.25

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_ordering(self) -> "HyperParams":
        try:
            check_hyperparams_ordering(self.tau1, self.tau2, self.tau_gamma)
        except HyperParamsException as exc:
            raise ValueError(exc.detail) from exc
        return self


class AgentState(BaseModel):
    """
    Состояние агента x_n(t): i-я компонента оценивает [θ*]_{𝓘_n(i)}.
    """

    estimate: FloatArray

    model_config = ArrayModelConfig

    @field_validator("estimate")
    @classmethod
    def check_vector(cls, estimate: np.ndarray) -> np.ndarray:
        if estimate.ndim != 1:
            raise ValueError("Состояние агента должно быть вектором")
        return estimate

    @classmethod
    def zeros(cls, size: int) -> "AgentState":
        return cls(estimate=np.zeros(size))


class RoundState(BaseModel):
    """
    Снимок всех состояний на итерации t (синхронные раунды).
    """

    t: int = Field(..., ge=0)
    states: tuple[AgentState, ...]

    model_config = ArrayModelConfig

    def estimates(self) -> list[np.ndarray]:
        return [state.estimate for state in self.states]


class IterationMetrics(BaseModel):
    """
    Метрики одной итерации, сохраняемые в трассе.

    Поля:
    - iteration: Номер итерации t.
    - max_normalized_rmse: max_n ‖x_n − θ*_{𝓘_n}‖₂ / √|𝓘_n|.
    - max_local_rmse: max_n ‖x_n − θ*_{𝓘_n}‖₂.
    - consensus_error: ‖𝓠𝐱̂_t‖₂.
    - average_error: ‖𝐞̄_t‖₂.
    - gamma: Порог γ_t.
    - max_innovation: max |k_p(t)·(y^(p) − h_p^{cᵀ}x_n(t))| по всем агентам и строкам
      на шаге t → t+1 (для последней записанной итерации — 0).
    """

    iteration: int
    max_normalized_rmse: float
    max_local_rmse: float
    consensus_error: float
    average_error: float
    gamma: float
    max_innovation: float = 0.0

    model_config = ConfigDict(frozen=True)


class NeighborLink(BaseModel):
    """
    Предвычисленная цензура для пары агентов (n, l).

    Поля:
    - neighbor: Номер соседа l.
    - own_positions: Позиции общих компонентов в 𝓘_n (с нуля).
    - neighbor_positions: Позиции тех же компонентов в 𝓘_l (с нуля).
    """

    neighbor: int
    own_positions: IndexArray
    neighbor_positions: IndexArray

    model_config = ArrayModelConfig


class AgentPlan(BaseModel):
    """
    Всё, что агенту n нужно на каждой итерации: H_n^c, множество интересов
    и связи с соседями в фиксированном порядке возрастания номеров.
    """

    agent: int
    interest: InterestSet
    restricted: SparseMatrix
    links: tuple[NeighborLink, ...]

    model_config = ArrayModelConfig


class NetworkPlan(BaseModel):
    agents: tuple[AgentPlan, ...]

    model_config = ArrayModelConfig

    @property
    def N(self) -> int:
        return len(self.agents)
