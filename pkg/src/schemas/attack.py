from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from src.schemas.types import ArrayModelConfig, FloatArray


class AttackMode(str, Enum):
    ADDITIVE = "additive"
    OVERRIDE = "override"


class AttackSpec(BaseModel):
    """
    Модель противника: множество атакованных измерений 𝒜 и их искажения.

    Поля:
    - values: Отображение глобальный номер измерения p (с единицы) → значение.
      В режиме `additive` это добавка a^(p) (≠ 0), в режиме `override` — целевое показание,
      эквивалентная добавка a^(p) = target − h_pᵀθ* вычисляется при применении атаки.
    - mode: Режим атаки.
    """

    values: dict[int, float] = {}
    mode: AttackMode = AttackMode.ADDITIVE

    model_config = ConfigDict(frozen=True)

    @field_validator("values")
    @classmethod
    def check_indices(cls, values: dict[int, float]) -> dict[int, float]:
        for p, value in values.items():
            if p < 1:
                raise ValueError(f"Номер измерения {p} должен быть ≥ 1")
            if not np.isfinite(value):
                raise ValueError(f"Искажение измерения {p} не конечно")
        return dict(sorted(values.items()))

    @model_validator(mode="after")
    def check_nonzero(self) -> "AttackSpec":
        if self.mode == AttackMode.ADDITIVE:
            zeros = [p for p, value in self.values.items() if value == 0]
            if zeros:
                raise ValueError(f"Нулевые добавки у измерений {zeros}: такие измерения не атакованы")
        return self

    @property
    def compromised(self) -> tuple[int, ...]:
        return tuple(self.values)

    @classmethod
    def none(cls) -> "AttackSpec":
        return cls()


class AppliedAttack(BaseModel):
    """
    Результат применения атаки к системе.

    Поля:
    - measurements: Атакованный вектор 𝐲 длины P.
    - disturbance: Эффективный вектор искажений 𝐚 длины P.
    - compromised: Эффективное множество 𝒜 (номера с единицы, где a^(p) ≠ 0).
    - dropped: Номера, которые подмена не изменила (a^(p) = 0) и которые исключены из 𝒜.
    """

    measurements: FloatArray
    disturbance: FloatArray
    compromised: tuple[int, ...]
    dropped: tuple[int, ...] = ()

    model_config = ArrayModelConfig


class DeltaResult(BaseModel):
    """
    Значение Δ_𝒜 и признак точности.

    Поля:
    - value: Δ_𝒜 или его верхняя оценка |𝒜|.
    - exact: False, если возвращена оценка.
    - method: "empty", "enumeration", "selector" или "bound".
    """

    value: float
    exact: bool
    method: str

    model_config = ConfigDict(frozen=True)


class ResilienceReport(BaseModel):
    """
    Проверка условия устойчивости λ_min(𝓖_𝓝) > Δ_𝒜.

    Поля:
    - lambda_min: λ_min(𝓖_𝓝).
    - delta: Δ_𝒜 (точное значение или оценка).
    - holds: Выполнено ли строгое неравенство.
    - exact: False, если Δ_𝒜 заменено оценкой |𝒜|.
    - margin: κ = λ_min(𝓖_𝓝) − Δ_𝒜.
    """

    lambda_min: float
    delta: float
    holds: bool
    exact: bool
    margin: float

    model_config = ConfigDict(frozen=True)
