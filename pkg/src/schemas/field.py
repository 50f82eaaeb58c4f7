from functools import cached_property

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.schemas.types import ArrayModelConfig, FloatArray, SparseMatrix


class FieldVector(BaseModel):
    """
    Неизвестное поле θ* ∈ ℝ^M.

    Поля:
    - values: Значения компонентов поля (длина M ≥ 1, все конечные).
    """

    values: FloatArray

    model_config = ArrayModelConfig

    @field_validator("values")
    @classmethod
    def check_values(cls, values: np.ndarray) -> np.ndarray:
        if values.ndim != 1 or values.size < 1:
            raise ValueError("Поле должно быть непустым одномерным вектором")
        if not np.all(np.isfinite(values)):
            raise ValueError("Поле содержит бесконечные или NaN значения")
        return values

    @property
    def M(self) -> int:
        return self.values.size


class AgentMeasurement(BaseModel):
    """
    Матрица измерений одного агента H_n (P_n × M) и глобальное смещение его строк P̄_n.

    Единичная норма строк здесь не проверяется: её отчётно проверяет
    `FieldModelService.validate_system`, а загрузчик сценариев отклоняет ненормированные строки.
    """

    matrix: SparseMatrix
    row_offset: int = Field(0, ge=0)

    model_config = ArrayModelConfig

    @property
    def P_n(self) -> int:
        return self.matrix.shape[0]

    @property
    def row_norms(self) -> np.ndarray:
        return np.sqrt(np.asarray(self.matrix.multiply(self.matrix).sum(axis=1)).ravel())


class InterestSet(BaseModel):
    """
    Множество интересов агента 𝓘_n: строго возрастающий список компонентов (с единицы).

    Прямое отображение 𝓘_n(r) = m и обратное 𝓘_n⁻¹(m) = r также нумеруются с единицы.
    """

    components: tuple[int, ...]

    model_config = ConfigDict(frozen=True)

    @field_validator("components")
    @classmethod
    def check_components(cls, components: tuple[int, ...]) -> tuple[int, ...]:
        if not components:
            raise ValueError("Множество интересов не может быть пустым")
        if components[0] < 1:
            raise ValueError("Компоненты нумеруются с единицы")
        if any(b <= a for a, b in zip(components, components[1:])):
            raise ValueError("Компоненты должны строго возрастать")
        return components

    @cached_property
    def indices(self) -> np.ndarray:
        """Индексы компонентов с нуля — для адресации numpy-массивов."""
        indices = np.asarray(self.components, dtype=np.int64) - 1
        indices.setflags(write=False)
        return indices

    @cached_property
    def _positions(self) -> dict[int, int]:
        return {m: r for r, m in enumerate(self.components, start=1)}

    def __len__(self) -> int:
        return len(self.components)

    def __contains__(self, m: int) -> bool:
        return m in self._positions

    def forward(self, r: int) -> int:
        """𝓘_n(r): компонент поля, стоящий на r-й позиции (r с единицы)."""
        if not 1 <= r <= len(self.components):
            raise IndexError(f"Позиция {r} вне множества интересов")
        return self.components[r - 1]

    def inverse(self, m: int) -> int:
        """𝓘_n⁻¹(m): позиция компонента m в множестве интересов."""
        try:
            return self._positions[m]
        except KeyError:
            raise KeyError(f"Компонент {m} не входит в множество интересов") from None


class FieldSystem(BaseModel):
    """
    Полное описание задачи восстановления поля.

    Хранит поле θ*, матрицы измерений агентов H_n с глобальной нумерацией строк
    и множества интересов 𝓘_n. Производные объекты (𝓗, 𝓙_m, P) вычисляются лениво.

    Инварианты (проверяются при создании):
    - число агентов совпадает с числом множеств интересов;
    - у всех H_n ровно M столбцов;
    - смещения строк — накопленные суммы P_n;
    - компоненты множеств интересов не превышают M.

    Предположения модели (вложенность 𝓘̃_n ⊆ 𝓘_n, непустота 𝓙_m, наблюдаемость)
    проверяются отчётом `FieldModelService.validate_system`.
    """

    field: FieldVector
    agents: tuple[AgentMeasurement, ...]
    interests: tuple[InterestSet, ...]

    model_config = ArrayModelConfig

    @model_validator(mode="after")
    def check_structure(self) -> "FieldSystem":
        if not self.agents:
            raise ValueError("Нужен хотя бы один агент")
        if len(self.agents) != len(self.interests):
            raise ValueError(
                f"Агентов {len(self.agents)}, а множеств интересов {len(self.interests)}"
            )
        offset = 0
        for n, agent in enumerate(self.agents, start=1):
            if agent.matrix.shape[1] != self.field.M:
                raise ValueError(
                    f"У агента {n} матрица имеет {agent.matrix.shape[1]} столбцов, ожидалось "
                    f"{self.field.M}"
                )
            if agent.row_offset != offset:
                raise ValueError(f"У агента {n} смещение строк {agent.row_offset}, а не {offset}")
            offset += agent.P_n
        for n, interest in enumerate(self.interests, start=1):
            if interest.components[-1] > self.field.M:
                raise ValueError(f"Множество интересов агента {n} выходит за пределы M")
        return self

    @classmethod
    def from_matrices(cls, theta, matrices, interests) -> "FieldSystem":
        """
        Собирает систему из поля, списка матриц H_n и списков интересов.

        Смещения строк P̄_n вычисляются автоматически по глобальной нумерации.
        """
        agents = []
        offset = 0
        for matrix in matrices:
            agent = AgentMeasurement(matrix=matrix, row_offset=offset)
            offset += agent.P_n
            agents.append(agent)
        return cls(
            field=FieldVector(values=theta),
            agents=tuple(agents),
            interests=tuple(
                item if isinstance(item, InterestSet)
                else InterestSet(components=tuple(int(c) for c in item))
                for item in interests
            ),
        )

    @property
    def N(self) -> int:
        return len(self.agents)

    @property
    def M(self) -> int:
        return self.field.M

    @property
    def theta(self) -> np.ndarray:
        return self.field.values

    @cached_property
    def P(self) -> int:
        return sum(agent.P_n for agent in self.agents)

    @cached_property
    def row_offsets(self) -> np.ndarray:
        return np.array([agent.row_offset for agent in self.agents], dtype=np.int64)

    @cached_property
    def stacked_matrix(self) -> sp.csr_matrix:
        """𝓗 = [H_1ᵀ … H_Nᵀ]ᵀ размера P × M."""
        if self.P == 0:
            return sp.csr_matrix((0, self.M))
        return sp.vstack([agent.matrix for agent in self.agents], format="csr")

    @cached_property
    def clean_measurements(self) -> np.ndarray:
        """Неатакованные измерения 𝓗θ*."""
        values = self.stacked_matrix @ self.theta
        values.setflags(write=False)
        return values

    @cached_property
    def interest_groups(self) -> tuple[np.ndarray, ...]:
        """
        Группы 𝓙_m для всех m = 1…M: номера агентов (с единицы), интересующихся компонентом.
        """
        components = np.concatenate([interest.indices for interest in self.interests])
        owners = np.concatenate(
            [np.full(len(interest), n, dtype=np.int64) for n, interest in
             enumerate(self.interests, start=1)]
        )
        order = np.argsort(components, kind="stable")
        counts = np.bincount(components, minlength=self.M)
        return tuple(np.split(owners[order], np.cumsum(counts)[:-1]))

    @cached_property
    def group_sizes(self) -> np.ndarray:
        """|𝓙_m| для всех компонентов."""
        return np.array([group.size for group in self.interest_groups], dtype=np.int64)

    def locate(self, p: int) -> tuple[int, int]:
        """
        Переводит глобальный номер скалярного измерения p в пару (агент n, строка агента).

        Всё нумеруется с единицы: строки агента n имеют глобальные номера P̄_n+1 … P̄_n+P_n.
        """
        if not 1 <= p <= self.P:
            raise IndexError(f"Номер измерения {p} вне диапазона 1…{self.P}")
        n = int(np.searchsorted(self.row_offsets, p - 1, side="right"))
        # пропускаем агентов без измерений с тем же смещением
        while self.agents[n - 1].P_n == 0 or p - self.row_offsets[n - 1] > self.agents[n - 1].P_n:
            n += 1
        return n, int(p - self.row_offsets[n - 1])

    def global_index(self, n: int, local_row: int) -> int:
        """Обратное к `locate`: глобальный номер строки `local_row` агента n."""
        if not 1 <= local_row <= self.agents[n - 1].P_n:
            raise IndexError(f"У агента {n} нет строки {local_row}")
        return int(self.row_offsets[n - 1]) + local_row

    def agent_rows(self, n: int) -> slice:
        """Срез глобального вектора измерений, принадлежащий агенту n."""
        start = int(self.row_offsets[n - 1])
        return slice(start, start + self.agents[n - 1].P_n)
