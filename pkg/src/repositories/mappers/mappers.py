from pathlib import Path

import numpy as np
import pandas as pd
import scipy.sparse as sp
from pydantic import ValidationError

from src.config import settings
from src.exceptions import ConfigException
from src.repositories.mappers.base import DataMapper
from src.repositories.utils import compress_ranges, expand_ranges
from src.schemas.attack import AttackMode, AttackSpec
from src.schemas.field import FieldSystem
from src.schemas.graph import CommGraph
from src.schemas.recovery import IterationMetrics
from src.schemas.scenario import (
    AgentSection,
    AttackSection,
    FieldDump,
    FieldSection,
    GraphGeneratorParams,
    GraphSection,
    Scenario,
    ScenarioFile,
)
from src.utils.field_generator import load_field_file, smooth_field


class IterationMetricsDataMapper(DataMapper):
    """Строка метрик трассы ↔ `IterationMetrics`."""

    schema = IterationMetrics


class FieldDumpDataMapper(DataMapper):
    """
    Маппер между таблицей `row,col,true,recovered,abs_error` и схемой `FieldDump`.
    """

    schema = FieldDump
    columns = ["row", "col", "true", "recovered", "abs_error"]

    @classmethod
    def map_to_domain_entity(cls, data: pd.DataFrame) -> FieldDump:
        return FieldDump(
            rows=data["row"].to_numpy(),
            cols=data["col"].to_numpy(),
            true=data["true"].to_numpy(),
            recovered=data["recovered"].to_numpy(),
            abs_error=data["abs_error"].to_numpy(),
        )

    @classmethod
    def map_to_persistence_entity(cls, data: FieldDump) -> pd.DataFrame:
        return pd.DataFrame({
            "row": data.rows.astype(np.int64),
            "col": data.cols.astype(np.int64),
            "true": data.true,
            "recovered": data.recovered,
            "abs_error": data.abs_error,
        }, columns=cls.columns)


class ScenarioDataMapper(DataMapper):
    """
    Маппер между записью YAML-файла `ScenarioFile` и доменным `Scenario`.

    Запись хранит только JSON-совместимые типы: отрезки номеров, тройки строк матриц,
    ссылки на генераторы. Доменный сценарий хранит разреженные матрицы и массивы.
    """

    schema = Scenario

    @classmethod
    def map_to_domain_entity(cls, data: ScenarioFile, base_dir: Path | None = None) -> Scenario:
        """
        Собирает доменный сценарий из явных секций файла.

        Параметры:
        - data: Запись файла с секциями field, agents и graph.
        - base_dir: Каталог файла сценария — относительные пути к файлам поля считаются от него.

        Исключения:
        - ConfigException: некорректные номера, ненормированные строки, несогласованные размеры.
        """
        if data.field is None or data.agents is None or data.graph is None:
            raise ConfigException("Для сборки сценария нужны секции field, agents и graph")
        theta, shape = cls._field(data.field, base_dir)
        M = theta.size

        matrices, interests = [], []
        for n, section in enumerate(data.agents, start=1):
            try:
                matrices.append(cls._agent_matrix(n, section, M))
                interest = expand_ranges(section.interest)
            except ValueError as exc:
                raise ConfigException(f"Агент {n}: {exc}") from exc
            if any(b <= a for a, b in zip(interest, interest[1:])):
                raise ConfigException(f"Множество интересов агента {n} не возрастает строго")
            interests.append(interest)

        try:
            system = FieldSystem.from_matrices(theta, matrices, interests)
            graph = cls._graph(data.graph, system.N)
            attack, attacked_agents = cls._attack(data.attack, system)
        except ValidationError as exc:
            raise ConfigException(f"Некорректный сценарий: {exc.errors()[0]['msg']}") from exc

        return Scenario(
            system=system,
            graph=graph,
            attack=attack,
            hyperparams=data.hyperparams,
            run=data.run,
            shape=shape,
            grid=data.grid,
            field_source=data.field if data.field.values is None else None,
            attacked_agents=attacked_agents,
        )

    @staticmethod
    def _field(section: FieldSection, base_dir: Path | None) -> tuple[np.ndarray, tuple[int, int] | None]:
        shape = section.shape
        if section.values is not None:
            theta = np.asarray(section.values, dtype=float)
        elif section.generator is not None:
            generator = section.generator
            shape = shape or (generator.rows, generator.cols)
            theta = smooth_field(generator)
        else:
            path = Path(section.file)
            if not path.is_absolute() and base_dir is not None:
                path = base_dir / path
            theta = load_field_file(path)
        if theta.size != section.length:
            raise ConfigException(
                f"Поле содержит {theta.size} значений, а length = {section.length}"
            )
        return theta, shape

    @staticmethod
    def _agent_matrix(n: int, section: AgentSection, M: int) -> sp.csr_matrix:
        if section.rows is not None:
            if not section.rows:
                return sp.csr_matrix((0, M))
            local_rows, components, values = (np.array(column) for column in zip(*section.rows))
            local_rows = local_rows.astype(np.int64)
            components = components.astype(np.int64)
        else:
            components = np.asarray(expand_ranges(section.selectors or []), dtype=np.int64)
            local_rows = np.arange(1, components.size + 1)
            values = np.ones(components.size)
        if components.size and (components.min() < 1 or components.max() > M):
            raise ConfigException(f"У агента {n} есть компоненты вне 1…{M}")
        if local_rows.size and local_rows.min() < 1:
            raise ConfigException(f"У агента {n} номера строк должны начинаться с 1")

        P_n = int(local_rows.max()) if local_rows.size else 0
        matrix = sp.csr_matrix(
            (values.astype(float), (local_rows - 1, components - 1)), shape=(P_n, M)
        )
        norms = np.sqrt(np.asarray(matrix.multiply(matrix).sum(axis=1)).ravel())
        bad = np.flatnonzero(np.abs(norms - 1.0) > settings.UNIT_NORM_TOL) + 1
        if bad.size:
            raise ConfigException(
                f"У агента {n} строки {bad[:10].tolist()} нулевые или не единичной нормы"
            )
        return matrix

    @staticmethod
    def _graph(section: GraphSection, N: int) -> CommGraph:
        if section.generator is None:
            return CommGraph(N=N, edges=section.edges)
        generator = section.generator
        if generator.rows * generator.cols != N:
            raise ConfigException(
                f"Сетка графа {generator.rows}×{generator.cols} не совпадает с числом агентов {N}"
            )
        return CommGraph.grid_mesh(generator.rows, generator.cols, generator.radius)

    @staticmethod
    def _attack(section: AttackSection, system: FieldSystem) -> tuple[AttackSpec, tuple[int, ...]]:
        values: dict[int, float] = {}
        agents = sorted(set(section.agents))
        for n in agents:
            if not 1 <= n <= system.N:
                raise ConfigException(f"Атакованный агент {n} вне 1…{system.N}")
            rows = system.agent_rows(n)
            value = section.target if section.mode == AttackMode.OVERRIDE else section.value
            values.update({p: value for p in range(rows.start + 1, rows.stop + 1)})
        values.update(section.measurements)
        out_of_range = [p for p in values if not 1 <= p <= system.P]
        if out_of_range:
            raise ConfigException(f"Номера измерений {out_of_range[:10]} вне 1…{system.P}")
        return AttackSpec(values=values, mode=section.mode), tuple(agents)

    @classmethod
    def map_to_persistence_entity(cls, data: Scenario) -> ScenarioFile:
        """
        Переводит доменный сценарий в запись файла.

        Строки-селекторы записываются отрезками номеров компонентов, прочие строки — тройками
        (строка, компонент, значение). Поле из генератора или файла записывается ссылкой.
        """
        system = data.system
        field = data.field_source or FieldSection(
            length=system.M, shape=data.shape, values=system.theta.tolist()
        )

        agents = []
        for agent, interest in zip(system.agents, system.interests):
            matrix = agent.matrix.tocsr()
            interest_spec = compress_ranges(interest.components)
            if np.all(np.diff(matrix.indptr) == 1) and np.all(matrix.data == 1.0):
                agents.append(AgentSection(
                    selectors=compress_ranges(matrix.indices + 1), interest=interest_spec
                ))
            else:
                coo = matrix.tocoo()
                order = np.lexsort((coo.col, coo.row))
                agents.append(AgentSection(
                    rows=[
                        (int(coo.row[k]) + 1, int(coo.col[k]) + 1, float(coo.data[k]))
                        for k in order
                    ],
                    interest=interest_spec,
                ))

        if data.grid is not None:
            graph = GraphSection(generator=GraphGeneratorParams(
                rows=data.grid.agent_rows, cols=data.grid.agent_cols, radius=data.grid.comm_radius
            ))
        else:
            graph = GraphSection(edges=list(data.graph.edges))

        return ScenarioFile(
            grid=data.grid,
            field=field,
            agents=agents,
            graph=graph,
            attack=cls._attack_section(data),
            hyperparams=data.hyperparams,
            run=data.run,
        )

    @staticmethod
    def _attack_section(data: Scenario) -> AttackSection:
        attack = data.attack
        targets = set(attack.values.values())
        if data.attacked_agents and len(targets) == 1:
            rows = {
                p
                for n in data.attacked_agents
                for p in range(
                    data.system.agent_rows(n).start + 1, data.system.agent_rows(n).stop + 1
                )
            }
            if rows == set(attack.values):
                (value,) = targets
                if attack.mode == AttackMode.OVERRIDE:
                    return AttackSection(
                        mode=attack.mode, agents=list(data.attacked_agents), target=value
                    )
                return AttackSection(mode=attack.mode, agents=list(data.attacked_agents), value=value)
        return AttackSection(mode=attack.mode, measurements=dict(attack.values))
