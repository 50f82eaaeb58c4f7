import logging
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from src.exceptions import ConfigException
from src.repositories.mappers.mappers import ScenarioDataMapper
from src.repositories.scenarios import ScenariosRepository
from src.schemas.attack import AttackMode, AttackSpec, ResilienceReport
from src.schemas.field import FieldSystem
from src.schemas.graph import CommGraph
from src.schemas.recovery import HyperParams, RoundState
from src.schemas.scenario import (
    FieldDump,
    FieldGeneratorParams,
    FieldSection,
    GridScenarioParams,
    RunSettings,
    Scenario,
    SimulationTrace,
)
from src.services.base import BaseService
from src.services.field_model import FieldModelService
from src.services.graph import GraphService
from src.utils.field_generator import load_field_file, smooth_field


def _window(center: int, size: int, side: int, anchor: str) -> tuple[int, int]:
    """Полуинтервал [lo, hi) клеток окна стороны `size` вокруг `center` на отрезке 0…side−1."""
    lo = center - (size - 1) // 2
    if anchor == "shifted":
        lo = min(max(lo, 0), max(side - size, 0))
        return lo, min(lo + size, side)
    return max(lo, 0), min(lo + size, side)


class ScenarioService(BaseService):
    """
    Сценарии: генерация сеточного мира, загрузка и сохранение файлов сценариев,
    метрики восстановления по клеткам поля.
    """

    def generate_grid_scenario(
        self,
        params: GridScenarioParams,
        hyperparams: HyperParams | None = None,
        run: RunSettings | None = None,
    ) -> Scenario:
        """
        Строит сеточный сценарий.

        Логика:
        1. Агент (i, j) стоит в клетке (⌊(i+½)G/R⌋, ⌊(j+½)G/C⌋) — равномерная решётка с шагом G/R.
        2. Каждая клетка окна измерений даёт строку-селектор e_m, m = r·G + c + 1;
           множество интересов — клетки окна интересов.
        3. Граф связи — сетка агентов с радиусом `comm_radius`.
        4. Поле — сглаженный шум в [0, 255] либо явный файл.
        5. Атакованные агенты — первые k перестановки из зерна; все их измерения
           подменяются на `override_value`.

        Исключения:
        - ConfigException: если есть неизмеренные клетки, несвязные G_m или нарушены
          предположения модели (перечисляются номера клеток и компонентов).

        Возвращает:
        - Scenario с системой, графом и атакой.
        """
        G, R, C = params.grid_side, params.agent_rows, params.agent_cols
        M = params.M
        matrices, interests = [], []
        measured = np.zeros(M, dtype=np.int64)
        for i in range(R):
            for j in range(C):
                center_r = int(np.floor((i + 0.5) * G / R))
                center_c = int(np.floor((j + 0.5) * G / C))
                cells = self._window_cells(
                    center_r, center_c, params.measurement_window, G, params.anchor
                )
                measured[cells] += 1
                matrices.append(sp.csr_matrix(
                    (np.ones(cells.size), (np.arange(cells.size), cells)), shape=(cells.size, M)
                ))
                interest = self._window_cells(
                    center_r, center_c, params.interest_window, G, params.anchor
                )
                interests.append(tuple(int(m) + 1 for m in interest))

        uncovered = np.flatnonzero(measured == 0) + 1
        if uncovered.size:
            raise ConfigException(
                f"Клетки без измерений ({uncovered.size}): {uncovered[:10].tolist()}"
            )

        if params.field_file is not None:
            theta = load_field_file(params.field_file, M)
            field_source = FieldSection(length=M, shape=(G, G), file=params.field_file)
        else:
            generator = FieldGeneratorParams(
                rows=G, cols=G, seed=params.seed, smoothness=params.smoothness
            )
            theta = smooth_field(generator)
            field_source = FieldSection(length=M, shape=(G, G), generator=generator)

        system = FieldSystem.from_matrices(theta, matrices, interests)
        graph = CommGraph.grid_mesh(R, C, params.comm_radius)

        attack_rng = np.random.default_rng(np.random.SeedSequence(params.seed, spawn_key=(1,)))
        attacked = tuple(sorted(
            int(n) + 1 for n in attack_rng.permutation(params.N)[:params.attacked_agents]
        ))
        values = {
            p: params.override_value
            for n in attacked
            for p in range(system.agent_rows(n).start + 1, system.agent_rows(n).stop + 1)
        }
        attack = AttackSpec(values=values, mode=AttackMode.OVERRIDE)

        self.ensure_valid(system, graph)
        logging.info(
            f"Сгенерирован сценарий: N = {system.N}, M = {system.M}, P = {system.P}, "
            f"атакованы агенты {list(attacked)}"
        )
        return Scenario(
            system=system,
            graph=graph,
            attack=attack,
            hyperparams=hyperparams or HyperParams(),
            run=run or RunSettings(seed=params.seed),
            shape=(G, G),
            grid=params,
            field_source=field_source,
            attacked_agents=attacked,
        )

    @staticmethod
    def _window_cells(center_r: int, center_c: int, size: int, side: int, anchor: str) -> np.ndarray:
        """Клетки окна (с нуля) в порядке возрастания номера m − 1 = r·side + c."""
        r0, r1 = _window(center_r, size, side, anchor)
        c0, c1 = _window(center_c, size, side, anchor)
        rows, cols = np.meshgrid(np.arange(r0, r1), np.arange(c0, c1), indexing="ij")
        return (rows * side + cols).ravel()

    def ensure_valid(self, system: FieldSystem, graph) -> None:
        """
        Отклоняет сценарий, нарушающий предположения модели или связность G_m.

        Исключения:
        - ConfigException: с перечислением нарушителей.
        """
        report = FieldModelService().validate_system(system)
        if not report.passed:
            raise ConfigException(f"Сценарий нарушает предположения: {report.summary()}")
        topology = GraphService().check_topology(graph, system)
        if not topology.passed:
            raise ConfigException(
                f"Несвязные подграфы G_m для компонентов {list(topology.disconnected[:10])}, "
                f"пустые группы {list(topology.empty[:10])}"
            )

    # === Загрузка и сохранение ===
    def load(self, path: str | Path) -> Scenario:
        """
        Загружает сценарий из YAML-файла.

        Если в файле есть только секция `grid`, сценарий строится генератором,
        иначе явные секции переводятся в доменные объекты маппером.

        Исключения:
        - ConfigException: ошибки разбора и схемы (с номером строки, если известен).
        """
        path = Path(path)
        repository = self.storage.scenarios if self.storage else ScenariosRepository(path.parent)
        record = repository.get_record(path)
        if record.field is None:
            grid = record.grid
            if grid.field_file is not None and not Path(grid.field_file).is_absolute():
                grid = grid.model_copy(update={"field_file": str(path.parent / grid.field_file)})
            return self.generate_grid_scenario(grid, hyperparams=record.hyperparams, run=record.run)
        return ScenarioDataMapper.map_to_domain_entity(record, base_dir=path.parent)

    def save(self, name: str, scenario: Scenario) -> Path:
        return self.storage.scenarios.add(name, scenario)

    def export_run(
        self,
        scenario: Scenario,
        trace: SimulationTrace,
        resilience: ResilienceReport,
        tau: float | None = None,
    ) -> dict:
        """
        Подготавливает результаты запуска: трассу, ряды ошибок, дамп поля, снимки и сводку.

        Файлы попадают в выходной каталог только после `storage.commit()`.

        Возвращает:
        - Сводку запуска (она же записывается в summary.yaml).
        """
        system = scenario.system
        last = trace.metrics[-1]
        self.storage.traces.add(trace)
        self.storage.traces.add_errors(trace, tau)
        self.storage.fields.add(self.worst_case_field(trace, system, scenario.shape))
        if scenario.run.snapshot_every:
            self.storage.traces.add_snapshots(trace, system.interests)
        summary = {
            "digest": trace.digest,
            "algorithm": trace.algorithm.value,
            "iterations": trace.iterations,
            "seed": scenario.run.seed,
            "agents": system.N,
            "components": system.M,
            "measurements": system.P,
            "attacked_agents": list(scenario.attacked_agents),
            "attacked_measurements": len(scenario.attack.values),
            "final": {
                "max_normalized_rmse": last.max_normalized_rmse,
                "max_local_rmse": last.max_local_rmse,
                "consensus_error": last.consensus_error,
                "average_error": last.average_error,
            },
            "resilience": resilience.model_dump(),
        }
        self.storage.traces.add_summary(summary)
        return summary

    def export_comparison(
        self, scenario: Scenario, resilient: SimulationTrace, cirfe: SimulationTrace
    ) -> None:
        self.storage.traces.add_comparison(resilient, cirfe)
        for trace in (resilient, cirfe):
            dump = self.worst_case_field(trace, scenario.system, scenario.shape)
            self.storage.fields.add(dump, f"field_{trace.algorithm.value}.csv")

    def with_seed(self, scenario: Scenario, seed: int) -> Scenario:
        """Перегенерирует сеточный сценарий с другим зерном; явные сценарии меняют только run.seed."""
        run = scenario.run.model_copy(update={"seed": seed})
        if scenario.grid is None:
            return scenario.model_copy(update={"run": run})
        return self.generate_grid_scenario(
            scenario.grid.model_copy(update={"seed": seed}),
            hyperparams=scenario.hyperparams,
            run=run,
        )

    # === Метрики восстановления ===
    def max_normalized_rmse(self, round: RoundState, sys: FieldSystem) -> float:
        """max_n ‖x_n − θ*_{𝓘_n}‖₂ / √|𝓘_n|."""
        return max(
            float(np.linalg.norm(x_n - sys.theta[interest.indices]) / np.sqrt(len(interest)))
            for x_n, interest in zip(round.estimates(), sys.interests)
        )

    def worst_case_field(
        self,
        trace: SimulationTrace | RoundState,
        sys: FieldSystem,
        shape: tuple[int, int] | None = None,
    ) -> FieldDump:
        """
        Худшее восстановленное значение каждой клетки по заинтересованным агентам.

        Для клетки m среди агентов 𝓙_m выбирается оценка с наибольшим |оценка − θ*_m|;
        при равенстве — агент с меньшим номером.

        Параметры:
        - shape: Форма сетки (строки, столбцы) для нумерации клеток; без неё row = m, col = 1.
        """
        round = trace.final if isinstance(trace, SimulationTrace) else trace
        theta = sys.theta
        worst_error = np.full(sys.M, -np.inf)
        worst_value = np.zeros(sys.M)
        for x_n, interest in zip(round.estimates(), sys.interests):
            error = np.abs(x_n - theta[interest.indices])
            better = error > worst_error[interest.indices]
            cells = interest.indices[better]
            worst_error[cells] = error[better]
            worst_value[cells] = x_n[better]

        m = np.arange(sys.M)
        if shape is not None:
            rows, cols = m // shape[1] + 1, m % shape[1] + 1
        else:
            rows, cols = m + 1, np.ones(sys.M)
        return FieldDump(
            rows=rows,
            cols=cols,
            true=theta,
            recovered=worst_value,
            abs_error=np.abs(worst_value - theta),
        )
