import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np
import scipy.sparse as sp

from src.config import settings
from src.exceptions import (
    AssumptionViolationException,
    CouplingViolationException,
    DimensionMismatchException,
    DisconnectedInterestGraphException,
    EmptyInterestGroupException,
    NeighborStateMissingException,
    UnknownAlgorithmException,
    UnobservableSystemException,
)
from src.schemas.attack import AttackSpec
from src.schemas.field import FieldSystem, InterestSet
from src.schemas.graph import CommGraph
from src.schemas.recovery import (
    AgentPlan,
    AgentState,
    Algorithm,
    HyperParams,
    IterationMetrics,
    NeighborLink,
    NetworkPlan,
    RoundState,
)
from src.schemas.scenario import SimulationTrace
from src.services.analysis import AnalysisService
from src.services.attack import AttackService
from src.services.base import BaseService
from src.services.field_model import FieldModelService
from src.services.graph import GraphService
from src.utils import schedules

TraceSink = Callable[[IterationMetrics], None]


class RecoveryService(BaseService):
    """
    Алгоритм консенсуса и инноваций с цензурой сообщений и насыщением инноваций,
    а также базовый алгоритм CIRFE без насыщения.

    Раунды синхронные: все агенты вычисляют состояние t+1 по замороженному снимку
    состояний t, поэтому результат не зависит от числа потоков.
    """

    # === Веса и порог ===
    def alpha(self, t: int, hp: HyperParams) -> float:
        return schedules.alpha(t, hp)

    def beta(self, t: int, hp: HyperParams) -> float:
        return schedules.beta(t, hp)

    def gamma_threshold(self, t: int, hp: HyperParams) -> float:
        return schedules.gamma_threshold(t, hp)

    # === Цензура ===
    @staticmethod
    def _shared_positions(own: InterestSet, other: InterestSet) -> tuple[np.ndarray, np.ndarray]:
        _, own_positions, other_positions = np.intersect1d(
            own.indices, other.indices, assume_unique=True, return_indices=True
        )
        return own_positions, other_positions

    def censor_received(
        self, x_l: AgentState, interest_l: InterestSet, interest_n: InterestSet
    ) -> np.ndarray:
        """
        Цензурированное состояние соседа x^c_{l,n}: компонента i равна
        [x_l]_{𝓘_l⁻¹(𝓘_n(i))}, если 𝓘_n(i) ∈ 𝓘_l, иначе 0.
        """
        own_positions, other_positions = self._shared_positions(interest_n, interest_l)
        censored = np.zeros(len(interest_n))
        censored[own_positions] = x_l.estimate[other_positions]
        return censored

    def censor_self(
        self, x_n: AgentState, interest_n: InterestSet, interest_l: InterestSet
    ) -> np.ndarray:
        """Обработанное собственное состояние x^p_{l,n}: компоненты вне 𝓘_l обнулены."""
        own_positions, _ = self._shared_positions(interest_n, interest_l)
        processed = np.zeros(len(interest_n))
        processed[own_positions] = x_n.estimate[own_positions]
        return processed

    # === Инновации ===
    def gain_matrix(
        self,
        restricted: sp.csr_matrix,
        x_n: AgentState | np.ndarray,
        y_n: np.ndarray,
        t: int,
        hp: HyperParams,
    ) -> sp.dia_matrix:
        """
        Диагональная матрица K_n(t) с элементами k_p(t) = min(1, γ_t/|y^(p) − h_p^{cᵀ}x_n(t)|).

        Параметры:
        - restricted: H_n^c — матрица измерений агента, суженная на 𝓘_n.
        """
        estimate = x_n.estimate if isinstance(x_n, AgentState) else x_n
        residual = np.asarray(y_n, dtype=float) - restricted @ estimate
        return sp.diags(schedules.saturation_gains(residual, self.gamma_threshold(t, hp)))

    def prepare(self, sys: FieldSystem, graph: CommGraph) -> NetworkPlan:
        """
        Предвычисляет для каждого агента H_n^c и позиции общих компонентов с соседями.

        Исключения:
        - DimensionMismatchException: если граф и система имеют разное число агентов.
        - CouplingViolationException: если сужение H_n отбрасывает связанный столбец.
        """
        if graph.N != sys.N:
            raise DimensionMismatchException(f"В графе {graph.N} вершин, а агентов {sys.N}")
        field_model = FieldModelService()
        plans = []
        for n, (agent, interest) in enumerate(zip(sys.agents, sys.interests), start=1):
            links = []
            for l in graph.neighbors[n - 1]:
                own_positions, other_positions = self._shared_positions(
                    interest, sys.interests[l - 1]
                )
                links.append(NeighborLink(
                    neighbor=l, own_positions=own_positions, neighbor_positions=other_positions,
                ))
            plans.append(AgentPlan(
                agent=n,
                interest=interest,
                restricted=field_model.restrict_columns(agent, interest),
                links=tuple(links),
            ))
        return NetworkPlan(agents=tuple(plans))

    def _advance(
        self,
        plan: AgentPlan,
        estimates: list[np.ndarray],
        y_n: np.ndarray,
        t: int,
        hp: HyperParams,
        saturate: bool,
    ) -> tuple[np.ndarray, float]:
        x_n = estimates[plan.agent - 1]
        disagreement = np.zeros_like(x_n)
        for link in plan.links:
            if link.neighbor > len(estimates):
                raise NeighborStateMissingException(
                    f"Агент {plan.agent}: нет состояния соседа {link.neighbor} на итерации {t}"
                )
            disagreement[link.own_positions] += (
                x_n[link.own_positions] - estimates[link.neighbor - 1][link.neighbor_positions]
            )

        residual = y_n - plan.restricted @ x_n
        if saturate:
            gains = schedules.saturation_gains(residual, schedules.gamma_threshold(t, hp))
        else:
            gains = np.ones_like(residual)
        innovation = gains * residual
        updated = (
            x_n
            - schedules.beta(t, hp) * disagreement
            + schedules.alpha(t, hp) * (plan.restricted.T @ innovation)
        )
        applied = float(np.max(np.abs(innovation))) if innovation.size else 0.0
        return updated, applied

    def _check_round(self, plan: NetworkPlan, round: RoundState) -> list[np.ndarray]:
        estimates = round.estimates()
        if len(estimates) != plan.N:
            raise NeighborStateMissingException(
                f"В раунде {round.t} состояний {len(estimates)}, а агентов {plan.N}"
            )
        for agent, estimate in zip(plan.agents, estimates):
            if estimate.size != len(agent.interest):
                raise DimensionMismatchException(
                    f"Состояние агента {agent.agent} имеет длину {estimate.size}, "
                    f"ожидалось {len(agent.interest)}"
                )
        return estimates

    def state_update(
        self, n: int, round: RoundState, y_n: np.ndarray, hp: HyperParams, plan: NetworkPlan
    ) -> AgentState:
        """
        Обновление агента n:
        x_n(t+1) = x_n(t) − β_t Σ_{l∈Ω_n}(x^p_{l,n}(t) − x^c_{l,n}(t)) + α_t H_n^{cᵀ}K_n(t)(y_n − H_n^c x_n(t)).

        Читает только состояния итерации t из `round`.

        Исключения:
        - NeighborStateMissingException: если в раунде нет состояния соседа.
        """
        estimates = self._check_round(plan, round)
        updated, _ = self._advance(plan.agents[n - 1], estimates, y_n, round.t, hp, saturate=True)
        return AgentState(estimate=updated)

    def cirfe_update(
        self, n: int, round: RoundState, y_n: np.ndarray, hp: HyperParams, plan: NetworkPlan
    ) -> AgentState:
        """То же обновление, но все k_p(t) = 1 (без насыщения)."""
        estimates = self._check_round(plan, round)
        updated, _ = self._advance(plan.agents[n - 1], estimates, y_n, round.t, hp, saturate=False)
        return AgentState(estimate=updated)

    # === Запуск ===
    def ensure_assumptions(self, sys: FieldSystem, graph: CommGraph) -> None:
        """
        Проверяет предположения модели до итерации 0 и поднимает исключение при нарушении.

        Исключения:
        - AssumptionViolationException и наследники с детализированным отчётом.
        """
        report = FieldModelService().validate_system(sys)
        if not report.passed:
            failed = report.failures[0].name
            exception = {
                "coupling_in_interest": CouplingViolationException,
                "interest_groups_nonempty": EmptyInterestGroupException,
                "global_observability": UnobservableSystemException,
            }.get(failed, AssumptionViolationException)
            raise exception(report.summary(), report=report)

        topology = GraphService().check_topology(graph, sys)
        if not topology.passed:
            raise DisconnectedInterestGraphException(
                f"Несвязны подграфы G_m для компонентов {list(topology.disconnected[:10])}",
                report=topology,
            )

    @staticmethod
    def digest(
        sys: FieldSystem,
        graph: CommGraph,
        y: np.ndarray,
        hp: HyperParams,
        iterations: int,
        algorithm: Algorithm,
        seed: int,
    ) -> str:
        """SHA-256 всех входов запуска: система, граф, измерения, алгоритм, гиперпараметры, зерно."""
        digest = hashlib.sha256()
        matrix = sys.stacked_matrix
        for array in (sys.theta, matrix.data, matrix.indices, matrix.indptr, y):
            digest.update(np.ascontiguousarray(array).tobytes())
        for interest in sys.interests:
            digest.update(np.asarray(interest.components, dtype=np.int64).tobytes())
        digest.update(np.asarray(graph.edges, dtype=np.int64).tobytes())
        header = {
            "N": sys.N,
            "M": sys.M,
            "algorithm": algorithm.value,
            "hyperparams": hp.model_dump(),
            "iterations": iterations,
            "seed": seed,
        }
        digest.update(json.dumps(header, sort_keys=True).encode())
        return digest.hexdigest()

    def run(
        self,
        sys: FieldSystem,
        graph: CommGraph,
        attack: AttackSpec | None,
        hp: HyperParams,
        iterations: int,
        algorithm: Algorithm | str = Algorithm.RESILIENT,
        *,
        seed: int = 0,
        snapshot_every: int = 0,
        workers: int | None = None,
        trace_sink: TraceSink | None = None,
    ) -> SimulationTrace:
        """
        Выполняет `iterations` синхронных раундов из нулевого состояния.

        Логика:
        1. Проверяет предположения модели (нарушения — исключения до итерации 0).
        2. Применяет атаку и логирует условие устойчивости (только как предупреждение).
        3. На каждой итерации считает метрики состояния x(t), затем делает шаг t → t+1
           для всех агентов по снимку x(t) (при workers > 1 — в пуле потоков).
        4. Сохраняет снимки состояний на итерациях, кратных `snapshot_every`, и всегда 0 и T.

        Параметры:
        - algorithm: "resilient" или "cirfe".
        - seed: Входит в хеш запуска; алгоритм детерминирован.
        - workers: Число потоков (по умолчанию settings.WORKERS).
        - trace_sink: Вызывается для каждой строки метрик по мере вычисления.

        Исключения:
        - UnknownAlgorithmException: если алгоритм не поддерживается.
        - AssumptionViolationException и наследники: если нарушены предположения.

        Возвращает:
        - SimulationTrace с метриками по итерациям 0…T и снимками состояний.
        """
        try:
            algorithm = Algorithm(algorithm)
        except ValueError:
            raise UnknownAlgorithmException(f"Неизвестный алгоритм: {algorithm}") from None
        if iterations < 0:
            raise ValueError("Число итераций не может быть отрицательным")

        self.ensure_assumptions(sys, graph)
        attack = attack or AttackSpec.none()
        attack_service = AttackService()
        applied = attack_service.apply_attack(sys, attack)
        resilience = attack_service.resilience_check(sys, applied.compromised)
        logging.info(
            f"Условие устойчивости: λ_min(𝓖_𝓝) = {resilience.lambda_min:.6g}, "
            f"Δ_𝒜 = {resilience.delta:.6g}, {resilience.holds=}, {resilience.exact=}"
        )
        if not resilience.holds:
            logging.warning("Условие устойчивости не выполнено: сходимость не гарантирована")

        plan = self.prepare(sys, graph)
        y = applied.measurements
        y_parts = [np.asarray(y[sys.agent_rows(n)]) for n in range(1, sys.N + 1)]
        saturate = algorithm == Algorithm.RESILIENT
        workers = workers or settings.WORKERS
        analysis = AnalysisService()

        estimates = [np.zeros(len(interest)) for interest in sys.interests]
        snapshots = {0: tuple(x.copy() for x in estimates)}
        metrics = []
        progress_step = max(iterations // 10, 1)

        def step(index: int, current: list[np.ndarray], t: int) -> tuple[np.ndarray, float]:
            return self._advance(plan.agents[index], current, y_parts[index], t, hp, saturate)

        executor = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
        try:
            for t in range(iterations + 1):
                errors = analysis.round_errors(estimates, sys)
                applied_max = 0.0
                next_estimates = estimates
                if t < iterations:
                    current = estimates
                    if executor is not None:
                        results = list(executor.map(
                            lambda index: step(index, current, t), range(sys.N)
                        ))
                    else:
                        results = [step(index, current, t) for index in range(sys.N)]
                    next_estimates = [updated for updated, _ in results]
                    # редукция в фиксированном порядке агентов
                    applied_max = max((value for _, value in results), default=0.0)

                row = IterationMetrics(
                    iteration=t,
                    max_normalized_rmse=float(errors.normalized.max()),
                    max_local_rmse=float(errors.local.max()),
                    consensus_error=errors.consensus,
                    average_error=errors.average,
                    gamma=schedules.gamma_threshold(t, hp),
                    max_innovation=applied_max,
                )
                metrics.append(row)
                if trace_sink is not None:
                    trace_sink(row)
                if snapshot_every and t % snapshot_every == 0:
                    snapshots[t] = tuple(x.copy() for x in estimates)
                if t and t % progress_step == 0 and t < iterations:
                    logging.info(
                        f"Итерация {t}/{iterations}: max_normalized_rmse = "
                        f"{row.max_normalized_rmse:.6g}"
                    )
                estimates = next_estimates
        finally:
            if executor is not None:
                executor.shutdown()

        snapshots[iterations] = tuple(x.copy() for x in estimates)
        final = RoundState(
            t=iterations, states=tuple(AgentState(estimate=x) for x in estimates)
        )
        logging.info(
            f"Моделирование {algorithm.value} завершено: {iterations} итераций, "
            f"max_normalized_rmse = {metrics[-1].max_normalized_rmse:.6g}"
        )
        return SimulationTrace(
            digest=self.digest(sys, graph, y, hp, iterations, algorithm, seed),
            algorithm=algorithm,
            hyperparams=hp,
            metrics=tuple(metrics),
            snapshots=dict(sorted(snapshots.items())),
            final=final,
        )

    def oracle_gap(
        self,
        sys: FieldSystem,
        graph: CommGraph,
        attack: AttackSpec | None,
        hp: HyperParams,
        rounds: int,
        algorithm: Algorithm | str = Algorithm.RESILIENT,
    ) -> float:
        """
        Сравнивает поагентную траекторию со стековой динамикой на `rounds` раундах.

        Возвращает:
        - Максимальную абсолютную разность вспомогательных состояний по всем итерациям.
        """
        algorithm = Algorithm(algorithm)
        analysis = AnalysisService()
        trace = self.run(sys, graph, attack, hp, rounds, algorithm, snapshot_every=1)
        y = AttackService().apply_attack(sys, attack or AttackSpec.none()).measurements
        stacked = analysis.stacked_trajectory(sys, graph, y, hp, rounds, algorithm)
        gap = 0.0
        for t, x_tilde in enumerate(stacked):
            per_agent = analysis.stack_auxiliary(trace.snapshots[t], sys)
            gap = max(gap, float(np.max(np.abs(per_agent - x_tilde), initial=0.0)))
        logging.debug(f"Расхождение с оракулом за {rounds} раундов: {gap:.3g}")
        return gap
