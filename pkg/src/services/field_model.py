import logging

import numpy as np
import scipy.sparse as sp

from src.config import settings
from src.exceptions import CouplingViolationException, DimensionMismatchException
from src.schemas.attack import AttackSpec
from src.schemas.field import AgentMeasurement, FieldSystem, InterestSet
from src.schemas.reports import CheckResult, ValidationReport
from src.services.attack import AttackService
from src.services.base import BaseService
from src.utils.linalg import min_eigenvalue


class FieldModelService(BaseService):
    """
    Сервис модели поля: множества физической связи, проверка предположений,
    глобальная нумерация измерений и сужение матриц на множества интересов.

    Наследуется от `BaseService`, хотя не использует хранилище напрямую.
    Все операции чистые и не изменяют переданные объекты.
    """

    def coupling_set(self, agent: AgentMeasurement) -> set[int]:
        """
        Возвращает множество физической связи 𝓘̃_n — номера ненулевых столбцов H_n.

        Параметры:
        - agent (AgentMeasurement): Матрица измерений агента.

        Возвращает:
        - Множество номеров компонентов (с единицы).
        """
        matrix = agent.matrix
        columns = np.unique(matrix.indices[matrix.data != 0])
        return {int(m) + 1 for m in columns}

    def validate_system(self, sys: FieldSystem) -> ValidationReport:
        """
        Проверяет предположения модели и возвращает поэлементный отчёт.

        Проверки:
        1. unit_norm_rows — каждая строка 𝓗 ненулевая и имеет единичную норму.
        2. coupling_in_interest — 𝓘̃_n ⊆ 𝓘_n для всех агентов.
        3. interest_groups_nonempty — 𝓙_m ≠ ∅ для всех компонентов.
        4. global_observability — λ_min(𝓖) > OBSERVABILITY_TOL.

        Никогда не прерывается на некорректных данных: нарушения перечисляются в отчёте.

        Возвращает:
        - ValidationReport; `passed` истинно, только если пройдены все проверки.
        """
        checks = []

        norms = np.concatenate([agent.row_norms for agent in sys.agents]) if sys.P else np.array([])
        bad_rows = np.flatnonzero(np.abs(norms - 1.0) > settings.UNIT_NORM_TOL) + 1
        checks.append(CheckResult(
            name="unit_norm_rows",
            passed=bad_rows.size == 0,
            detail="" if bad_rows.size == 0 else "строки с нулевой или неединичной нормой",
            items=tuple(int(p) for p in bad_rows),
        ))

        bad_agents = []
        for n, (agent, interest) in enumerate(zip(sys.agents, sys.interests), start=1):
            if not self.coupling_set(agent) <= set(interest.components):
                bad_agents.append(n)
        checks.append(CheckResult(
            name="coupling_in_interest",
            passed=not bad_agents,
            detail="" if not bad_agents else "множество физической связи вне множества интересов",
            items=tuple(bad_agents),
        ))

        empty = np.flatnonzero(sys.group_sizes == 0) + 1
        checks.append(CheckResult(
            name="interest_groups_nonempty",
            passed=empty.size == 0,
            detail="" if empty.size == 0 else "компоненты без заинтересованных агентов",
            items=tuple(int(m) for m in empty),
        ))

        gram = (sys.stacked_matrix.T @ sys.stacked_matrix).tocsr()
        lambda_min = min_eigenvalue(gram)
        observable = lambda_min > settings.OBSERVABILITY_TOL
        unobserved = np.flatnonzero(gram.diagonal() == 0) + 1
        checks.append(CheckResult(
            name="global_observability",
            passed=observable,
            detail=f"λ_min(𝓖) = {lambda_min:.6g}",
            items=() if observable else tuple(int(m) for m in unobserved),
        ))

        report = ValidationReport(checks=tuple(checks))
        if not report.passed:
            logging.warning(f"Проверка системы не пройдена: {report.summary()}")
        return report

    def stack_measurements(
        self, sys: FieldSystem, attack: AttackSpec | np.ndarray | None = None
    ) -> np.ndarray:
        """
        Собирает вектор всех скалярных измерений 𝐲 = 𝓗θ* + 𝐚 в глобальной нумерации.

        Параметры:
        - sys (FieldSystem): Система.
        - attack: Спецификация атаки, явный вектор искажений длины P или None.

        Исключения:
        - DimensionMismatchException: если вектор искажений или номера атаки не согласованы с P.

        Возвращает:
        - Вектор длины P; строки P̄_n+1 … P̄_n+P_n принадлежат агенту n.
        """
        if attack is None:
            return sys.clean_measurements.copy()
        if isinstance(attack, AttackSpec):
            return AttackService().apply_attack(sys, attack).measurements.copy()
        disturbance = np.asarray(attack, dtype=float)
        if disturbance.shape != (sys.P,):
            raise DimensionMismatchException(
                f"Вектор искажений имеет форму {disturbance.shape}, ожидалось ({sys.P},)"
            )
        return sys.clean_measurements + disturbance

    def restrict_columns(self, agent: AgentMeasurement, interest: InterestSet) -> sp.csr_matrix:
        """
        Строит H_n^c — матрицу H_n без столбцов вне 𝓘_n.

        Столбец j матрицы H_n^c равен столбцу 𝓘_n(j) матрицы H_n.

        Исключения:
        - CouplingViolationException: если будет отброшен столбец, связанный с измерением.
        """
        dropped = self.coupling_set(agent) - set(interest.components)
        if dropped:
            raise CouplingViolationException(
                f"Отбрасываются связанные столбцы {sorted(dropped)[:10]}"
            )
        return agent.matrix[:, interest.indices].tocsr()
