import logging

import numpy as np
import scipy.sparse as sp

from src.config import settings
from src.exceptions import DimensionMismatchException
from src.schemas.attack import AppliedAttack, AttackMode, AttackSpec, DeltaResult, ResilienceReport
from src.schemas.field import FieldSystem
from src.services.base import BaseService
from src.utils.linalg import is_selector_matrix, min_eigenvalue

# Число вершин гиперкуба, обрабатываемых за один блок
_VERTEX_BLOCK = 1 << 14


class AttackService(BaseService):
    """
    Сервис модели противника.

    Предоставляет методы:
    - apply_attack: атакованный вектор измерений и эффективное множество 𝒜.
    - delta_A: константа Δ_𝒜 (точно или верхней оценкой).
    - resilience_check: условие λ_min(𝓖_𝓝) > Δ_𝒜 и запас κ.
    """

    def apply_attack(self, sys: FieldSystem, spec: AttackSpec) -> AppliedAttack:
        """
        Применяет атаку к чистым измерениям 𝓗θ*.

        Логика:
        1. Проверяет, что все номера атаки лежат в 1…P.
        2. Режим additive: y^(p) = h_pᵀθ* + a^(p).
        3. Режим override: y^(p) = target, a^(p) = target − h_pᵀθ*. Если подмена не меняет
           показание (a^(p) = 0), измерение исключается из эффективного 𝒜 с предупреждением.

        Измерения вне 𝒜 копируются из чистых показаний без арифметики.

        Исключения:
        - DimensionMismatchException: если номер измерения вне 1…P.

        Возвращает:
        - AppliedAttack с вектором 𝐲, вектором 𝐚 и эффективным 𝒜.
        """
        clean = sys.clean_measurements
        out_of_range = [p for p in spec.compromised if p > sys.P]
        if out_of_range:
            raise DimensionMismatchException(
                f"Номера измерений {out_of_range[:10]} вне диапазона 1…{sys.P}"
            )

        measurements = clean.copy()
        disturbance = np.zeros(sys.P)
        compromised, dropped = [], []
        for p, value in spec.values.items():
            if spec.mode == AttackMode.OVERRIDE:
                shift = value - clean[p - 1]
                if shift == 0:
                    dropped.append(p)
                    continue
                measurements[p - 1] = value
            else:
                shift = value
                measurements[p - 1] = clean[p - 1] + value
            disturbance[p - 1] = shift
            compromised.append(p)

        if dropped:
            logging.warning(
                f"Подмена не изменила {len(dropped)} измерений, они исключены из 𝒜: {dropped[:10]}"
            )
        return AppliedAttack(
            measurements=measurements,
            disturbance=disturbance,
            compromised=tuple(compromised),
            dropped=tuple(dropped),
        )

    def delta_A(self, sys: FieldSystem, compromised) -> DeltaResult:
        """
        Вычисляет Δ_𝒜 = max_{‖v‖_∞ ≤ 1} ‖𝓗_𝒜ᵀ v‖₂.

        Логика:
        - Пустое 𝒜 — 0.
        - |𝒜| ≤ DELTA_ENUMERATION_LIMIT — перебор вершин гиперкуба (максимум выпуклой
          функции достигается в вершине). Используется ‖𝓗_𝒜ᵀv‖² = vᵀ(𝓗_𝒜𝓗_𝒜ᵀ)v и
          симметрия v ↔ −v, поэтому первый знак фиксирован.
        - Все строки 𝓗_𝒜 — селекторы: точная формула sqrt(Σ_m c_m²), где c_m — число
          атакованных селекторов компонента m.
        - Иначе — верхняя оценка |𝒜| с exact=False.

        Параметры:
        - sys (FieldSystem): Система.
        - compromised: Номера атакованных измерений (с единицы).

        Возвращает:
        - DeltaResult(value, exact, method).
        """

        rows = np.array(sorted(set(int(p) for p in compromised)), dtype=np.int64)
        if rows.size == 0:
            return DeltaResult(value=0.0, exact=True, method="empty")
        if rows[0] < 1 or rows[-1] > sys.P:
            raise DimensionMismatchException(f"Номера измерений вне диапазона 1…{sys.P}")

        h_a = sys.stacked_matrix[rows - 1]
        if rows.size <= settings.DELTA_ENUMERATION_LIMIT:
            gram = (h_a @ h_a.T).toarray()
            return DeltaResult(value=self._enumerate_vertices(gram), exact=True,
                               method="enumeration")
        if is_selector_matrix(h_a):
            counts = np.bincount(h_a.indices, minlength=sys.M).astype(float)
            return DeltaResult(value=float(np.sqrt(np.sum(counts**2))), exact=True,
                               method="selector")
        logging.info(f"Δ_𝒜 заменено оценкой |𝒜| = {rows.size}: перебор слишком велик")
        return DeltaResult(value=float(rows.size), exact=False, method="bound")

    @staticmethod
    def _enumerate_vertices(gram: np.ndarray) -> float:
        size = gram.shape[0]
        if size == 1:
            return float(np.sqrt(gram[0, 0]))
        # первый знак зафиксирован +1, перебираются остальные size − 1 знаков
        free = size - 1
        best = 0.0
        codes = np.arange(1 << free, dtype=np.int64)
        bits = np.arange(free, dtype=np.int64)
        for start in range(0, codes.size, _VERTEX_BLOCK):
            block = codes[start:start + _VERTEX_BLOCK]
            signs = 1.0 - 2.0 * ((block[:, None] >> bits) & 1)
            vertices = np.hstack([np.ones((block.size, 1)), signs])
            values = np.einsum("ij,jk,ik->i", vertices, gram, vertices)
            best = max(best, float(values.max()))
        return float(np.sqrt(max(best, 0.0)))

    def resilience_check(self, sys: FieldSystem, compromised) -> ResilienceReport:
        """
        Проверяет условие устойчивости λ_min(𝓖_𝓝) > Δ_𝒜 (строгое неравенство).

        Логика:
        1. 𝓖_𝓝 = Σ_{p∈𝓝} h_p h_pᵀ по неатакованным строкам.
        2. λ_min(𝓖_𝓝) — диагональный быстрый путь для селекторов, иначе симметричное разложение.
        3. Δ_𝒜 — через `delta_A`.
        4. κ = λ_min(𝓖_𝓝) − Δ_𝒜 сообщается как запас.

        Возвращает:
        - ResilienceReport. Поле `exact` ложно, если Δ_𝒜 заменено оценкой |𝒜|.
        """

        attacked = set(int(p) for p in compromised)
        normal = np.array([p for p in range(1, sys.P + 1) if p not in attacked], dtype=np.int64)
        h_n = sys.stacked_matrix[normal - 1] if normal.size else sp.csr_matrix((0, sys.M))
        lambda_min = min_eigenvalue(h_n.T @ h_n)
        delta = self.delta_A(sys, attacked)
        return ResilienceReport(
            lambda_min=lambda_min,
            delta=delta.value,
            holds=lambda_min > delta.value,
            exact=delta.exact,
            margin=lambda_min - delta.value,
        )
