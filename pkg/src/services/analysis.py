from typing import Sequence

import numpy as np
import scipy.sparse as sp

from src.exceptions import DimensionMismatchException, EmptyInterestGroupException
from src.schemas.analysis import ErrorSeries, InterestMask
from src.schemas.field import FieldSystem, InterestSet
from src.schemas.graph import CommGraph
from src.schemas.recovery import AgentState, Algorithm, HyperParams, RoundState
from src.services.base import BaseService
from src.services.graph import GraphService
from src.utils.schedules import alpha, beta, gamma_threshold, saturation_gains


class RoundErrors:
    """Ошибки одного раунда, посчитанные без построения стековых векторов длины N·M."""

    __slots__ = ("local", "normalized", "consensus", "average")

    def __init__(self, local: np.ndarray, normalized: np.ndarray, consensus: float, average: float):
        self.local = local
        self.normalized = normalized
        self.consensus = consensus
        self.average = average


class AnalysisService(BaseService):
    """
    Стековая динамика и диагностика сходимости.

    Предоставляет методы:
    - auxiliary_state / gather: вложение состояния агента в ℝ^M и обратно.
    - build_block_laplacian, stacked_step, stacked_trajectory: независимый оракул для
      поагентного алгоритма.
    - network_average и ряды ошибок консенсуса, среднего и локальных ошибок.
    - triangle_bound: поточечная проверка local ≤ consensus + average.
    """

    def masks(self, sys: FieldSystem) -> InterestMask:
        mask = np.zeros((sys.N, sys.M), dtype=bool)
        for n, interest in enumerate(sys.interests):
            mask[n, interest.indices] = True
        return InterestMask(mask=mask)

    def auxiliary_state(self, x_n: AgentState | np.ndarray, interest: InterestSet, M: int) -> np.ndarray:
        """
        Вспомогательное состояние x̃_n: компонента m равна [x_n]_{𝓘_n⁻¹(m)} при m ∈ 𝓘_n, иначе 0.
        """
        estimate = x_n.estimate if isinstance(x_n, AgentState) else np.asarray(x_n, dtype=float)
        if estimate.size != len(interest):
            raise DimensionMismatchException(
                f"Длина состояния {estimate.size} не совпадает с |𝓘_n| = {len(interest)}"
            )
        scattered = np.zeros(M)
        scattered[interest.indices] = estimate
        return scattered

    def gather(self, x_tilde_n: np.ndarray, interest: InterestSet) -> np.ndarray:
        """Обратное к `auxiliary_state`: компоненты 𝓘_n в порядке возрастания."""
        return np.asarray(x_tilde_n, dtype=float)[interest.indices].copy()

    def stack_auxiliary(self, estimates: Sequence[np.ndarray], sys: FieldSystem) -> np.ndarray:
        """𝐱̃ = [x̃_1ᵀ … x̃_Nᵀ]ᵀ длины N·M."""
        return np.concatenate([
            self.auxiliary_state(x_n, interest, sys.M)
            for x_n, interest in zip(estimates, sys.interests)
        ])

    def unstack_auxiliary(self, x_tilde: np.ndarray, sys: FieldSystem) -> list[np.ndarray]:
        blocks = np.asarray(x_tilde, dtype=float).reshape(sys.N, sys.M)
        return [self.gather(block, interest) for block, interest in zip(blocks, sys.interests)]

    def build_block_laplacian(self, graph: CommGraph, masks: InterestMask) -> sp.csr_matrix:
        """
        Блочная матрица 𝐋 размера NM × NM.

        Блок (n, l) при n ≠ l равен [L]_{n,l} Q_n Q_l, диагональный блок равен
        −Q_n Σ_{i≠n} [L]_{n,i} Q_i. Все блоки диагональны, поэтому матрица собирается
        сразу в координатном формате по общим компонентам соседей.
        """
        if graph.N != masks.N:
            raise DimensionMismatchException(
                f"В графе {graph.N} вершин, а масок интересов {masks.N}"
            )
        M = masks.M
        laplacian = sp.coo_matrix(GraphService().laplacian(graph))
        rows, cols, values = [], [], []
        for n, l, weight in zip(laplacian.row, laplacian.col, laplacian.data):
            if n == l:
                continue
            shared = np.flatnonzero(masks.mask[n] & masks.mask[l])
            rows += [n * M + shared, n * M + shared]
            cols += [l * M + shared, n * M + shared]
            values += [np.full(shared.size, weight), np.full(shared.size, -weight)]

        size = masks.N * M
        if not rows:
            return sp.csr_matrix((size, size))
        matrix = sp.coo_matrix(
            (np.concatenate(values), (np.concatenate(rows), np.concatenate(cols))),
            shape=(size, size),
        )
        # дубликаты диагональных элементов суммируются при переводе в CSR
        return matrix.tocsr()

    def measurement_blocks(self, sys: FieldSystem) -> sp.csr_matrix:
        """D_H = blkdiag(H_1, …, H_N) размера P × NM."""
        return sp.block_diag([agent.matrix for agent in sys.agents], format="csr")

    def stacked_step(
        self,
        x_tilde: np.ndarray,
        block_laplacian: sp.csr_matrix,
        sys: FieldSystem,
        y: np.ndarray,
        t: int,
        hp: HyperParams,
        algorithm: Algorithm = Algorithm.RESILIENT,
        blocks: sp.csr_matrix | None = None,
    ) -> np.ndarray:
        """
        Один шаг стековой динамики:
        𝐱̃_{t+1} = 𝐱̃_t − β_t 𝐋 𝐱̃_t + α_t D_Hᵀ 𝐊_t (𝐲 − D_H 𝐱̃_t).

        Для CIRFE все коэффициенты 𝐊_t равны единице.

        Параметры:
        - blocks: Предвычисленная D_H (при повторных шагах).
        """
        blocks = self.measurement_blocks(sys) if blocks is None else blocks
        residual = np.asarray(y, dtype=float) - blocks @ x_tilde
        if algorithm == Algorithm.RESILIENT:
            gains = saturation_gains(residual, gamma_threshold(t, hp))
        else:
            gains = np.ones_like(residual)
        return (
            x_tilde
            - beta(t, hp) * (block_laplacian @ x_tilde)
            + alpha(t, hp) * (blocks.T @ (gains * residual))
        )

    def stacked_trajectory(
        self,
        sys: FieldSystem,
        graph: CommGraph,
        y: np.ndarray,
        hp: HyperParams,
        iterations: int,
        algorithm: Algorithm = Algorithm.RESILIENT,
    ) -> list[np.ndarray]:
        """
        Траектория стековой динамики из нулевого состояния: список 𝐱̃_0 … 𝐱̃_T.
        """
        block_laplacian = self.build_block_laplacian(graph, self.masks(sys))
        blocks = self.measurement_blocks(sys)
        x_tilde = np.zeros(sys.N * sys.M)
        trajectory = [x_tilde]
        for t in range(iterations):
            x_tilde = self.stacked_step(
                x_tilde, block_laplacian, sys, y, t, hp, algorithm, blocks=blocks
            )
            trajectory.append(x_tilde)
        return trajectory

    def network_average(self, x_tilde: np.ndarray, masks: InterestMask) -> np.ndarray:
        """
        Обобщённое сетевое среднее 𝐱̄ = 𝓓(𝟏ᵀ ⊗ I_M)𝐱̃: компонента m — среднее оценок агентов 𝓙_m.

        Исключения:
        - EmptyInterestGroupException: если какая-то группа 𝓙_m пуста.
        """
        empty = np.flatnonzero(masks.group_sizes == 0)
        if empty.size:
            raise EmptyInterestGroupException(
                f"Пустые группы интересов у компонентов {(empty + 1)[:10].tolist()}"
            )
        total = np.asarray(x_tilde, dtype=float).reshape(masks.N, masks.M).sum(axis=0)
        return masks.averaging @ total

    def spread_average(self, average: np.ndarray, masks: InterestMask) -> np.ndarray:
        """𝓠(𝟏 ⊗ I_M)𝐱̄: каждому агенту — средние по его компонентам интересов, вне них нули."""
        return masks.stacked @ np.tile(average, masks.N)

    def round_errors(self, estimates: Sequence[np.ndarray], sys: FieldSystem) -> RoundErrors:
        """
        Ошибки одного раунда.

        - local[n − 1] = ‖x_n − θ*_{𝓘_n}‖₂, normalized — то же, делённое на √|𝓘_n|;
        - consensus = ‖𝓠(𝐱̃ − 𝟏 ⊗ 𝐱̄)‖₂;
        - average = ‖𝐱̄ − θ*‖₂.
        """
        theta = sys.theta
        total = np.zeros(sys.M)
        for x_n, interest in zip(estimates, sys.interests):
            total[interest.indices] += x_n
        sizes = sys.group_sizes
        if np.any(sizes == 0):
            raise EmptyInterestGroupException()
        average = total / sizes

        local = np.empty(sys.N)
        spread = 0.0
        for n, (x_n, interest) in enumerate(zip(estimates, sys.interests)):
            local[n] = np.linalg.norm(x_n - theta[interest.indices])
            spread += float(np.sum((x_n - average[interest.indices]) ** 2))
        lengths = np.array([len(interest) for interest in sys.interests], dtype=float)
        return RoundErrors(
            local=local,
            normalized=local / np.sqrt(lengths),
            consensus=float(np.sqrt(spread)),
            average=float(np.linalg.norm(average - theta)),
        )

    def consensus_error(self, rounds: Sequence[RoundState], sys: FieldSystem) -> ErrorSeries:
        return self._series("consensus_error", rounds, sys, lambda errors: errors.consensus)

    def average_error(self, rounds: Sequence[RoundState], sys: FieldSystem) -> ErrorSeries:
        return self._series("average_error", rounds, sys, lambda errors: errors.average)

    def local_errors(self, rounds: Sequence[RoundState], sys: FieldSystem) -> ErrorSeries:
        """Локальные ошибки: матрица T × N, столбец n − 1 — агент n."""
        return self._series("local_errors", rounds, sys, lambda errors: errors.local)

    def _series(self, name, rounds, sys, pick) -> ErrorSeries:
        if not rounds:
            raise ValueError("Траектория пуста")
        values = [pick(self.round_errors(state.estimates(), sys)) for state in rounds]
        return ErrorSeries(
            name=name,
            iterations=np.array([state.t for state in rounds], dtype=float),
            values=np.array(values, dtype=float),
        )

    def triangle_bound(
        self, rounds: Sequence[RoundState], sys: FieldSystem, slack: float = 1e-9
    ) -> np.ndarray:
        """
        Проверяет ‖x_n(t) − θ*_{𝓘_n}‖₂ ≤ ‖𝓠𝐱̂_t‖₂ + ‖𝐞̄_t‖₂ для всех агентов.

        Возвращает:
        - Булев массив по итерациям: True, если неравенство выполнено для всех агентов.
        """
        result = []
        for state in rounds:
            errors = self.round_errors(state.estimates(), sys)
            bound = errors.consensus + errors.average
            result.append(bool(np.all(errors.local <= bound + slack * max(1.0, bound))))
        return np.array(result, dtype=bool)
