import numpy as np

from src.exceptions import DecayFitException, ScalarSystemParamsException
from src.schemas.analysis import ErrorSeries
from src.services.base import BaseService


def _as_params(*values) -> list[np.ndarray]:
    return [np.atleast_1d(np.asarray(value, dtype=float)) for value in values]


class ConvergenceService(BaseService):
    """
    Скалярные нестационарные системы, на которых держатся оценки скорости сходимости,
    и оценка показателя убывания ряда.

    Оба симулятора векторизованы по параметрам: любой параметр может быть массивом,
    тогда моделируются сразу все наборы (столбцы результата).
    """

    def simulate_forced_decay(self, c1, delta1, c2, delta2, w0, T: int) -> np.ndarray:
        """
        Моделирует w_{t+1} = (1 − r1(t))w_t + r2(t), r1(t) = c1/(t+1)^δ1, r2(t) = c2/(t+1)^δ2.

        Условия: c1 > 0, c2 ≥ 0, 0 < δ1 < δ2 < 1. Тогда (t+1)^δ0·w_t → 0 для любого
        0 ≤ δ0 < δ2 − δ1.

        Возвращает:
        - Массив w_0 … w_T формы (T+1,) или (T+1, K) для K наборов параметров.
        """
        c1, delta1, c2, delta2, w0 = _as_params(c1, delta1, c2, delta2, w0)
        if np.any(c1 <= 0) or np.any(c2 < 0):
            raise ScalarSystemParamsException("Нужно c1 > 0 и c2 ≥ 0")
        if not np.all((0 < delta1) & (delta1 < delta2) & (delta2 < 1)):
            raise ScalarSystemParamsException("Нужно 0 < δ1 < δ2 < 1")

        shape = np.broadcast(c1, delta1, c2, delta2, w0).shape
        series = np.empty((T + 1,) + shape)
        w = np.broadcast_to(w0, shape).astype(float)
        series[0] = w
        for t in range(T):
            base = t + 1.0
            w = (1.0 - c1 / base**delta1) * w + c2 / base**delta2
            series[t + 1] = w
        return series[:, 0] if series.shape[1] == 1 else series

    def simulate_state_dependent_decay(
        self, c1, delta1, c3, c4, c5, delta3, delta4, w0, T: int
    ) -> np.ndarray:
        """
        Моделирует систему с зависящим от состояния сжатием:
        w_{t+1} = (1 − r1(t)c3/((|w_t| + c5)(t+1)^δ3))w_t + r1(t)c4/(t+1)^δ4, r1(t) = c1/(t+1)^δ1.

        Условия: c1, c3, c5 > 0, c4 ≥ 0, 0 < δ3 < δ4 < δ1. Тогда (t+1)^δ0·w_t → 0 для любого
        0 ≤ δ0 < δ4 − δ3.
        """
        c1, delta1, c3, c4, c5, delta3, delta4, w0 = _as_params(
            c1, delta1, c3, c4, c5, delta3, delta4, w0
        )
        if np.any(c1 <= 0) or np.any(c3 <= 0) or np.any(c5 <= 0) or np.any(c4 < 0):
            raise ScalarSystemParamsException("Нужно c1, c3, c5 > 0 и c4 ≥ 0")
        if not np.all((0 < delta3) & (delta3 < delta4) & (delta4 < delta1)):
            raise ScalarSystemParamsException("Нужно 0 < δ3 < δ4 < δ1")

        shape = np.broadcast(c1, delta1, c3, c4, c5, delta3, delta4, w0).shape
        series = np.empty((T + 1,) + shape)
        w = np.broadcast_to(w0, shape).astype(float)
        series[0] = w
        for t in range(T):
            base = t + 1.0
            r1 = c1 / base**delta1
            w = (1.0 - r1 * c3 / ((np.abs(w) + c5) * base**delta3)) * w + r1 * c4 / base**delta4
            series[t + 1] = w
        return series[:, 0] if series.shape[1] == 1 else series

    def decay_exponent(self, series, window: float | int = 0.5, iterations=None) -> float:
        """
        Показатель убывания: наклон прямой МНК для log(value) от log(t+1) на хвосте ряда.

        Параметры:
        - series: ErrorSeries (для матричного ряда берётся максимум по агентам) или массив.
        - window: Доля хвоста (0 < window ≤ 1) или число последних точек (целое > 1).
        - iterations: Номера итераций для массива (по умолчанию 0, 1, …).

        Исключения:
        - DecayFitException: если в окне есть неположительные значения или точек меньше двух.

        Возвращает:
        - Наклон; чем он отрицательнее, тем быстрее убывание.
        """
        if isinstance(series, ErrorSeries):
            values = series.maximum()
            iterations = series.iterations
        else:
            values = np.asarray(series, dtype=float)
        if iterations is None:
            iterations = np.arange(values.size, dtype=float)
        iterations = np.asarray(iterations, dtype=float)

        if isinstance(window, int) and window > 1:
            count = window
        elif 0 < window <= 1:
            count = int(np.ceil(values.size * window))
        else:
            raise ValueError(f"Некорректное окно {window}")
        count = min(count, values.size)
        if count < 2:
            raise DecayFitException("В окне меньше двух точек")

        tail = values[-count:]
        if np.any(tail <= 0) or not np.all(np.isfinite(tail)):
            raise DecayFitException()
        slope, _ = np.polyfit(np.log(iterations[-count:] + 1.0), np.log(tail), 1)
        return float(slope)
