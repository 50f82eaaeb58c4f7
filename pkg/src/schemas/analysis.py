from functools import cached_property

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, field_validator

from src.schemas.types import ArrayModelConfig, FloatArray


class InterestMask(BaseModel):
    """
    Маски интересов для стековой динамики.

    Поля:
    - mask: Булева матрица N × M, mask[n − 1, m − 1] = 1 тогда и только тогда, когда m ∈ 𝓘_n.

    Производные матрицы:
    - Q(n): диагональная Q_n размера M;
    - stacked: блочно-диагональная 𝓠 = blkdiag(Q_1, …, Q_N);
    - averaging: 𝓓 = diag(|𝓙_1|⁻¹, …, |𝓙_M|⁻¹).
    """

    mask: np.ndarray

    model_config = ArrayModelConfig

    @field_validator("mask", mode="before")
    @classmethod
    def to_bool(cls, mask) -> np.ndarray:
        mask = np.array(mask, dtype=bool, copy=True)
        if mask.ndim != 2:
            raise ValueError("Маска интересов должна быть матрицей N × M")
        mask.setflags(write=False)
        return mask

    @property
    def N(self) -> int:
        return self.mask.shape[0]

    @property
    def M(self) -> int:
        return self.mask.shape[1]

    @cached_property
    def group_sizes(self) -> np.ndarray:
        return self.mask.sum(axis=0)

    def Q(self, n: int) -> sp.dia_matrix:
        return sp.diags(self.mask[n - 1].astype(float))

    @cached_property
    def stacked(self) -> sp.csr_matrix:
        return sp.diags(self.mask.ravel().astype(float), format="csr")

    @cached_property
    def averaging(self) -> sp.dia_matrix:
        sizes = self.group_sizes.astype(float)
        inverse = np.divide(1.0, sizes, out=np.zeros_like(sizes), where=sizes > 0)
        return sp.diags(inverse)


class ErrorSeries(BaseModel):
    """
    Ряд ошибок по итерациям.

    Поля:
    - name: Название ряда ("consensus_error", "average_error", "local_errors").
    - iterations: Номера итераций t.
    - values: Значения; для локальных ошибок — матрица T × N (столбец n − 1 — агент n).
    - tau: Показатель масштабирования, если ряд умножен на (t+1)^τ.
    """

    name: str
    iterations: FloatArray
    values: FloatArray
    tau: float | None = None

    model_config = ArrayModelConfig

    def scaled(self, tau: float) -> "ErrorSeries":
        """Возвращает ряд (t+1)^τ·value; масштабировать можно только исходный ряд."""
        if self.tau is not None:
            raise ValueError(f"Ряд {self.name} уже масштабирован с τ = {self.tau}")
        weights = (self.iterations + 1.0) ** tau
        if self.values.ndim == 2:
            weights = weights[:, None]
        return ErrorSeries(
            name=self.name, iterations=self.iterations, values=self.values * weights, tau=tau
        )

    def maximum(self) -> np.ndarray:
        """Максимум по агентам для матричного ряда (для скалярного — сам ряд)."""
        return self.values if self.values.ndim == 1 else self.values.max(axis=1)
