from typing import Annotated

import numpy as np
import scipy.sparse as sp
from pydantic import BeforeValidator, ConfigDict

# Модели с numpy/scipy-полями неизменяемы после создания
ArrayModelConfig = ConfigDict(frozen=True, arbitrary_types_allowed=True)


def to_readonly_array(value) -> np.ndarray:
    """
    Приводит вход к numpy-массиву float64 и запрещает запись в него.

    Используется как `BeforeValidator` для всех векторных полей схем,
    чтобы объекты оставались неизменяемыми после построения.
    """
    array = np.array(value, dtype=float, copy=True)
    array.setflags(write=False)
    return array


def to_csr_matrix(value) -> sp.csr_matrix:
    """
    Приводит матрицу (плотную или разреженную) к формату CSR с упорядоченными индексами.

    Явные нули удаляются: множество физической связи строится по структуре ненулевых элементов.
    """
    matrix = sp.csr_matrix(value, dtype=float, copy=True)
    matrix.eliminate_zeros()
    matrix.sort_indices()
    return matrix


FloatArray = Annotated[np.ndarray, BeforeValidator(to_readonly_array)]
SparseMatrix = Annotated[sp.csr_matrix, BeforeValidator(to_csr_matrix)]


def to_index_array(value) -> np.ndarray:
    array = np.array(value, dtype=np.int64, copy=True)
    array.setflags(write=False)
    return array


IndexArray = Annotated[np.ndarray, BeforeValidator(to_index_array)]
