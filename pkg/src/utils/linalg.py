import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from src.config import settings


def min_eigenvalue(gram: sp.spmatrix) -> float:
    """
    Минимальное собственное значение симметричной матрицы Грама.

    Логика:
    - Диагональная матрица (строки-селекторы) — минимум диагонали без разложения.
    - Размер не больше DENSE_EIGEN_LIMIT — плотное симметричное разложение.
    - Иначе — `eigsh` для наименьшего алгебраического значения.
    """
    gram = sp.csr_matrix(gram)
    diagonal = gram.diagonal()
    if (gram - sp.diags(diagonal)).count_nonzero() == 0:
        return float(diagonal.min()) if diagonal.size else 0.0
    if gram.shape[0] <= settings.DENSE_EIGEN_LIMIT:
        return float(np.linalg.eigvalsh(gram.toarray())[0])
    return float(spla.eigsh(gram, k=1, which="SA", return_eigenvectors=False)[0])


def is_selector_matrix(matrix: sp.spmatrix) -> bool:
    """Каждая строка — ±e_m: ровно один ненулевой элемент с модулем 1."""
    matrix = sp.csr_matrix(matrix)
    return bool(
        np.all(np.diff(matrix.indptr) == 1) and np.all(np.abs(matrix.data) == 1.0)
    )
