from pathlib import Path

import numpy as np
import pandas as pd
from scipy.ndimage import gaussian_filter

from src.exceptions import ConfigException
from src.schemas.scenario import FieldGeneratorParams


def smooth_field(params: FieldGeneratorParams) -> np.ndarray:
    """
    Гладкое случайное поле rows × cols, развёрнутое построчно в вектор длины rows·cols.

    Белый шум из `default_rng(seed)` сглаживается гауссовым фильтром с σ = smoothness,
    затем линейно переводится в [low, high] и округляется до целых.
    """
    rng = np.random.default_rng(params.seed)
    noise = rng.standard_normal((params.rows, params.cols))
    smooth = gaussian_filter(noise, sigma=params.smoothness, mode="reflect")
    spread = smooth.max() - smooth.min()
    if spread == 0:
        scaled = np.full_like(smooth, (params.low + params.high) / 2)
    else:
        scaled = params.low + (smooth - smooth.min()) / spread * (params.high - params.low)
    return np.round(scaled).ravel()


def load_field_file(path: str | Path, length: int | None = None) -> np.ndarray:
    """
    Читает поле из CSV (матрица или столбец без заголовка) или из .npy, разворачивая построчно.

    Исключения:
    - ConfigException: если файл не найден, не читается или длина не совпадает с `length`.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigException(f"Файл поля {path} не найден")
    try:
        if path.suffix == ".npy":
            values = np.load(path, allow_pickle=False)
        else:
            values = pd.read_csv(path, header=None, comment="#").to_numpy(dtype=float)
    except (ValueError, OSError) as exc:
        raise ConfigException(f"Не удалось прочитать файл поля {path}: {exc}") from exc

    values = np.asarray(values, dtype=float).ravel()
    if length is not None and values.size != length:
        raise ConfigException(f"В файле поля {path} {values.size} значений, ожидалось {length}")
    if not np.all(np.isfinite(values)):
        raise ConfigException(f"Файл поля {path} содержит бесконечные или NaN значения")
    return values
