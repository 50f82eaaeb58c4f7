from pathlib import Path
from typing import Literal

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Класс для управления конфигурацией приложения.

    Загружает переменные окружения из файла `.env` (в тестах — `.env-test`).
    Параметры сценария (гиперпараметры, число итераций, окна) сюда не входят —
    они хранятся в YAML-файле сценария.

    Атрибуты:
    - MODE: Режим запуска. Один из: "TEST", "LOCAL", "DEV", "PROD".
    - LOG_LEVEL: Уровень логирования для `logging.basicConfig`.
    - OUT_DIR: Каталог по умолчанию для результатов CLI.
    - WORKERS: Число потоков для обновления агентов внутри раунда.
    - UNIT_NORM_TOL: Допуск на единичную норму строк матриц измерений.
    - OBSERVABILITY_TOL: Порог λ_min(𝓖) для глобальной наблюдаемости.
    - CONNECTIVITY_TOL: Порог λ_2, выше которого граф считается связным.
    - DELTA_ENUMERATION_LIMIT: Максимальное |𝒜| для точного перебора вершин гиперкуба.
    - DENSE_EIGEN_LIMIT: Максимальный размер матрицы для плотного собственного разложения.
    - ORACLE_AGENTS_PER_SIDE, ORACLE_ROUNDS: Размер уменьшенного сценария для проверки оракулом.
    - ORACLE_TOL: Допустимое расхождение поагентной и стековой траекторий.
    - ORACLE_MAX_STACK: Максимальная длина стекового вектора NM, при которой оракул
      запускается на сценарии без сокращения.

    Использование:
        from src.config import settings
        limit = settings.DELTA_ENUMERATION_LIMIT
    """

    MODE: Literal["TEST", "LOCAL", "DEV", "PROD"] = "LOCAL"
    LOG_LEVEL: str = "INFO"

    OUT_DIR: Path = Path("runs")
    WORKERS: int = 1

    UNIT_NORM_TOL: float = 1e-12
    OBSERVABILITY_TOL: float = 1e-10
    CONNECTIVITY_TOL: float = 1e-10

    DELTA_ENUMERATION_LIMIT: int = 20
    DENSE_EIGEN_LIMIT: int = 2000

    ORACLE_AGENTS_PER_SIDE: int = 3
    ORACLE_ROUNDS: int = 100
    ORACLE_TOL: float = 1e-9
    ORACLE_MAX_STACK: int = 20_000

    model_config = SettingsConfigDict(env_file=".env", extra="ignore")


settings = Settings()
