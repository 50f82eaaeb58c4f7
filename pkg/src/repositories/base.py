import logging
from pathlib import Path

import pandas as pd

from src.exceptions import ConfigException
from src.repositories.mappers.base import DataMapper


class BaseRepository:
    """
    Базовый репозиторий файлов результатов.

    Все записи выполняются в каталог подготовки `staging`; в выходной каталог файлы
    переносит `StorageManager.commit()`. Чтение выполняется по произвольному пути.

    Атрибуты класса (переопределяются в наследниках):
    - mapper: Маппер между записями файла и доменными схемами.
    """

    mapper: type[DataMapper]
    staging: Path

    def __init__(self, staging: Path):
        self.staging = staging

    def target(self, name: str) -> Path:
        """Путь файла в каталоге подготовки; вложенные каталоги создаются."""
        path = self.staging / name
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def write_csv(self, frame: pd.DataFrame, name: str, header: dict[str, str] | None = None) -> Path:
        """
        Записывает таблицу в CSV, предваряя её блоком комментариев `# ключ: значение`.

        Возвращает:
        - Путь файла в каталоге подготовки.
        """
        path = self.target(name)
        with open(path, "w", encoding="utf-8", newline="") as file:
            for key, value in (header or {}).items():
                file.write(f"# {key}: {value}\n")
            frame.to_csv(file, index=False, float_format="%.17g")
        logging.debug(f"Подготовлен файл {path}, строк: {len(frame)}")
        return path

    @staticmethod
    def read_header(path: Path) -> dict[str, str]:
        header = {}
        with open(path, encoding="utf-8") as file:
            for line in file:
                if not line.startswith("#"):
                    break
                key, _, value = line[1:].partition(":")
                header[key.strip()] = value.strip()
        return header

    @staticmethod
    def read_csv(path: Path) -> pd.DataFrame:
        """
        Читает CSV с блоком комментариев.

        Исключения:
        - ConfigException: если файл не найден.
        """
        path = Path(path)
        if not path.exists():
            raise ConfigException(f"Файл {path} не найден")
        return pd.read_csv(path, comment="#")
