import logging
import shutil
import tempfile
from pathlib import Path

from src.config import settings
from src.repositories.fields import FieldDumpsRepository
from src.repositories.scenarios import ScenariosRepository
from src.repositories.traces import TracesRepository


class StorageManager:
    """
    Менеджер хранилища результатов: каталог подготовки и репозитории.

    Предоставляет:
    - Контекстный менеджер.
    - Доступ к репозиториям (scenarios, traces, fields).
    - Фиксацию результатов: файлы попадают в выходной каталог только после `commit()`.

    Пример:
        with StorageManager(out_dir) as storage:
            storage.traces.add(trace)
            storage.commit()
    """

    def __init__(self, out_dir: str | Path | None = None):
        """
        Параметры:
        - out_dir: Выходной каталог (по умолчанию settings.OUT_DIR).
        """
        self.out_dir = Path(out_dir) if out_dir is not None else Path(settings.OUT_DIR)
        self.staging: Path | None = None

    def __enter__(self):
        """
        Создаёт каталог подготовки внутри выходного каталога и инициализирует репозитории.
        """
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=self.out_dir))

        # Инициализация репозиториев
        self.scenarios = ScenariosRepository(self.staging)
        self.traces = TracesRepository(self.staging)
        self.fields = FieldDumpsRepository(self.staging)

        return self

    def __exit__(self, *args):
        """
        Удаляет каталог подготовки. Незафиксированные файлы отбрасываются (откат).
        """
        if self.staging is None:
            return
        pending = [path for path in self.staging.rglob("*") if path.is_file()]
        if pending:
            logging.warning(f"Откат: отброшено незафиксированных файлов: {len(pending)}")
        shutil.rmtree(self.staging, ignore_errors=True)
        self.staging = None

    def commit(self) -> list[Path]:
        """
        Переносит подготовленные файлы в выходной каталог, заменяя существующие.

        Возвращает:
        - Пути зафиксированных файлов.
        """
        committed = []
        for path in sorted(self.staging.rglob("*")):
            if not path.is_file():
                continue
            destination = self.out_dir / path.relative_to(self.staging)
            destination.parent.mkdir(parents=True, exist_ok=True)
            shutil.move(str(path), destination)
            committed.append(destination)
        logging.info(f"Зафиксировано файлов в {self.out_dir}: {len(committed)}")
        return committed
