from pathlib import Path

import yaml
from pydantic import ValidationError

from src.exceptions import ConfigException
from src.repositories.base import BaseRepository
from src.repositories.mappers.mappers import ScenarioDataMapper
from src.repositories.utils import LineLoader, locate_line, strip_lines
from src.schemas.scenario import Scenario, ScenarioFile


class ScenariosRepository(BaseRepository):
    """
    Репозиторий YAML-файлов сценариев.

    Ошибки разбора YAML и схемы переводятся в `ConfigException` с номером строки.
    """

    mapper = ScenarioDataMapper

    def get_record(self, path: Path) -> ScenarioFile:
        """
        Читает и проверяет запись файла сценария.

        Исключения:
        - ConfigException: файл не найден, синтаксическая ошибка YAML или ошибка схемы.
        """
        path = Path(path)
        if not path.exists():
            raise ConfigException(f"Файл сценария {path} не найден")
        try:
            data = yaml.load(path.read_text(encoding="utf-8"), Loader=LineLoader)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            raise ConfigException(
                f"Ошибка разбора YAML: {getattr(exc, 'problem', exc)}",
                line=mark.line + 1 if mark is not None else None,
            ) from exc
        if not isinstance(data, dict):
            raise ConfigException("Файл сценария должен содержать словарь верхнего уровня", line=1)

        try:
            return ScenarioFile.model_validate(strip_lines(data))
        except ValidationError as exc:
            error = exc.errors()[0]
            where = ".".join(str(key) for key in error["loc"])
            raise ConfigException(
                f"{where}: {error['msg']}" if where else error["msg"],
                line=locate_line(data, error["loc"]),
            ) from exc

    def get_one(self, path: Path) -> Scenario:
        """Явный сценарий как доменный объект (без разворачивания секции `grid`)."""
        path = Path(path)
        return self.mapper.map_to_domain_entity(self.get_record(path), base_dir=path.parent)

    def add(self, name: str, scenario: Scenario) -> Path:
        """
        Записывает сценарий. Одинаковые сценарии дают побайтно одинаковые файлы.
        """
        record = self.mapper.map_to_persistence_entity(scenario)
        path = self.target(name)
        text = yaml.safe_dump(
            record.model_dump(mode="json", exclude_none=True),
            sort_keys=False,
            allow_unicode=True,
            default_flow_style=None,
            width=100,
        )
        path.write_text(text, encoding="utf-8")
        return path
