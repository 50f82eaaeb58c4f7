from pathlib import Path

from src.repositories.base import BaseRepository
from src.repositories.mappers.mappers import FieldDumpDataMapper
from src.schemas.scenario import FieldDump


class FieldDumpsRepository(BaseRepository):
    """Дампы восстановленного поля `row,col,true,recovered,abs_error`."""

    mapper = FieldDumpDataMapper

    def add(self, dump: FieldDump, name: str = "field.csv") -> Path:
        return self.write_csv(self.mapper.map_to_persistence_entity(dump), name)

    def get_one(self, path: Path) -> FieldDump:
        return self.mapper.map_to_domain_entity(self.read_csv(path))
