from typing import Any, Type, TypeVar

from pydantic import BaseModel

SchemaType = TypeVar("SchemaType", bound=BaseModel)


class DataMapper:
    """
    Базовый класс для маппинга данных между файлами результатов и доменными схемами.

    Назначение:
    - Преобразование записей файлов (словарей, строк CSV, схем файла) в доменные схемы.
    - Преобразование доменных схем в записи, готовые к сериализации.

    Атрибуты класса (переопределяются в наследниках):
    - schema: Доменная pydantic-схема (например, `IterationMetrics`).
    """

    schema: Type[SchemaType]

    @classmethod
    def map_to_domain_entity(cls, data: Any) -> SchemaType:
        """
        Преобразует запись из файла в доменную схему.

        Использует `model_validate` с `from_attributes=True`, поэтому принимает
        словари и объекты с атрибутами.
        """
        return cls.schema.model_validate(data, from_attributes=True)

    @classmethod
    def map_to_persistence_entity(cls, data: BaseModel) -> Any:
        """
        Преобразует доменную схему в запись с JSON-совместимыми типами.
        """
        return data.model_dump(mode="json")
