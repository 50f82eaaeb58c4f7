from src.utils.storage_manager import StorageManager


class BaseService:
    """
    Базовый класс для всех сервисов приложения.

    Предоставляет унифицированный доступ к менеджеру хранилища (StorageManager),
    который содержит репозитории сценариев, трасс и дампов поля.

    Наследование от этого класса позволяет:
    - Использовать `self.storage` в дочерних сервисах.
    - Поддерживать единый интерфейс взаимодействия с файлами результатов.
    - Создавать вычислительные сервисы без хранилища (`storage=None`).

    Пример использования:
        class ScenarioService(BaseService):
            def load(self, path):
                return self.storage.scenarios.load(path)
    """

    storage: StorageManager | None

    def __init__(self, storage: StorageManager | None = None) -> None:
        """
        Инициализирует сервис с опциональным экземпляром StorageManager.

        Параметры:
        - storage (StorageManager | None): Менеджер хранилища. Передаётся из команды CLI.
        """
        self.storage = storage
