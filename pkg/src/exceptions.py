import json

import typer


class FieldRecoveryException(Exception):
    """
    Базовый класс для всех кастомных исключений приложения.

    Наследуется от стандартного `Exception`.
    Содержит общее поведение и атрибут `detail` по умолчанию. Конкретное сообщение
    можно передать первым аргументом — тогда оно заменяет `detail` экземпляра.

    Атрибуты:
    - detail (str): Сообщение об ошибке, используемое по умолчанию.
    """

    detail = "Неожиданная ошибка"

    def __init__(self, detail: str | None = None, *args):
        if detail is not None:
            self.detail = detail
        super().__init__(self.detail, *args)


class ConfigException(FieldRecoveryException):
    """
    Ошибка в файле сценария или конфигурации.

    Атрибуты:
    - line (int | None): Номер строки YAML-файла (с единицы), если его удалось определить.
    """

    detail = "Некорректная конфигурация"

    def __init__(self, detail: str | None = None, line: int | None = None):
        self.line = line
        super().__init__(detail)


class DimensionMismatchException(FieldRecoveryException):
    detail = "Размерности не согласованы"


class HyperParamsException(ConfigException):
    detail = "Гиперпараметры нарушают условия 0 < τ2 < τ1 < 1 и 0 < τγ < τ1 − τ2"


class UnknownAlgorithmException(ConfigException):
    detail = "Неизвестный алгоритм: допустимы resilient и cirfe"


class AssumptionViolationException(FieldRecoveryException):
    """
    Нарушено одно из предположений модели (наблюдаемость, связность, вложенность множеств).

    Атрибуты:
    - report: Детализированный отчёт проверки (если есть).
    """

    detail = "Нарушены предположения модели"

    def __init__(self, detail: str | None = None, report=None):
        self.report = report
        super().__init__(detail)


class CouplingViolationException(AssumptionViolationException):
    detail = "Множество физической связи агента не содержится в его множестве интересов"


class EmptyInterestGroupException(AssumptionViolationException):
    detail = "Компонент поля не интересует ни одного агента"


class DisconnectedInterestGraphException(AssumptionViolationException):
    detail = "Подграф агентов, интересующихся компонентом, несвязен"


class UnobservableSystemException(AssumptionViolationException):
    detail = "Система измерений не является глобально наблюдаемой"


class NeighborStateMissingException(FieldRecoveryException):
    detail = "Отсутствует состояние соседа на текущей итерации"


class DecayFitException(FieldRecoveryException):
    detail = "Показатель убывания не определён: в окне есть неположительные значения"


class ScalarSystemParamsException(FieldRecoveryException):
    detail = "Параметры скалярной системы нарушают условия положительности или порядка показателей"


# === Валидационные функции ===
def check_hyperparams_ordering(tau1: float, tau2: float, tau_gamma: float) -> None:
    """
    Проверяет порядок показателей затухания весов и порога.

    Параметры:
    - tau1, tau2: Показатели весов α_t и β_t.
    - tau_gamma: Показатель порога γ_t.

    Исключения:
    - HyperParamsException: если не выполнено 0 < τ2 < τ1 < 1 или 0 < τγ < τ1 − τ2.
    """
    if not 0 < tau2 < tau1 < 1:
        raise HyperParamsException(f"Нужно 0 < τ2 < τ1 < 1, получено {tau2=}, {tau1=}")
    if not 0 < tau_gamma < tau1 - tau2:
        raise HyperParamsException(
            f"Нужно 0 < τγ < τ1 − τ2 = {tau1 - tau2:g}, получено {tau_gamma=}"
        )


def check_window_containment(measurement_window: int, interest_window: int) -> None:
    """
    Проверяет, что окно интересов не меньше окна измерений (иначе 𝓘̃_n ⊄ 𝓘_n).
    """
    if interest_window < measurement_window:
        raise ConfigException(
            f"Окно интересов ({interest_window}) меньше окна измерений ({measurement_window})"
        )


# === CLI-исключения (код выхода для пользователя) ===
class FieldRecoveryCLIException(typer.Exit):
    """
    Базовый класс для всех ошибок командной строки.

    Наследуется от `typer.Exit`: при возбуждении процесс завершается с кодом `exit_code`.
    При создании печатает в stderr одну JSON-строку с машинно-читаемой категорией ошибки.

    Атрибуты:
    - exit_code (int): Код завершения процесса.
    - category (str): Категория ошибки для скриптов-обёрток.
    - detail (str): Текст ошибки.
    """

    exit_code = 4
    category = "runtime"
    detail = "Ошибка выполнения"

    def __init__(self, detail: str | None = None, line: int | None = None):
        if detail is not None:
            self.detail = detail
        payload = {"status": "error", "category": self.category, "detail": self.detail}
        if line is not None:
            payload["line"] = line
        typer.echo(json.dumps(payload, ensure_ascii=False), err=True)
        super().__init__(code=self.exit_code)


class ConfigCLIException(FieldRecoveryCLIException):
    exit_code = 2
    category = "config"
    detail = "Некорректная конфигурация"


class AssumptionCLIException(FieldRecoveryCLIException):
    exit_code = 3
    category = "assumption"
    detail = "Нарушены предположения модели"


class RuntimeCLIException(FieldRecoveryCLIException):
    exit_code = 4
    category = "runtime"
    detail = "Ошибка во время моделирования"
