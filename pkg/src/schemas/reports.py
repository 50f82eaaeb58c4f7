from pydantic import BaseModel, ConfigDict


class CheckResult(BaseModel):
    """
    Результат одной проверки предположения.

    Поля:
    - name: Имя проверки (например, "unit_norm_rows").
    - passed: Пройдена ли проверка.
    - detail: Человекочитаемое пояснение.
    - items: Нарушители (номера строк, агентов или компонентов — с единицы).
    """

    name: str
    passed: bool
    detail: str = ""
    items: tuple[int, ...] = ()

    model_config = ConfigDict(frozen=True)


class ValidationReport(BaseModel):
    """
    Отчёт о проверке набора предположений. Проходит, только если пройдены все проверки.
    """

    checks: tuple[CheckResult, ...]

    model_config = ConfigDict(frozen=True)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> tuple[CheckResult, ...]:
        return tuple(check for check in self.checks if not check.passed)

    def check(self, name: str) -> CheckResult:
        return next(check for check in self.checks if check.name == name)

    def summary(self) -> str:
        if self.passed:
            return "все проверки пройдены"
        return "; ".join(
            f"{check.name}: {check.detail}" + (f" {list(check.items[:10])}" if check.items else "")
            for check in self.failures
        )


class TopologyReport(BaseModel):
    """
    Связность подграфов G_m.

    Поля:
    - disconnected: Компоненты m (с единицы), для которых G_m несвязен.
    - empty: Компоненты с пустой группой 𝓙_m.
    """

    disconnected: tuple[int, ...] = ()
    empty: tuple[int, ...] = ()

    model_config = ConfigDict(frozen=True)

    @property
    def passed(self) -> bool:
        return not self.disconnected and not self.empty
