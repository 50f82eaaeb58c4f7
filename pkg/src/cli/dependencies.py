from contextlib import contextmanager
from pathlib import Path
from typing import Annotated

import numpy as np
import typer
from pydantic import ValidationError

from src.exceptions import (
    AssumptionCLIException,
    AssumptionViolationException,
    ConfigCLIException,
    ConfigException,
    FieldRecoveryException,
    RuntimeCLIException,
)
from src.schemas.scenario import RunSettings, Scenario
from src.services.scenario import ScenarioService

ConfigOpt = Annotated[
    Path, typer.Option("--config", "-c", help="YAML-файл сценария (или параметры сетки)")
]
IterationsOpt = Annotated[int | None, typer.Option("--iters", help="Число итераций T")]
AlgorithmOpt = Annotated[
    str | None, typer.Option("--algorithm", help="Алгоритм: resilient или cirfe")
]
SeedOpt = Annotated[
    int | None, typer.Option("--seed", help="Зерно (0…2⁶⁴−1); перегенерирует сеточный сценарий")
]
OutOpt = Annotated[
    Path | None, typer.Option("--out", "-o", help="Выходной каталог (по умолчанию OUT_DIR)")
]
SnapshotEveryOpt = Annotated[
    int | None, typer.Option("--snapshot-every", help="Шаг сохранения состояний агентов")
]
WorkersOpt = Annotated[
    int | None, typer.Option("--workers", min=1, help="Потоков на обновление агентов в раунде")
]
TauOpt = Annotated[
    float | None, typer.Option("--tau", help="Показатель τ для столбцов (t+1)^τ·ошибка")
]


@contextmanager
def cli_errors():
    """
    Переводит доменные исключения в CLI-исключения с кодом выхода.

    Логика:
    - ConfigException и ошибки валидации pydantic → ConfigCLIException (код 2, с номером строки).
    - AssumptionViolationException → AssumptionCLIException (код 3).
    - Прочие ошибки приложения, ввода-вывода, линейной алгебры и ValueError
      → RuntimeCLIException (код 4).
    """
    try:
        yield
    except ConfigException as exc:
        raise ConfigCLIException(exc.detail, line=exc.line) from exc
    except ValidationError as exc:
        error = exc.errors()[0]
        where = ".".join(str(key) for key in error["loc"])
        raise ConfigCLIException(f"{where}: {error['msg']}" if where else error["msg"]) from exc
    except AssumptionViolationException as exc:
        raise AssumptionCLIException(exc.detail) from exc
    except FieldRecoveryException as exc:
        raise RuntimeCLIException(exc.detail) from exc
    except OSError as exc:
        raise RuntimeCLIException(f"Ошибка ввода-вывода: {exc}") from exc
    except np.linalg.LinAlgError as exc:
        raise RuntimeCLIException(f"Ошибка линейной алгебры: {exc}") from exc
    except ValueError as exc:
        raise RuntimeCLIException(str(exc)) from exc


def apply_overrides(
    service: ScenarioService,
    scenario: Scenario,
    iters: int | None = None,
    algorithm: str | None = None,
    seed: int | None = None,
    snapshot_every: int | None = None,
) -> Scenario:
    """
    Применяет флаги командной строки поверх секции `run` сценария.

    Логика:
    - Новые настройки проверяются схемой `RunSettings` (ошибка → ValidationError).
    - `--seed` перегенерирует сеточный сценарий через `ScenarioService.with_seed`.

    Возвращает:
    - Сценарий с обновлёнными настройками запуска.
    """
    overrides = {
        "iterations": iters,
        "algorithm": algorithm,
        "seed": seed,
        "snapshot_every": snapshot_every,
    }
    run = RunSettings.model_validate({
        **scenario.run.model_dump(),
        **{key: value for key, value in overrides.items() if value is not None},
    })
    if seed is not None and seed != scenario.run.seed:
        scenario = service.with_seed(scenario, seed)
    return scenario.model_copy(update={"run": run})
