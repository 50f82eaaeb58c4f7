from typing import Annotated

import typer
from rich.console import Console

from src.cli.dependencies import ConfigOpt, OutOpt, SeedOpt, apply_overrides, cli_errors
from src.services.scenario import ScenarioService
from src.utils.storage_manager import StorageManager

console = Console()


def generate(
    config: ConfigOpt,
    out: OutOpt = None,
    seed: SeedOpt = None,
    name: Annotated[str, typer.Option("--name", help="Имя файла сценария")] = "scenario.yaml",
):
    """
    Строит сценарий и записывает его файл.

    Параметры:
    - config: Файл с секцией `grid` (генератор) или явный сценарий.
    - seed: Зерно генератора поля и выбора атакованных агентов.
    - name: Имя выходного файла в каталоге `--out`.

    Логика:
    - Загружает или генерирует сценарий через `ScenarioService`.
    - Записывает явные секции (и `grid` как происхождение) в YAML.

    Одинаковые параметры и зерно дают побайтно одинаковый файл.
    """
    with cli_errors(), StorageManager(out) as storage:
        service = ScenarioService(storage)
        scenario = apply_overrides(service, service.load(config), seed=seed)
        service.save(name, scenario)
        (path,) = storage.commit()

    system = scenario.system
    console.print(
        f"[green]Сценарий записан:[/green] {path} "
        f"(N = {system.N}, M = {system.M}, P = {system.P}, "
        f"атаковано агентов: {len(scenario.attacked_agents)})"
    )
