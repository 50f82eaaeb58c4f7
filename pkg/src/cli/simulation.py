from rich.console import Console
from rich.table import Table

from src.cli.dependencies import (
    AlgorithmOpt,
    ConfigOpt,
    IterationsOpt,
    OutOpt,
    SeedOpt,
    SnapshotEveryOpt,
    TauOpt,
    WorkersOpt,
    apply_overrides,
    cli_errors,
)
from src.schemas.recovery import Algorithm
from src.services.attack import AttackService
from src.services.recovery import RecoveryService
from src.services.scenario import ScenarioService
from src.utils.storage_manager import StorageManager

console = Console()


def run(
    config: ConfigOpt,
    iters: IterationsOpt = None,
    algorithm: AlgorithmOpt = None,
    seed: SeedOpt = None,
    out: OutOpt = None,
    snapshot_every: SnapshotEveryOpt = None,
    workers: WorkersOpt = None,
    tau: TauOpt = None,
):
    """
    Моделирует восстановление поля и записывает результаты.

    Параметры:
    - config: Файл сценария.
    - iters, algorithm, seed, snapshot_every: Переопределяют секцию `run` сценария.
    - workers: Число потоков для обновления агентов (по умолчанию settings.WORKERS).
    - tau: Если задан, в errors.csv добавляются столбцы (t+1)^τ·ошибка.

    Логика:
    - Загружает сценарий, применяет флаги.
    - Запускает `RecoveryService.run` (нарушение предположений → код 3).
    - Записывает trace.csv, errors.csv, field.csv, summary.yaml (и snapshots.csv при
      `--snapshot-every`).
    """
    with cli_errors(), StorageManager(out) as storage:
        scenarios = ScenarioService(storage)
        scenario = apply_overrides(
            scenarios, scenarios.load(config), iters, algorithm, seed, snapshot_every
        )
        system, run_settings = scenario.system, scenario.run
        trace = RecoveryService().run(
            system,
            scenario.graph,
            scenario.attack,
            scenario.hyperparams,
            run_settings.iterations,
            run_settings.algorithm,
            seed=run_settings.seed,
            snapshot_every=run_settings.snapshot_every,
            workers=workers,
        )
        attack_service = AttackService()
        resilience = attack_service.resilience_check(
            system, attack_service.apply_attack(system, scenario.attack).compromised
        )
        summary = scenarios.export_run(scenario, trace, resilience, tau)
        committed = storage.commit()

    final = summary["final"]
    console.print(
        f"[green]{trace.algorithm.value}[/green]: {trace.iterations} итераций, "
        f"max_normalized_rmse = {final['max_normalized_rmse']:.6g}, "
        f"max_local_rmse = {final['max_local_rmse']:.6g}"
    )
    for path in committed:
        console.print(f"  [dim]{path}[/dim]")


def compare(
    config: ConfigOpt,
    iters: IterationsOpt = None,
    seed: SeedOpt = None,
    out: OutOpt = None,
    workers: WorkersOpt = None,
):
    """
    Сравнивает устойчивый алгоритм с CIRFE на одном сценарии.

    Записывает compare.csv (обе кривые max_normalized_rmse), field_resilient.csv и
    field_cirfe.csv, печатает итоговые ошибки.
    """
    with cli_errors(), StorageManager(out) as storage:
        scenarios = ScenarioService(storage)
        scenario = apply_overrides(scenarios, scenarios.load(config), iters, seed=seed)
        traces = {
            algorithm: RecoveryService().run(
                scenario.system,
                scenario.graph,
                scenario.attack,
                scenario.hyperparams,
                scenario.run.iterations,
                algorithm,
                seed=scenario.run.seed,
                workers=workers,
            )
            for algorithm in (Algorithm.RESILIENT, Algorithm.CIRFE)
        }
        scenarios.export_comparison(
            scenario, traces[Algorithm.RESILIENT], traces[Algorithm.CIRFE]
        )
        committed = storage.commit()

    table = Table(show_header=True, header_style="bold cyan")
    table.add_column("Алгоритм")
    table.add_column("max_normalized_rmse", justify="right")
    table.add_column("max_local_rmse", justify="right")
    for algorithm, trace in traces.items():
        last = trace.metrics[-1]
        table.add_row(
            algorithm.value, f"{last.max_normalized_rmse:.6g}", f"{last.max_local_rmse:.6g}"
        )
    console.print(table)
    for path in committed:
        console.print(f"  [dim]{path}[/dim]")
