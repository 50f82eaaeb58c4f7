import logging

from rich.console import Console
from rich.table import Table

from src.cli.dependencies import ConfigOpt, SeedOpt, apply_overrides, cli_errors
from src.config import settings
from src.exceptions import AssumptionCLIException
from src.schemas.scenario import Scenario
from src.services.attack import AttackService
from src.services.field_model import FieldModelService
from src.services.graph import GraphService
from src.services.recovery import RecoveryService
from src.services.scenario import ScenarioService

console = Console()


def _oracle_scenario(service: ScenarioService, scenario: Scenario) -> tuple[Scenario | None, str]:
    """Сценарий для сверки с оракулом: сам сценарий, его уменьшенная копия или ничего."""
    system = scenario.system
    if system.N * system.M <= settings.ORACLE_MAX_STACK:
        return scenario, "на сценарии"
    if scenario.grid is not None:
        reduced = scenario.grid.reduced(settings.ORACLE_AGENTS_PER_SIDE)
        return (
            service.generate_grid_scenario(reduced, hyperparams=scenario.hyperparams),
            f"на уменьшенной сетке {reduced.agent_rows}×{reduced.agent_cols}",
        )
    return None, ""


def verify(config: ConfigOpt, seed: SeedOpt = None):
    """
    Проверяет сценарий: предположения модели, связность G_m, условие устойчивости и
    совпадение поагентной динамики со стековой (оракул).

    Логика:
    - Печатает таблицу проверок и запас κ = λ_min(𝓖_𝓝) − Δ_𝒜.
    - Оракул запускается на самом сценарии, если NM ≤ ORACLE_MAX_STACK, иначе на
      уменьшенной копии сеточного сценария; для больших явных сценариев пропускается.
    - Код выхода 3, если хотя бы одна проверка не пройдена.
    """
    with cli_errors():
        service = ScenarioService()
        scenario = apply_overrides(service, service.load(config), seed=seed)
        system, graph = scenario.system, scenario.graph

        validation = FieldModelService().validate_system(system)
        topology = GraphService().check_topology(graph, system)
        attack_service = AttackService()
        compromised = attack_service.apply_attack(system, scenario.attack).compromised
        resilience = attack_service.resilience_check(system, compromised)

        rows = [(check.name, check.passed, check.detail) for check in validation.checks]
        rows.append((
            "interest_subgraphs_connected",
            topology.passed,
            f"несвязны G_m для {list(topology.disconnected[:10])}, "
            f"пустые группы {list(topology.empty[:10])}" if not topology.passed else "",
        ))
        rows.append((
            "resilience_condition",
            resilience.holds,
            f"λ_min = {resilience.lambda_min:.6g}, Δ_𝒜 = {resilience.delta:.6g}"
            + ("" if resilience.exact else " (оценка |𝒜|)"),
        ))

        if validation.passed and topology.passed:
            oracle, where = _oracle_scenario(service, scenario)
            if oracle is None:
                logging.info(
                    f"Сверка с оракулом пропущена: NM = {system.N * system.M} "
                    f"> {settings.ORACLE_MAX_STACK}, сценарий не сеточный"
                )
            else:
                gap = RecoveryService().oracle_gap(
                    oracle.system,
                    oracle.graph,
                    oracle.attack,
                    oracle.hyperparams,
                    settings.ORACLE_ROUNDS,
                    oracle.run.algorithm,
                )
                rows.append((
                    "oracle_equivalence",
                    gap < settings.ORACLE_TOL,
                    f"{where}, {settings.ORACLE_ROUNDS} раундов, расхождение {gap:.3g}",
                ))

    table = Table(show_header=True, header_style="bold cyan")
    table.add_column("Проверка", no_wrap=True)
    table.add_column("Статус", no_wrap=True)
    table.add_column("Подробности")
    for name, passed, detail in rows:
        table.add_row(name, "[green]ok[/green]" if passed else "[red]fail[/red]", detail)
    console.print(table)
    console.print(f"κ = λ_min(𝓖_𝓝) − Δ_𝒜 = {resilience.margin:.6g}")

    failed = [name for name, passed, _ in rows if not passed]
    if failed:
        raise AssumptionCLIException(f"Не пройдены проверки: {', '.join(failed)}")
