import numpy as np
import pytest

from src.schemas.attack import AttackSpec
from src.schemas.field import FieldSystem
from src.schemas.recovery import AgentState, Algorithm, HyperParams, RoundState
from src.schemas.scenario import GridScenarioParams
from src.services.analysis import AnalysisService
from src.services.attack import AttackService
from src.services.convergence import ConvergenceService
from src.services.recovery import RecoveryService
from src.services.scenario import ScenarioService


@pytest.fixture(scope="module")
def long_runs(desk_scenario):
    """Оба алгоритма на атакованном столе 3×3, 5000 итераций."""
    scenario = desk_scenario
    service = RecoveryService()
    return {
        algorithm: service.run(
            scenario.system, scenario.graph, scenario.attack, scenario.hyperparams, 5000,
            algorithm, snapshot_every=500,
        )
        for algorithm in Algorithm
    }


def test_resilient_errors_decay_under_attack(desk_scenario, long_runs):
    system = desk_scenario.system
    attack_service = AttackService()
    report = attack_service.resilience_check(
        system, attack_service.apply_attack(system, desk_scenario.attack).compromised
    )
    trace = long_runs[Algorithm.RESILIENT]
    local = trace.column("max_local_rmse")

    assert report.holds and report.exact
    assert ConvergenceService().decay_exponent(local) <= -0.05
    assert local[5000] < local[500]


def test_consensus_error_decays_and_triangle_bound(desk_scenario, long_runs):
    trace = long_runs[Algorithm.RESILIENT]
    rounds = [
        RoundState(t=t, states=tuple(AgentState(estimate=x) for x in states))
        for t, states in trace.snapshots.items()
    ]

    assert ConvergenceService().decay_exponent(trace.column("consensus_error")) <= -0.05
    assert AnalysisService().triangle_bound(rounds, desk_scenario.system).all()


def test_cirfe_bias_persists(long_runs):
    resilient = long_runs[Algorithm.RESILIENT].column("max_local_rmse")
    cirfe = long_runs[Algorithm.CIRFE].column("max_local_rmse")

    assert cirfe[-500:].min() > 0.3 * cirfe[500]
    assert resilient[-1] < cirfe[-1] / 5


def test_attack_free_runs_converge(desk_scenario):
    scenario = desk_scenario
    service = RecoveryService()
    for algorithm in Algorithm:
        trace = service.run(
            scenario.system, scenario.graph, AttackSpec.none(), HyperParams(), 2000, algorithm
        )
        assert trace.metrics[-1].max_local_rmse < 1e-2


def test_unsaturated_runs_coincide(desk_scenario):
    """Пока все невязки меньше порога γ_t, устойчивый алгоритм совпадает с CIRFE бит в бит."""
    generated = desk_scenario.system
    theta = np.random.default_rng(8).uniform(0.0, 5.0, generated.M)
    system = FieldSystem.from_matrices(
        theta, [agent.matrix for agent in generated.agents], generated.interests
    )
    service = RecoveryService()
    traces = [
        service.run(system, desk_scenario.graph, None, HyperParams(), 2000, algorithm)
        for algorithm in Algorithm
    ]

    for x, y in zip(traces[0].final.estimates(), traces[1].final.estimates()):
        assert np.array_equal(x, y)
    assert traces[0].column("max_normalized_rmse").tolist() == \
        traces[1].column("max_normalized_rmse").tolist()


@pytest.mark.slow
def test_field_scale_comparison():
    """Сетка агентов 10×10 на поле 115×115, 11 атакованных агентов."""
    params = GridScenarioParams(
        grid_side=115, agent_rows=10, agent_cols=10, measurement_window=37, interest_window=73,
        attacked_agents=11, seed=1,
    )
    scenario = ScenarioService().generate_grid_scenario(params)
    service = RecoveryService()
    finals = {}
    for algorithm in Algorithm:
        trace = service.run(
            scenario.system, scenario.graph, scenario.attack, scenario.hyperparams, 200,
            algorithm, workers=4,
        )
        finals[algorithm] = trace.column("max_normalized_rmse")

    cirfe = finals[Algorithm.CIRFE]
    assert finals[Algorithm.RESILIENT][-1] <= cirfe[-1] / 5
    assert cirfe[-50:].min() > 0.1 * cirfe[50]
