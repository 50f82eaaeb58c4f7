import numpy as np
import pytest

from src.exceptions import DimensionMismatchException, EmptyInterestGroupException
from src.schemas.analysis import InterestMask
from src.schemas.field import InterestSet
from src.schemas.graph import CommGraph
from src.schemas.recovery import AgentState, HyperParams, RoundState
from src.services.analysis import AnalysisService
from src.services.attack import AttackService
from src.services.graph import GraphService
from src.services.recovery import RecoveryService
from tests.conftest import make_random_system


def test_auxiliary_state_roundtrip():
    service = AnalysisService()
    interest = InterestSet(components=(2, 4))

    scattered = service.auxiliary_state(AgentState(estimate=[5.0, 6.0]), interest, 5)

    assert np.array_equal(scattered, [0.0, 5.0, 0.0, 6.0, 0.0])
    assert np.array_equal(service.gather(scattered, interest), [5.0, 6.0])
    with pytest.raises(DimensionMismatchException):
        service.auxiliary_state(np.zeros(3), interest, 5)


def test_block_laplacian_reduces_to_kronecker_when_all_interested():
    """Если все агенты интересуются всеми компонентами, 𝐋 = L ⊗ I_M."""
    graph = CommGraph(N=3, edges=[(1, 2), (2, 3)])
    mask = np.ones((3, 2), dtype=bool)
    service = AnalysisService()

    block = service.build_block_laplacian(graph, InterestMask(mask=mask))
    expected = np.kron(GraphService().laplacian(graph).toarray(), np.eye(2))

    assert np.allclose(block.toarray(), expected)


def test_block_laplacian_zero_rows_outside_interest(tiny_system, tiny_graph):
    service = AnalysisService()
    block = service.build_block_laplacian(tiny_graph, service.masks(tiny_system)).toarray()

    # агенты 1 и 2 делят только компонент 2
    nonzero = {(int(i), int(j)) for i, j in zip(*np.nonzero(block))}
    assert nonzero == {(1, 1), (1, 4), (4, 1), (4, 4)}


def test_network_average(tiny_system):
    service = AnalysisService()
    x_tilde = service.stack_auxiliary([np.array([1.0, 4.0]), np.array([2.0, 6.0])], tiny_system)

    average = service.network_average(x_tilde, service.masks(tiny_system))

    assert np.allclose(average, [1.0, 3.0, 6.0])


def test_network_average_rejects_empty_groups():
    service = AnalysisService()
    masks = InterestMask(mask=np.array([[True, False]]))

    with pytest.raises(EmptyInterestGroupException):
        service.network_average(np.zeros(2), masks)


def test_round_errors_match_stacked_definitions(tiny_system):
    service = AnalysisService()
    estimates = [np.array([1.0, 4.0]), np.array([2.0, 6.0])]
    masks = service.masks(tiny_system)
    x_tilde = service.stack_auxiliary(estimates, tiny_system)
    average = service.network_average(x_tilde, masks)

    errors = service.round_errors(estimates, tiny_system)

    consensus = np.linalg.norm(masks.stacked @ (x_tilde - np.tile(average, 2)))
    assert errors.consensus == pytest.approx(consensus)
    assert errors.average == pytest.approx(np.linalg.norm(average - tiny_system.theta))
    assert np.allclose(errors.local, [2.0, 3.0])
    assert np.allclose(errors.normalized, errors.local / np.sqrt(2.0))


def test_stacked_trajectory_matches_per_agent_run(oracle_hyperparams):
    system, graph, attack = make_random_system(np.random.default_rng(5))
    gap = RecoveryService().oracle_gap(system, graph, attack, oracle_hyperparams, 50, "cirfe")

    assert gap < 1e-9


def test_series_and_triangle_bound(desk_scenario):
    scenario = desk_scenario
    trace = RecoveryService().run(
        scenario.system, scenario.graph, scenario.attack, HyperParams(), 200, snapshot_every=1
    )
    rounds = [
        RoundState(t=t, states=tuple(AgentState(estimate=x) for x in states))
        for t, states in trace.snapshots.items()
    ]
    service = AnalysisService()

    consensus = service.consensus_error(rounds, scenario.system)
    local = service.local_errors(rounds, scenario.system)

    assert consensus.values.shape == (201,)
    assert local.values.shape == (201, 9)
    assert np.allclose(consensus.values, [row.consensus_error for row in trace.metrics])
    assert service.triangle_bound(rounds, scenario.system).all()


def test_scaled_series_cannot_be_rescaled(desk_scenario):
    service = AnalysisService()
    rounds = [RoundState(t=0, states=tuple(AgentState.zeros(9) for _ in range(9)))]
    series = service.average_error(rounds, desk_scenario.system).scaled(0.1)

    with pytest.raises(ValueError):
        series.scaled(0.2)


def test_stacked_step_keeps_zeros_outside_interests(oracle_hyperparams):
    rng = np.random.default_rng(31)
    service = AnalysisService()
    for _ in range(10):
        system, graph, attack = make_random_system(rng)
        masks = service.masks(system)
        y = AttackService().apply_attack(system, attack).measurements

        for x_tilde in service.stacked_trajectory(system, graph, y, oracle_hyperparams, 30):
            blocks = x_tilde.reshape(system.N, system.M)
            assert np.all(blocks[~masks.mask] == 0.0)
            estimates = service.unstack_auxiliary(x_tilde, system)
            assert np.array_equal(service.stack_auxiliary(estimates, system), x_tilde)


def test_spread_average_gathers_group_means():
    system, _, _ = make_random_system(np.random.default_rng(12))
    service = AnalysisService()
    masks = service.masks(system)
    rng = np.random.default_rng(3)
    estimates = [rng.normal(size=len(interest)) for interest in system.interests]
    average = service.network_average(service.stack_auxiliary(estimates, system), masks)

    spread = service.spread_average(average, masks).reshape(system.N, system.M)

    for n, interest in enumerate(system.interests, start=1):
        assert np.allclose(spread[n - 1], masks.Q(n) @ average)
        assert np.allclose(service.gather(spread[n - 1], interest), average[interest.indices])
        assert np.all(spread[n - 1][~masks.mask[n - 1]] == 0.0)


def test_interest_masks_keep_measurement_matrices():
    rng = np.random.default_rng(13)
    service = AnalysisService()
    for _ in range(10):
        system, _, _ = make_random_system(rng)
        masks = service.masks(system)
        for n, agent in enumerate(system.agents, start=1):
            assert np.array_equal((agent.matrix @ masks.Q(n)).toarray(), agent.matrix.toarray())
