import numpy as np
import pytest
import scipy.sparse as sp

from src.exceptions import (
    DisconnectedInterestGraphException,
    NeighborStateMissingException,
    UnknownAlgorithmException,
    UnobservableSystemException,
)
from src.schemas.field import FieldSystem, InterestSet
from src.schemas.graph import CommGraph
from src.schemas.recovery import AgentState, Algorithm, HyperParams, RoundState
from src.services.recovery import RecoveryService
from tests.conftest import make_random_system, selector_rows


def test_schedules_at_zero():
    hp = HyperParams()
    service = RecoveryService()

    assert service.alpha(0, hp) == 1.0
    assert service.beta(0, hp) == pytest.approx(0.084)
    assert service.gamma_threshold(0, hp) == 40.0
    assert service.gamma_threshold(15, hp) == pytest.approx(20.0)


@pytest.mark.parametrize("tau1, tau2, tau_gamma", [
    (0.26, 0.3, 0.1),
    (1.2, 0.001, 0.25),
    (0.26, 0.001, 0.3),
])
def test_hyperparams_ordering_rejected(tau1, tau2, tau_gamma):
    with pytest.raises(ValueError):
        HyperParams(tau1=tau1, tau2=tau2, tau_gamma=tau_gamma)


def test_censor_received_and_self():
    service = RecoveryService()
    interest_n = InterestSet(components=(1, 2, 4))
    interest_l = InterestSet(components=(2, 3, 4))

    received = service.censor_received(AgentState(estimate=[7.0, 8.0, 9.0]), interest_l, interest_n)
    processed = service.censor_self(AgentState(estimate=[1.0, 2.0, 3.0]), interest_n, interest_l)

    assert np.array_equal(received, [0.0, 7.0, 9.0])
    assert np.array_equal(processed, [0.0, 2.0, 3.0])


def test_gain_matrix_saturates_large_residuals():
    service = RecoveryService()
    restricted = selector_rows([1, 2], 2)
    gains = service.gain_matrix(restricted, np.zeros(2), np.array([80.0, 0.0]), 0, HyperParams())

    assert np.allclose(gains.diagonal(), [0.5, 1.0])


def test_state_update_matches_hand_computation(tiny_system, tiny_graph):
    service = RecoveryService()
    hp = HyperParams()
    plan = service.prepare(tiny_system, tiny_graph)
    round_ = RoundState(t=0, states=(AgentState(estimate=[1.0, 4.0]), AgentState(estimate=[2.0, 5.0])))

    updated = service.state_update(1, round_, np.array([1.0, 2.0]), hp, plan)

    # соседний агент 2 делится только компонентом 2: x_2 = 2 против своего 4
    expected = np.array([1.0, 4.0]) - 0.084 * np.array([0.0, 2.0]) + np.array([0.0, -2.0])
    assert np.allclose(updated.estimate, expected)


def test_cirfe_update_is_unsaturated(tiny_system, tiny_graph):
    service = RecoveryService()
    hp = HyperParams()
    plan = service.prepare(tiny_system, tiny_graph)
    round_ = RoundState(t=0, states=(AgentState.zeros(2), AgentState.zeros(2)))
    y_1 = np.array([100.0, 0.0])

    resilient = service.state_update(1, round_, y_1, hp, plan)
    cirfe = service.cirfe_update(1, round_, y_1, hp, plan)

    assert resilient.estimate[0] == pytest.approx(40.0)
    assert cirfe.estimate[0] == pytest.approx(100.0)


def test_missing_neighbor_state(tiny_system, tiny_graph):
    service = RecoveryService()
    plan = service.prepare(tiny_system, tiny_graph)
    round_ = RoundState(t=3, states=(AgentState.zeros(2),))

    with pytest.raises(NeighborStateMissingException):
        service.state_update(1, round_, np.zeros(2), HyperParams(), plan)


def test_run_zero_iterations(tiny_system, tiny_graph):
    trace = RecoveryService().run(tiny_system, tiny_graph, None, HyperParams(), 0)

    assert len(trace.metrics) == 1
    assert trace.metrics[0].iteration == 0
    assert list(trace.snapshots) == [0]
    assert all(np.array_equal(x, np.zeros(2)) for x in trace.final.estimates())


def test_run_rejects_unknown_algorithm(tiny_system, tiny_graph):
    with pytest.raises(UnknownAlgorithmException):
        RecoveryService().run(tiny_system, tiny_graph, None, HyperParams(), 1, "median")


def test_run_rejects_disconnected_interest_graph():
    system = FieldSystem.from_matrices(
        np.array([1.0, 2.0]),
        [selector_rows([1], 2), selector_rows([2], 2), selector_rows([1], 2)],
        [(1,), (2,), (1,)],
    )
    graph = CommGraph(N=3, edges=[(1, 2), (2, 3)])

    with pytest.raises(DisconnectedInterestGraphException):
        RecoveryService().run(system, graph, None, HyperParams(), 5)


def test_run_rejects_unobservable_system(tiny_graph):
    system = FieldSystem.from_matrices(
        np.array([1.0, 2.0, 3.0]), [selector_rows([1], 3), selector_rows([2], 3)], [(1, 2), (2, 3)]
    )

    with pytest.raises(UnobservableSystemException):
        RecoveryService().run(system, tiny_graph, None, HyperParams(), 5)


def test_run_snapshots_and_digest(tiny_system, tiny_graph):
    service = RecoveryService()
    first = service.run(tiny_system, tiny_graph, None, HyperParams(), 10, snapshot_every=4, seed=5)
    second = service.run(tiny_system, tiny_graph, None, HyperParams(), 10, snapshot_every=4, seed=5)
    other_seed = service.run(tiny_system, tiny_graph, None, HyperParams(), 10, seed=6)

    assert list(first.snapshots) == [0, 4, 8, 10]
    assert first.digest == second.digest
    assert first.digest != other_seed.digest
    assert [row.iteration for row in first.metrics] == list(range(11))


def test_threads_do_not_change_results():
    system, graph, attack = make_random_system(np.random.default_rng(21))
    service = RecoveryService()

    serial = service.run(system, graph, attack, HyperParams(a=0.3, b=0.05), 30, workers=1)
    threaded = service.run(system, graph, attack, HyperParams(a=0.3, b=0.05), 30, workers=4)

    for x, y in zip(serial.final.estimates(), threaded.final.estimates()):
        assert np.array_equal(x, y)


def test_oracle_equivalence_on_random_instances(oracle_hyperparams):
    """Поагентная симуляция совпадает со стековой динамикой на 20 случайных системах."""
    rng = np.random.default_rng(2024)
    service = RecoveryService()
    for _ in range(20):
        system, graph, attack = make_random_system(rng)
        for algorithm in Algorithm:
            gap = service.oracle_gap(system, graph, attack, oracle_hyperparams, 100, algorithm)
            assert gap < 1e-9


def test_saturation_invariant_on_desk_scenario(desk_scenario):
    scenario = desk_scenario
    trace = RecoveryService().run(
        scenario.system, scenario.graph, scenario.attack, scenario.hyperparams, 500
    )

    for row in trace.metrics:
        assert row.max_innovation <= row.gamma * (1 + 1e-12)


def test_gamma_weighted_innovation_ratio_decreases():
    service = RecoveryService()
    for hp in (HyperParams(), HyperParams(tau1=0.6, tau2=0.1, tau_gamma=0.4)):
        ratio = np.array([
            service.gamma_threshold(t, hp) * service.alpha(t, hp) / service.beta(t, hp)
            for t in range(1, 5000)
        ])
        assert np.all(np.diff(ratio) < 0)


def test_isolated_agent_takes_measurement():
    system = FieldSystem.from_matrices(np.array([5.0]), [selector_rows([1], 1)], [(1,)])
    service = RecoveryService()
    plan = service.prepare(system, CommGraph(N=1))
    round_ = RoundState(t=0, states=(AgentState.zeros(1),))

    updated = service.state_update(1, round_, np.array([5.0]), HyperParams(Gamma=1000.0), plan)

    assert updated.estimate[0] == pytest.approx(5.0)


def test_agents_without_measurements_move_by_consensus():
    empty = sp.csr_matrix((0, 1))
    system = FieldSystem.from_matrices(np.array([1.0]), [empty, empty], [(1,), (1,)])
    service = RecoveryService()
    plan = service.prepare(system, CommGraph(N=2, edges=[(1, 2)]))
    round_ = RoundState(t=0, states=(AgentState(estimate=[0.0]), AgentState(estimate=[4.0])))

    updated = service.state_update(1, round_, np.zeros(0), HyperParams(b=0.084), plan)

    assert updated.estimate[0] == pytest.approx(0.336)


def test_true_field_is_fixed_point_without_attack():
    rng = np.random.default_rng(17)
    service = RecoveryService()
    hp = HyperParams()
    for _ in range(10):
        system, graph, _ = make_random_system(rng)
        plan = service.prepare(system, graph)
        y = system.clean_measurements
        round_ = RoundState(t=int(rng.integers(0, 100)), states=tuple(
            AgentState(estimate=system.theta[interest.indices]) for interest in system.interests
        ))
        for n in range(1, system.N + 1):
            y_n = y[system.agent_rows(n)]
            x_n = round_.states[n - 1].estimate
            assert np.allclose(service.state_update(n, round_, y_n, hp, plan).estimate, x_n)
            assert np.allclose(service.cirfe_update(n, round_, y_n, hp, plan).estimate, x_n)


def test_censored_states_agree_on_shared_components():
    """Если оба агента хранят один и тот же вектор z, x^p_{l,n} = x^c_{l,n}."""
    rng = np.random.default_rng(19)
    service = RecoveryService()
    for _ in range(50):
        M = int(rng.integers(1, 20))
        z = rng.normal(size=M)
        interest_n, interest_l = (
            InterestSet(components=tuple(int(m) + 1 for m in np.sort(
                rng.choice(M, int(rng.integers(1, M + 1)), replace=False)
            )))
            for _ in range(2)
        )
        x_n = AgentState(estimate=z[interest_n.indices])
        x_l = AgentState(estimate=z[interest_l.indices])

        received = service.censor_received(x_l, interest_l, interest_n)
        processed = service.censor_self(x_n, interest_n, interest_l)

        assert np.array_equal(received, processed)
        outside = [i for i, m in enumerate(interest_n.components) if m not in interest_l]
        assert np.all(processed[outside] == 0.0)
