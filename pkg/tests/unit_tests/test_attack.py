import numpy as np
import pytest
from pydantic import ValidationError

from src.exceptions import DimensionMismatchException
from src.schemas.attack import AttackMode, AttackSpec
from src.schemas.field import FieldSystem
from src.services.attack import AttackService
from tests.conftest import selector_rows


def test_additive_attack(tiny_system):
    applied = AttackService().apply_attack(tiny_system, AttackSpec(values={2: -5.0}))

    assert np.array_equal(applied.measurements, [1.0, -3.0, 2.0, 3.0])
    assert np.array_equal(applied.disturbance, [0.0, -5.0, 0.0, 0.0])
    assert applied.compromised == (2,)


def test_override_equal_to_clean_reading_is_dropped(tiny_system):
    spec = AttackSpec(values={1: 1.0, 4: 255.0}, mode=AttackMode.OVERRIDE)
    applied = AttackService().apply_attack(tiny_system, spec)

    assert applied.compromised == (4,)
    assert applied.dropped == (1,)
    assert applied.measurements[3] == 255.0
    assert applied.disturbance[3] == 252.0


def test_attack_out_of_range(tiny_system):
    with pytest.raises(DimensionMismatchException):
        AttackService().apply_attack(tiny_system, AttackSpec(values={5: 1.0}))


def test_zero_additive_disturbance_rejected():
    with pytest.raises(ValidationError):
        AttackSpec(values={1: 0.0})


def test_delta_empty_set(tiny_system):
    result = AttackService().delta_A(tiny_system, ())

    assert result.value == 0.0 and result.exact and result.method == "empty"


def test_delta_single_row(tiny_system):
    result = AttackService().delta_A(tiny_system, (3,))

    assert result.value == pytest.approx(1.0)
    assert result.method == "enumeration"


def test_delta_matches_selector_closed_form():
    """Перебор вершин совпадает с формулой sqrt(Σ c_m²) на случайных селекторах."""
    rng = np.random.default_rng(11)
    service = AttackService()
    for _ in range(100):
        M = int(rng.integers(1, 8))
        components = rng.integers(1, M + 1, size=int(rng.integers(1, 13)))
        system = FieldSystem.from_matrices(
            np.zeros(M), [selector_rows(components, M)], [tuple(range(1, M + 1))]
        )
        compromised = range(1, components.size + 1)
        counts = np.bincount(components, minlength=M + 1)

        enumerated = service.delta_A(system, compromised)
        assert enumerated.method == "enumeration"
        assert enumerated.value == pytest.approx(np.sqrt(np.sum(counts**2)), abs=1e-10)


def test_delta_selector_path_above_enumeration_limit():
    components = np.tile(np.arange(1, 6), 5)
    system = FieldSystem.from_matrices(np.zeros(5), [selector_rows(components, 5)], [(1, 2, 3, 4, 5)])
    result = AttackService().delta_A(system, range(1, 26))

    assert result.method == "selector"
    assert result.value == pytest.approx(np.sqrt(5 * 25))


def test_delta_bound_for_large_dense_sets():
    rng = np.random.default_rng(3)
    rows = rng.standard_normal((25, 4))
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    system = FieldSystem.from_matrices(np.zeros(4), [rows], [(1, 2, 3, 4)])
    result = AttackService().delta_A(system, range(1, 26))

    assert result.method == "bound"
    assert not result.exact
    assert result.value == 25.0


def test_resilience_check_is_strict():
    system = FieldSystem.from_matrices(
        np.array([1.0, 2.0]), [selector_rows([1, 1, 2, 2], 2)], [(1, 2)]
    )
    report = AttackService().resilience_check(system, (1,))

    assert report.lambda_min == pytest.approx(1.0)
    assert report.delta == pytest.approx(1.0)
    assert report.holds is False
    assert report.margin == pytest.approx(0.0)


def test_resilience_check_on_desk_scenario(desk_scenario):
    service = AttackService()
    system = desk_scenario.system
    applied = service.apply_attack(system, desk_scenario.attack)
    report = service.resilience_check(system, applied.compromised)

    assert report.lambda_min == pytest.approx(3.0)
    assert report.delta == pytest.approx(2.0)
    assert report.holds and report.exact
    assert report.margin == pytest.approx(1.0)
