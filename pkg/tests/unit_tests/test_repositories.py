import numpy as np
import pytest

from src.exceptions import ConfigException
from src.repositories.scenarios import ScenariosRepository
from src.repositories.utils import compress_ranges, expand_ranges
from src.schemas.attack import AttackMode
from tests.conftest import MOCK_SCENARIO

EXPLICIT_HEADER = """\
field:
  length: 2
  values: [1.0, 2.0]
graph:
  edges: []
"""


@pytest.mark.parametrize("components, compressed", [
    ([1, 2, 3, 7, 9, 10], [[1, 3], 7, 9, 10]),
    ([5], [5]),
    ([], []),
    ([4, 5, 6, 1, 2, 3], [[4, 6], [1, 3]]),
])
def test_compress_ranges(components, compressed):
    assert compress_ranges(components) == compressed
    assert expand_ranges(compressed) == components


def test_expand_rejects_empty_range():
    with pytest.raises(ValueError):
        expand_ranges([[3, 1]])


def write(tmp_path, text: str):
    path = tmp_path / "scenario.yaml"
    path.write_text(text, encoding="utf-8")
    return path


def test_schema_error_reports_line(tmp_path):
    path = write(tmp_path, """\
grid:
  grid_side: 3
  agent_rows: 3
  agent_cols: 3
  measurement_window: 3
  interest_window: 5
run:
  iterations: -5
""")

    with pytest.raises(ConfigException) as exc:
        ScenariosRepository(tmp_path).get_record(path)
    assert exc.value.line == 8
    assert "run.iterations" in exc.value.detail


def test_yaml_syntax_error_reports_line(tmp_path):
    path = write(tmp_path, "grid:\n  grid_side: [1, 2\n")

    with pytest.raises(ConfigException) as exc:
        ScenariosRepository(tmp_path).get_record(path)
    assert exc.value.line is not None


def test_missing_sections_rejected(tmp_path):
    path = write(tmp_path, "run:\n  iterations: 5\n")

    with pytest.raises(ConfigException):
        ScenariosRepository(tmp_path).get_record(path)


def test_unknown_algorithm_in_file(tmp_path):
    path = write(tmp_path, EXPLICIT_HEADER + """\
agents:
  - selectors: [1, 2]
    interest: [1, 2]
run:
  algorithm: median
""")

    with pytest.raises(ConfigException) as exc:
        ScenariosRepository(tmp_path).get_record(path)
    assert "run.algorithm" in exc.value.detail


def test_unnormalized_rows_rejected(tmp_path):
    path = write(tmp_path, EXPLICIT_HEADER + """\
agents:
  - rows: [[1, 1, 0.5], [2, 2, 1.0]]
    interest: [1, 2]
""")

    with pytest.raises(ConfigException) as exc:
        ScenariosRepository(tmp_path).get_one(path)
    assert "единичной нормы" in exc.value.detail


def test_empty_selector_range_rejected(tmp_path):
    path = write(tmp_path, EXPLICIT_HEADER + """\
agents:
  - selectors: [[2, 1]]
    interest: [1, 2]
""")

    with pytest.raises(ConfigException) as exc:
        ScenariosRepository(tmp_path).get_one(path)
    assert exc.value.detail.startswith("Агент 1")


def test_field_length_mismatch(tmp_path):
    path = write(tmp_path, """\
field:
  length: 3
  values: [1.0, 2.0]
agents:
  - selectors: [1, 2]
    interest: [1, 2]
graph:
  edges: []
""")

    with pytest.raises(ConfigException):
        ScenariosRepository(tmp_path).get_one(path)


def test_dense_rows_and_additive_measurements(tmp_path):
    path = write(tmp_path, EXPLICIT_HEADER + """\
agents:
  - rows: [[1, 1, 0.6], [1, 2, 0.8], [2, 2, 1.0]]
    interest: [1, 2]
attack:
  mode: additive
  measurements: {2: -3.0}
""")

    scenario = ScenariosRepository(tmp_path).get_one(path)

    assert np.allclose(scenario.system.agents[0].matrix.toarray(), [[0.6, 0.8], [0.0, 1.0]])
    assert scenario.attack.mode == AttackMode.ADDITIVE
    assert scenario.attack.values == {2: -3.0}
    assert scenario.attacked_agents == ()


def test_mock_scenario_loads():
    scenario = ScenariosRepository(MOCK_SCENARIO.parent).get_one(MOCK_SCENARIO)
    system = scenario.system

    assert (system.N, system.M, system.P) == (9, 9, 49)
    assert scenario.shape == (3, 3)
    assert scenario.attacked_agents == (1,)
    assert scenario.attack.compromised == (1, 2, 3, 4)
    assert set(scenario.attack.values.values()) == {255.0}
    assert scenario.graph.edges == (
        (1, 2), (1, 4), (2, 3), (2, 5), (3, 6), (4, 5), (4, 7), (5, 6), (5, 8), (6, 9),
        (7, 8), (8, 9),
    )
    assert scenario.run.iterations == 300
