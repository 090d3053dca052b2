import sys
from pathlib import Path

import pytest

from sysgraph.model_ir import parse_model_json
from sysgraph.transform import transform

HERE = Path(__file__).parent
FIXTURES = HERE / "fixtures"
sys.path.insert(0, str(HERE))


def load_ir(name: str):
    return parse_model_json((FIXTURES / f"{name}.ir.json").read_bytes())


def load_graph(name: str):
    return transform(load_ir(name))[0]


def pytest_terminal_summary(terminalreporter):
    import acceptance_log
    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(acceptance_log.LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def fixture_graph():
    return load_graph
