import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from vulnlens.analysis import analyze_paths, analyze_source  # noqa: E402
from vulnlens.fixtures import VERSIONS, fixture_dir  # noqa: E402
from vulnlens.rulepack import load_rulepack  # noqa: E402
from vulnlens.semantics import load_api_catalog  # noqa: E402


@pytest.fixture(scope="session")
def catalog():
    return load_api_catalog()


@pytest.fixture(scope="session")
def pack(catalog):
    return load_rulepack(catalog=catalog)


@pytest.fixture(scope="session")
def analyzed(catalog, pack):
    """version -> (Report, FileResult) for every fixture, analyzed once."""
    out = {}
    for v in VERSIONS:
        report, results = analyze_paths([fixture_dir(v)], pack, catalog)
        out[v] = (report, results[0])
    return out


@pytest.fixture
def analyze(catalog, pack):
    def run(text, path="T.java", rules=None):
        return analyze_source(text, path, rules or pack, catalog)
    return run


def wrap_main(body: str, params: str = "", extra: str = "") -> str:
    """A compilable class around a main body."""
    return (f"import java.io.*;\nimport java.net.*;\nimport java.util.*;\nclass T {{\n{extra}"
            f"    public static void main({params}){{\n{body}\n    }}\n}}\n")


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    lines = sorted(getattr(acceptance, "VERDICTS", []), key=lambda l: int(l.split()[2].rstrip(":")))
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
