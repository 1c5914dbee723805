import contextlib
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# criterion id -> (passed, detail); filled by test_acceptance and printed after the run
CRITERIA: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    @contextlib.contextmanager
    def record(name, detail=""):
        note = {"detail": detail}
        try:
            yield note
        except BaseException:
            CRITERIA[name] = (False, note["detail"])
            print(f"criterion {name}: FAIL {note['detail']}")
            raise
        CRITERIA[name] = (True, note["detail"])
        print(f"criterion {name}: PASS {note['detail']}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(CRITERIA):
        ok, detail = CRITERIA[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")


@pytest.fixture(scope="session")
def default_market():
    from scam_radar.scenario import generate_market

    return generate_market()


@pytest.fixture(scope="session")
def default_dir(tmp_path_factory, default_market):
    from scam_radar.scenario import write_market

    out = tmp_path_factory.mktemp("benchmark")
    write_market(out, default_market)
    return out


@pytest.fixture(scope="session")
def default_detect(tmp_path_factory, default_dir):
    from scam_radar.pipeline import run_detect

    out = tmp_path_factory.mktemp("detect")
    return out, run_detect(default_dir, out, seed=7)
