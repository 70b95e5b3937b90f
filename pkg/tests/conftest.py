import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

# One verdict line per acceptance criterion, filled in by test_acceptance.py.
VERDICTS: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[key])
