import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import acceptance_report


def pytest_terminal_summary(terminalreporter):
    if acceptance_report.LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in acceptance_report.LINES:
            terminalreporter.write_line(line)
