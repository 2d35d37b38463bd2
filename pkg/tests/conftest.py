import json
from pathlib import Path

import pytest

ACCEPTANCE_LINES: list[dict] = []


@pytest.fixture
def acceptance_record():
    """Append one criterion outcome; printed in the terminal summary and saved to acceptance_report.json."""

    def record(criterion: int, title: str, passed: bool, detail: str, **observed):
        ACCEPTANCE_LINES.append({"criterion": criterion, "title": title, "passed": bool(passed), "detail": detail, **observed})
        print(f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {title} -- {detail}")

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for row in sorted(ACCEPTANCE_LINES, key=lambda r: r["criterion"]):
        status = "PASS" if row["passed"] else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {row['criterion']}: {row['title']} -- {row['detail']}")
    out = Path(config.rootpath) / "acceptance_report.json"
    out.write_text(json.dumps(sorted(ACCEPTANCE_LINES, key=lambda r: r["criterion"]), indent=2, sort_keys=True, default=float) + "\n")
