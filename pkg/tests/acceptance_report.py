"""Shared sink for per-criterion pass/fail lines, printed by conftest."""

LINES: list[str] = []


def record(number: int, name: str, ok: bool, detail: str = "") -> bool:
    status = "PASS" if ok else "FAIL"
    suffix = f" [{detail}]" if detail else ""
    LINES.append(f"criterion {number} ({name}): {status}{suffix}")
    return ok
