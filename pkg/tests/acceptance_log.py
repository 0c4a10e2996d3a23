"""Per-criterion PASS/FAIL lines collected by test_acceptance and printed at session end."""

LINES: list[str] = []


def record(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title} ({detail})"
    LINES.append(line)
    print(line)
