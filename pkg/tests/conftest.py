ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in sorted(ACCEPTANCE_RESULTS, key=lambda r: int(r[0].split()[0][1:])):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
