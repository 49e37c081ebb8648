ACCEPTANCE_RESULTS = []  # (number, title, passed, seconds, budget_s, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, seconds, budget, detail in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if passed else "FAIL"
        line = f"[{status}] criterion {number}: {title} ({seconds:.2f}s, budget {budget:g}s)"
        if detail:
            line += f" -- {detail}"
        terminalreporter.write_line(line)
