ACCEPTANCE = {}


def record(number, title, passed, detail=""):
    ACCEPTANCE[number] = (title, passed, detail)
    status = "PASS" if passed is True else "FAIL" if passed is False else str(passed)
    print(f"[criterion {number:>2}] {status:<4} {title} {detail}".rstrip())


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        status = "PASS" if passed is True else "FAIL" if passed is False else str(passed)
        terminalreporter.write_line(f"[criterion {number:>2}] {status:<4} {title}: {detail}")
