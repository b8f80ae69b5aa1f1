from hypothesis import settings

settings.register_profile("default", deadline=None)
settings.load_profile("default")

# acceptance verdicts, filled in by tests/test_acceptance.py
VERDICTS = {}


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(VERDICTS):
        terminalreporter.write_line(VERDICTS[number])
