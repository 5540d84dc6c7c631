import _verdicts


def pytest_terminal_summary(terminalreporter):
    if not _verdicts.VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_verdicts.VERDICTS):
        terminalreporter.write_line(_verdicts.VERDICTS[k])
