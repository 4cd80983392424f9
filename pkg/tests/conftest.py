import _acceptance_registry


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # Acceptance criterion lines must be visible even under output capture.
    if _acceptance_registry.lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_registry.lines:
            terminalreporter.write_line(line)
