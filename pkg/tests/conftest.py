def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_grassharm_acceptance", None)
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
