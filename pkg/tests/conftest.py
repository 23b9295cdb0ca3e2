"""Shared pytest plumbing.

The acceptance tests register one verdict line per criterion; printing
them from inside a test would be swallowed by output capture, so they
are replayed in the terminal summary instead.
"""

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
