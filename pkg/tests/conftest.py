import os
import sys

import hypothesis

sys.path.insert(0, os.path.dirname(__file__))

hypothesis.settings.register_profile("default", max_examples=200, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=20, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion reported in the summary")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            item.user_properties.append(("criterion", (m.args[0], m.args[1])))


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if getattr(rep, "when", "call") != "call" and outcome != "error":
                continue
            for key, (n, text) in getattr(rep, "user_properties", []):
                if key == "criterion":
                    lines.append((n, "PASS" if outcome == "passed" else "FAIL", text))
    if lines:
        terminalreporter.section("acceptance criteria")
        for n, status, text in sorted(set(lines)):
            terminalreporter.write_line(f"{status}  C{n}  {text}")
