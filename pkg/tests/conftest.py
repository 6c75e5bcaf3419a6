from collections import OrderedDict

_criteria: "OrderedDict[str, list]" = OrderedDict()


def pytest_runtest_logreport(report):
    labels = [v for k, v in report.user_properties if k == "criterion"]
    if not labels:
        return
    outcome = report.outcome
    if report.when == "call" or outcome != "passed":
        _criteria.setdefault(labels[0], []).append(outcome)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for label, outcomes in sorted(_criteria.items(), key=lambda kv: int(kv[0].split()[0][1:])):
        if "failed" in outcomes:
            status = "FAIL"
        elif all(o == "skipped" for o in outcomes):
            status = "SKIP"
        else:
            status = "PASS"
        terminalreporter.write_line(f"[{status}] {label}")
