def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        outcome = "PASS" if report.passed else "FAIL"
    elif report.when == "setup" and report.skipped:
        outcome = "SKIP"
    else:
        return
    print(f"\nACCEPTANCE {name}: {outcome}", flush=True)
