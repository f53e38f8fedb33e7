import re

_CRITERION_RE = re.compile(r"test_a(\d+)\w*")


def pytest_runtest_logreport(report):
    if report.when != "call" or "acceptance" not in report.nodeid:
        return
    m = _CRITERION_RE.search(report.nodeid)
    if not m:
        return
    verdict = "PASS" if report.passed else "FAIL"
    print(f"\nACCEPTANCE A{int(m.group(1))}: {verdict}", flush=True)
