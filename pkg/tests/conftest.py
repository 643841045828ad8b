import pytest

from cdcdesigns import (
    boolean_sqs,
    example_gdd,
    fano_plane,
    projective_plane_sbibd,
    scheme_from_gdd,
    scheme_from_t_design,
    scheme_from_t_design_unequal,
    steiner_triple_bose,
    transversal_gdd,
)

_criteria: dict[str, tuple[str, str]] = {}


def _instances():
    """Every generated family instance exercised by the load and decoding checks."""
    out = []
    for p in (2, 3, 5, 7):
        out.append((f"pg{p}", lambda p=p: scheme_from_t_design(projective_plane_sbibd(p), 2, 1)))
    for n in (9, 15):
        out.append((f"sts{n}", lambda n=n: scheme_from_t_design(steiner_triple_bose(n), 2, 1)))
    for p in (2, 3, 5, 7):
        out.append((f"tgdd{p}", lambda p=p: scheme_from_gdd(transversal_gdd(p), 2, 1)))
    for k in (3, 4):
        out.append((f"sqs{2 ** k}", lambda k=k: scheme_from_t_design_unequal(boolean_sqs(k), 3, 1)))
    return out


INSTANCES = _instances()


@pytest.fixture(scope="session")
def fano():
    return fano_plane()


@pytest.fixture(scope="session")
def fano_scheme():
    return scheme_from_t_design(fano_plane(), 2, 1)


@pytest.fixture(scope="session")
def gdd_scheme():
    return scheme_from_gdd(example_gdd(), 2, 1)


@pytest.fixture(scope="session")
def sqs8_scheme():
    return scheme_from_t_design_unequal(boolean_sqs(3), 3, 1)


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    if not name.startswith("test_criterion_"):
        return
    number = name.split("_")[2]
    status = "PASS" if report.passed else "FAIL"
    _criteria[number] = (status, name)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria, key=int):
        status, name = _criteria[number]
        terminalreporter.write_line(f"criterion {number}: {status}  ({name})")
