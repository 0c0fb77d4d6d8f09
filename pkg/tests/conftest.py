import itertools

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment, linprog

from parmatch.matrixio import TuningMatrix, center_and_normalize


def _marginal_rows(nx, ny):
    rows = []
    for i in range(nx):
        a = np.zeros((nx, ny))
        a[i] = 1
        rows.append(a.ravel())
    cols = []
    for j in range(ny):
        a = np.zeros((nx, ny))
        a[:, j] = 1
        cols.append(a.ravel())
    return np.array(rows), np.array(cols)


def lp_partial(cost, s):
    """Partial transport optimum by HiGHS on the inequality-constrained LP."""
    nx, ny = cost.shape
    rows, cols = _marginal_rows(nx, ny)
    res = linprog(
        cost.ravel(),
        A_ub=np.vstack([rows, cols]),
        b_ub=np.concatenate([np.full(nx, 1 / nx), np.full(ny, 1 / ny)]),
        A_eq=np.ones((1, nx * ny)),
        b_eq=[s],
        bounds=(0, None),
        method="highs-ds",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    assert res.status == 0, res.message
    return res.fun


def lp_balanced(cost):
    nx, ny = cost.shape
    rows, cols = _marginal_rows(nx, ny)
    res = linprog(
        cost.ravel(),
        A_eq=np.vstack([rows, cols]),
        b_eq=np.concatenate([np.full(nx, 1 / nx), np.full(ny, 1 / ny)]),
        bounds=(0, None),
        method="highs-ds",
    )
    assert res.status == 0, res.message
    return res.fun


def vertex_enumeration(cost, s=None):
    """Minimum over every basic feasible solution of the (partial) transport LP.

    Standard form: marginal constraints (with slacks when partial) plus the
    total-mass equality.  Only for tiny problems.
    """
    nx, ny = cost.shape
    rows, cols = _marginal_rows(nx, ny)
    nv = nx * ny
    if s is None:
        a = np.vstack([rows, cols[:-1]])  # one marginal equation is redundant
        b = np.concatenate([np.full(nx, 1 / nx), np.full(ny - 1, 1 / ny)])
        c = cost.ravel()
    else:
        m = nx + ny
        a = np.zeros((m + 1, nv + m))
        a[:m, :nv] = np.vstack([rows, cols])
        a[:m, nv:] = np.eye(m)
        a[m, :nv] = 1
        b = np.concatenate([np.full(nx, 1 / nx), np.full(ny, 1 / ny), [s]])
        c = np.concatenate([cost.ravel(), np.zeros(m)])
    r = a.shape[0]
    best = np.inf
    vertices = 0
    for basis in itertools.combinations(range(a.shape[1]), r):
        ab = a[:, basis]
        if abs(np.linalg.det(ab)) < 1e-12:
            continue
        zb = np.linalg.solve(ab, b)
        if np.all(zb >= -1e-12):
            vertices += 1
            best = min(best, float(c[list(basis)] @ zb))
    assert vertices > 0
    return best


def hungarian_objective(cost):
    n = cost.shape[0]
    r, c = linear_sum_assignment(cost)
    return cost[r, c].sum() / n


def random_normalized(rng, m, n):
    return center_and_normalize(TuningMatrix(rng.standard_normal((m, n))))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance reporting: one PASS/FAIL line per criterion in the terminal summary

_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, {"title": title, "passed": True, "detail": ""})
    if report.failed or (report.when == "call" and not report.passed):
        entry["passed"] = False
    details = [v for k, v in item.user_properties if k == "detail"]
    if details:
        entry["detail"] = details[-1]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        e = _CRITERIA[number]
        status = "PASS" if e["passed"] else "FAIL"
        line = f"criterion {number:>2} {status}  {e['title']}"
        if e["detail"]:
            line += f"  [{e['detail']}]"
        terminalreporter.write_line(line)
