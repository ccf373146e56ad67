import numpy as np
import pytest

from codaimpute.simplex import CompositionalTable

NA = np.nan

# the 4x5 worked example: row 0 is missing parts 2 and 5
WORKED = np.array([
    [0.2, NA, 0.3, 0.1, NA],
    [0.1, 0.2, 0.4, 0.1, 0.2],
    [0.2, 0.4, 0.2, 0.1, 0.1],
    [0.1, 0.3, 0.3, 0.2, 0.1],
])


@pytest.fixture
def worked_table():
    return CompositionalTable.from_array(WORKED)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_incomplete_table(rng, n=40, D=5, n_missing=6, zeros=False):
    """Dirichlet table with some MCAR-masked rows; optionally sprinkled with zeros."""
    x = rng.dirichlet(rng.uniform(0.5, 3, D), size=n)
    if zeros:
        z = rng.random(x.shape) < 0.1
        z[np.arange(n), rng.integers(0, D, n)] = False  # keep each row non-zero
        x[z] = 0.0
        x /= x.sum(axis=1, keepdims=True)
    mask = np.ones_like(x, dtype=bool)
    for i in rng.choice(n, size=n_missing, replace=False):
        m = rng.integers(1, D - 1)
        mask[i, rng.choice(D, size=m, replace=False)] = False
        if x[i, mask[i]].sum() == 0:  # keep at least one positive observed part
            mask[i] = True
    return CompositionalTable.from_array(x, mask)


# acceptance criteria report: one line per criterion in the terminal summary
ACCEPTANCE = {}


def record_acceptance(number, title, passed, detail=""):
    ACCEPTANCE[number] = (title, passed, detail)
    print(f"acceptance {number:>2} {'PASS' if passed else 'FAIL'}: {title}" + (f" ({detail})" if detail else ""))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        line = f"{number:>2} {'PASS' if passed else 'FAIL'}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
