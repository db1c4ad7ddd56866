"""Acceptance criteria, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL]`` line; the lines are also
collected into an ``acceptance criteria`` section of the terminal summary.
Tolerances are pinned inside :mod:`hopf_sr.acceptance`.
"""

import pytest

from conftest import ACCEPTANCE_LINES
from hopf_sr import acceptance


@pytest.mark.slow
@pytest.mark.parametrize("key", list(acceptance.CRITERIA))
def test_criterion(key):
    (result,) = acceptance.run_all({key: acceptance.CRITERIA[key]})
    line = result.line()
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert result.passed, f"{line}\n{result.details}"
