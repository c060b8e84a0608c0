import pytest

from fjverify.solver import have_solver

needs_solver = pytest.mark.skipif(
    not have_solver(), reason="no SMT solver available (z3 or node + z3-solver)")
