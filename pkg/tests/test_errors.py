"""Tests for the exception hierarchy and CLI exit codes."""

import json

import pytest
from pydantic import ValidationError

from frogsim.distributions import OffspringDistribution
from frogsim.errors import (
    EXIT_CONFIG,
    EXIT_NUMERICAL,
    BushCapExceeded,
    ConvergenceRadiusError,
    DivergenceError,
    DomainError,
    FrogsimError,
    NonConvergenceError,
    exit_code_for,
)


class TestHierarchy:
    def test_domain_errors_are_value_errors(self):
        assert issubclass(DomainError, ValueError)
        assert issubclass(ConvergenceRadiusError, DomainError)

    def test_numerical_errors_are_not_domain_errors(self):
        for cls in (DivergenceError, NonConvergenceError, BushCapExceeded):
            assert issubclass(cls, FrogsimError)
            assert not issubclass(cls, DomainError)

    def test_non_convergence_carries_its_state(self):
        err = NonConvergenceError("power iteration", residual=0.25, iterations=10)
        assert err.residual == 0.25
        assert err.iterations == 10
        assert "after 10 iterations" in str(err)

    def test_bush_cap_names_the_bush(self):
        err = BushCapExceeded((0, 2), 100)
        assert err.vertex == (0, 2)
        assert err.cap == 100
        assert "larger bush cap" in str(err)


class TestExitCodes:
    def _validation_error(self) -> ValidationError:
        try:
            OffspringDistribution(probs=(0.5, 0.2))
        except ValidationError as exc:
            return exc
        raise AssertionError("expected a validation error")

    @pytest.mark.parametrize(
        "error",
        [
            DomainError("bad"),
            ConvergenceRadiusError("past the radius"),
            FileNotFoundError("missing.json"),
            json.JSONDecodeError("bad json", "{", 0),
        ],
    )
    def test_bad_input(self, error):
        assert exit_code_for(error) == EXIT_CONFIG == 2

    def test_validation_error(self):
        assert exit_code_for(self._validation_error()) == EXIT_CONFIG

    @pytest.mark.parametrize(
        "error",
        [
            DivergenceError("diverges"),
            NonConvergenceError("stuck", residual=1.0, iterations=1),
            BushCapExceeded((), 10),
            ZeroDivisionError(),
        ],
    )
    def test_numerical(self, error):
        assert exit_code_for(error) == EXIT_NUMERICAL == 3
