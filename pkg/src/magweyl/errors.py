# magweyl/errors.py

"""
Exception hierarchy shared by all magweyl modules.

The command-line front end maps each family to a process exit code.
"""

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_VALIDATION = 2
EXIT_GUARD = 3


class MagWeylError(Exception):
    exit_code = EXIT_FAILURE


class ValidationError(MagWeylError):
    """Invalid input: config schema, operator conditions, asymptotic hypotheses."""

    exit_code = EXIT_VALIDATION


class ScenarioLoadError(ValidationError):
    pass


class GuardViolation(MagWeylError):
    """A numerical guard refused to run (resolution, desk-scale cap, ellipticity)."""

    exit_code = EXIT_GUARD


class ConvergenceError(GuardViolation):
    pass


def exit_code_for(exc: BaseException) -> int:
    return getattr(exc, "exit_code", EXIT_FAILURE)
