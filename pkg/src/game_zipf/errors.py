from __future__ import annotations

from game_zipf.definitions import ExitCode


class GameZipfError(UserWarning):
    """Root of all errors raised by the package. Every subclass carries the exit code the CLI reports."""

    exit_code = ExitCode.INVALID_CONFIG


class InvalidConfigError(GameZipfError, ValueError):
    exit_code = ExitCode.INVALID_CONFIG


class GameRuleError(GameZipfError):
    exit_code = ExitCode.GAME_RULE


class SolverBudgetExceeded(GameZipfError):
    exit_code = ExitCode.SOLVER_BUDGET


class DataFormatError(GameZipfError, ValueError):
    exit_code = ExitCode.DATA_FORMAT


class StateSpaceTooLarge(GameZipfError):
    exit_code = ExitCode.STATE_SPACE_TOO_LARGE
