from __future__ import annotations

import logging
import os
import signal
import subprocess
import sys
import time
from functools import wraps

import psutil

from game_zipf.definitions import ExitCode

logger = logging.getLogger("game_zipf")

mb_divisor = 1024**2


def memory_usage(context: str = "") -> str:
    """Resident memory of this process, used to keep an eye on large frequency tables."""
    rss = psutil.Process(os.getpid()).memory_info().rss / mb_divisor
    return f"{context} rss: {rss:.0f} MB".strip()


def timeit(func):
    @wraps(func)
    def timeit_wrapper(*args, **kwargs):
        start_time = time.perf_counter()
        result = func(*args, **kwargs)
        end_time = time.perf_counter()
        total_time = end_time - start_time
        name = None
        try:
            name = func.__qualname__
        except AttributeError:
            try:
                name = func.__class__.__qualname__
            except AttributeError:
                logger.error("Timeit Wrapper got unexpected element (not func, class or object). Please fix!")
        logger.debug(f"{name}() took {total_time:.3f} seconds")

        return result

    return timeit_wrapper


def get_git_information() -> str:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "HEAD"], capture_output=True, text=True, timeout=5, check=False
        ).stdout
    except (OSError, subprocess.SubprocessError):
        return ""
    return out.strip()


class TerminationHandler:
    """Logs where the run was writing to and exits with the interrupt code on SIGINT/SIGTERM."""

    def __init__(self, args):
        signal.signal(signal.SIGINT, self.exit_gracefully)
        signal.signal(signal.SIGTERM, self.exit_gracefully)
        self.args = args

    def exit_gracefully(self, *args):
        logger.critical("#### RECEIVED TERM SIGNAL - ABORTING RUN ############")
        self.cleanup()
        sys.exit(int(ExitCode.INTERRUPTED))

    def cleanup(self):
        out = getattr(self.args, "out", None)
        if out is not None:
            logger.info(f"#### PARTIAL OUTPUT MAY BE LEFT AT {out} ############")


def handle_exception(exc_type, exc_value, exc_traceback):
    if issubclass(exc_type, KeyboardInterrupt):
        sys.__excepthook__(exc_type, exc_value, exc_traceback)
        return

    logger.critical("Uncaught exception", exc_info=(exc_type, exc_value, exc_traceback))
    logger.critical(memory_usage("at crash"))


