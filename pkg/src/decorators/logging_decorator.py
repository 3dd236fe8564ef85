"""
Logging decorator for CLI command handlers.
"""

import sys
from functools import wraps
from typing import Callable

import structlog

from services.errors import IoError, MerkleError, StoreCorrupt, ValidationFailure

logger = structlog.get_logger("merkle.cli")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_IO = 3


def exit_status_for(error: BaseException) -> int:
    """Map an exception to the CLI exit status table."""
    if isinstance(error, ValidationFailure):
        return EXIT_FAILURE
    if isinstance(error, (StoreCorrupt, IoError, OSError)):
        return EXIT_IO
    if isinstance(error, MerkleError):
        return EXIT_USAGE
    return EXIT_IO


def log_command(func: Callable) -> Callable:
    """
    Bind the command name into the log context, log the outcome, and turn
    exceptions into exit statuses with a one-line message on stderr.
    """
    @wraps(func)
    def wrapper(args) -> int:
        command = func.__name__.replace("cmd_", "")
        structlog.contextvars.bind_contextvars(command=command)
        try:
            status = func(args)
            logger.info("Command completed", exit_status=status)
            return status
        except MerkleError as e:
            status = exit_status_for(e)
            logger.warning("Command rejected", error=str(e), exit_status=status)
            print(f"error: {e}", file=sys.stderr)
            return status
        except OSError as e:
            logger.error("Command failed on I/O", error=str(e), exit_status=EXIT_IO)
            print(f"error: {e}", file=sys.stderr)
            return EXIT_IO
        except Exception as e:
            logger.exception("Command failed unexpectedly")
            print(f"error: {e}", file=sys.stderr)
            return EXIT_IO
        finally:
            structlog.contextvars.unbind_contextvars("command")

    return wrapper
