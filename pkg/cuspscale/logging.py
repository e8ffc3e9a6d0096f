import logging
import sys

from rich.highlighter import RegexHighlighter
from rich.logging import RichHandler


class BackTickHighlighter(RegexHighlighter):
    """Text between back-ticks is printed bold."""

    highlights = [r"`(?P<bold>[^`]*)`"]


def logger():
    return logging.getLogger("cuspscale")


def configure_logger(debug: bool, rich: bool = True):
    """Install the console handler. Warnings raised by numpy and scipy
    (integration accuracy, ill-conditioned solves) are routed through the
    same handler."""
    handler: logging.Handler
    if rich:
        handler = RichHandler(show_path=debug, highlighter=BackTickHighlighter())
        handler.setFormatter(logging.Formatter("%(message)s", datefmt="[%X]"))
    else:
        handler = logging.StreamHandler(sys.stdout)
    logging.basicConfig(level=logging.DEBUG if debug else logging.INFO, handlers=[handler])
    logging.captureWarnings(True)


def log_finding(kind: str, passed: bool, margin: float, witness: object = None):
    """Report a verification finding. Failing findings go out as warnings
    with their witness; they are never raised."""
    log = logger()
    if passed:
        log.info(f"`{kind}` passed with margin {margin:.4g}")
    else:
        log.warning(f"`{kind}` failed with margin {margin:.4g}, witness: {witness}")
