from argparse import ArgumentParser
from pathlib import Path
import re
import sys
from dataclasses import replace
from typing import Optional
import argh  # type: ignore
import asyncio
from rich.console import Console

from rich_argparse import RichHelpFormatter
from rich.table import Table

from .config import Command, read_config, read_model
from .construct import construct
from .errors import ConfigError, UserError
from .logging import logger, configure_logger
from .program import DESCRIPTIONS, run
from .version import __version__

log = logger()


def print_commands():
    t = Table(title="Commands", header_style="italic green", show_edge=False)
    t.add_column("command", style="bold yellow")
    t.add_column("description")
    for c in Command:
        t.add_row(str(c), DESCRIPTIONS[c])
    Console().print(t)


@argh.arg("-c", "--config", help="run file (TOML or JSON), use a `[...]` suffix to select a subsection")
@argh.arg("--command", help="override the command of the run file")
@argh.arg("-o", "--out", help="output directory for artifacts")
@argh.arg("-j", "--jobs", help="limit number of concurrent jobs")
@argh.arg("--seed", help="random seed for sampled initial data")
@argh.arg("-v", "--version", help="print version number and exit")
@argh.arg("--list-commands", help="show the available commands")
@argh.arg("--debug", help="more verbose logging")
def cuspscale(
    *,
    config: Optional[str] = None,
    command: Optional[str] = None,
    out: Optional[str] = None,
    jobs: Optional[int] = None,
    seed: Optional[int] = None,
    version: bool = False,
    list_commands: bool = False,
    debug: bool = False,
):
    """Resonance-free windows on surfaces with a cusp and a funnel."""
    if version:
        print(f"cuspscale {__version__}")
        sys.exit(0)

    if list_commands:
        print_commands()
        sys.exit(0)

    configure_logger(debug)
    try:
        if config is None:
            raise ConfigError("No run file given; pass one with `--config`.")
        if m := re.match(r"([^\[\]]+)\[([^\[\]\s]+)\]", config):
            cfg = read_config(Path(m.group(1)), m.group(2))
        else:
            cfg = read_config(Path(config))

        overrides = {}
        if command is not None:
            overrides["command"] = construct(Command, command)
        if out is not None:
            overrides["out"] = Path(out)
        if jobs is not None:
            overrides["jobs"] = int(jobs)
        if seed is not None:
            overrides["seed"] = int(seed)
        cfg = replace(cfg, run=replace(cfg.run, **overrides))

        model = read_model(cfg.run.model)
        written = asyncio.run(run(cfg, model))
        log.info(f"wrote {len(written)} artifact(s) to `{cfg.run.out}`")
    except UserError as e:
        log.error(f"Failed: {e}")
        sys.exit(e.exit_code)


def cli():
    parser = ArgumentParser(formatter_class=RichHelpFormatter)
    argh.set_default_command(parser, cuspscale)
    argh.dispatch(parser)


if __name__ == "__main__":
    cli()
