# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Plaseek command line interface."""
import logging
import sys
from typing import Any, List, Optional

import click
from pydantic import ValidationError

from plaseek import __version__
from plaseek.cli.bench import bench
from plaseek.cli.codebook import build_codebook
from plaseek.cli.gen import gen
from plaseek.cli.index import build_index, validate_index
from plaseek.cli.search import search
from plaseek.cli.sweep import sweep
from plaseek.config import PLASEEK_CONFIG
from plaseek.core.errors import PlaseekError

logger = logging.getLogger(__name__)


class PlaseekGroup(click.Group):
    """Click group that maps errors to plaseek exit codes.

    0 ok, 1 usage or configuration error, 2 data error, 3 invariant
    violation.
    """

    def main(  # type: ignore[override]
        self,
        args: Optional[List[str]] = None,
        prog_name: Optional[str] = None,
        complete_var: Optional[str] = None,
        standalone_mode: bool = True,
        **extra: Any,
    ) -> Any:
        """Runs the group and exits with the mapped code."""
        try:
            result = super().main(
                args=args,
                prog_name=prog_name,
                complete_var=complete_var,
                standalone_mode=False,
                **extra,
            )
        except click.ClickException as err:
            err.show()
            code = 1
        except click.Abort:
            click.echo("Aborted!", err=True)
            code = 1
        except ValidationError as err:
            click.echo(f"Error: invalid configuration.\n{err}", err=True)
            code = 1
        except PlaseekError as err:
            logger.error("%s: %s", type(err).__name__, err)
            click.echo(f"Error: {err}", err=True)
            code = err.exit_code
        else:
            if not standalone_mode:
                return result
            sys.exit(result if isinstance(result, int) else 0)
        if not standalone_mode:
            return code
        sys.exit(code)


@click.group(
    "plaseek",
    cls=PlaseekGroup,
    context_settings={"help_option_names": ["-h", "--help"]},
)
@click.version_option(__version__)
@click.option(
    "-c",
    "--config",
    "config_file",
    type=click.Path(exists=True, dir_okay=False),
    help="YAML, JSON or TOML config file.",
)
@click.option(
    "--seed",
    type=click.IntRange(0, 2**64 - 1),
    default=0,
    show_default=True,
    help="Seed for synthetic generation.",
)
@click.option(
    "--threads",
    type=click.IntRange(min=1),
    default=1,
    show_default=True,
    help="Parallel workers for the benchmark harness.",
)
@click.option(
    "--log-level",
    type=click.Choice(PLASEEK_CONFIG.get("LOG_LEVELS")),
    default="info",
    show_default=True,
    help="Logging level.",
)
@click.pass_context
def cli(
    ctx: click.Context,
    config_file: Optional[str],
    seed: int,
    threads: int,
    log_level: str,
) -> None:
    """Plaseek: audio query search over compressed histogram fingerprints."""
    logging.getLogger().setLevel(log_level.upper())
    ctx.ensure_object(dict)
    ctx.obj.update(config_file=config_file, seed=seed, threads=threads)


cli.add_command(gen)
cli.add_command(build_codebook)
cli.add_command(build_index)
cli.add_command(validate_index)
cli.add_command(search)
cli.add_command(bench)
cli.add_command(sweep)


def main() -> None:
    """Console script entry point."""
    cli(obj={})


if __name__ == "__main__":
    main()
