# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Module to benchmark search modes from the command line."""
from typing import Tuple

import click

from plaseek.core.bench import BENCH_MODES
from plaseek.core.runner import Runner


@click.command()
@click.option(
    "--index",
    "index_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Index file.",
)
@click.option(
    "--codebook",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Codebook the index was built with.",
)
@click.option(
    "-q",
    "--query",
    "queries",
    required=True,
    multiple=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Query WAV file; repeat for several.",
)
@click.option(
    "--theta",
    "thetas",
    multiple=True,
    type=float,
    default=(85.0,),
    show_default=True,
    help="Search threshold; repeat for several.",
)
@click.option(
    "--mode",
    "modes",
    multiple=True,
    type=click.Choice(BENCH_MODES),
    default=BENCH_MODES,
    show_default=True,
    help="Modes to compare; the first is the reference.",
)
@click.option("--repeats", type=int, default=1, show_default=True)
@click.option(
    "-o",
    "--out",
    required=True,
    type=click.Path(dir_okay=False),
    help="CSV output file.",
)
@click.pass_obj
def bench(
    obj: dict,
    index_path: str,
    codebook: str,
    queries: Tuple[str, ...],
    thetas: Tuple[float, ...],
    modes: Tuple[str, ...],
    repeats: int,
    out: str,
) -> None:
    """Times every search mode and checks they return the same matches.\f

    Args:
        obj: global options
        index_path: index file
        codebook: codebook file
        queries: query WAV files
        thetas: thresholds
        modes: search modes
        repeats: runs per measurement, fastest kept
        out: CSV output path
    """
    runner = Runner(**obj)
    results = runner.bench(
        index_path,
        codebook,
        list(queries),
        list(thetas),
        out,
        modes=list(modes),
        repeats=repeats,
    )
    for result in results:
        click.echo(
            f"{result.query}\ttheta={result.theta:g}\t"
            f"matches={result.matches}\tspeed-up={result.speed_up:.2f}"
        )
