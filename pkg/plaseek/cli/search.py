# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Module to search a query from the command line."""
from typing import Optional

import click

from plaseek.core.runner import Runner
from plaseek.utils.io import write_json


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
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Query WAV file.",
)
@click.option("--theta", type=float, help="Search threshold.")
@click.option(
    "--mode",
    type=click.Choice(["proposed", "projected", "tas", "bruteforce"]),
    help="Search mode.",
)
@click.option(
    "--json",
    "json_out",
    type=click.Path(dir_okay=False),
    help="Write matches and counters as JSON.",
)
@click.pass_obj
def search(
    obj: dict,
    index_path: str,
    codebook: str,
    query: str,
    theta: Optional[float] = None,
    mode: Optional[str] = None,
    json_out: Optional[str] = None,
) -> None:
    """Finds every window of the stored stream within theta of the query.\f

    Args:
        obj: global options
        index_path: index file
        codebook: codebook file
        query: query WAV file
        theta: search threshold, overrides config
        mode: search mode, overrides config
        json_out: JSON output path
    """
    runner = Runner(**obj)
    output = runner.search(
        index_path, codebook, query, theta=theta, mode=mode  # type: ignore
    )
    if json_out:
        write_json(output, json_out)
    for match in output.matches:
        click.echo(
            f"{match.position_frames}\t{match.position_seconds:.2f}\t"
            f"{match.distance:.4f}"
        )
    click.echo(
        f"{len(output.matches)} matches ({output.mode}, theta="
        f"{output.theta:g}, {output.counters.full_distance_evaluations} "
        "full distance evaluations)",
        err=True,
    )
