# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Module to generate a synthetic corpus from the command line."""
from typing import Optional

import click

from plaseek.core.runner import Runner


@click.command()
@click.option(
    "-o",
    "--out",
    "out_dir",
    required=True,
    type=click.Path(file_okay=False),
    help="Directory for stored.wav, query WAVs and ground_truth.json.",
)
@click.option("--duration-s", type=float, help="Stored signal duration.")
@click.option("--queries", "n_queries", type=int, help="Number of queries.")
@click.option("--query-duration-s", type=float, help="Query clip duration.")
@click.option("--copies", type=int, help="Planted copies per query.")
@click.option("--snr-db", type=float, help="Noise level of planted copies.")
@click.pass_obj
def gen(
    obj: dict,
    out_dir: str,
    duration_s: Optional[float] = None,
    n_queries: Optional[int] = None,
    query_duration_s: Optional[float] = None,
    copies: Optional[int] = None,
    snr_db: Optional[float] = None,
) -> None:
    """Generates a synthetic stored signal with planted query copies.\f

    Args:
        obj: global options
        out_dir: output directory
        duration_s: stored signal duration, overrides config
        n_queries: number of query clips, overrides config
        query_duration_s: clip duration, overrides config
        copies: planted copies per query, overrides config
        snr_db: noise level of planted copies, overrides config
    """
    runner = Runner(**obj)
    runner.override(
        "synthetic",
        duration_s=duration_s,
        n_queries=n_queries,
        query_duration_s=query_duration_s,
        copies_per_query=copies,
        snr_db=snr_db,
    )
    truth = runner.generate(out_dir)
    click.echo(truth)
