# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Module to train a codebook from the command line."""
from typing import Optional, Tuple

import click

from plaseek.core.runner import Runner


@click.command("build-codebook")
@click.option(
    "-i",
    "--input",
    "inputs",
    required=True,
    multiple=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Training WAV file; repeat for several.",
)
@click.option("--size", type=int, help="Number of codewords (power of 2).")
@click.option(
    "-o",
    "--out",
    required=True,
    type=click.Path(dir_okay=False),
    help="Codebook output file.",
)
@click.pass_obj
def build_codebook(
    obj: dict, inputs: Tuple[str, ...], out: str, size: Optional[int] = None
) -> None:
    """Trains an LBG codebook on the base features of WAV files.\f

    Args:
        obj: global options
        inputs: training WAV files
        out: codebook output path
        size: codebook size, overrides config
    """
    runner = Runner(**obj)
    runner.override("codebook", size=size)
    codebook = runner.build_codebook(list(inputs), out)
    click.echo(f"{codebook.size} codewords -> {out}")
