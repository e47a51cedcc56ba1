# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Parameter sweeps written as CSV for external plotting."""
from typing import Optional, Tuple

import click

from plaseek.core.runner import (
    Runner,
    sweep_dimensions,
    sweep_dynseg,
    write_records,
)

_INPUT = click.option(
    "-i",
    "--input",
    "stored",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Stored WAV file.",
)
_CODEBOOK = click.option(
    "--codebook",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Codebook file.",
)
_OUT = click.option(
    "-o",
    "--out",
    required=True,
    type=click.Path(dir_okay=False),
    help="CSV output file.",
)


@click.group()
def sweep() -> None:
    """Experiment sweeps over index parameters."""


@sweep.command("dims")
@_INPUT
@_CODEBOOK
@click.option(
    "--segments",
    "segment_counts",
    multiple=True,
    type=int,
    default=(10, 30, 100, 300, 1000, 3000),
    show_default=True,
    help="Segment count; repeat for several.",
)
@click.option(
    "--sigma",
    "sigmas",
    multiple=True,
    type=float,
    default=(0.9,),
    show_default=True,
    help="Contribution threshold; repeat for several.",
)
@_OUT
@click.pass_obj
def dims(
    obj: dict,
    stored: str,
    codebook: str,
    segment_counts: Tuple[int, ...],
    sigmas: Tuple[float, ...],
    out: str,
) -> None:
    """Average compressed dimension against segment count.\f

    Args:
        obj: global options
        stored: stored WAV file
        codebook: codebook file
        segment_counts: equi-partition segment counts
        sigmas: contribution thresholds
        out: CSV output path
    """
    runner = Runner(**obj)
    rows = runner.trajectory(stored, codebook)
    write_records(sweep_dimensions(rows, segment_counts, sigmas), out)


@sweep.command("dynseg")
@_INPUT
@_CODEBOOK
@click.option("--segments", type=int, help="Segment count M.")
@click.option(
    "--delta",
    "deltas",
    multiple=True,
    type=int,
    default=(25, 50, 100, 200, 400),
    show_default=True,
    help="Shiftable range half-width; repeat for several.",
)
@click.option(
    "--method",
    "methods",
    multiple=True,
    type=click.Choice(["none", "local", "coarse", "dp"]),
    default=("none", "local", "coarse"),
    show_default=True,
    help="Segmentation method; repeat for several.",
)
@_OUT
@click.pass_obj
def dynseg(
    obj: dict,
    stored: str,
    codebook: str,
    deltas: Tuple[int, ...],
    methods: Tuple[str, ...],
    out: str,
    segments: Optional[int] = None,
) -> None:
    """Objective and probe count per segmentation method and delta.\f

    Args:
        obj: global options
        stored: stored WAV file
        codebook: codebook file
        deltas: shiftable range half-widths
        methods: segmentation methods
        out: CSV output path
        segments: segment count, overrides config
    """
    runner = Runner(**obj)
    runner.override("index", segments=segments)
    rows = runner.trajectory(stored, codebook)
    records = sweep_dynseg(
        rows,
        runner.config.index.segments,
        deltas,
        methods,  # type: ignore[arg-type]
        runner.config.index.sigma,
    )
    write_records(records, out)
