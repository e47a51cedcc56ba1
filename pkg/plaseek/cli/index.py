# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Modules to build and validate an index from the command line."""
from typing import Optional

import click

from plaseek.core import index_io
from plaseek.core.errors import InvariantViolation
from plaseek.core.runner import Runner
from plaseek.core.vq import load_codebook


@click.command("build-index")
@click.option(
    "-i",
    "--input",
    "stored",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Stored WAV file.",
)
@click.option(
    "--codebook",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Codebook file.",
)
@click.option("--window-frames", type=int, help="Window length W.")
@click.option("--segments", type=int, help="Number of segments M.")
@click.option("--sigma", type=float, help="Contribution threshold.")
@click.option("--delta", type=int, help="Shiftable range half-width.")
@click.option("--block", type=int, help="Sampling block length a.")
@click.option(
    "--dynseg",
    type=click.Choice(["none", "local", "coarse", "dp"]),
    help="Dynamic segmentation method.",
)
@click.option(
    "-o",
    "--out",
    required=True,
    type=click.Path(dir_okay=False),
    help="Index output file; stats go to <out>.stats.json.",
)
@click.pass_obj
def build_index(
    obj: dict,
    stored: str,
    codebook: str,
    out: str,
    window_frames: Optional[int] = None,
    segments: Optional[int] = None,
    sigma: Optional[float] = None,
    delta: Optional[int] = None,
    block: Optional[int] = None,
    dynseg: Optional[str] = None,
) -> None:
    """Builds a compressed search index over a stored WAV file.\f

    Args:
        obj: global options
        stored: stored WAV file
        codebook: codebook file
        out: index output path
        window_frames: window length, overrides config
        segments: number of segments, overrides config
        sigma: contribution threshold, overrides config
        delta: shiftable range half-width, overrides config
        block: sampling length, overrides config
        dynseg: segmentation method, overrides config
    """
    runner = Runner(**obj)
    runner.override(
        "index",
        window_frames=window_frames,
        segments=segments,
        sigma=sigma,
        delta=delta,
        block=block,
        dynseg=dynseg,
    )
    index, stats = runner.build_index(stored, codebook, out)
    click.echo(
        f"{len(index.segments)} segments, {stats.blocks} blocks, average "
        f"dimension {stats.average_dimension:.3f} -> {out}"
    )


@click.command("validate-index")
@click.option(
    "--index",
    "index_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Index file.",
)
@click.option(
    "--codebook",
    type=click.Path(exists=True, dir_okay=False),
    help="Codebook the index must have been built with.",
)
@click.option(
    "--audit-radii",
    is_flag=True,
    help="Also recompute every block radius.",
)
def validate_index(
    index_path: str, codebook: Optional[str] = None, audit_radii: bool = False
) -> None:
    """Checks an index file's checksum and structural invariants.\f

    Args:
        index_path: index file
        codebook: codebook file whose digest must match
        audit_radii: recompute block radii from the stored features
    """
    index = index_io.load(index_path)
    digest = load_codebook(codebook).digest() if codebook else None
    problems = index_io.find_problems(index, digest)
    if audit_radii:
        problems.extend(index_io.audit_radii(index))
    if problems:
        for problem in problems:
            click.echo(problem, err=True)
        raise InvariantViolation(f"{len(problems)} invariant violations.")
    click.echo(f"{index_path}: OK")
    for key, value in index.describe().items():
        click.echo(f"  {key}: {value}")
