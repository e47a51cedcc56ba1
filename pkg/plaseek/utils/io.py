# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""IO utilities."""
import json
import os
import sys
from typing import Any, Dict, List

import pandas as pd
import yaml
from pydantic import BaseModel

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib


def load_yaml(file_path: str) -> dict:
    """Load yaml file into a dictionary.

    Args:
        file_path: path to yaml file

    Returns:
        dictionary of yaml file, empty if the file is empty
    """
    with open(file_path, "r", encoding="utf-8") as conf_file:
        contents = yaml.safe_load(conf_file)
    if contents is None:
        return {}
    if not isinstance(contents, dict):
        raise ValueError(f"YAML file {file_path} must contain a mapping.")
    return contents


def load_toml(file_path: str) -> dict:
    """Load toml file into a dictionary.

    Args:
        file_path: path to toml file

    Returns:
        dictionary of toml file
    """
    with open(file_path, "rb") as conf_file:
        return tomllib.load(conf_file)


def load_config_file(file_path: str) -> dict:
    """Load a YAML, JSON or TOML config file into a dictionary.

    JSON is parsed by the YAML loader, which accepts it as a subset.

    Args:
        file_path: path to config file

    Returns:
        dictionary of the config file
    """
    if os.path.splitext(file_path)[1].lower() == ".toml":
        return load_toml(file_path)
    return load_yaml(file_path)


def write_json(model: BaseModel, file_path: str) -> None:
    """Write a pydantic model to a JSON file.

    Args:
        model: model to serialize
        file_path: destination path
    """
    with open(file_path, "w", encoding="utf-8") as out_file:
        out_file.write(model.model_dump_json(indent=2))
        out_file.write("\n")


def read_json(file_path: str) -> Any:
    """Read a JSON file.

    Args:
        file_path: path to JSON file

    Returns:
        decoded JSON document
    """
    with open(file_path, "r", encoding="utf-8") as in_file:
        return json.load(in_file)


def write_csv(records: List[Dict[str, Any]], file_path: str) -> pd.DataFrame:
    """Write flat records as a CSV table.

    Args:
        records: rows, all sharing the same keys
        file_path: destination path

    Returns:
        The written table.
    """
    frame = pd.DataFrame.from_records(records)
    frame.to_csv(file_path, index=False)
    return frame
