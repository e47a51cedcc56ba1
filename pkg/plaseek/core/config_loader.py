# Copyright 2024 Plaseek Authors
# SPDX-License-Identifier: Apache-2.0
"""Module to load config files."""
import logging
import os
import re
from typing import Dict, List, Optional, Union, overload

from pydantic import ValidationError

from plaseek.core.errors import ConfigError
from plaseek.models.config_schema import Config
from plaseek.utils.io import load_config_file

logger = logging.getLogger(__name__)


class ConfigLoader:
    """Class to read YAML, JSON or TOML config files.

    Args:
        config_file: path of the config file. When omitted, the default
            config is returned.

    Attributes:
        config_file (str): path to the config file

    Methods:
        load_config: loads and validates the config from a file
        inject_env_vars: injects environment variables into config values
    """

    def __init__(
        self,
        config_file: Optional[str] = None,
    ):
        """Initialize ConfigLoader."""
        self.config_file = config_file

    def load_config(self) -> Config:
        """Load and validate the config.

        Raises:
            ConfigError: If a referenced environment variable is not set
            ValidationError: If the config does not match the schema

        Returns:
            The validated config as a Pydantic Config object
        """
        if not self.config_file:
            return Config()

        raw_config = self.inject_env_vars(load_config_file(self.config_file))

        try:
            config = Config(**raw_config)
        except ValidationError as e:
            logger.error(
                "Schema validation failed for config loaded from %s. "
                "See detailed error below.",
                self.config_file,
            )
            raise e

        return config

    @overload
    def inject_env_vars(self, params: dict) -> dict:
        ...

    @overload
    def inject_env_vars(self, params: list) -> list:
        ...

    @overload
    def inject_env_vars(self, params: str) -> str:
        ...

    @overload
    def inject_env_vars(self, params: int) -> int:
        ...

    @overload
    def inject_env_vars(self, params: float) -> float:
        ...

    @overload
    def inject_env_vars(self, params: Optional[None]) -> None:
        ...

    def inject_env_vars(
        self,
        params: Optional[Union[Dict, List, str, int, float, bool]] = None,
    ) -> Optional[Union[Dict, List, str, int, float, bool]]:
        """Inject environment variables into config values.

        Strings are scanned for the pattern {$ENV_VAR}; dicts and lists are
        walked recursively. Given `export CORPUS=/data/tv`, the value
        `"{$CORPUS}/stored.wav"` becomes `"/data/tv/stored.wav"`. A string
        that consists of a single reference to a numeric variable is still
        returned as a string; pydantic coerces it during validation.

        Raises:
            ConfigError: if a referenced variable is not set
        """
        if isinstance(params, dict):
            for k, v in list(params.items()):
                params[k] = self.inject_env_vars(v)
        elif isinstance(params, list):
            for i, v in enumerate(params):
                params[i] = self.inject_env_vars(v)
        elif isinstance(params, str):
            env_var_pattern = r"\{\$.*?\}"
            env_var_match = re.search(env_var_pattern, params, re.DOTALL)
            if env_var_match:
                env_var_env_str = env_var_match.group()
                env_var_value = os.getenv(
                    env_var_env_str[2:][:-1], default=None
                )
                if env_var_value is None:
                    raise ConfigError(
                        "Failed to inject environment variable. "
                        f"{env_var_env_str[2:][:-1]} was not found."
                    )
                params = params.replace(env_var_env_str, env_var_value)
                return self.inject_env_vars(params)

        return params
