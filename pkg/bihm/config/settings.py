"""Configuration management for bihm.

This module contains the Config class, a read-only property layer over an
optional JSON file holding run defaults for the command line.
"""
import json
import logging
import pathlib
from typing import Optional, Union

from bihm.config import constants

DEFAULT_FILE = "bihm.json"


class Config:
    """Class for convenient config access"""

    def __init__(self, path: Optional[Union[str, pathlib.Path]] = None) -> None:
        self._file = pathlib.Path(path or DEFAULT_FILE)
        try:
            with open(self._file, encoding="utf-8") as config_f:
                self._config = json.load(config_f)
        except FileNotFoundError:
            self._config = {}
        except json.decoder.JSONDecodeError:
            logging.critical("%s could not be read. Using defaults.", self._file)
            self._config = {}

    # GETTERS FOLLOW

    @property
    def mode(self) -> str:
        """Gets current mode"""
        return self._config.get("mode", "prod")

    @property
    def log_dir(self) -> pathlib.Path:
        """Gets the log directory"""
        return pathlib.Path(self._config.get("log_dir", constants.ldir))

    @property
    def seed(self) -> int:
        """Gets the default seed"""
        return int(self._config.get("seed", 0))

    @property
    def enum_max_bits(self) -> int:
        """Gets the oracle enumeration cap"""
        return int(self._config.get("enum_max_bits", constants.DEFAULT_MAX_TOTAL_BITS))

    @property
    def proposals_per_step(self) -> int:
        """Gets the Gibbs resampling proposal count"""
        return int(self._config.get("proposals_per_step", constants.DEFAULT_PROPOSALS))

    @property
    def ptilde_k(self) -> int:
        """Gets the sample count for p-tilde estimates inside visible Gibbs updates"""
        return int(self._config.get("ptilde_k", constants.DEFAULT_PTILDE_K))

    @property
    def eval_k(self) -> int:
        """Gets the default evaluation sample count"""
        return int(self._config.get("eval_k", 1000))

    @property
    def z_outer(self) -> int:
        """Gets the default K_outer"""
        return int(self._config.get("z_outer", 10000))

    @property
    def z_inner(self) -> int:
        """Gets the default K_inner"""
        return int(self._config.get("z_inner", 1))

    @property
    def z_every(self) -> int:
        """Gets how many epochs pass between partition function estimates during training"""
        return int(self._config.get("z_every", 1))
