import os
import json
import logging
from typing import Any, Dict

from omegaconf import OmegaConf, DictConfig
from omegaconf.errors import OmegaConfBaseException
from yaml import YAMLError

from ..config.analysis_config import AnalysisConfig
from ..errors import ConfigurationError

__all__ = ["load_config", "read_report_json", "write_output"]


def load_config(
            filename: str,
            overrides: Dict[str, Any] = None
        ) -> DictConfig:
    """
    Load a JSON (or YAML) analysis file merged over the AnalysisConfig
    schema.
    Args:
        filename (str): configuration or matrix file path
        overrides (dict): values taking precedence over the file
    Returns:
        OmegaConf DictConfig
    """
    if filename is None or not os.path.isfile(filename):
        raise ConfigurationError(f'{filename} does not exist.')

    schema = OmegaConf.structured(AnalysisConfig)
    try:
        conf = OmegaConf.merge(
            schema, OmegaConf.load(filename), overrides or {})
    except (OmegaConfBaseException, YAMLError, ValueError) as err:
        raise ConfigurationError(f'Invalid configuration {filename}: {err}')
    logging.info(f'Loaded {conf.model} configuration from {filename}')
    return conf


def read_report_json(filename: str) -> Dict[str, Any]:
    """
    Load a JSON report written by the `crb` tool.
    """
    if not os.path.isfile(filename):
        raise ConfigurationError(f'{filename} does not exist.')
    try:
        with open(filename) as report_file:
            return json.load(report_file)
    except json.JSONDecodeError as err:
        raise ConfigurationError(f'Invalid report {filename}: {err}')


def write_output(text: str, filename: str = None) -> None:
    """
    Write rendered report to a file, standard output when no filename.
    """
    if filename is None:
        print(text)
        return
    with open(filename, 'w') as output_file:
        output_file.write(text + '\n')
    logging.info(f'Saved report to {filename}')
