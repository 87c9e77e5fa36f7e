import json
import os
from pathlib import Path
from typing import Optional, Union

from box import Box

CONFIG_ENV_VAR = "LAB_CONFIG"


def load_config(path: Optional[Union[str, Path]] = None) -> Box:
    """
    Frozen Box over the lab settings. The bundled src/config/config.json is used
    unless a path is passed or LAB_CONFIG points at another file.
    """
    override = path or os.environ.get(CONFIG_ENV_VAR)
    config_path = Path(override) if override else Path(__file__).resolve().parent / "config.json"
    with open(config_path, "r", encoding="utf-8") as file_handle:
        data = json.load(file_handle)

    return Box(data, frozen_box=True)


config = load_config()
