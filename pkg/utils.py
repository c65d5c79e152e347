import json
import os
import tempfile
from pathlib import Path

from paths import DEFAULT_SETTINGS, USER_SETTINGS


def load_settings():
    with open(DEFAULT_SETTINGS) as f:
        options = json.load(f)
    with open(USER_SETTINGS) as f:
        options = {**options, **json.load(f)}

    return options


def load_config_files(config_paths):
    """
    Load and merge multiple configuration files.
    Files are merged in order, with later files overriding earlier ones.
    """
    merged_config = {}
    if not config_paths:
        return merged_config

    paths = config_paths.split(";")
    for path in paths:
        stripped_path = path.strip()
        if not stripped_path:
            continue
        try:
            with open(stripped_path) as f:
                config = json.load(f)
                merged_config.update(config)
        except FileNotFoundError:
            print(f"Warning: Configuration file {stripped_path} not found")
        except json.JSONDecodeError:
            print(f"Warning: Configuration file {stripped_path} is not valid JSON")

    return merged_config


def atomic_write(path, text):
    """
    Write text to path through a temporary file in the same directory, then rename it into place.
    Either the whole file appears or the previous content is left untouched.
    """
    path = Path(path)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
