"""Packaged default scene, grasp and episode files."""

import json
from importlib import resources


def read_default(name: str) -> dict:
    """Parsed contents of default_<name>.json."""
    with resources.files(__name__).joinpath(f"default_{name}.json").open() as fh:
        return json.load(fh)
