"""Access to the suite/template/schema files shipped inside the package."""
from __future__ import annotations

from importlib.resources import files
from pathlib import Path


def data_path(*parts: str) -> Path:
    return Path(str(files("surprisuite").joinpath("data", *parts)))


def suite_path(name: str) -> Path:
    return data_path("suites", f"{name}.json")


def template_path(name: str) -> Path:
    return data_path("templates", f"{name}.json")


def schema_path(name: str) -> Path:
    return data_path("schemas", f"{name}.schema.json")


SHIPPED_SUITES = ("center_embedding", "filler_gap", "discharge")
SHIPPED_TEMPLATES = ("island_adjunct_cnp",)
