"""Shipped map fixtures and the MicroCiv ontology, loaded from package data."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from ..ontology import Ontology, load_ontology
from .game import FixtureError, MapFixture, parse_fixture

SHIPPED_FIXTURES = ("twin-continents", "islands", "inland-sea")


def _data_root():
    return resources.files("kbrl.microciv") / "data"


def load_fixture(name_or_path: str) -> MapFixture:
    """Load a shipped fixture by name, or any .map file by path."""
    if name_or_path in SHIPPED_FIXTURES:
        text = (_data_root() / "maps" / f"{name_or_path}.map").read_text("utf-8")
        return parse_fixture(text, name_or_path)
    path = Path(name_or_path)
    if path.is_file():
        return parse_fixture(path.read_text("utf-8"), path.stem)
    raise FixtureError(
        f"unknown fixture {name_or_path!r}; shipped fixtures: "
        f"{', '.join(SHIPPED_FIXTURES)}"
    )


def load_microciv_ontology() -> Ontology:
    return load_ontology((_data_root() / "microciv.ttl").read_text("utf-8"))


def shipped_pack_dir(tag: str) -> Path:
    """Path of a shipped rule pack (common, expander, developer, aggressor)."""
    path = Path(str(_data_root() / "kb" / tag))
    if not path.is_dir():
        raise FileNotFoundError(f"no shipped pack {tag!r}")
    return path


def shipped_pack_dirs(tags=("common", "expander", "developer", "aggressor")):
    return [shipped_pack_dir(t) for t in tags]
