"""Unfitted HDG solver for quasilinear elliptic problems on curved domains."""

from __future__ import annotations

import json

from ._core import (
    ConfigError,
    DiscreteSolution,
    DomainBoundary,
    Error,
    HdgSpace,
    KappaVariant,
    ManufacturedCase,
    MaxItersExceeded,
    ProblemSpec,
    Triangulation,
    build_mesh,
    check_admissibility,
    compute_errors,
    eoc,
    make_manufactured,
    solve,
)
from ._core import config_hash as _config_hash
from ._core import run as _run

__all__ = [
    "ConfigError",
    "DiscreteSolution",
    "DomainBoundary",
    "Error",
    "HdgSpace",
    "KappaVariant",
    "ManufacturedCase",
    "MaxItersExceeded",
    "ProblemSpec",
    "Triangulation",
    "build_mesh",
    "check_admissibility",
    "compute_errors",
    "config_hash",
    "eoc",
    "make_manufactured",
    "run",
    "solve",
]


def _as_text(config: dict | str) -> str:
    return config if isinstance(config, str) else json.dumps(config)


def run(config: dict | str, out: str | None = None, strict: bool = False, quiet: bool = True) -> tuple[int, str]:
    """Runs a configuration; returns the exit status and the log."""
    return _run(_as_text(config), out, strict, quiet)


def config_hash(config: dict | str) -> str:
    return _config_hash(_as_text(config))
