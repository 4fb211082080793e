"""Benchmark domains and the string-keyed registry the CLI resolves against."""
from __future__ import annotations

from typing import Callable, Dict

from ..pomdp import GenerativeModel
from .battleship import Battleship
from .pocman import PocMan
from .rocksample import RockSample
from .tiger import Tiger

__all__ = [
    "register",
    "make",
    "available",
    "Battleship",
    "PocMan",
    "RockSample",
    "Tiger",
]

_REGISTRY: Dict[str, Callable[..., GenerativeModel]] = {}


def register(key: str, factory: Callable[..., GenerativeModel]) -> None:
    if key in _REGISTRY:
        raise ValueError(f"domain key {key!r} already registered")
    _REGISTRY[key] = factory


def make(key: str, **kwargs) -> GenerativeModel:
    try:
        factory = _REGISTRY[key]
    except KeyError:
        known = ", ".join(sorted(_REGISTRY))
        raise KeyError(f"unknown domain {key!r}; known domains: {known}") from None
    return factory(**kwargs)


def available() -> tuple:
    return tuple(sorted(_REGISTRY))


register("tiger", Tiger)
register("rocksample-11-11", lambda **kw: RockSample(11, 11, **kw))
register("rocksample-15-15", lambda **kw: RockSample(15, 15, **kw))
register("battleship", Battleship)
register("pocman", PocMan)
