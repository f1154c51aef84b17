"""Deliberate sign faults for negative-control runs.

A fault is switched on only inside :func:`inject`; production code paths
consult :func:`active` at a handful of places.  Caches keyed on basis labels
are cleared on entry and exit so a faulty value never leaks out.
"""

from __future__ import annotations

from contextlib import contextmanager
from typing import Callable, Iterator
from weakref import WeakSet

KNOWN = ("delta_ca", "h", "op_prefactor")

_active: set[str] = set()
_cache_clearers: list[Callable[[], None]] = []
_generation = 0
_memo_owners: WeakSet = WeakSet()


def active(name: str) -> bool:
    return name in _active


def register_cache(clear: Callable[[], None]) -> None:
    _cache_clearers.append(clear)


def register_memo_owner(owner) -> None:
    """Track an object whose ``clear_memo()`` must run whenever the fault set changes."""
    _memo_owners.add(owner)


def generation() -> int:
    """Counter bumped whenever the fault set changes; memo tables compare against it."""
    return _generation


def _clear() -> None:
    global _generation
    _generation += 1
    for clear in _cache_clearers:
        clear()
    for owner in list(_memo_owners):
        owner.clear_memo()


@contextmanager
def inject(name: str) -> Iterator[None]:
    if name not in KNOWN:
        raise ValueError(f"unknown fault {name!r}; choose from {KNOWN}")
    _active.add(name)
    _clear()
    try:
        yield
    finally:
        _active.discard(name)
        _clear()
