"""Enumeration guards.

Every exhaustive loop in the package checks its size against one of the
limits below before starting. ``ZFX_GUARD_OVERRIDE`` (an integer) raises
all limits to at least that value.
"""

import os

from .errors import ResourceLimitError

DEFAULTS = {
    "source_free_positions": 30,
    "tree_nodes": 2**20,
    "tree_depth": 30,
    "fixing_leaves": 20,
    "stepup_sources": 10**7,
    "chromatic_vertices": 64,
    "coloring_edges": 10**8,
    "symbol_table": 10**6,
    "symbol_sources": 10**7,
    "bitfixing_evaluations": 10**8,
    "subset_enumeration": 2**24,
    "tower_digits": 10**6,
    "sweep_points": 10**4,
    "disperser_sets": 10**7,
}


def override():
    raw = os.environ.get("ZFX_GUARD_OVERRIDE")
    if not raw:
        return None
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"ZFX_GUARD_OVERRIDE must be an integer, got {raw!r}") from None


def limit(name):
    base = DEFAULTS[name]
    extra = override()
    return base if extra is None else max(base, extra)


def check(name, value, what=None):
    """Raise ResourceLimitError when ``value`` exceeds the named guard."""
    lim = limit(name)
    if value > lim:
        raise ResourceLimitError(what or name, value, lim)
    return value


def snapshot():
    return {name: limit(name) for name in sorted(DEFAULTS)}
