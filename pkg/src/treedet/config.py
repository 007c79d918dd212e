"""Size caps and tolerances shared across modules."""
from __future__ import annotations

import os
from dataclasses import dataclass, replace


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return default
    return int(float(raw))


@dataclass(frozen=True)
class Caps:
    # generators refuse to build more vertices than this
    max_vertices: int = 5_000_000
    # full enumeration of matchings / subset laws
    enum_cap: int = 16
    boltzmann_enum_cap: int = 14
    # dense linear algebra
    dense_cap: int = 4000
    # above this vertex count counts switch to log space
    exact_count_threshold: int = 4096
    # exact rational laws
    rational_cap: int = 12
    # windows used for total-variation comparisons
    tv_window_cap: int = 12


DEFAULT_CAPS = Caps()


def current_caps() -> Caps:
    """Default caps, with ``TREEDET_CAP`` overriding the vertex cap."""
    return replace(DEFAULT_CAPS, max_vertices=_env_int("TREEDET_CAP", DEFAULT_CAPS.max_vertices))


class CapExceeded(ValueError):
    pass
