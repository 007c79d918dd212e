"""Finite probability laws over subsets of a vertex window."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

Subset = tuple[int, ...]


@dataclass(frozen=True)
class SubsetLaw:
    """Distribution over subsets of ``ground``; keys are sorted id tuples.

    Probabilities are floats, or ``Fraction`` in exact mode.  Subsets absent
    from ``probs`` have probability zero.
    """

    ground: tuple[int, ...]
    probs: Mapping[Subset, float | Fraction]

    @classmethod
    def from_weights(cls, ground: Iterable[int], weights: Mapping[Iterable[int], float | Fraction]):
        acc: dict[Subset, float | Fraction] = {}
        for key, w in weights.items():
            k = tuple(sorted(key))
            acc[k] = acc.get(k, 0) + w
        total = sum(acc.values())
        if total <= 0:
            raise ValueError("weights must have positive total")
        return cls(tuple(sorted(ground)), {k: w / total for k, w in acc.items() if w != 0})

    def __post_init__(self):
        gset = set(self.ground)
        for key, p in self.probs.items():
            if not set(key) <= gset:
                raise ValueError(f"subset {key} not inside the ground set")
            if p < -1e-9:
                raise ValueError(f"negative probability {p} for {key}")

    def __call__(self, subset: Iterable[int]) -> float | Fraction:
        return self.probs.get(tuple(sorted(subset)), 0)

    @property
    def total(self) -> float | Fraction:
        return sum(self.probs.values())

    def support(self) -> list[Subset]:
        return sorted(k for k, p in self.probs.items() if p > 0)

    def marginal(self, window: Iterable[int]) -> "SubsetLaw":
        """Law of ``X & window``."""
        w = set(window)
        if not w <= set(self.ground):
            raise ValueError("window must lie inside the ground set")
        acc: dict[Subset, float | Fraction] = {}
        for key, p in self.probs.items():
            k = tuple(v for v in key if v in w)
            acc[k] = acc.get(k, 0) + p
        return SubsetLaw(tuple(sorted(w)), acc)

    def inclusion(self, subset: Iterable[int]) -> float | Fraction:
        """P(subset is contained in X)."""
        f = set(subset)
        return sum((p for key, p in self.probs.items() if f <= set(key)), 0)

    def complement(self) -> "SubsetLaw":
        g = set(self.ground)
        return SubsetLaw(self.ground, {tuple(sorted(g - set(k))): p for k, p in self.probs.items()})

    def map(self, fn) -> "SubsetLaw":
        """Push forward along ``fn: subset -> subset`` (ground unchanged)."""
        acc: dict[Subset, float | Fraction] = {}
        for key, p in self.probs.items():
            k = tuple(sorted(fn(key)))
            acc[k] = acc.get(k, 0) + p
        return SubsetLaw(self.ground, acc)

    def relabel(self, ids: tuple[int, ...], ground: Iterable[int] | None = None) -> "SubsetLaw":
        """Rename local vertex ``i`` to ``ids[i]``."""
        g = tuple(sorted(ids[i] for i in self.ground)) if ground is None else tuple(sorted(ground))
        return SubsetLaw(g, {tuple(sorted(ids[v] for v in k)): p for k, p in self.probs.items()})

    def as_float(self) -> "SubsetLaw":
        return SubsetLaw(self.ground, {k: float(p) for k, p in self.probs.items()})

    def to_dict(self) -> dict:
        return {
            "ground": list(self.ground),
            "law": [[list(k), float(p)] for k, p in sorted(self.probs.items()) if p != 0],
        }


def product_law(a: SubsetLaw, b: SubsetLaw) -> SubsetLaw:
    """Law of the union of independent draws on disjoint ground sets."""
    if set(a.ground) & set(b.ground):
        raise ValueError("ground sets must be disjoint")
    out = {}
    for ka, pa in a.probs.items():
        for kb, pb in b.probs.items():
            k = tuple(sorted(ka + kb))
            out[k] = out.get(k, 0) + pa * pb
    return SubsetLaw(tuple(sorted(a.ground + b.ground)), out)


def tv_distance(law1: SubsetLaw, law2: SubsetLaw) -> float:
    if set(law1.ground) != set(law2.ground):
        raise ValueError("total variation needs laws on the same ground set")
    keys = set(law1.probs) | set(law2.probs)
    return 0.5 * sum(abs(float(law1.probs.get(k, 0)) - float(law2.probs.get(k, 0))) for k in keys)


def max_deviation(law1: SubsetLaw, law2: SubsetLaw) -> float:
    """Largest pointwise probability gap over the union of supports."""
    if set(law1.ground) != set(law2.ground):
        raise ValueError("laws live on different ground sets")
    keys = set(law1.probs) | set(law2.probs)
    return max((abs(float(law1.probs.get(k, 0)) - float(law2.probs.get(k, 0))) for k in keys), default=0.0)


def entropy_exact(law: SubsetLaw) -> float:
    """Shannon entropy in nats, with 0 log 0 = 0."""
    h = 0.0
    for p in law.probs.values():
        p = float(p)
        if p > 0:
            h -= p * math.log(p)
    return h


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log(p) - (1 - p) * math.log1p(-p)
