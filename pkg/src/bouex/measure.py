"""Point measures and centring schemes.

A PointMeasure is the universal carrier for every extremal object in the
package: a finite multiset of real atom positions kept in ascending order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gaussian import SQRT2

_SCHEMES = ("bbm_threehalves", "bou_onehalf", "bou_tilde")
_ALIASES = {"bbm": "bbm_threehalves", "bou": "bou_onehalf", "tilde": "bou_tilde"}


class PointMeasure:
    """Finite multiset of atom positions, ascending-sorted."""

    __slots__ = ("atoms",)

    def __init__(self, atoms=()):
        arr = np.sort(np.asarray(atoms, dtype=float).ravel())
        if arr.size and not np.all(np.isfinite(arr)):
            raise ValueError("atoms must be finite")
        self.atoms = arr

    def __len__(self):
        return int(self.atoms.size)

    def __iter__(self):
        return iter(self.atoms)

    def __eq__(self, other):
        return isinstance(other, PointMeasure) and np.array_equal(self.atoms, other.atoms)

    def __repr__(self):
        return f"PointMeasure({self.atoms.tolist()!r})"

    @property
    def max(self) -> float:
        """Largest atom; -inf for the empty measure."""
        return float(self.atoms[-1]) if self.atoms.size else -math.inf

    def count_above(self, a: float) -> int:
        """Number of atoms >= a."""
        return int(self.atoms.size - np.searchsorted(self.atoms, a, side="left"))

    def count_strictly_above(self, a: float) -> int:
        return int(self.atoms.size - np.searchsorted(self.atoms, a, side="right"))

    def shifted(self, c: float) -> "PointMeasure":
        return PointMeasure(self.atoms + c)


def max_and_counts(measure: PointMeasure, z: float):
    """(max atom, number of atoms >= z); max is -inf when empty."""
    return measure.max, measure.count_above(z)


@dataclass(frozen=True)
class Centering:
    """Centring function evaluated at horizon t.

    bbm_threehalves: sqrt(2) t - 3/(2 sqrt(2)) log t
    bou_onehalf:     sqrt(2) t - 1/(2 sqrt(2)) log t
    bou_tilde:       sqrt(2) t - 1/(2 sqrt(2)) log(4 pi t)
    """

    scheme: str
    t: float

    def __post_init__(self):
        scheme = _ALIASES.get(self.scheme, self.scheme)
        if scheme not in _SCHEMES:
            raise ValueError(f"unknown centering scheme {self.scheme!r}")
        object.__setattr__(self, "scheme", scheme)
        if not self.t > 0:
            raise ValueError("t must be positive")

    @property
    def value(self) -> float:
        if self.scheme == "bbm_threehalves":
            return SQRT2 * self.t - 3.0 / (2.0 * SQRT2) * math.log(self.t)
        if self.scheme == "bou_onehalf":
            return SQRT2 * self.t - 1.0 / (2.0 * SQRT2) * math.log(self.t)
        return SQRT2 * self.t - 1.0 / (2.0 * SQRT2) * math.log(4.0 * math.pi * self.t)
