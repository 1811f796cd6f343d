"""Marked moduli spaces of stable curves, genus at most two."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import SpaceError

MAX_GENUS = 2


@dataclass(frozen=True)
class MarkedSpace:
    """The moduli space of stable genus-``genus`` curves with ordered markings.

    Markings are distinct label strings; the space must itself be stable,
    i.e. 2g - 2 + n > 0.
    """

    genus: int
    markings: tuple[str, ...]

    def __post_init__(self):
        if not 0 <= self.genus <= MAX_GENUS:
            raise SpaceError(f"genus {self.genus} outside supported range 0..{MAX_GENUS}")
        if len(set(self.markings)) != len(self.markings):
            raise SpaceError(f"marking labels must be distinct: {self.markings}")
        for label in self.markings:
            if not label or not isinstance(label, str):
                raise SpaceError(f"bad marking label {label!r}")
        if 2 * self.genus - 2 + len(self.markings) <= 0:
            raise SpaceError(
                f"unstable space: genus {self.genus} with {len(self.markings)} markings"
            )

    @property
    def n(self) -> int:
        return len(self.markings)

    def dimension(self) -> int:
        return 3 * self.genus - 3 + self.n

    def require_label(self, label: str) -> None:
        if label not in self.markings:
            raise SpaceError(f"label {label!r} not among markings {self.markings}")

    def forget(self, label: str) -> "MarkedSpace":
        """The space with one marking dropped (must stay stable)."""
        self.require_label(label)
        rest = tuple(m for m in self.markings if m != label)
        if 2 * self.genus - 2 + len(rest) <= 0:
            raise SpaceError(f"forgetting {label!r} leaves an unstable space")
        return MarkedSpace(self.genus, rest)

    def add(self, label: str) -> "MarkedSpace":
        """The space with one fresh marking appended."""
        if label in self.markings:
            raise SpaceError(f"label {label!r} already present")
        return MarkedSpace(self.genus, self.markings + (label,))


def space(genus: int, markings: Iterable[str] = ()) -> MarkedSpace:
    return MarkedSpace(genus, tuple(markings))


def dimension(sp: MarkedSpace) -> int:
    """dim = 3g - 3 + n."""
    return sp.dimension()
