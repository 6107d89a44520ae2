"""Change-point records shared by both detection stages."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ChangePoint:
    """A detected change location with its detection metadata."""

    location: int
    bandwidth: int
    stat: float
    stage: str  # "factor" or "var"

    def to_record(self) -> dict:
        return {
            "location": self.location,
            "G": self.bandwidth,
            "stat": self.stat,
        }


def sort_points(points) -> list[ChangePoint]:
    return sorted(points, key=lambda cp: (cp.location, cp.bandwidth))


def check_spacing(points, G: int) -> None:
    """Assert the within-scan invariant: consecutive locations >= G apart."""
    locs = [cp.location for cp in sort_points(points)]
    for a, b in zip(locs, locs[1:]):
        if b - a < G:
            raise AssertionError(f"locations {a} and {b} closer than G={G}")
