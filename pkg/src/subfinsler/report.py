"""Per-point residual records and their aggregates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def fmt(x: float) -> str:
    """17 significant digits: enough to round-trip a double."""
    return f"{float(x):.17g}"


@dataclass
class ResidualReport:
    suite: str
    points: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    abs_res: np.ndarray
    rel_res: np.ndarray
    tolerance: float
    excluded_count: int = 0
    notes: dict = field(default_factory=dict)

    @classmethod
    def from_values(cls, suite, points, lhs, rhs, tolerance, scale=None, excluded_count=0, **notes):
        lhs = np.atleast_1d(np.asarray(lhs, dtype=float))
        rhs = np.broadcast_to(np.asarray(rhs, dtype=float), lhs.shape).copy()
        abs_res = np.abs(lhs - rhs)
        if scale is None:
            scale = np.maximum(1.0, np.abs(rhs))
        rel_res = abs_res / np.broadcast_to(np.asarray(scale, dtype=float), lhs.shape)
        pts = np.asarray(points, dtype=float).reshape(lhs.shape[0], -1)
        return cls(suite, pts, lhs, rhs, abs_res, rel_res, float(tolerance), int(excluded_count), dict(notes))

    @property
    def count(self) -> int:
        return int(self.lhs.shape[0])

    @property
    def max_rel(self) -> float:
        return float(np.max(self.rel_res)) if self.count else 0.0

    @property
    def mean_rel(self) -> float:
        return float(np.mean(self.rel_res)) if self.count else 0.0

    @property
    def passed(self) -> bool:
        return bool(np.all(np.isfinite(self.rel_res))) and self.max_rel <= self.tolerance

    def summary(self) -> dict:
        out = {
            "suite": self.suite,
            "count": self.count,
            "excluded_count": self.excluded_count,
            "max_rel": fmt(self.max_rel),
            "mean_rel": fmt(self.mean_rel),
            "tolerance": fmt(self.tolerance),
            "pass": self.passed,
        }
        if self.notes:
            out["notes"] = {k: (fmt(v) if isinstance(v, float) else v) for k, v in self.notes.items()}
        return out

    def csv_header(self) -> list[str]:
        return ["suite"] + [f"x{i}" for i in range(self.points.shape[1])] + ["lhs", "rhs", "abs_res", "rel_res"]

    def csv_rows(self):
        for i in range(self.count):
            yield [self.suite] + [fmt(v) for v in self.points[i]] + [
                fmt(self.lhs[i]),
                fmt(self.rhs[i]),
                fmt(self.abs_res[i]),
                fmt(self.rel_res[i]),
            ]

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status} {self.suite}: max_rel={self.max_rel:.3e} mean_rel={self.mean_rel:.3e} "
            f"tol={self.tolerance:.1e} n={self.count} excluded={self.excluded_count}"
        )
