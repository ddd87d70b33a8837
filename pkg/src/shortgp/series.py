"""Observed time-series data and observation-noise descriptions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["TimeSeries", "NoiseModel"]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Ordered (time, value) observations with optional per-point noise variances.

    ``times`` must be strictly increasing; use :meth:`from_unordered` to
    canonicalize jointly-permuted data.  ``noise_variances``, when present,
    holds one non-negative observation-noise variance per point and enables
    fixed-noise fitting.
    """

    times: np.ndarray
    values: np.ndarray
    noise_variances: np.ndarray | None = None
    id: str = ""

    def __post_init__(self) -> None:
        times = _readonly(np.atleast_1d(self.times))
        values = _readonly(np.atleast_1d(self.values))
        if times.ndim != 1 or values.ndim != 1:
            raise ValueError("times and values must be one-dimensional")
        if times.shape != values.shape:
            raise ValueError(
                f"times ({times.shape[0]}) and values ({values.shape[0]}) "
                "must have equal length"
            )
        if times.shape[0] < 1:
            raise ValueError("a series needs at least one observation")
        if not np.all(np.isfinite(times)) or not np.all(np.isfinite(values)):
            raise ValueError("times and values must be finite")
        gaps = np.diff(times)
        if np.any(gaps == 0.0):
            raise ValueError("duplicate observation times are not allowed")
        if np.any(gaps < 0.0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if self.noise_variances is not None:
            nv = _readonly(np.atleast_1d(self.noise_variances))
            if nv.shape != times.shape:
                raise ValueError("noise_variances must match times in length")
            if not np.all(np.isfinite(nv)) or np.any(nv < 0.0):
                raise ValueError("noise_variances must be finite and >= 0")
            object.__setattr__(self, "noise_variances", nv)

    @classmethod
    def from_unordered(
        cls,
        times,
        values,
        noise_variances=None,
        id: str = "",
    ) -> "TimeSeries":
        """Build a series from jointly-permuted (time, value) pairs."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        order = np.argsort(times, kind="stable")
        values = np.atleast_1d(np.asarray(values, dtype=float))[order]
        nv = None
        if noise_variances is not None:
            nv = np.atleast_1d(np.asarray(noise_variances, dtype=float))[order]
        return cls(times[order], values, nv, id)

    def __len__(self) -> int:
        return int(self.times.shape[0])

    @property
    def span(self) -> float:
        """Observation window length t_last - t_first."""
        return float(self.times[-1] - self.times[0])


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """Observation-noise description: a single estimated variance or fixed
    per-point variances (e.g. carried over from upstream preprocessing)."""

    kind: str  # "estimated" | "fixed"
    variance: float | None = None
    variances: np.ndarray | None = field(default=None)

    def __post_init__(self) -> None:
        if self.kind == "estimated":
            if self.variance is None or not self.variance > 0.0:
                raise ValueError("estimated noise variance must be > 0")
        elif self.kind == "fixed":
            if self.variances is None:
                raise ValueError("fixed noise needs per-point variances")
            nv = _readonly(np.atleast_1d(self.variances))
            if not np.all(np.isfinite(nv)) or np.any(nv < 0.0):
                raise ValueError("fixed noise variances must be finite and >= 0")
            object.__setattr__(self, "variances", nv)
        else:
            raise ValueError(f"unknown noise kind {self.kind!r}")

    @classmethod
    def estimated(cls, variance: float) -> "NoiseModel":
        return cls(kind="estimated", variance=float(variance))

    @classmethod
    def fixed(cls, variances) -> "NoiseModel":
        return cls(kind="fixed", variances=np.asarray(variances, dtype=float))

    @property
    def is_estimated(self) -> bool:
        return self.kind == "estimated"

    def diagonal(self, n: int) -> np.ndarray:
        """Noise variances as a length-n diagonal."""
        if self.kind == "estimated":
            return np.full(n, float(self.variance))
        if self.variances.shape[0] != n:
            raise ValueError(
                f"fixed noise has {self.variances.shape[0]} variances "
                f"but the series has {n} points"
            )
        return np.array(self.variances, copy=True)
