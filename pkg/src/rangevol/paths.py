"""Discretized canonical Brownian paths and their extreme-value statistics.

A canonical path is the unit-window, unit-variance reduction of a GBM
log-price: ``x_n = gamma * n/N + (1/sqrt(N)) * sum_{k<=n} eps_k`` with iid
standard normal shocks ``eps_k`` and dimensionless drift ``gamma``.  All
range-based volatility estimators consume only the high, low and close of
such a path, plus the high and low of its bridge (the path minus the linear
interpolant between its endpoints, which removes any drift exactly).

Randomness comes from numpy's Philox counter-based bit generator (normal
variates via numpy's ziggurat); streams are keyed by ``(seed, counter)`` so
that path generation is reproducible regardless of scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Path",
    "Extremes",
    "BridgeExtremes",
    "PhysicalBar",
    "simulate_path",
    "bridge_transform",
    "extremes",
    "bridge_extremes",
    "bar_from_samples",
]


@dataclass
class Path:
    """A discretized path: N+1 values on the uniform grid n/N, starting at 0."""

    values: np.ndarray
    n_steps: int
    gamma: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if self.values.ndim != 1 or self.values.shape[0] != self.n_steps + 1:
            raise ValueError(
                f"values must hold n_steps+1 = {self.n_steps + 1} entries, "
                f"got shape {self.values.shape}"
            )
        if self.values[0] != 0.0:
            raise ValueError("values[0] must be 0")


@dataclass(frozen=True)
class Extremes:
    """High, low and close of a path started at 0."""

    high: float
    low: float
    close: float

    def __post_init__(self):
        if not (self.low <= 0.0 <= self.high):
            raise ValueError(f"need low <= 0 <= high, got ({self.low}, {self.high})")
        if not (self.low <= self.close <= self.high):
            raise ValueError("close must lie within [low, high]")


@dataclass(frozen=True)
class BridgeExtremes:
    """High and low of a bridge (a path pinned to 0 at both ends)."""

    xi: float
    zeta: float

    def __post_init__(self):
        if not (self.zeta <= 0.0 <= self.xi):
            raise ValueError(f"need zeta <= 0 <= xi, got ({self.zeta}, {self.xi})")


@dataclass(frozen=True)
class PhysicalBar:
    """High/low/close of the log-price increment over a window of length T.

    All three are increments relative to the log-price at the window start,
    so ``low <= 0 <= high`` always holds.
    """

    high: float
    low: float
    close: float
    horizon: float

    def __post_init__(self):
        if not (self.low <= 0.0 <= self.high):
            raise ValueError("need low <= 0 <= high")
        if not (self.low <= self.close <= self.high):
            raise ValueError("close must lie within [low, high]")
        if not self.horizon > 0.0:
            raise ValueError("horizon must be positive")


def _generator(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


def simulate_path(n_steps: int, gamma: float, seed, shocks=None) -> Path:
    """Simulate one canonical path on the grid n/N, n = 0..N.

    Parameters
    ----------
    n_steps : int
        Number of increments N (>= 1).
    gamma : float
        Dimensionless drift of the canonical path.
    seed : int or sequence of int
        Philox key.  The same seed always yields the bit-identical path,
        independent of thread count or call order.
    shocks : array-like, optional
        Test hook: a fixed eps-sequence of length ``n_steps`` used instead
        of drawing from the RNG.

    Returns
    -------
    Path
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if shocks is not None:
        eps = np.asarray(shocks, dtype=float)
        if eps.shape != (n_steps,):
            raise ValueError(f"shocks must have shape ({n_steps},)")
    else:
        eps = _generator(seed).standard_normal(n_steps)
    values = np.empty(n_steps + 1)
    values[0] = 0.0
    np.cumsum(eps, out=values[1:])
    values[1:] /= math.sqrt(n_steps)
    if gamma != 0.0:
        values += gamma * (np.arange(n_steps + 1) / n_steps)
    return Path(values=values, n_steps=n_steps, gamma=gamma)


def bridge_transform(path: Path) -> Path:
    """Subtract the linear interpolant between the endpoints.

    The result starts and ends at exactly 0 and is invariant under adding
    any linear ramp to the input, which is what makes bridge statistics
    drift-free.
    """
    n = path.n_steps
    tau = np.arange(n + 1) / n
    z = path.values - tau * path.values[-1]
    return Path(values=z, n_steps=n, gamma=0.0)


def extremes(path: Path) -> Extremes:
    """High, low and close of the path."""
    v = path.values
    return Extremes(high=float(v.max()), low=float(v.min()), close=float(v[-1]))


def bridge_extremes(path: Path) -> BridgeExtremes:
    """High and low of the path's bridge."""
    z = bridge_transform(path).values
    return BridgeExtremes(xi=float(z.max()), zeta=float(z.min()))


def bar_from_samples(ticks, window, log_input: bool = False):
    """Build a PhysicalBar plus bridge extremes from sampled (time, price) ticks.

    Parameters
    ----------
    ticks : array-like of shape (n, 2)
        Rows of (timestamp, price).  Timestamps must be non-decreasing.
    window : (t0, t1)
        Only ticks with t0 <= t <= t1 are used; both edges are inclusive so
        a boundary tick can serve as the close of one window and the open
        of the next.
    log_input : bool
        When true the price column already holds log-prices; otherwise
        prices must be positive and are log-transformed.

    Returns
    -------
    (PhysicalBar, BridgeExtremes)
        Log-price increments relative to the first tick in the window, and
        the extremes of those increments after removing the linear
        interpolant between the first and last in-window tick.
    """
    arr = np.asarray(ticks, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("ticks must be a sequence of (time, price) pairs")
    t, p = arr[:, 0], arr[:, 1]
    if np.any(np.diff(t) < 0):
        raise ValueError("tick timestamps must be non-decreasing")
    t0, t1 = window
    if not t1 > t0:
        raise ValueError("window must satisfy t1 > t0")
    mask = (t >= t0) & (t <= t1)
    if mask.sum() < 2:
        raise ValueError("need at least 2 ticks inside the window")
    tw = t[mask]
    pw = p[mask]
    if log_input:
        logp = pw
    else:
        if np.any(pw <= 0.0):
            raise ValueError("prices must be positive unless log_input is set")
        logp = np.log(pw)
    y = logp - logp[0]
    span = tw[-1] - tw[0]
    if span <= 0.0:
        raise ValueError("window ticks must span a positive time interval")
    bar = PhysicalBar(
        high=float(y.max()), low=float(y.min()), close=float(y[-1]), horizon=t1 - t0
    )
    z = y - ((tw - tw[0]) / span) * y[-1]
    return bar, BridgeExtremes(xi=float(z.max()), zeta=float(z.min()))
