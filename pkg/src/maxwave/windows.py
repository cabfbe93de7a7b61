"""Compactly supported frequency windows and the adapted time cutoff.

The one dimensional profile is built so that a shifted sum of its squares
telescopes to one exactly.  Start from a nonnegative bump g supported in
[-kappa/8, kappa/8], form the mollifier m = g * g (autocorrelation), and
let M be its CDF, normalised so M(+inf) = 1.  Then

    G(v) = M(v + 3 kappa/4) - M(v - 3 kappa/4)

takes values in [0, 1], equals 1 on [-kappa/2, kappa/2], vanishes outside
[-kappa, kappa], and for the pitch step = 3 kappa/2 the shifted sum

    sum_k G(v - k step) = sum_k [M(v + step/2 - k step) - M(v - step/2 - k step)]

telescopes to M(+inf) - M(-inf) = 1 for every v, no matter how M was
tabulated.  The window itself is phi_hat = sqrt(G); its square partitions
unity on the shifted lattice, which is exactly what the tight-frame
algebra in `packets` needs.  Smoothness of the numerical profile is set by
the tabulation density of M, which only affects how fast the spatial
profile decays, never the partition identity.

The time cutoff reuses the kappa = 1 profile on the Fourier side:
psi0(u) = (2 pi)^-1 int G_1(tau) e^{i u tau} d tau has transform supported
in [-1, 1], and psi(t) = psi0(t - 1/2) / (2 psi0(1/2)) satisfies
2 psi >= 1 on [0, 1] (checked numerically in the tests).  Modulating a
time signal by psi(t/R) therefore confines its time frequencies to a
4/R-neighbourhood of where they started, at the price of superpolynomial
but not compactly supported time tails.
"""

from __future__ import annotations

import functools
import math

import numpy as np
from scipy.integrate import cumulative_trapezoid, simpson
from scipy.interpolate import CubicSpline

__all__ = ["WindowProfile", "TimeCutoff", "window_profile", "time_cutoff"]

_TABLE_POINTS = 4097  # per autocorrelation half; sets the C^2 interp floor


def _bump(u: np.ndarray, radius: float) -> np.ndarray:
    """exp(-1/(1 - (u/radius)^2)) on |u| < radius, zero outside."""
    out = np.zeros_like(u, dtype=float)
    inside = np.abs(u) < radius
    w = (u[inside] / radius) ** 2
    out[inside] = np.exp(-1.0 / (1.0 - w))
    return out


class WindowProfile:
    """The 1-d frequency window phi_hat at a fixed kappa.

    Callable on arrays.  `squared` is the partition piece G; `cdf` is the
    tabulated mollifier CDF, exposed so that the partition identity can be
    exercised directly.
    """

    def __init__(self, kappa: float = 0.125, table_points: int = _TABLE_POINTS):
        if kappa <= 0:
            raise ValueError("kappa must be positive")
        self.kappa = float(kappa)
        self.pitch = 1.5 * self.kappa
        self.plateau_radius = 0.5 * self.kappa
        self.support_radius = self.kappa
        r = self.kappa / 8.0
        u = np.linspace(-r, r, table_points)
        g = _bump(u, r)
        h = u[1] - u[0]
        m = np.convolve(g, g) * h  # supported on [-kappa/4, kappa/4]
        v = np.linspace(-2 * r, 2 * r, m.size)
        cdf = np.concatenate([[0.0], cumulative_trapezoid(m, v)])
        cdf /= cdf[-1]
        self._cdf_lo, self._cdf_hi = v[0], v[-1]
        self._cdf = CubicSpline(v, cdf)

    def cdf(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        out = np.clip(self._cdf(np.clip(v, self._cdf_lo, self._cdf_hi)), 0.0, 1.0)
        return np.where(v <= self._cdf_lo, 0.0, np.where(v >= self._cdf_hi, 1.0, out))

    def squared(self, v: np.ndarray) -> np.ndarray:
        half = 0.5 * self.pitch
        return self.cdf(np.asarray(v) + half) - self.cdf(np.asarray(v) - half)

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return np.sqrt(np.clip(self.squared(v), 0.0, None))

    def partition_residual(self, v: np.ndarray) -> float:
        """max |sum_k squared(v - k pitch) - 1| over the given points."""
        v = np.asarray(v, dtype=float)
        lo = math.floor((v.min() - self.support_radius) / self.pitch)
        hi = math.ceil((v.max() + self.support_radius) / self.pitch)
        total = np.zeros_like(v)
        for k in range(lo, hi + 1):
            total += self.squared(v - k * self.pitch)
        return float(np.abs(total - 1.0).max())


@functools.lru_cache(maxsize=8)
def window_profile(kappa: float = 0.125) -> WindowProfile:
    return WindowProfile(kappa)


class TimeCutoff:
    """psi(t) = psi0(t - 1/2) / (2 psi0(1/2)) with time-frequency support [-1, 1].

    psi0 is computed by direct cosine quadrature of the kappa = 1 partition
    piece G_1 and tabulated on |u| <= `reach`; beyond the table psi is
    clamped to zero, and `tail_bound` records the largest |psi0| seen over
    the outer 10% of the table so callers can budget for the clamp.
    """

    def __init__(self, reach: float = 48.0, table_points: int = 12289):
        profile = window_profile(1.0)
        tau = np.linspace(0.0, 1.0, 4097)
        g = profile.squared(tau)
        u = np.linspace(-reach, reach, table_points)
        # psi0(u) = (1/pi) int_0^1 G_1(tau) cos(u tau) dtau  (G_1 is even)
        vals = simpson(g[None, :] * np.cos(np.outer(u, tau)), x=tau, axis=1) / math.pi
        self.reach = float(reach)
        self._psi0 = CubicSpline(u, vals)
        self.psi0_half = float(self._psi0(0.5))
        outer = np.abs(u) >= 0.9 * reach
        self.tail_bound = float(np.abs(vals[outer]).max()) / (2 * self.psi0_half)

    def psi0(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return np.where(np.abs(u) <= self.reach, self._psi0(np.clip(u, -self.reach, self.reach)), 0.0)

    def __call__(self, t: np.ndarray) -> np.ndarray:
        return self.psi0(np.asarray(t, dtype=float) - 0.5) / (2.0 * self.psi0_half)


@functools.lru_cache(maxsize=2)
def time_cutoff() -> TimeCutoff:
    return TimeCutoff()
