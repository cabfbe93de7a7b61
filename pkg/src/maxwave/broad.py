"""Frequency caps, exclusion lines, and cell-broad norms.

A field with frequency support in a ball of radius 1/M is split into caps
of radius 1/(K M) carrying a smooth partition of unity.  Space-time is
tiled by K-cells (spatial K-squares inside the R-disk crossed with K-long
time intervals).  Per cell, the broad quantity excludes every cap whose
normal direction hugs one of A chosen lines, then takes the largest
remaining single-cap p-mass; the minimum runs over A-tuples drawn from a
finite candidate family (all cap-center directions plus the vertical).
Cells aggregate through weighted l^q sums, one l^q per spatial square over
its time intervals, then a plain sum over squares.

Evaluation runs on a coarse lattice with K/4 spacing in each axis and in
time, so every cell holds a fixed 4 x 4 x 4 block of quadrature nodes.
Each cap field is demodulated by the grid frequency nearest its center,
which turns its evolution into a small FFT whose samples land exactly on
those nodes; the minimum over A-tuples is computed exactly (within the
candidate family) by a longest-coverable-prefix search over caps ranked
by their cell mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft

from .gridfield import GridField

__all__ = [
    "BroadParams",
    "Cap",
    "CapFamily",
    "BroadData",
    "bl_norm",
    "bl_norm_inf",
    "bl_report",
    "broad_data",
    "broad_vs_full_decomposition",
    "cap_in_subspace",
    "caps",
    "cell_weights",
    "check_a_split",
    "check_holder",
    "check_subadditivity",
    "decomposition_certificate",
    "direction",
    "make_ball_random",
    "mu_cell",
    "region_ball_star",
]


def direction(xi) -> np.ndarray:
    """Unit normal (-2 xi, 1)/|(-2 xi, 1)| of the paraboloid; xi shape (..., 2)."""
    xi = np.asarray(xi, dtype=float)
    v = np.concatenate([-2.0 * xi, np.ones(xi.shape[:-1] + (1,))], axis=-1)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def make_ball_random(R: int, seed: int, center=(0.0, 0.0), inv_m: float = 1.0) -> GridField:
    """Random unit-L2 field with frequency support strictly inside B(center, 1/M).

    Complex Gaussian mode weights shaped by a smooth bump envelope, so the
    support constraint the cap machinery assumes holds exactly.
    """
    n = 4 * R
    half_side = 2.0 * R
    rng = np.random.default_rng(seed)
    m = np.fft.fftshift(np.fft.fftfreq(n, d=1.0 / n)).astype(int)
    xi = m * (math.pi / half_side)
    d2 = (xi[:, None] - center[0]) ** 2 + (xi[None, :] - center[1]) ** 2
    s2 = d2 / inv_m**2
    env = np.zeros_like(d2)
    inside = s2 < 1.0
    env[inside] = np.exp(-1.0 / (1.0 - s2[inside]))
    c = env * (rng.standard_normal(env.shape) + 1j * rng.standard_normal(env.shape))
    norm = 2.0 * half_side * np.linalg.norm(c)
    c /= norm
    return GridField.from_coefficients(np.fft.ifftshift(c), half_side)


@dataclass(frozen=True)
class BroadParams:
    """Caps/cells geometry and exponents; the broadness order k is fixed at 2."""

    A: int = 2
    K: int = 8
    M: float = 1.0
    p: float = 3.2
    q: float = 4.0
    xi0: tuple[float, float] = (0.0, 0.0)
    sharp_caps: bool = False

    k = 2

    def __post_init__(self):
        if self.K < 2 or int(self.K) != self.K:
            raise ValueError("K must be an integer >= 2")
        if self.M < 1.0:
            raise ValueError("M must be >= 1")
        if self.A < 0 or int(self.A) != self.A:
            raise ValueError("A must be a nonnegative integer")
        if not self.q > 1.0:
            raise ValueError("q must exceed 1")
        if self.p < 1.0:
            raise ValueError("p must be >= 1")

    @property
    def cap_radius(self) -> float:
        return 1.0 / (self.K * self.M)

    @property
    def angle_threshold(self) -> float:
        return 1.0 / (self.K * self.M)


@dataclass(frozen=True)
class Cap:
    center: tuple[float, float]
    radius: float
    angular_radius: float


def _cap_angular_radius(center, radius: float) -> float:
    """Largest angle between the center direction and any boundary direction."""
    phi = np.linspace(0.0, 2.0 * math.pi, 33)
    ring = np.stack(
        [center[0] + radius * np.cos(phi), center[1] + radius * np.sin(phi)], axis=-1
    )
    g0 = direction(np.asarray(center))
    gs = direction(ring)
    dots = np.clip(np.abs(gs @ g0), -1.0, 1.0)
    return float(np.arccos(dots).max())


class CapFamily:
    """Caps of radius 1/(K M) on a square lattice covering B(xi0, 1/M).

    Lattice pitch equals the cap radius; a center is kept when its cap can
    meet the support ball, i.e. |c - xi0| < 1/M + radius strictly.  Smooth
    partition weights are the normalized bumps b(|xi - c|/radius); sharp
    mode assigns each frequency to its nearest center instead.
    """

    def __init__(self, xi0=(0.0, 0.0), M: float = 1.0, K: int = 8, sharp: bool = False):
        self.xi0 = (float(xi0[0]), float(xi0[1]))
        self.M = float(M)
        self.K = int(K)
        self.sharp = bool(sharp)
        self.radius = 1.0 / (self.K * self.M)
        reach = 1.0 / self.M + self.radius
        m = int(math.ceil(reach / self.radius))
        axis = self.radius * np.arange(-m, m + 1)
        c1, c2 = np.meshgrid(axis + self.xi0[0], axis + self.xi0[1], indexing="ij")
        centers = np.column_stack([c1.ravel(), c2.ravel()])
        d = np.hypot(centers[:, 0] - self.xi0[0], centers[:, 1] - self.xi0[1])
        self.centers = centers[d < reach]
        self.angular_radii = np.array(
            [_cap_angular_radius(c, self.radius) for c in self.centers]
        )
        self._weights_cache: dict = {}

    def __len__(self) -> int:
        return len(self.centers)

    def __iter__(self):
        for c, a in zip(self.centers, self.angular_radii):
            yield Cap((float(c[0]), float(c[1])), self.radius, float(a))

    def __getitem__(self, i) -> Cap:
        c = self.centers[i]
        return Cap((float(c[0]), float(c[1])), self.radius, float(self.angular_radii[i]))

    def directions(self) -> np.ndarray:
        return direction(self.centers)

    def weights(self, n: int, half_side: float) -> np.ndarray:
        """Partition weights on the fftshifted mode lattice, shape (caps, n, n).

        Weights are supported where the bump is positive (inside each cap)
        and sum to one over the family wherever any bump is positive, which
        covers the whole support ball.
        """
        key = (n, half_side)
        if key in self._weights_cache:
            return self._weights_cache[key]
        m = np.fft.fftshift(np.fft.fftfreq(n, d=1.0 / n)).astype(int)
        xi = m * (math.pi / half_side)
        X1 = xi[:, None]
        X2 = xi[None, :]
        w = np.zeros((len(self.centers), n, n))
        if self.sharp:
            d2 = (
                (X1[None] - self.centers[:, 0, None, None]) ** 2
                + (X2[None] - self.centers[:, 1, None, None]) ** 2
            )
            nearest = np.argmin(d2, axis=0)
            covered = d2.min(axis=0) < self.radius**2
            for i in range(len(self.centers)):
                w[i] = (nearest == i) & covered
        else:
            for i, c in enumerate(self.centers):
                s2 = ((X1 - c[0]) ** 2 + (X2 - c[1]) ** 2) / self.radius**2
                inside = s2 < 1.0
                w[i][inside] = np.exp(-1.0 / (1.0 - s2[inside]))
            den = w.sum(axis=0)
            pos = den > 0.0
            w[:, pos] /= den[pos]
        self._weights_cache[key] = w
        return w

    def split(self, field: GridField) -> list[GridField]:
        """Cap pieces f_tau as grid fields; they sum to f exactly on its support."""
        w = self.weights(field.n, field.half_side)
        cs = np.fft.fftshift(field.coefficients())
        out = []
        for i in range(len(self)):
            out.append(
                GridField.from_coefficients(np.fft.ifftshift(cs * w[i]), field.half_side)
            )
        return out


def caps(xi0, M: float, K: int, sharp: bool = False) -> CapFamily:
    return CapFamily(xi0, M, K, sharp)


def cap_in_subspace(tau: Cap, line, K: int, M: float) -> bool:
    """True when the cap's direction set comes within 1/(K M) of the line.

    The angle to the set is bounded by the angle to the center direction
    minus the cap's angular radius, so the test pads the threshold by it.
    """
    v = np.asarray(line, dtype=float)
    v = v / np.linalg.norm(v)
    g = direction(np.asarray(tau.center))
    ang = math.acos(min(1.0, abs(float(g @ v))))
    return ang <= 1.0 / (K * M) + tau.angular_radius


# ---------------------------------------------------------------- cells


class CellLattice:
    """K-cell tiling: spatial squares with centers in the R-disk, K-long
    time intervals, and the aligned coarse quadrature lattice (4 nodes per
    axis per cell, weight (K/4)^3 each)."""

    def __init__(self, R: int, K: int):
        if (2 * R) % K or R % K or (16 * R) % K:
            raise ValueError("K must divide R with room for the coarse lattice")
        self.R = int(R)
        self.K = int(K)
        self.n_side = 2 * R // K
        self.n_time = R // K
        self.h = K / 4.0
        self.dt = K / 4.0
        self.m_big = (16 * R) // K  # full-period coarse FFT size
        self.m_win = self.m_big // 2  # samples inside [-R, R)
        centers = -R + K * (np.arange(self.n_side) + 0.5)
        inside = (centers[:, None] ** 2 + centers[None, :] ** 2) <= R**2
        self.ball_centers = centers
        self.inside = inside
        self.ball_index = np.argwhere(inside)
        self.n_balls = len(self.ball_index)
        self.n_cells = self.n_balls * self.n_time

    def sample_axes(self):
        """Coarse window coordinates and times: x in [-R, R), t in [0, R)."""
        x = -self.R + self.h * np.arange(self.m_win)
        t = self.dt * np.arange(4 * self.n_time)
        return x, t

    def quadrature_weight(self) -> float:
        return self.h * self.h * self.dt

    def bin_to_cells(self, vals: np.ndarray) -> np.ndarray:
        """Sum (n_t, m_win, m_win) sample values into (n_side, n_side, n_time)."""
        nt, nb = self.n_time, self.n_side
        v = vals.reshape(nt, 4, nb, 4, nb, 4)
        return v.sum(axis=(1, 3, 5)).transpose(1, 2, 0)


def region_ball_star(R: float):
    """Membership test for the R-disk crossed with [0, R]."""

    def member(X1, X2, T):
        return (X1**2 + X2**2 <= R**2) & (T >= 0.0) & (T <= R)

    return member


def cell_weights(lattice: CellLattice, region=None) -> np.ndarray:
    """w(U) per cell by sample counting, shape (n_balls, n_time), clipped to B*_R."""
    x, t = lattice.sample_axes()
    X1 = x[None, :, None]
    X2 = x[None, None, :]
    T = t[:, None, None]
    mask = region_ball_star(lattice.R)(X1, X2, T)
    if region is not None:
        mask = mask & region(X1, X2, T)
    counts = lattice.bin_to_cells(mask.astype(float)) / 64.0
    return counts[lattice.inside]


# ------------------------------------------------- coarse cap evaluation


def _mode_grid(field: GridField):
    cs = np.fft.fftshift(field.coefficients())
    m = np.fft.fftshift(np.fft.fftfreq(field.n, d=1.0 / field.n)).astype(int)
    return cs, m


class _CapEngine:
    """Demodulated per-cap evaluation on the coarse lattice.

    For each cap, modes are shifted by the grid frequency nearest the cap
    center and placed on the m_big-point FFT; the slice modulus equals
    |e^{it Delta} f_tau| at the coarse samples exactly.
    """

    def __init__(self, field: GridField, family: CapFamily, lattice: CellLattice):
        self.lattice = lattice
        cs, m = _mode_grid(field)
        w = family.weights(field.n, field.half_side)
        dxi = math.pi / field.half_side
        self.caps = []
        for i in range(len(family)):
            rows, cols = np.nonzero(w[i])
            if rows.size == 0:
                self.caps.append(None)
                continue
            vals = cs[rows, cols] * w[i][rows, cols]
            m1, m2 = m[rows], m[cols]
            xi1, xi2 = m1 * dxi, m2 * dxi
            a1 = int(np.rint(family.centers[i, 0] / dxi))
            a2 = int(np.rint(family.centers[i, 1] / dxi))
            r1 = (m1 - a1) % lattice.m_big
            r2 = (m2 - a2) % lattice.m_big
            parity = np.where((m1 - a1 + m2 - a2) % 2, -1.0, 1.0)
            self.caps.append(
                {
                    "vals": vals * parity,
                    "freq_sq": xi1**2 + xi2**2,
                    "rows": r1,
                    "cols": r2,
                    "mod1": a1 * dxi,
                    "mod2": a2 * dxi,
                }
            )

    def cap_slices(self, t: float, indices=None) -> np.ndarray:
        """Demodulated coarse-window slices at one time, shape (caps, m, m)."""
        mb, mw = self.lattice.m_big, self.lattice.m_win
        idx = range(len(self.caps)) if indices is None else indices
        idx = list(idx)
        grid = np.zeros((len(idx), mb, mb), dtype=complex)
        for row, i in enumerate(idx):
            cap = self.caps[i]
            if cap is None:
                continue
            grid[row, cap["rows"], cap["cols"]] = cap["vals"] * np.exp(
                1j * t * cap["freq_sq"]
            )
        out = scipy.fft.ifft2(grid, axes=(-2, -1)) * (mb * mb)
        lo, hi = mb // 4, 3 * mb // 4
        return out[:, lo:hi, lo:hi]

    def modulation(self) -> np.ndarray:
        """Per-cap phase e^{i c* . x} on the window; restores coherent sums."""
        x, _ = self.lattice.sample_axes()
        mw = self.lattice.m_win
        out = np.ones((len(self.caps), mw, mw), dtype=complex)
        for i, cap in enumerate(self.caps):
            if cap is None:
                continue
            out[i] = np.exp(1j * (cap["mod1"] * x[:, None] + cap["mod2"] * x[None, :]))
        return out

    def cell_integrals(self, p_list) -> dict:
        """Quadrature of |e^{it Delta} f_tau|^p per cap per cell.

        Returns {p: array (caps, n_balls_inside, n_time)}.  The spectral
        buffer is reused across caps with only the touched bins reset,
        and sample powers are binned chunk by chunk.
        """
        lat = self.lattice
        _, times = lat.sample_axes()
        wq = lat.quadrature_weight()
        full = {
            p: np.zeros((len(self.caps), lat.n_side, lat.n_side, lat.n_time))
            for p in p_list
        }
        mb, nb = lat.m_big, lat.n_side
        chunk = max(4, ((1 << 27) // (16 * mb * mb)) // 4 * 4)
        buf = np.zeros((min(chunk, len(times)), mb, mb), dtype=complex)
        lo, hi = mb // 4, 3 * mb // 4
        for i, cap in enumerate(self.caps):
            if cap is None:
                continue
            for s in range(0, len(times), chunk):
                ts = times[s : s + chunk]
                grid = buf[: len(ts)]
                phases = np.exp(1j * np.outer(ts, cap["freq_sq"]))
                grid[:, cap["rows"], cap["cols"]] = cap["vals"][None, :] * phases
                sl = scipy.fft.ifft2(grid, axes=(-2, -1)) * (mb * mb)
                grid[:, cap["rows"], cap["cols"]] = 0.0
                win = sl[:, lo:hi, lo:hi]
                m2 = win.real**2 + win.imag**2
                for p in p_list:
                    half = p / 2.0
                    vals = m2 ** int(half) if half == int(half) else m2**half
                    spatial = vals.reshape(len(ts), nb, 4, nb, 4).sum(axis=(2, 4))
                    slabs = spatial.reshape(len(ts) // 4, 4, nb, nb).sum(axis=1)
                    full[p][i, :, :, s // 4 : s // 4 + len(ts) // 4] = (
                        slabs.transpose(1, 2, 0) * wq
                    )
        return {p: full[p][:, lat.inside] for p in p_list}


# ---------------------------------------------------------- broad search


class _CoverSearch:
    """Longest-coverable-prefix machinery over caps ranked per cell.

    E_masks[v] is the bitmask of caps the line v absorbs; lines_of[c] is
    the bitmask of lines absorbing cap c.  A prefix of ranked caps is
    coverable by an A-tuple iff the recursive first-uncovered branch
    succeeds; the minimum over A-tuples of the max surviving cap equals
    the ranked mass right after the longest coverable prefix.
    """

    def __init__(self, E: np.ndarray):
        self.n_lines, self.n_caps = E.shape
        self.E_masks = []
        for v in range(self.n_lines):
            mask = 0
            for c in np.nonzero(E[v])[0]:
                mask |= 1 << int(c)
            self.E_masks.append(mask)
        self.lines_of = []
        for c in range(self.n_caps):
            mask = 0
            for v in np.nonzero(E[:, c])[0]:
                mask |= 1 << int(v)
            self.lines_of.append(mask)
        self.caps_lines = [np.nonzero(E[:, c])[0] for c in range(self.n_caps)]
        self._memo: dict = {}

    def cover(self, prefix: int, A: int):
        """Witness tuple of line indices covering the cap set, or None."""
        if prefix == 0:
            return []
        if A <= 0:
            return None
        key = (prefix, A)
        if key in self._memo:
            return self._memo[key]
        first = (prefix & -prefix).bit_length() - 1
        witness = None
        if A == 1:
            common = self.lines_of[first]
            rest = prefix & (prefix - 1)
            while rest and common:
                c = (rest & -rest).bit_length() - 1
                common &= self.lines_of[c]
                rest &= rest - 1
            if common:
                witness = [common.bit_length() - 1]
        else:
            for v in self.caps_lines[first]:
                sub = self.cover(prefix & ~self.E_masks[int(v)], A - 1)
                if sub is not None:
                    witness = [int(v)] + sub
                    break
        self._memo[key] = witness
        return witness

    def longest_prefix(self, ranked: np.ndarray, A: int):
        """(j*, witness) for the ranked cap sequence: j* caps excluded."""
        prefix = 0
        best: list = []
        for j, c in enumerate(ranked):
            prefix |= 1 << int(c)
            w = self.cover(prefix, A)
            if w is None:
                return j, best
            best = w
        return len(ranked), best


class BroadData:
    """Everything reusable for broad norms of one field at one geometry."""

    def __init__(self, field: GridField, params: BroadParams, p_list=None):
        R = int(round(field.half_side / 2.0))
        self.params = params
        self.family = CapFamily(params.xi0, params.M, params.K, params.sharp_caps)
        self.lattice = CellLattice(R, params.K)
        self.engine = _CapEngine(field, self.family, self.lattice)
        ps = sorted(set([params.p] + list(p_list or [])))
        self.integrals = self.engine.cell_integrals(ps)
        dirs = np.vstack([self.family.directions(), [0.0, 0.0, 1.0]])
        g = self.family.directions()
        dots = np.clip(np.abs(g @ dirs.T), -1.0, 1.0)
        angles = np.arccos(dots).T  # (lines, caps)
        pad = params.angle_threshold + self.family.angular_radii[None, :]
        self.E = angles <= pad
        self.lines = dirs
        self.search = _CoverSearch(self.E)
        self._mu_cache: dict = {}

    def caps_per_line(self) -> np.ndarray:
        return self.E.sum(axis=1)

    def mu_all(self, p: float = None, A: int = None):
        """(mu, witnesses) per cell, flattened as (n_balls_inside * n_time,)."""
        p = self.params.p if p is None else p
        A = self.params.A if A is None else A
        key = (p, A)
        if key in self._mu_cache:
            return self._mu_cache[key]
        I = self.integrals[p].reshape(len(self.family), -1)
        order = np.argsort(-I, axis=0)
        mu = np.zeros(I.shape[1])
        witnesses = []
        for cell in range(I.shape[1]):
            ranked = order[:, cell]
            j, wit = self.search.longest_prefix(ranked, A)
            mu[cell] = 0.0 if j >= len(ranked) else I[ranked[j], cell]
            witnesses.append(wit)
        out = (mu, witnesses)
        self._mu_cache[key] = out
        return out


def broad_data(field: GridField, params: BroadParams, p_list=None) -> BroadData:
    return BroadData(field, params, p_list)


# ----------------------------------------------------------- aggregation


def _lq(values: np.ndarray, q: float, axis=-1) -> np.ndarray:
    """Stable l^q aggregation; q = inf gives the max (the L^infty variant)."""
    if math.isinf(q):
        return values.max(axis=axis)
    m = values.max(axis=axis, keepdims=True)
    safe = np.where(m > 0.0, m, 1.0)
    s = ((values / safe) ** q).sum(axis=axis)
    return (m.squeeze(axis) if hasattr(m, "squeeze") else m) * s ** (1.0 / q)


def _norm_p_power(data: BroadData, region, p: float = None, A: int = None,
                  q: float = None) -> float:
    params = data.params
    p = params.p if p is None else p
    A = params.A if A is None else A
    q = params.q if q is None else q
    mu, _ = data.mu_all(p, A)
    w = cell_weights(data.lattice, region)
    v = w * mu.reshape(w.shape)
    per_ball = _lq(v, q, axis=1)
    return float(per_ball.sum())


def bl_norm(field_or_data, region=None, params: BroadParams = None) -> float:
    """The broad L^q norm over the region (None means all of B*_R)."""
    data = _as_data(field_or_data, params)
    return _norm_p_power(data, region) ** (1.0 / data.params.p)


def bl_norm_inf(field_or_data, region=None, params: BroadParams = None) -> float:
    """The broad L^infty norm: per-square max over time intervals."""
    data = _as_data(field_or_data, params)
    return _norm_p_power(data, region, q=math.inf) ** (1.0 / data.params.p)


def _as_data(field_or_data, params) -> BroadData:
    if isinstance(field_or_data, BroadData):
        return field_or_data
    if params is None:
        raise ValueError("params required when passing a raw field")
    return BroadData(field_or_data, params)


def mu_cell(field_or_data, cell, params: BroadParams = None):
    """(mu, achieving lines) for one cell key (ball_i1, ball_i2, interval)."""
    data = _as_data(field_or_data, params)
    lat = data.lattice
    i1, i2, it = cell
    flat = np.nonzero((lat.ball_index[:, 0] == i1) & (lat.ball_index[:, 1] == i2))[0]
    if flat.size == 0:
        raise ValueError("cell center lies outside the R-disk")
    idx = int(flat[0]) * lat.n_time + int(it)
    mu, wits = data.mu_all()
    return float(mu[idx]), [data.lines[v] for v in wits[idx]]


def bl_report(field_or_data, params: BroadParams = None, region=None) -> dict:
    """JSON-ready broad-norm report with per-cell mu and achieving lines."""
    data = _as_data(field_or_data, params)
    mu, wits = data.mu_all()
    lat = data.lattice
    cells = []
    for flat in range(len(mu)):
        b, it = divmod(flat, lat.n_time)
        i1, i2 = lat.ball_index[b]
        cells.append(
            {
                "cell": [int(i1), int(i2), int(it)],
                "mu": float(mu[flat]),
                "achieving_lines": [
                    [float(c) for c in data.lines[v]] for v in wits[flat]
                ],
            }
        )
    pr = data.params
    return {
        "params": {
            "A": pr.A, "K": pr.K, "M": pr.M, "p": pr.p, "q": pr.q,
            "xi0": list(pr.xi0), "sharp_caps": pr.sharp_caps,
        },
        "per_cell": cells,
        "norm": bl_norm(data, region),
    }


# ------------------------------------------------------------ the checks


def check_subadditivity(field_or_data, region1, region2, params: BroadParams = None) -> dict:
    """Union bound on p-th powers; exact by Minkowski, slack recorded."""
    data = _as_data(field_or_data, params)

    def union(X1, X2, T):
        return region1(X1, X2, T) | region2(X1, X2, T)

    lhs = _norm_p_power(data, union)
    rhs = _norm_p_power(data, region1) + _norm_p_power(data, region2)
    return {"lhs_p": lhs, "rhs_p": rhs, "slack": rhs - lhs,
            "ok": bool(lhs <= rhs * (1.0 + 1e-12) + 1e-30)}


def check_a_split(f: GridField, g: GridField, A1: int, A2: int,
                  params: BroadParams, region=None) -> dict:
    """Sum field at A = A1 + A2 against the pieces; constant must stay <= 2^p."""
    p = params.p
    total = GridField(f.data + g.data, f.half_side)
    data_sum = BroadData(total, params)
    data_f = BroadData(f, params)
    data_g = BroadData(g, params)
    lhs = _norm_p_power(data_sum, region, A=A1 + A2)
    rhs = _norm_p_power(data_f, region, A=A1) + _norm_p_power(data_g, region, A=A2)
    const = lhs / rhs if rhs > 0 else 0.0
    return {"lhs_p": lhs, "rhs_p": rhs, "constant": const, "bound": 2.0**p,
            "ok": bool(const <= 2.0**p * (1.0 + 1e-12))}


def check_holder(field_or_data, p: float, r: float, q: float,
                 params: BroadParams = None) -> dict:
    """Exponent-lowering bound with the explicit chain constant.

    The certified constant is [K^3 #B (#I)^{1/q}]^{1/p - 1/r}: one K^3
    from comparing the cell integrals of |.|^p and |.|^r, the lattice
    counts from the two Hoelder steps in the aggregation.  The measured
    ratio against the scaling factor R^{(2+1/q)(1/p-1/r)} is reported.
    """
    if p > r:
        raise ValueError("requires p <= r")
    if isinstance(field_or_data, BroadData):
        data = field_or_data
    else:
        data = BroadData(field_or_data, params, p_list=[p, r])
    lat = data.lattice
    K = data.params.K
    lhs = _norm_p_power(data, None, p=p, q=q) ** (1.0 / p)
    rhs = _norm_p_power(data, None, p=r, q=q) ** (1.0 / r)
    expo = 1.0 / p - 1.0 / r
    chain = (K**3 * lat.n_balls * lat.n_time ** (1.0 / q)) ** expo
    scaling = float(lat.R) ** ((2.0 + 1.0 / q) * expo)
    measured = lhs / (scaling * rhs) if rhs > 0 else 0.0
    return {
        "lhs": lhs, "rhs": rhs, "chain_constant": chain,
        "scaling": scaling, "measured_constant": measured,
        "ok": bool(lhs <= chain * rhs * (1.0 + 1e-12)),
    }


def _narrow_assignment(data: BroadData, witness) -> tuple[np.ndarray, list]:
    """Broad mask and per-line disjoint cap lists for one achieving tuple."""
    n_caps = len(data.family)
    assigned = np.full(n_caps, -1)
    for slot, v in enumerate(witness):
        sel = data.E[v] & (assigned < 0)
        assigned[sel] = slot
    broad = assigned < 0
    groups = [np.nonzero(assigned == s)[0] for s in range(len(witness))]
    return broad, groups


def broad_vs_full_decomposition(field: GridField, cell, params: BroadParams,
                                data: BroadData = None) -> dict:
    """Pointwise domination of |u|^p by broad max plus narrow sums on one cell.

    With the cell's achieving tuple fixed and narrow caps assigned to the
    first line absorbing them, convexity over 1 + #lines groups gives
    |u|^p <= (1+A')^{p-1) style constants; the check runs on every coarse
    sample of the cell and records the worst margin.
    """
    data = data or BroadData(field, params)
    lat = data.lattice
    i1, i2, it = cell
    flat = np.nonzero((lat.ball_index[:, 0] == i1) & (lat.ball_index[:, 1] == i2))[0]
    if flat.size == 0:
        raise ValueError("cell center lies outside the R-disk")
    b = int(flat[0])
    idx = b * lat.n_time + int(it)
    mu, wits = data.mu_all()
    witness = wits[idx]
    broad, groups = _narrow_assignment(data, witness)
    p = params.p
    n_groups = 1 + len(groups)
    c_power = float(n_groups) ** (p - 1.0)
    modulation = data.engine.modulation()
    _, times = lat.sample_axes()
    s1, s2 = 4 * i1, 4 * i2
    worst = -np.inf
    n_broad_active = 0
    full_mass = broad_mass = narrow_mass = 0.0
    for jt in range(4 * it, 4 * it + 4):
        slices = data.engine.cap_slices(times[jt])
        win = slices[:, s1 : s1 + 4, s2 : s2 + 4]
        phases = modulation[:, s1 : s1 + 4, s2 : s2 + 4]
        full = (win * phases).sum(axis=0)
        lhs = np.abs(full) ** p
        bmax = np.abs(win[broad]).max(axis=0) if broad.any() else np.zeros((4, 4))
        n_broad_active = int(broad.sum())
        rhs = c_power * (n_broad_active**p) * bmax**p
        broad_mass += float(rhs.sum())
        for caps_idx in groups:
            if len(caps_idx):
                s = (win[caps_idx] * phases[caps_idx]).sum(axis=0)
                term = c_power * np.abs(s) ** p
                narrow_mass += float(term.sum())
                rhs = rhs + term
        full_mass += float(lhs.sum())
        worst = max(worst, float((lhs - rhs).max()))
    scale = max(mu[idx], 1e-300)
    return {
        "max_violation": worst,
        "relative_violation": worst / scale,
        "full_mass": full_mass,
        "broad_mass": broad_mass,
        "narrow_mass": narrow_mass,
        "broad_count": n_broad_active,
        "narrow_counts": [int(len(g)) for g in groups],
        "constants": {"power": c_power, "broad": c_power * n_broad_active**p},
        "ok": bool(worst <= 1e-9 * scale),
    }


def decomposition_certificate(field: GridField, params: BroadParams,
                              data: BroadData = None) -> dict:
    """Run the broad/narrow domination on every sampled cell of B*_R.

    Slice-at-a-time sweep: per coarse time, all cap slices are synthesized
    once and every spatial cell in that slab is checked against its own
    achieving tuple.
    """
    data = data or BroadData(field, params)
    lat = data.lattice
    mu, wits = data.mu_all()
    p = params.p
    modulation = data.engine.modulation()
    _, times = lat.sample_axes()
    assignments = {}
    for idx, w in enumerate(wits):
        key = tuple(w)
        if key not in assignments:
            assignments[key] = _narrow_assignment(data, w)
    worst_rel = -np.inf
    violations = 0
    max_narrow = 0
    for jt, t in enumerate(times):
        it = jt // 4
        slices = data.engine.cap_slices(t)
        coherent = slices * modulation
        full = coherent.sum(axis=0)
        for b in range(lat.n_balls):
            i1, i2 = lat.ball_index[b]
            idx = b * lat.n_time + it
            broad, groups = assignments[tuple(wits[idx])]
            s1, s2 = 4 * int(i1), 4 * int(i2)
            lhs = np.abs(full[s1 : s1 + 4, s2 : s2 + 4]) ** p
            n_groups = 1 + len(groups)
            c_power = float(n_groups) ** (p - 1.0)
            nb = int(broad.sum())
            if nb:
                bwin = np.abs(slices[broad, s1 : s1 + 4, s2 : s2 + 4]).max(axis=0)
                rhs = c_power * nb**p * bwin**p
            else:
                rhs = np.zeros((4, 4))
            for caps_idx in groups:
                if len(caps_idx):
                    max_narrow = max(max_narrow, len(caps_idx))
                    s = coherent[caps_idx, s1 : s1 + 4, s2 : s2 + 4].sum(axis=0)
                    rhs = rhs + c_power * np.abs(s) ** p
            gap = lhs - rhs
            scale = max(float(lhs.max()), 1e-300)
            rel = float(gap.max()) / scale
            worst_rel = max(worst_rel, rel)
            if rel > 1e-9:
                violations += 1
    return {
        "violations": violations,
        "worst_relative_margin": worst_rel,
        "max_narrow_caps_per_line": max_narrow,
        "caps_per_line_bound": int(data.caps_per_line().max()),
        "ok": bool(violations == 0),
    }
