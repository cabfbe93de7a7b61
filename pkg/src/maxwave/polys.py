"""Dense multivariate polynomials and mass-bisecting cell partitions.

Polynomials live on R^n x R as dense coefficient vectors in graded
lexicographic order (total degree ascending, then lexicographic with the
first variable largest).  A discrete mass is a weighted point cloud, for
instance the per-cell broad masses of a field; a bisecting polynomial
drives the positive and negative sides of every listed mass to equal
share, and iterating the bisection over sign cells yields a partition
into 2^s cells each holding at least ((1 - eta)/2)^s of the total.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb

import numpy as np
import scipy.optimize

__all__ = [
    "MassFunction",
    "MultiPoly",
    "SignCellPartition",
    "bisecting_poly",
    "cells_crossed_by_line",
    "level_degrees",
    "partition",
    "poly_space_dim",
    "random_poly",
]


def poly_space_dim(D: int, n: int) -> int:
    """Dimension of polynomials of degree <= D on R^n x R."""
    return comb(D + n + 1, n + 1)


@lru_cache(maxsize=None)
def _exponents(degree: int, n_vars: int) -> tuple:
    """Multi-indices with |a| <= degree in graded-lex order."""
    out = []
    for total in range(degree + 1):
        grade = []

        def fill(prefix, remaining, slots):
            if slots == 1:
                grade.append(prefix + (remaining,))
                return
            for e in range(remaining, -1, -1):
                fill(prefix + (e,), remaining - e, slots - 1)

        fill((), total, n_vars)
        out.extend(grade)
    return tuple(out)


def exponent_array(degree: int, n_vars: int) -> np.ndarray:
    return np.array(_exponents(degree, n_vars), dtype=int)


@dataclass
class MultiPoly:
    """Dense polynomial; coeffs follow the graded-lex exponent order."""

    n_vars: int
    degree: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        want = poly_space_dim(self.degree, self.n_vars - 1)
        if len(self.coeffs) != want:
            raise ValueError(
                f"need {want} coefficients for degree {self.degree} "
                f"in {self.n_vars} variables, got {len(self.coeffs)}"
            )

    def _monomials(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        exps = exponent_array(self.degree, self.n_vars)
        powers = [
            pts[:, i][:, None] ** np.arange(self.degree + 1)
            for i in range(self.n_vars)
        ]
        mono = powers[0][:, exps[:, 0]]
        for i in range(1, self.n_vars):
            mono = mono * powers[i][:, exps[:, i]]
        return mono

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        squeeze = pts.ndim == 1
        vals = self._monomials(pts) @ self.coeffs
        return float(vals[0]) if squeeze else vals

    def gradient(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        squeeze = pts.ndim == 1
        pts2 = np.atleast_2d(pts)
        exps = exponent_array(self.degree, self.n_vars)
        out = np.zeros((len(pts2), self.n_vars))
        for i in range(self.n_vars):
            keep = exps[:, i] > 0
            if not keep.any():
                continue
            dexp = exps[keep].copy()
            dexp[:, i] -= 1
            dcoef = self.coeffs[keep] * exps[keep, i]
            powers = [
                pts2[:, j][:, None] ** np.arange(self.degree + 1)
                for j in range(self.n_vars)
            ]
            mono = powers[0][:, dexp[:, 0]]
            for j in range(1, self.n_vars):
                mono = mono * powers[j][:, dexp[:, j]]
            out[:, i] = mono @ dcoef
        return out[0] if squeeze else out

    def shift(self, c: float) -> "MultiPoly":
        """The polynomial plus a constant."""
        coeffs = self.coeffs.copy()
        coeffs[0] += c
        return MultiPoly(self.n_vars, self.degree, coeffs)

    def __add__(self, other: "MultiPoly") -> "MultiPoly":
        deg = max(self.degree, other.degree)
        out = np.zeros(poly_space_dim(deg, self.n_vars - 1))
        index = {e: i for i, e in enumerate(_exponents(deg, self.n_vars))}
        for poly in (self, other):
            for e, c in zip(_exponents(poly.degree, poly.n_vars), poly.coeffs):
                out[index[e]] += c
        return MultiPoly(self.n_vars, deg, out)

    def __mul__(self, other):
        if np.isscalar(other):
            return MultiPoly(self.n_vars, self.degree, self.coeffs * other)
        deg = self.degree + other.degree
        out = np.zeros(poly_space_dim(deg, self.n_vars - 1))
        index = {e: i for i, e in enumerate(_exponents(deg, self.n_vars))}
        for ea, ca in zip(_exponents(self.degree, self.n_vars), self.coeffs):
            if ca == 0.0:
                continue
            for eb, cb in zip(_exponents(other.degree, other.n_vars), other.coeffs):
                key = tuple(a + b for a, b in zip(ea, eb))
                out[index[key]] += ca * cb
        return MultiPoly(self.n_vars, deg, out)

    __rmul__ = __mul__

    def restrict_to_line(self, origin, direction) -> np.ndarray:
        """Coefficients (ascending) of u -> P(origin + u * direction)."""
        origin = np.asarray(origin, dtype=float)
        direction = np.asarray(direction, dtype=float)
        total = np.zeros(self.degree + 1)
        for e, c in zip(_exponents(self.degree, self.n_vars), self.coeffs):
            if c == 0.0:
                continue
            term = np.array([1.0])
            for i, power in enumerate(e):
                if power:
                    base = np.array([origin[i], direction[i]])
                    term = np.polynomial.polynomial.polymul(
                        term, np.polynomial.polynomial.polypow(base, power)
                    )
            total[: len(term)] += c * term
        return total

    def to_dict(self) -> dict:
        return {
            "n_vars": self.n_vars,
            "degree": self.degree,
            "coeffs_gradedlex": [float(c) for c in self.coeffs],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MultiPoly":
        return cls(int(doc["n_vars"]), int(doc["degree"]),
                   np.asarray(doc["coeffs_gradedlex"], dtype=float))


def random_poly(degree: int, n_vars: int, seed: int, scale: float = 1.0) -> MultiPoly:
    rng = np.random.default_rng(seed)
    return MultiPoly(
        n_vars, degree, scale * rng.standard_normal(poly_space_dim(degree, n_vars - 1))
    )


# --------------------------------------------------------------- masses


@dataclass
class MassFunction:
    """Nonnegative weights on space-time sample points."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float)
        if len(self.points) != len(self.weights):
            raise ValueError("points and weights must align")
        if (self.weights < 0).any():
            raise ValueError("weights must be nonnegative")

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def restrict(self, mask: np.ndarray) -> "MassFunction":
        return MassFunction(self.points[mask], self.weights[mask])

    @classmethod
    def from_broad(cls, data, region=None) -> "MassFunction":
        """Cell-center point masses w * mu from a broad-norm computation."""
        from .broad import cell_weights

        lat = data.lattice
        mu, _ = data.mu_all()
        w = cell_weights(lat, region)
        centers = lat.ball_centers
        t_mid = lat.K * (np.arange(lat.n_time) + 0.5)
        pts, wts = [], []
        vals = w * mu.reshape(w.shape)
        for b in range(lat.n_balls):
            i1, i2 = lat.ball_index[b]
            for it in range(lat.n_time):
                pts.append((centers[i1], centers[i2], t_mid[it]))
                wts.append(vals[b, it])
        return cls(np.array(pts), np.array(wts))


def side_masses(poly: MultiPoly, mass: MassFunction) -> tuple[float, float]:
    """Weight on {P > 0} and on {P < 0}; the zero set counts to neither."""
    vals = poly(mass.points)
    return (
        float(mass.weights[vals > 0.0].sum()),
        float(mass.weights[vals < 0.0].sum()),
    )


# --------------------------------------------------------------- bisection


def _normalize_points(all_points: np.ndarray):
    """Affine map into [-1, 1]^v for conditioning; returns (mapped, lo, span)."""
    lo = all_points.min(axis=0)
    hi = all_points.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    return 2.0 * (all_points - lo) / span - 1.0, lo, span


def _pullback_affine(poly: MultiPoly, lo: np.ndarray, span: np.ndarray) -> MultiPoly:
    """Compose with z -> 2 (z - lo)/span - 1, returning original-frame coeffs."""
    v = poly.n_vars
    scale = 2.0 / span
    shift = -2.0 * lo / span - 1.0
    out = np.zeros(poly_space_dim(poly.degree, v - 1))
    index = {e: i for i, e in enumerate(_exponents(poly.degree, v))}
    for e, c in zip(_exponents(poly.degree, v), poly.coeffs):
        if c == 0.0:
            continue
        expansion = {(): c}
        for i, power in enumerate(e):
            base = np.zeros(power + 1)
            base[0] = 1.0
            lin = np.array([shift[i], scale[i]])
            factor = np.polynomial.polynomial.polypow(lin, power) if power else np.array([1.0])
            new = {}
            for key, val in expansion.items():
                for b, fc in enumerate(factor):
                    if fc == 0.0:
                        continue
                    nk = key + (b,)
                    new[nk] = new.get(nk, 0.0) + val * fc
            expansion = new
        for key, val in expansion.items():
            out[index[key]] += val
    return MultiPoly(v, poly.degree, out)


def _sweep_linear_bisector(mass: MassFunction, eta: float, seed: int):
    """Level-shift sweep across a family of directions; best exact cut wins.

    Each direction induces a sorted projection; cutting at a midpoint
    between consecutive values never lands mass on the zero set, and the
    cut minimizing the signed imbalance is kept.
    """
    rng = np.random.default_rng(seed)
    v = mass.points.shape[1]
    dirs = list(np.eye(v))
    raw = rng.standard_normal((13, v))
    dirs += list(raw / np.linalg.norm(raw, axis=1, keepdims=True))
    best = None
    for d in dirs:
        proj = mass.points @ d
        order = np.argsort(proj)
        w = mass.weights[order]
        ps = np.cumsum(w)
        total = ps[-1]
        vals = proj[order]
        resid = np.abs(total - 2.0 * ps[:-1])
        usable = vals[1:] > vals[:-1]
        if not usable.any():
            continue
        idx = np.nonzero(usable)[0]
        k = idx[np.argmin(resid[idx])]
        cut = 0.5 * (vals[k] + vals[k + 1])
        r = float(resid[k])
        if best is None or r < best[0]:
            best = (r, d, cut)
    if best is None:
        raise RuntimeError("mass is a single atom; no hyperplane separates it")
    r, d, cut = best
    coeffs = np.zeros(poly_space_dim(1, v - 1))
    exps = _exponents(1, v)
    coeffs[exps.index(tuple(0 for _ in range(v)))] = -cut
    for i in range(v):
        e = tuple(1 if j == i else 0 for j in range(v))
        coeffs[exps.index(e)] = d[i]
    return MultiPoly(v, 1, coeffs), r


def bisecting_poly(
    masses, n: int = 2, eta: float = 0.05, seed: int = 0, degree: int = None
) -> MultiPoly:
    """Nonzero polynomial splitting every listed mass evenly within eta.

    A single mass is handled by the deterministic level-shift sweep.  For
    several masses the residual vector is driven to zero by annealed
    smooth-sign descent on the coefficient sphere with deterministic
    multistarts; the reported residual is always the exact recount.
    """
    masses = list(masses)
    if not masses:
        raise ValueError("need at least one mass")
    totals = [m.total for m in masses]
    if min(totals) <= 0.0:
        raise ValueError("every mass must have positive total")
    N = len(masses)
    v = n + 1
    if degree is None:
        degree = max(1, math.ceil(N ** (1.0 / v)))
        while poly_space_dim(degree, n) < N + 1:
            degree += 1
    cap = math.ceil(2.0 * N ** (1.0 / v)) + 1
    degree = min(degree, cap)

    if N == 1 and degree >= 1:
        poly, resid = _sweep_linear_bisector(masses[0], eta, seed)
        if resid <= eta * totals[0]:
            return poly
        raise RuntimeError(
            f"level-shift sweep stuck at residual {resid:.3g} "
            f"(allowed {eta * totals[0]:.3g})"
        )

    stacked = np.vstack([m.points for m in masses])
    mapped, lo, span = _normalize_points(stacked)
    splits = np.cumsum([len(m.points) for m in masses])[:-1]
    pts_list = np.split(mapped, splits)
    template = MultiPoly(v, degree, np.zeros(poly_space_dim(degree, n)))
    monos = [template._monomials(p) for p in pts_list]
    weights = [m.weights / t for m, t in zip(masses, totals)]
    spread = 1.0

    def exact_residual(coef):
        worst = 0.0
        for mono, w in zip(monos, weights):
            vals = mono @ coef
            worst = max(worst, abs(w[vals > 0].sum() - w[vals < 0].sum()))
        return worst

    def smooth(coef, h):
        f = 0.0
        g = np.zeros_like(coef)
        for mono, w in zip(monos, weights):
            vals = mono @ coef
            th = np.tanh(vals / h)
            s = float(w @ th)
            ds = ((w * (1.0 - th * th) / h)[None, :] @ mono)[0]
            f += s * s
            g += 2.0 * s * ds
        return f, g

    rng = np.random.default_rng(seed)
    best_coef, best_resid = None, np.inf
    for _ in range(8):
        coef = rng.standard_normal(len(template.coeffs))
        coef /= np.linalg.norm(coef)
        for h in (spread, spread / 4, spread / 16, spread / 64):
            res = scipy.optimize.minimize(
                smooth, coef, args=(h,), jac=True, method="BFGS",
                options={"maxiter": 200},
            )
            coef = res.x
            nrm = np.linalg.norm(coef)
            if nrm == 0.0:
                break
            coef /= nrm
        r = exact_residual(coef)
        if r < best_resid:
            best_resid, best_coef = r, coef.copy()
        if best_resid <= eta:
            break
    if best_resid > eta:
        raise RuntimeError(
            f"sphere descent stuck at residual {best_resid:.3g} (allowed {eta:.3g})"
        )
    inner = MultiPoly(v, degree, best_coef)
    return _pullback_affine(inner, lo, span)


# --------------------------------------------------------------- partition


def level_degrees(D: int) -> list[int]:
    """Per-level bisector degrees: the longest schedule with sum <= D."""
    out = []
    spent = 0
    l = 1
    while True:
        d = math.ceil(2.0 ** ((l - 1) / 3.0))
        if spent + d > D:
            return out
        out.append(d)
        spent += d
        l += 1


@dataclass
class SignCellPartition:
    """Factor polynomials with shifts; cells are the full sign vectors."""

    factors: list
    shifts: np.ndarray = None

    def __post_init__(self):
        if self.shifts is None:
            self.shifts = np.zeros(len(self.factors))
        self.shifts = np.asarray(self.shifts, dtype=float)

    @property
    def s(self) -> int:
        return len(self.factors)

    @property
    def n_cells(self) -> int:
        return 2**self.s

    @property
    def total_degree(self) -> int:
        return sum(q.degree for q in self.factors)

    def shifted_factors(self) -> list:
        return [q.shift(c) for q, c in zip(self.factors, self.shifts)]

    def sign_vectors(self, points) -> np.ndarray:
        """Signs in {-1, 0, +1} per factor, shape (N, s)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros((len(pts), self.s), dtype=int)
        for l, q in enumerate(self.shifted_factors()):
            out[:, l] = np.sign(q(pts))
        return out

    def cell_masses(self, mass: MassFunction) -> dict:
        """Mass per sign cell plus the wall (any exact zero)."""
        signs = self.sign_vectors(mass.points)
        on_wall = (signs == 0).any(axis=1)
        out = {}
        for bits in range(self.n_cells):
            vec = tuple(1 if (bits >> l) & 1 else -1 for l in range(self.s))
            sel = ~on_wall & (signs == np.array(vec)).all(axis=1)
            out[vec] = float(mass.weights[sel].sum())
        out["wall"] = float(mass.weights[on_wall].sum())
        return out

    def cell_points(self, mass: MassFunction, cell: tuple) -> MassFunction:
        signs = self.sign_vectors(mass.points)
        sel = (signs == np.array(cell)).all(axis=1)
        return mass.restrict(sel)

    def with_shifts(self, shifts) -> "SignCellPartition":
        return SignCellPartition(list(self.factors), np.asarray(shifts, dtype=float))

    def to_dict(self) -> dict:
        return {
            "factors": [q.to_dict() for q in self.factors],
            "shifts": [float(c) for c in self.shifts],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SignCellPartition":
        return cls(
            [MultiPoly.from_dict(d) for d in doc["factors"]],
            np.asarray(doc["shifts"], dtype=float),
        )


def partition(mass: MassFunction, D: int, eta: float = 0.05,
              seed: int = 0) -> SignCellPartition:
    """Iterated bisection into 2^s sign cells with degree budget D.

    Level l bisects all 2^(l-1) current cells at once with one polynomial
    whose degree follows the doubling schedule, so the factor degrees sum
    to at most D and every cell keeps at least ((1-eta)/2)^s of the total.
    """
    if D < 2:
        raise ValueError("D must be at least 2")
    degrees = level_degrees(D)
    factors = []
    current = [mass]
    for d in degrees:
        live = [m for m in current if m.total > 0.0]
        q = bisecting_poly(live, n=mass.points.shape[1] - 1, eta=eta,
                           seed=seed + len(factors), degree=d)
        factors.append(q)
        nxt = []
        for m in current:
            vals = q(m.points)
            nxt.append(m.restrict(vals < 0.0))
            nxt.append(m.restrict(vals > 0.0))
        current = nxt
    return SignCellPartition(factors)


def cells_crossed_by_line(part: SignCellPartition, origin, direction,
                          span: float = None) -> int:
    """Distinct sign cells met by a line, by exact root isolation.

    Each factor restricted to the line is univariate; its real roots cut
    the parameter axis into intervals of constant sign vector, and the
    count of distinct fully signed vectors is returned.  The count can
    never exceed one more than the total factor degree.  With a span the
    count is restricted to the segment |u| <= span; the default covers
    the whole line.
    """
    origin = np.asarray(origin, dtype=float)
    direction = np.asarray(direction, dtype=float)
    nrm = np.linalg.norm(direction)
    if nrm == 0.0:
        raise ValueError("direction must be nonzero")
    direction = direction / nrm
    roots = []
    for q in part.shifted_factors():
        cs = q.restrict_to_line(origin, direction)
        lead = np.nonzero(np.abs(cs) > 1e-13 * max(np.abs(cs).max(), 1e-300))[0]
        if len(lead) == 0:
            continue
        cs = cs[: lead[-1] + 1]
        if len(cs) <= 1:
            continue
        rr = np.polynomial.polynomial.polyroots(cs)
        scale = max(1.0, np.abs(rr).max()) if len(rr) else 1.0
        roots.extend(float(r.real) for r in rr if abs(r.imag) <= 1e-9 * scale)
    if span is not None:
        roots = [r for r in roots if abs(r) < span]
        breaks = [-span] + sorted(set(roots)) + [span]
        probes = [0.5 * (a + b) for a, b in zip(breaks, breaks[1:])]
    else:
        roots = sorted(set(roots))
        reach = 1.0 + (max(abs(r) for r in roots) if roots else 1.0)
        probes = [roots[0] - reach] if roots else [0.0]
        for a, b in zip(roots, roots[1:]):
            probes.append(0.5 * (a + b))
        if roots:
            probes.append(roots[-1] + reach)
    pts = origin[None, :] + np.array(probes)[:, None] * direction[None, :]
    signs = part.sign_vectors(pts)
    cells = {tuple(s) for s in signs if 0 not in s}
    return len(cells)
