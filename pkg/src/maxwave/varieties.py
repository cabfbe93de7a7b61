"""Sampled varieties: transversality, distance, tangency, and tube covers.

A variety is the common zero set of one or two polynomials on R^2 x R.
Every geometric operation here is sample-certified: zeros are found by
batched Gauss-Newton projection, transversality means the wedge of the
defining gradients stays away from zero on every sampled zero, and
distances carry a residual certificate.  Tube classification follows the
two-condition tangency test (stay inside the variety neighborhood, and
keep the tube direction close to the tangent spaces of all nearby
variety points), with the inequality slack constant fixed at 10.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .polys import MultiPoly

__all__ = [
    "TangencyParams",
    "Variety",
    "classify_tube",
    "neighborhood_member",
    "perturb_to_tci",
    "tangent_space",
    "tci_certificate",
    "translate_cover",
    "transverse_ball_cover",
    "variety_distance",
    "variety_distance_lattice",
]


@dataclass(frozen=True)
class TangencyParams:
    """Scale ladder for tangency tests.

    The ladder delta = eps^6 << eps^4 << eps^2 << eps/10 << eps orders
    only when eps < 1/10; the slack constant stands in for every
    inequality hidden in a "up to constants" statement.
    """

    eps: float = 0.09
    R: float = 256.0
    m: int = 2
    slack: float = 10.0

    def __post_init__(self):
        ladder = (self.delta, self.delta2, self.delta1, self.delta0, self.eps)
        if not all(a < b for a, b in zip(ladder, ladder[1:])) or self.delta <= 0:
            raise ValueError("need 0 < eps^6 < eps^4 < eps^2 < eps/10 < eps")
        if self.m not in (1, 2):
            raise ValueError("variety dimension m must be 1 or 2")
        if self.R < 1:
            raise ValueError("R must be at least 1")

    @property
    def delta0(self) -> float:
        return self.eps / 10.0

    @property
    def delta1(self) -> float:
        return self.eps**2

    @property
    def delta2(self) -> float:
        return self.eps**4

    @property
    def delta(self) -> float:
        return self.eps**6

    @property
    def delta_m(self) -> float:
        return self.delta1 if self.m == 1 else self.delta2

    @property
    def distance_threshold(self) -> float:
        return self.R ** (0.5 + self.delta_m)

    @property
    def angle_threshold(self) -> float:
        return self.R ** (-0.5 + self.delta_m)


@dataclass
class Variety:
    """Zero set of one or two defining polynomials; dimension 3 - #polys."""

    polys: list
    certificate: dict = field(default=None, compare=False)

    def __post_init__(self):
        if not 1 <= len(self.polys) <= 2:
            raise ValueError("one or two defining polynomials")
        v = self.polys[0].n_vars
        if any(p.n_vars != v for p in self.polys):
            raise ValueError("defining polynomials must share the variable count")

    @property
    def codim(self) -> int:
        return len(self.polys)

    @property
    def dim(self) -> int:
        return self.polys[0].n_vars - len(self.polys)

    def residual(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        vals = np.stack([p(pts) for p in self.polys], axis=1)
        return np.abs(vals).max(axis=1)

    def gradients(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.stack([p.gradient(pts) for p in self.polys], axis=1)

    def wedge_norm(self, points) -> np.ndarray:
        """Norm of the gradient (codim 1) or gradient cross product (codim 2)."""
        g = self.gradients(points)
        if self.codim == 1:
            return np.linalg.norm(g[:, 0], axis=1)
        return np.linalg.norm(np.cross(g[:, 0], g[:, 1]), axis=1)


def _newton_project(variety: Variety, starts: np.ndarray, iters: int = 80) -> np.ndarray:
    """Batched Gauss-Newton steps toward the zero set (minimal-norm update)."""
    z = np.atleast_2d(np.asarray(starts, dtype=float)).copy()
    for _ in range(iters):
        F = np.stack([p(z) for p in variety.polys], axis=1)
        if np.abs(F).max() < 1e-300:
            break
        J = variety.gradients(z)
        step = (np.linalg.pinv(J) @ F[:, :, None])[:, :, 0]
        z = z - step
    return z


def _poly_scales(variety: Variety, probe: np.ndarray) -> np.ndarray:
    vals = np.stack([p(probe) for p in variety.polys], axis=1)
    return np.maximum(np.abs(vals).max(axis=0), 1e-12)


def tci_certificate(variety: Variety, sample_budget: int = 400,
                    box_center=(0.0, 0.0, 0.0), box_halfwidth: float = 10.0,
                    seed: int = 0) -> dict:
    """Sampled transversality check: min wedge norm over found zeros.

    Zeros are located by multistart projection; samples that fail to
    reach a residual of 1e-12 relative to the polynomial's size on the
    box are discarded.  An empty zero set passes vacuously.
    """
    rng = np.random.default_rng(seed)
    v = variety.polys[0].n_vars
    starts = np.asarray(box_center) + box_halfwidth * rng.uniform(-1, 1, (sample_budget, v))
    scales = _poly_scales(variety, starts)
    z = _newton_project(variety, starts)
    F = np.stack([p(z) for p in variety.polys], axis=1)
    converged = (np.abs(F) <= 1e-12 * scales[None, :]).all(axis=1)
    zeros = z[converged]
    if len(zeros) == 0:
        cert = {"passed": True, "min_wedge": math.inf, "n_zero_samples": 0,
                "max_residual": 0.0, "vacuous": True}
    else:
        wedges = variety.wedge_norm(zeros)
        cert = {
            "passed": bool(wedges.min() >= 1e-6),
            "min_wedge": float(wedges.min()),
            "n_zero_samples": int(len(zeros)),
            "max_residual": float(variety.residual(zeros).max()),
            "vacuous": False,
        }
    variety.certificate = cert
    return cert


def tangent_space(variety: Variety, z) -> np.ndarray:
    """Orthonormal basis (v, dim) of the tangent space at a zero point."""
    g = variety.gradients(np.asarray(z, dtype=float)[None])[0]
    _, _, vt = np.linalg.svd(g, full_matrices=True)
    return vt[variety.codim :].T


def _tangent_bases(variety: Variety, pts: np.ndarray) -> np.ndarray:
    g = variety.gradients(pts)
    _, _, vt = np.linalg.svd(g, full_matrices=True)
    return np.swapaxes(vt[:, variety.codim :, :], 1, 2)


def angle_to_subspace(vec, basis) -> np.ndarray:
    """Angle between a direction and a subspace given by an orthonormal basis."""
    v = np.asarray(vec, dtype=float)
    v = v / np.linalg.norm(v)
    proj = np.einsum("...ij,i->...j", basis, v)
    c = np.clip(np.linalg.norm(proj, axis=-1), 0.0, 1.0)
    return np.arccos(c)


def _closest_points(variety: Variety, z: np.ndarray, n_starts: int, seed: int,
                    spread: float) -> np.ndarray:
    """Candidate nearest zeros: project z and scattered perturbations."""
    rng = np.random.default_rng(seed)
    offsets = np.concatenate(
        [
            np.zeros((1, len(z))),
            spread * rng.standard_normal((n_starts - 1, len(z)))
            * rng.uniform(0.05, 1.0, (n_starts - 1, 1)),
        ]
    )
    y = _newton_project(variety, z[None, :] + offsets)
    for _ in range(120):
        d = z[None, :] - y
        J = variety.gradients(y)
        pj = np.linalg.pinv(J) @ J
        d_tan = d - (pj @ d[:, :, None])[:, :, 0]
        if np.linalg.norm(d_tan, axis=1).max() < 1e-12 * (1 + np.linalg.norm(z)):
            break
        y = y + 0.5 * d_tan
        y = _newton_project(variety, y, iters=4)
    return _newton_project(variety, y, iters=20)


def variety_distance(z, variety: Variety, n_starts: int = 24, seed: int = 0) -> float:
    """Distance from a point to the sampled zero set.

    Multistart projection followed by tangential pulls toward the query
    point; candidates whose residual misses the 1e-8 certificate are
    dropped.  Returns inf when no zero is found (empty variety).
    """
    z = np.asarray(z, dtype=float)
    rng = np.random.default_rng(seed + 7)
    scale = 1.0 + np.linalg.norm(z)
    for spread in (0.5 * scale, 2.0 * scale, 8.0 * scale):
        probe = z[None, :] + spread * rng.standard_normal((64, len(z)))
        scales = _poly_scales(variety, probe)
        y = _closest_points(variety, z, n_starts, seed, spread)
        F = np.stack([p(y) for p in variety.polys], axis=1)
        good = (np.abs(F) <= 1e-8 * np.maximum(scales[None, :], 1.0)).all(axis=1)
        if good.any():
            return float(np.linalg.norm(y[good] - z[None, :], axis=1).min())
    return math.inf


def variety_distance_lattice(z, variety: Variety, halfwidth: float,
                             spacing: float) -> float:
    """Brute-force oracle: project every lattice point near z, take the min."""
    z = np.asarray(z, dtype=float)
    axis = np.arange(-halfwidth, halfwidth + spacing / 2, spacing)
    grids = np.meshgrid(*[z[i] + axis for i in range(len(z))], indexing="ij")
    pts = np.column_stack([g.ravel() for g in grids])
    y = _newton_project(variety, pts)
    scales = _poly_scales(variety, pts)
    F = np.stack([p(y) for p in variety.polys], axis=1)
    good = (np.abs(F) <= 1e-8 * np.maximum(scales[None, :], 1.0)).all(axis=1)
    if not good.any():
        return math.inf
    return float(np.linalg.norm(y[good] - z[None, :], axis=1).min())


def neighborhood_member(z, variety: Variety, r: float) -> bool:
    return variety_distance(z, variety) <= r


# -------------------------------------------------------------- tangency


def _tube_axis_samples(tube, ball_center, ball_radius, n: int = 33):
    """Axis points of the tube inside the ball, with their times."""
    t_lo = max(0.0, ball_center[2] - ball_radius)
    t_hi = min(float(tube.R), ball_center[2] + ball_radius)
    if t_hi <= t_lo:
        return np.zeros((0, 3))
    ts = np.linspace(t_lo, t_hi, n)
    pts = np.array([list(tube.center_at(t)) + [t] for t in ts])
    inside = np.linalg.norm(pts - np.asarray(ball_center)[None, :], axis=1) <= ball_radius
    return pts[inside]


def _variety_points_near(variety: Variety, anchors: np.ndarray, window: float,
                         seed: int = 0, per_anchor: int = 12) -> np.ndarray:
    """Converged zeros seeded around the anchor points, within the window."""
    if len(anchors) == 0:
        return np.zeros((0, anchors.shape[1] if anchors.ndim == 2 else 3))
    rng = np.random.default_rng(seed)
    clouds = anchors[:, None, :] + window * rng.standard_normal(
        (len(anchors), per_anchor, anchors.shape[1])
    )
    starts = np.concatenate([anchors[:, None, :], clouds], axis=1).reshape(-1, anchors.shape[1])
    y = _newton_project(variety, starts)
    scales = _poly_scales(variety, starts)
    F = np.stack([p(y) for p in variety.polys], axis=1)
    good = (np.abs(F) <= 1e-8 * np.maximum(scales[None, :], 1.0)).all(axis=1)
    return y[good]


def _distance_to_segment_cloud(points: np.ndarray, axis_pts: np.ndarray) -> np.ndarray:
    if len(axis_pts) == 0:
        return np.full(len(points), np.inf)
    d = np.linalg.norm(points[:, None, :] - axis_pts[None, :, :], axis=2)
    return d.min(axis=1)


def classify_tube(tube, variety: Variety, ball, params: TangencyParams,
                  seed: int = 0, details: bool = False):
    """Sort a tube into tangent, transverse, or outside relative to a variety.

    Tangent requires every sampled axis point to sit inside the variety
    neighborhood (axis distance plus tube radius under the threshold) and
    every nearby variety point to have tangent space within the angle
    threshold of the tube direction, both inflated by the slack constant
    only where the source statement hides a constant.  Transverse means
    the tube meets the neighborhood inside the ball but fails a
    condition; outside means it never comes close.
    """
    ball_center, ball_radius = np.asarray(ball[0], dtype=float), float(ball[1])
    axis = _tube_axis_samples(tube, ball_center, ball_radius)
    thresh = params.distance_threshold
    if len(axis) == 0:
        label = "outside"
        report = {"label": label, "axis_samples": 0}
        return (label, report) if details else label
    dists = np.array([variety_distance(z, variety, seed=seed) for z in axis])
    meets = bool((dists <= thresh).any())
    distance_ok = bool((dists + tube.radius <= thresh).all())
    near = _variety_points_near(variety, axis, params.slack * thresh, seed=seed)
    if len(near):
        in_ball = np.linalg.norm(near - ball_center[None, :], axis=1) <= ball_radius
        near_tube = _distance_to_segment_cloud(near, axis) <= params.slack * thresh
        near = near[in_ball & near_tube]
    if len(near):
        bases = _tangent_bases(variety, near)
        angles = angle_to_subspace(np.asarray(tube.direction()), bases)
        worst_angle = float(angles.max())
    else:
        worst_angle = 0.0
    angle_ok = worst_angle <= params.slack * params.angle_threshold
    if distance_ok and angle_ok:
        label = "tangent"
    elif meets:
        label = "transverse"
    else:
        label = "outside"
    report = {
        "label": label,
        "axis_samples": int(len(axis)),
        "max_axis_distance": float(dists.max()),
        "min_axis_distance": float(dists.min()),
        "distance_threshold": thresh,
        "worst_angle": worst_angle,
        "angle_threshold": params.slack * params.angle_threshold,
        "slack": params.slack,
        "nearby_variety_samples": int(len(near)),
    }
    return (label, report) if details else label


# ------------------------------------------------------------ the covers


def transverse_ball_cover(tube, variety: Variety, alpha: float,
                          n_axis: int = 65, per_point: int = 24,
                          seed: int = 0) -> list:
    """Greedy cover of the steep part of the variety inside the tube.

    Samples the variety through clouds seeded along the tube, keeps
    points inside the tube whose tangent space makes an angle above
    alpha with the tube direction, and covers them greedily with balls
    of radius 4 r / alpha.
    """
    if alpha > math.pi / 2:
        return []
    ts = np.linspace(0.0, float(tube.R), n_axis)
    axis = np.array([list(tube.center_at(t)) + [t] for t in ts])
    pts = _variety_points_near(variety, axis, 2.0 * tube.radius, seed=seed,
                               per_anchor=per_point)
    if len(pts) == 0:
        return []
    inside = np.array([tube.contains((p[0], p[1]), p[2], dilate=1.0) for p in pts])
    pts = pts[inside]
    if len(pts) == 0:
        return []
    bases = _tangent_bases(variety, pts)
    angles = angle_to_subspace(np.asarray(tube.direction()), bases)
    steep = pts[angles > alpha]
    if len(steep) == 0:
        return []
    radius = 4.0 * tube.radius / alpha
    order = np.lexsort((steep[:, 0], steep[:, 1], steep[:, 2]))
    steep = steep[order]
    covered = np.zeros(len(steep), dtype=bool)
    balls = []
    while not covered.all():
        i = int(np.nonzero(~covered)[0][0])
        center = steep[i]
        balls.append((tuple(float(c) for c in center), radius))
        covered |= np.linalg.norm(steep - center[None, :], axis=1) <= radius
    return balls


def translate_cover(variety: Variety, R: float, rho: float,
                    params: TangencyParams, anchor=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Shift vectors tiling the fat neighborhood by thin translates.

    Shifts march along the variety normal at the anchor's projection with
    spacing twice the thin thickness rho^(1/2+delta2), out to the fat
    reach R^(1/2+delta2), so consecutive translated neighborhoods abut
    without overlap; rho = R collapses to the single zero shift.
    """
    if rho > R:
        raise ValueError("rho must not exceed R")
    reach = R ** (0.5 + params.delta2)
    thin = rho ** (0.5 + params.delta2)
    spacing = 2.0 * thin
    z0 = _newton_project(variety, np.asarray(anchor, dtype=float)[None])[0]
    g = variety.gradients(z0[None])[0, 0]
    normal = g / np.linalg.norm(g)
    k_max = int(math.floor(reach / spacing))
    ks = np.arange(-k_max, k_max + 1)
    return ks[:, None] * spacing * normal[None, :]


def perturb_to_tci(part, mass, eta: float = 0.05, seed: int = 0,
                   sample_budget: int = 300) -> "SignCellPartition":
    """Shift the partition factors until every level is a certified
    transverse intersection and no cell loses more than 2 eta of its mass.

    Zero shifts are tried first; afterwards shifts are drawn uniformly
    from a box whose size halves on every failure, up to 20 halvings.
    """
    base = part.cell_masses(mass)
    base.pop("wall")
    box_c, box_h = _mass_box(mass)
    rng = np.random.default_rng(seed)
    scales = []
    for q in part.factors:
        vals = q(mass.points)
        scales.append(max(float(np.sqrt(np.mean(vals**2))), 1e-12))
    sigma = 0.05 * np.asarray(scales)
    for attempt in range(21):
        if attempt == 0:
            shifts = np.zeros(part.s)
        else:
            shifts = rng.uniform(-1.0, 1.0, part.s) * sigma
            sigma = sigma / 2.0
        cand = part.with_shifts(part.shifts + shifts)
        certs = [
            tci_certificate(Variety([q]), sample_budget, box_c, box_h,
                            seed=seed + 101 * l)
            for l, q in enumerate(cand.shifted_factors())
        ]
        if not all(c["passed"] for c in certs):
            continue
        after = cand.cell_masses(mass)
        wall_after = after.pop("wall")
        degraded = any(
            after[cell] < (1.0 - 2.0 * eta) * base[cell]
            for cell in base
            if base[cell] > 0.0
        )
        if not degraded and wall_after <= 1e-9 * mass.total:
            return cand
    raise RuntimeError(
        "no shift kept the cells certified and full after 20 halvings "
        "(mass concentrated on the walls)"
    )


def _mass_box(mass):
    lo = mass.points.min(axis=0)
    hi = mass.points.max(axis=0)
    center = 0.5 * (lo + hi)
    halfwidth = float(0.5 * (hi - lo).max()) or 1.0
    return tuple(center), halfwidth
