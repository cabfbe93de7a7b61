"""Core grid, transform and propagation checks.

The frozen complex values below were produced by an out-of-package direct
mode summation over the documented field recipe (R=8, seed=3, band 0.5..2),
evaluated with plain numpy loops.  They pin both the RNG recipe and the
evolution convention.
"""

import math

import numpy as np
import pytest

from maxwave.gridfield import (
    GridField,
    ball_mask,
    focusing_field,
    make_band_limited_random,
    maximal_field,
    parabolic_rescale,
    propagate,
    propagate_oracle,
    region_lp_norm,
    time_grid,
)

# direct-sum values of u(x, t=2.5) for the R=8 seed-3 field
FROZEN_T = 2.5
FROZEN_POINTS = np.array([[-3.7, 5.21], [0.0, 0.0], [11.035, -14.6]])
FROZEN_VALUES = np.array(
    [
        -5.2079424589929479e-03 - 2.1850092151223251e-02j,
        9.3377023845256091e-03 - 5.2212336585494559e-03j,
        2.2909228691367155e-02 - 1.6240939301301799e-02j,
    ]
)
FROZEN_CORNER = -3.1239622549998590e-02 + 3.2718993290959411e-02j


def test_oracle_matches_frozen_direct_sum():
    f = make_band_limited_random(8, seed=3)
    got = propagate_oracle(f, FROZEN_T, FROZEN_POINTS)
    assert np.abs(got - FROZEN_VALUES).max() < 1e-13
    assert abs(f.data[0, 0] - FROZEN_CORNER) < 1e-13


def test_fft_propagation_matches_frozen_values_on_grid():
    # the corner (0,0) sample sits at x = (-L, -L); t-evolve and compare the
    # origin sample, which is a grid point, against the direct sum
    f = make_band_limited_random(8, seed=3)
    u = propagate(f, FROZEN_T)
    i0 = f.n // 2  # x = 0
    assert abs(u.data[i0, i0] - FROZEN_VALUES[1]) < 1e-13


def test_coefficient_roundtrip():
    f = make_band_limited_random(8, seed=11)
    g = GridField.from_coefficients(f.coefficients(), f.half_side)
    assert np.abs(g.data - f.data).max() < 1e-14


def test_unit_norm_and_parseval():
    for seed in (0, 1, 2):
        f = make_band_limited_random(8, seed=seed)
        assert abs(f.l2_norm() - 1.0) < 1e-12
        c = f.coefficients()
        assert abs(2.0 * f.half_side * np.linalg.norm(c) - 1.0) < 1e-12
        assert abs(region_lp_norm(f.data, 2, f.half_side) - f.l2_norm()) < 1e-12


def test_propagation_is_unitary_and_a_group():
    f = make_band_limited_random(8, seed=5)
    u = propagate(f, 0.7)
    assert abs(u.l2_norm() - f.l2_norm()) < 1e-12
    two_step = propagate(propagate(f, 0.3), 0.4)
    assert np.abs(two_step.data - u.data).max() < 1e-13
    back = propagate(u, -0.7)
    assert np.abs(back.data - f.data).max() < 1e-13


def test_oracle_agrees_with_fft_at_grid_points():
    rng = np.random.default_rng(42)
    for seed in range(3):
        f = make_band_limited_random(8, seed=seed)
        u = propagate(f, 1.3)
        idx = rng.integers(0, f.n, size=(25, 2))
        pts = np.stack(
            [f.axis_coords()[idx[:, 0]], f.axis_coords()[idx[:, 1]]], axis=1
        )
        vals = propagate_oracle(f, 1.3, pts)
        assert np.abs(vals - u.data[idx[:, 0], idx[:, 1]]).max() < 1e-12


def _gaussian_field(R, x0, xi0, s0):
    n, L = 4 * R, 2.0 * R
    x = -L + np.arange(n)
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    g = np.exp(-((X1 - x0[0]) ** 2 + (X2 - x0[1]) ** 2) / (2 * s0**2))
    g = g * np.exp(1j * (X1 * xi0[0] + X2 * xi0[1]))
    return GridField(g, L), X1, X2


def test_gaussian_packet_drift_and_spread():
    # modulated Gaussian: centre moves to x0 - 2 t xi0, width obeys
    # s(t)^2 = s0^2 + 4 t^2 / s0^2 (variance of |u|^2 per axis is s(t)^2/2)
    s0, t = 4.0, 3.0
    x0, xi0 = np.array([10.0, -6.0]), np.array([0.7, -0.4])
    gf, X1, X2 = _gaussian_field(32, x0, xi0, s0)
    u = propagate(gf, t)
    w = np.abs(u.data) ** 2
    w /= w.sum()
    mean = np.array([(w * X1).sum(), (w * X2).sum()])
    assert np.abs(mean - (x0 - 2 * t * xi0)).max() < 1e-8
    var = ((w * (X1 - mean[0]) ** 2).sum(), (w * (X2 - mean[1]) ** 2).sum())
    pred = (s0**2 + 4 * t**2 / s0**2) / 2.0
    assert abs(var[0] - pred) < 1e-6 and abs(var[1] - pred) < 1e-6


def test_maximal_field_dominates_each_slice_and_is_monotone():
    f = make_band_limited_random(8, seed=7)
    times = time_grid(4.0, 0.5)
    m_few = maximal_field(f, times[: len(times) // 2])
    m_all = maximal_field(f, times)
    assert (m_all >= m_few - 1e-12).all()
    u = propagate(f, times[3])
    assert (m_all >= np.abs(u.data) - 1e-12).all()


def test_maximal_field_single_precision_tracks_double():
    f = make_band_limited_random(16, seed=1)
    times = time_grid(8.0, 1.0)
    m64 = maximal_field(f, times)
    m32 = maximal_field(f, times, single_precision=True)
    assert np.abs(m32 - m64).max() < 1e-5 * m64.max()


def test_region_norm_ball_and_sup():
    f = make_band_limited_random(8, seed=2)
    full = region_lp_norm(f.data, 2, f.half_side)
    half = region_lp_norm(f.data, 2, f.half_side, radius=f.half_side / 2)
    assert half < full
    sup = region_lp_norm(f.data, math.inf, f.half_side)
    assert abs(sup - np.abs(f.data).max()) == 0.0
    # wraparound: ball at a corner picks up mass from all four quadrants
    m = ball_mask(f.n, f.half_side, center=(-f.half_side, -f.half_side), radius=3.0)
    pts = np.argwhere(m)
    assert (pts.min(axis=0) == 0).all() and (pts.max(axis=0) == f.n - 1).all()


def test_parabolic_rescale_norm_relation_is_exact():
    # same samples, dilated grid: the maximal-ratio identity holds to
    # rounding because both sides are literally the same sums
    R, lam, p = 16, 4.0, 3.2
    f = make_band_limited_random(R, seed=9)
    g, rel = parabolic_rescale(f, lam)
    assert g.spacing == lam * f.spacing
    times = time_grid(2.0, 0.25)
    m_f = maximal_field(f, times)
    m_g = maximal_field(g, rel.t_scale * times)
    assert np.abs(m_g - m_f).max() < 1e-12  # pointwise identical fields
    nf = region_lp_norm(m_f, p, f.half_side, radius=10.0)
    ng = region_lp_norm(m_g, p, g.half_side, radius=lam * 10.0)
    assert abs(ng - rel.sup_norm_scale(p) * nf) < 1e-12 * max(ng, 1.0)
    assert abs(g.l2_norm() - rel.l2_scale * f.l2_norm()) < 1e-12


def test_focusing_field_peaks_at_origin():
    f = focusing_field(16)
    i0 = f.n // 2
    peak = abs(f.data[i0, i0])
    assert peak == np.abs(f.data).max()
    assert peak > 10 * np.median(np.abs(f.data))


def test_travelling_gaussian_stays_in_its_tube():
    # sup over 0 <= t <= R of a width-sqrt(R) packet concentrates along
    # x0 - 2 t xi0; by t = R the width has dispersed to sqrt(5R), so "far"
    # means beyond R in the transverse direction
    R = 64
    s0 = math.sqrt(R)
    xi0 = np.array([0.25, 0.0])
    gf, X1, X2 = _gaussian_field(R, np.array([R / 2.0, 0.0]), xi0, s0)
    times = time_grid(float(R), 4.0)
    m = maximal_field(gf, times)
    x = gf.axis_coords()
    track = R / 2.0 - 2.0 * xi0[0] * times
    on_rows = (np.abs(x[:, None] - track[None, :]) < 2).any(axis=1)
    on_track = m[on_rows][:, np.abs(x) < 2]
    far = m[np.abs(X2) > R]
    assert on_track.min() > 10 * far.max()


def test_time_grid_covers_horizon():
    t = time_grid(4.0, 0.5)
    assert t[0] == 0.0 and t[-1] == 4.0 and len(t) == 9
    t2 = time_grid(4.0, 0.5, include_zero=False)
    assert t2[0] == 0.5 and len(t2) == 8
