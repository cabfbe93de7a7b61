"""Dense multivariate polynomials, mass bisection, and sign-cell partitions."""

import json
import math

import numpy as np
import pytest

from maxwave.polys import (
    MassFunction,
    MultiPoly,
    SignCellPartition,
    bisecting_poly,
    cells_crossed_by_line,
    exponent_array,
    level_degrees,
    partition,
    poly_space_dim,
    random_poly,
    side_masses,
)


def poly_from_terms(degree, terms, n_vars=3):
    exps = exponent_array(degree, n_vars)
    lookup = {tuple(e): i for i, e in enumerate(exps)}
    coeffs = np.zeros(len(exps))
    for e, c in terms.items():
        coeffs[lookup[e]] = c
    return MultiPoly(n_vars, degree, coeffs)


def cluster_mass(seed=11, n_clusters=5, per=60):
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-6, 6, (n_clusters, 3))
    pts = np.concatenate([c + 0.5 * rng.standard_normal((per, 3)) for c in centers])
    return MassFunction(pts, rng.uniform(0.5, 1.5, len(pts)))


# ----------------------------------------------------------- polynomials


def test_poly_space_dim_values():
    assert poly_space_dim(1, 2) == 4
    assert poly_space_dim(2, 2) == 10
    assert poly_space_dim(0, 5) == 1
    assert poly_space_dim(3, 2) == 20


def test_exponents_graded_then_lex():
    exps = [tuple(e) for e in exponent_array(2, 2)]
    assert exps == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    grades = [sum(e) for e in exponent_array(3, 3)]
    assert grades == sorted(grades)
    assert len(exponent_array(3, 3)) == poly_space_dim(3, 2)


def test_evaluation_matches_monomial_sum():
    p = random_poly(3, 3, seed=2)
    rng = np.random.default_rng(5)
    pts = rng.uniform(-2, 2, (40, 3))
    exps = exponent_array(3, 3)
    direct = sum(
        c * np.prod(pts ** np.asarray(e)[None, :], axis=1)
        for c, e in zip(p.coeffs, exps)
    )
    assert np.allclose(p(pts), direct, rtol=1e-13, atol=1e-13)


@pytest.mark.parametrize("degree", [1, 2, 3, 4])
def test_gradient_matches_finite_differences(degree):
    h = 1e-6
    for seed in range(20):
        p = random_poly(degree, 3, seed=seed)
        rng = np.random.default_rng(100 + seed)
        pts = rng.uniform(-1.5, 1.5, (8, 3))
        grad = p.gradient(pts)
        for axis in range(3):
            step = np.zeros(3)
            step[axis] = h
            fd = (p(pts + step) - p(pts - step)) / (2 * h)
            assert np.allclose(grad[:, axis], fd, rtol=1e-5, atol=1e-5)


def test_add_mul_shift():
    p = random_poly(2, 3, seed=1)
    q = random_poly(3, 3, seed=2)
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1, 1, (30, 3))
    assert np.allclose((p + q)(pts), p(pts) + q(pts), rtol=1e-13)
    assert np.allclose((p * q)(pts), p(pts) * q(pts), rtol=1e-12)
    assert np.allclose((p * 2.5)(pts), 2.5 * p(pts), rtol=1e-13)
    assert np.allclose(p.shift(0.7)(pts), p(pts) + 0.7, rtol=1e-13)
    assert (p * q).degree == 5


def test_restrict_to_line_exact():
    p = random_poly(4, 3, seed=3)
    origin = np.array([0.4, -1.1, 0.2])
    direction = np.array([1.0, 2.0, -0.5])
    coeffs = p.restrict_to_line(origin, direction)
    us = np.linspace(-3, 3, 41)
    line_vals = np.polynomial.polynomial.polyval(us, coeffs)
    direct = p(origin[None, :] + us[:, None] * direction[None, :])
    assert np.allclose(line_vals, direct, rtol=1e-11, atol=1e-11)


def test_poly_json_roundtrip():
    p = random_poly(3, 3, seed=9)
    doc = json.loads(json.dumps(p.to_dict()))
    q = MultiPoly.from_dict(doc)
    assert q.n_vars == p.n_vars and q.degree == p.degree
    assert np.array_equal(q.coeffs, p.coeffs)


def test_coefficient_length_validated():
    with pytest.raises(ValueError):
        MultiPoly(3, 2, np.zeros(9))


# -------------------------------------------------------- mass functions


def test_mass_function_total_and_restrict():
    m = MassFunction(np.arange(12.0).reshape(4, 3), np.array([1.0, 2.0, 3.0, 4.0]))
    assert m.total == 10.0
    sub = m.restrict(np.array([True, False, True, False]))
    assert sub.total == 4.0 and len(sub.points) == 2


def test_mass_function_validation():
    with pytest.raises(ValueError):
        MassFunction(np.zeros((3, 3)), np.array([1.0, -1.0, 1.0]))
    with pytest.raises(ValueError):
        MassFunction(np.zeros((3, 3)), np.ones(4))


def test_side_masses_exclude_zeros():
    p = poly_from_terms(1, {(1, 0, 0): 1.0})
    pts = np.array([[-1.0, 0, 0], [2.0, 0, 0], [0.0, 5.0, 1.0]])
    m = MassFunction(pts, np.array([1.0, 2.0, 4.0]))
    pos, neg = side_masses(p, m)
    assert pos == 2.0 and neg == 1.0


# ------------------------------------------------------------- bisection


def test_bisect_single_mass_exact_split():
    rng = np.random.default_rng(4)
    pts = rng.standard_normal((400, 3))
    m = MassFunction(np.concatenate([pts, -pts]), np.ones(800))
    p = bisecting_poly([m], n=2, eta=0.05, seed=0)
    assert p.degree == 1
    pos, neg = side_masses(p, m)
    assert abs(pos - neg) <= 1e-8 * m.total


def test_bisect_three_masses_shared_poly():
    rng = np.random.default_rng(7)
    masses = [
        MassFunction(c + 0.4 * rng.standard_normal((80, 3)), np.ones(80))
        for c in ([-4.0, 0, 0], [3.0, 2.0, 0], [0.0, -3.0, 2.0])
    ]
    p = bisecting_poly(masses, n=2, eta=0.05, seed=0)
    assert p.degree == 2
    assert p.degree <= math.ceil(2 * 3 ** (1 / 3)) + 1
    for m in masses:
        pos, neg = side_masses(p, m)
        assert abs(pos - neg) <= 0.05 * m.total
        assert abs(pos + neg - m.total) <= 1e-12 * m.total


def test_bisect_degree_cap_five_masses():
    rng = np.random.default_rng(8)
    masses = [
        MassFunction(rng.uniform(-5, 5, 3) + 0.3 * rng.standard_normal((50, 3)),
                     np.ones(50))
        for _ in range(5)
    ]
    p = bisecting_poly(masses, n=2, eta=0.05, seed=1)
    assert p.degree <= math.ceil(2 * 5 ** (1 / 3)) + 1


def test_bisect_single_atom_fails():
    m = MassFunction(np.array([[1.0, 2.0, 3.0]]), np.array([1.0]))
    with pytest.raises(RuntimeError, match="atom"):
        bisecting_poly([m], n=2, eta=0.05, seed=0)


def test_bisect_unbalanced_atoms_report_residual():
    m = MassFunction(np.array([[0.0, 0, 0], [1.0, 0, 0]]), np.array([3.0, 1.0]))
    with pytest.raises(RuntimeError, match="residual"):
        bisecting_poly([m], n=2, eta=0.05, seed=0)


# ------------------------------------------------------------- partition


def test_level_degrees_schedule():
    assert level_degrees(2) == [1]
    assert level_degrees(4) == [1, 2]
    assert level_degrees(8) == [1, 2, 2, 2]
    for D in range(2, 40):
        degs = level_degrees(D)
        assert sum(degs) <= D
        assert all(d == math.ceil(2 ** (l / 3)) for l, d in enumerate(degs))


@pytest.mark.parametrize("D", [2, 4, 8])
def test_partition_cell_guarantees(D):
    eta = 0.05
    mass = cluster_mass()
    part = partition(mass, D=D, eta=eta, seed=0)
    s = part.s
    assert s == len(level_degrees(D))
    assert part.n_cells == 2**s
    assert part.total_degree <= D
    cells = part.cell_masses(mass)
    wall = cells.pop("wall")
    assert wall == 0.0
    floor = (1 - eta) ** s * 2.0**-s * mass.total
    assert min(cells.values()) >= floor
    assert abs(sum(cells.values()) - mass.total) <= 1e-9 * mass.total


def test_partition_rejects_degree_below_two():
    with pytest.raises(ValueError):
        partition(cluster_mass(), D=1)


def test_partition_json_roundtrip():
    mass = cluster_mass()
    part = partition(mass, D=4, eta=0.05, seed=0)
    doc = json.loads(json.dumps(part.to_dict()))
    back = SignCellPartition.from_dict(doc)
    assert back.s == part.s
    assert np.array_equal(back.shifts, part.shifts)
    before = part.cell_masses(mass)
    after = back.cell_masses(mass)
    assert before == after


def test_cell_points_select_members():
    mass = cluster_mass()
    part = partition(mass, D=4, eta=0.05, seed=0)
    cells = part.cell_masses(mass)
    cells.pop("wall")
    got = sum(part.cell_points(mass, c).total for c in cells)
    assert abs(got - mass.total) <= 1e-9 * mass.total


# ---------------------------------------------------------- line crossing


def test_cells_crossed_at_most_degree_plus_one():
    mass = cluster_mass()
    part = partition(mass, D=8, eta=0.05, seed=0)
    rng = np.random.default_rng(21)
    worst = 0
    for _ in range(200):
        origin = rng.uniform(-8, 8, 3)
        direction = rng.standard_normal(3)
        worst = max(worst, cells_crossed_by_line(part, origin, direction))
    assert worst <= part.total_degree + 1 <= 9


def test_cells_crossed_matches_dense_scan():
    mass = cluster_mass()
    part = partition(mass, D=4, eta=0.05, seed=0)
    rng = np.random.default_rng(33)
    span = 60.0
    us = np.linspace(-span, span, 100001)
    for _ in range(20):
        origin = rng.uniform(-6, 6, 3)
        direction = rng.standard_normal(3)
        direction /= np.linalg.norm(direction)
        pts = origin[None, :] + us[:, None] * direction[None, :]
        signs = part.sign_vectors(pts)
        full = signs[(signs != 0).all(axis=1)]
        dense = len(np.unique(full, axis=0))
        assert cells_crossed_by_line(part, origin, direction, span=span) == dense


def test_vertical_line_through_plane_factor():
    p = poly_from_terms(1, {(0, 0, 1): 1.0, (0, 0, 0): -5.0})
    part = SignCellPartition([p])
    n = cells_crossed_by_line(part, (0.0, 0.0, 0.0), (0.0, 0.0, 1.0))
    assert n == 2
    sideways = cells_crossed_by_line(part, (0.0, 0.0, 0.0), (1.0, 0.0, 0.0))
    assert sideways == 1
