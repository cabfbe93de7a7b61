"""Built-in health checks for the frame, partition, and geometry modules.

Each runner exercises its module on canned deterministic instances and
returns a JSON-ready dict: measured quantities, the bound each one is
held to, and an overall "ok".  The command line exposes them so a fresh
install can be validated without the test suite.
"""

from __future__ import annotations

import hashlib
import json
import math

import numpy as np

from .gridfield import make_band_limited_random
from .packets import PacketParams, Tube, decompose, localization_report, reconstruct
from .polys import (
    MassFunction,
    MultiPoly,
    exponent_array,
    level_degrees,
    partition,
)
from .varieties import (
    TangencyParams,
    Variety,
    classify_tube,
    perturb_to_tci,
    tci_certificate,
    translate_cover,
    transverse_ball_cover,
    variety_distance,
)

__all__ = ["packets_check", "partition_check", "geometry_check"]


def _stamp(params: dict) -> dict:
    blob = json.dumps(params, sort_keys=True)
    return {"params": params,
            "params_hash": hashlib.sha256(blob.encode()).hexdigest()[:16]}


def _poly(degree, terms, n_vars=3) -> MultiPoly:
    exps = exponent_array(degree, n_vars)
    lookup = {tuple(e): i for i, e in enumerate(exps)}
    coeffs = np.zeros(len(exps))
    for e, c in terms.items():
        coeffs[lookup[e]] = c
    return MultiPoly(n_vars, degree, coeffs)


def _cluster_mass(seed: int, n_clusters: int = 5, per: int = 60) -> MassFunction:
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-6, 6, (n_clusters, 3))
    pts = np.concatenate([c + 0.5 * rng.standard_normal((per, 3))
                          for c in centers])
    return MassFunction(pts, rng.uniform(0.5, 1.5, len(pts)))


# ------------------------------------------------------------- packets


def packets_check(R: int = 64, seeds=(1, 2, 3), loc_R: int = 256) -> dict:
    """Frame exactness and tube localization at the shipped defaults."""
    params = PacketParams(R=R)
    roundtrip = []
    ratios = []
    for seed in seeds:
        f = make_band_limited_random(R, seed=seed)
        ps = decompose(f, params)
        g = reconstruct(ps)
        roundtrip.append(float(np.linalg.norm(g.data - f.data)
                               / np.linalg.norm(f.data)))
        ratios.append(ps.frame_ratio(f.l2_norm()))
    ratio_drift = max(ratios) / min(ratios) - 1.0
    loc_params = PacketParams(R=loc_R)
    theta = tuple(loc_params.theta_centers()[0])
    loc = localization_report(loc_params, theta, (0.0, 0.0), n_times=17)
    checks = {
        "roundtrip_worst": {"value": max(roundtrip), "bound": 1e-3},
        "frame_ratio_drift": {"value": ratio_drift, "bound": 0.10},
        "tube_energy_fraction": {"value": loc["frac_T"], "bound": 0.99,
                                 "direction": "at_least"},
        "doubled_tube_fraction": {"value": loc["frac_2T"], "bound": 0.9999,
                                  "direction": "at_least"},
        "exterior_sup_scaled": {"value": loc["sup_outside_2T_scaled"],
                                "bound": 1e-3},
    }
    ok = all(
        c["value"] >= c["bound"] if c.get("direction") == "at_least"
        else c["value"] <= c["bound"]
        for c in checks.values()
    )
    return {"name": "packets", "ok": bool(ok), "checks": checks,
            "roundtrip_by_seed": roundtrip, "frame_ratios": ratios,
            **_stamp({"R": R, "seeds": list(seeds), "loc_R": loc_R})}


# ------------------------------------------------------------ partition


def partition_check(seeds=(11, 29), degrees=(2, 4, 8), eta: float = 0.05) -> dict:
    """Cell counts, mass floors, conservation, and certified perturbations."""
    runs = []
    ok = True
    for seed in seeds:
        mass = _cluster_mass(seed)
        for D in degrees:
            part = partition(mass, D=D, eta=eta, seed=0)
            s = part.s
            cells = part.cell_masses(mass)
            wall = cells.pop("wall")
            floor = (1 - eta) ** s * 2.0**-s * mass.total
            conserved = abs(sum(cells.values()) - mass.total)
            fixed = perturb_to_tci(part, mass, eta=eta, seed=0)
            after = fixed.cell_masses(mass)
            after.pop("wall")
            degradation = max(
                (cells[c] - after[c]) / cells[c] for c in cells)
            certified = all(
                tci_certificate(Variety([q]), 200, (0, 0, 0), 8.0)["passed"]
                for q in fixed.shifted_factors())
            run = {
                "seed": seed, "D": D, "s": s,
                "n_cells": part.n_cells,
                "expected_cells": 2**s,
                "wall_mass": wall,
                "min_cell_over_floor": min(cells.values()) / floor,
                "conservation_error": conserved / mass.total,
                "perturb_degradation": degradation,
                "tci_certified": bool(certified),
            }
            run_ok = (part.n_cells == 2**s and wall == 0.0
                      and run["min_cell_over_floor"] >= 1.0
                      and run["conservation_error"] <= 1e-9
                      and degradation <= 2 * eta and certified
                      and s == len(level_degrees(D))
                      and part.total_degree <= D)
            run["ok"] = bool(run_ok)
            ok = ok and run_ok
            runs.append(run)
    return {"name": "partition", "ok": bool(ok), "runs": runs,
            **_stamp({"seeds": list(seeds), "degrees": list(degrees),
                      "eta": eta})}


# ------------------------------------------------------------- geometry


def geometry_check() -> dict:
    """Transversality, distance closed forms, tangency labels, covers."""
    paraboloid = _poly(2, {(0, 0, 1): 1.0, (2, 0, 0): -1.0, (0, 2, 0): -1.0})
    plane_x1 = _poly(1, {(1, 0, 0): 1.0})
    sphere = _poly(2, {(2, 0, 0): 1.0, (0, 2, 0): 1.0, (0, 0, 2): 1.0,
                       (0, 0, 0): -1.0})
    degenerate = plane_x1 * plane_x1
    params = TangencyParams(eps=0.09, R=256.0, m=2)
    ball = ((0.0, 0.0, 128.0), 160.0)

    tci_good = tci_certificate(Variety([paraboloid]), 400, (0, 0, 0), 4.0)
    tci_bad = tci_certificate(Variety([degenerate]), 400, (0, 0, 0), 4.0)

    dist_plane = variety_distance(np.array([3.0, 0.0, 0.0]),
                                  Variety([plane_x1]))
    dist_sphere = variety_distance(np.array([2.0, 0.0, 0.0]),
                                   Variety([sphere]))
    dist_apex = variety_distance(np.array([0.0, 0.0, 1.0]),
                                 Variety([paraboloid]))
    apex_true = math.sqrt(3.0) / 2.0

    labels = {
        "in_plane": classify_tube(Tube((0.0, 0.0), (0.0, 3.0), 256,
                                       params.delta),
                                  Variety([plane_x1]), ball, params),
        "crossing": classify_tube(Tube((0.5, 0.0), (60.0, 0.0), 256,
                                       params.delta),
                                  Variety([plane_x1]), ball, params),
        "far": classify_tube(Tube((0.0, 0.0), (0.0, 3.0), 256, params.delta),
                             Variety([_poly(1, {(1, 0, 0): 1.0,
                                                (0, 0, 0): -4000.0})]),
                             ball, params),
    }

    rng = np.random.default_rng(44)
    worst_cover = 0
    D = 3
    for trial in range(4):
        theta = tuple(rng.uniform(-0.2, 0.2, 2))
        tube = Tube(theta, tuple(rng.uniform(-20, 20, 2)), 256, params.delta)
        prod = None
        for _ in range(D):
            nrm = np.array([0.0, 0.0, 1.0]) + 0.25 * rng.standard_normal(3)
            nrm /= np.linalg.norm(nrm)
            t_k = rng.uniform(20, 236)
            pt = np.array(list(tube.center_at(t_k)) + [t_k])
            sheet = _poly(1, {(1, 0, 0): nrm[0], (0, 1, 0): nrm[1],
                              (0, 0, 1): nrm[2],
                              (0, 0, 0): -float(nrm @ pt)})
            prod = sheet if prod is None else prod * sheet
        balls = transverse_ball_cover(tube, Variety([prod]), alpha=1.2,
                                      seed=trial)
        worst_cover = max(worst_cover, len(balls))

    shifts = translate_cover(Variety([plane_x1]), R=256.0, rho=1.0,
                             params=params)
    reach = 256.0 ** (0.5 + params.delta2)

    checks = {
        "tci_paraboloid_passed": {"value": bool(tci_good["passed"]),
                                  "bound": True},
        "tci_degenerate_rejected": {"value": bool(not tci_bad["passed"]),
                                    "bound": True},
        "distance_plane_error": {"value": abs(dist_plane - 3.0),
                                 "bound": 1e-8},
        "distance_sphere_error": {"value": abs(dist_sphere - 1.0),
                                  "bound": 1e-8},
        "distance_apex_error": {"value": abs(dist_apex - apex_true),
                                "bound": 1e-8},
        "label_in_plane": {"value": labels["in_plane"], "bound": "tangent"},
        "label_crossing": {"value": labels["crossing"],
                           "bound": "transverse"},
        "label_far": {"value": labels["far"], "bound": "outside"},
        "cover_count_worst": {"value": worst_cover, "bound": D**3},
        "translate_count": {"value": len(shifts),
                            "bound": [reach / 2, 2 * reach],
                            "direction": "within"},
    }
    ok = True
    for c in checks.values():
        if c.get("direction") == "within":
            lo, hi = c["bound"]
            ok = ok and lo <= c["value"] <= hi
        elif isinstance(c["bound"], (bool, str)):
            ok = ok and c["value"] == c["bound"]
        else:
            ok = ok and c["value"] <= c["bound"]
    return {"name": "geometry", "ok": bool(ok), "checks": checks,
            **_stamp({"suite": "canned", "trials": 4, "D": D})}
