"""Experiment drivers: exponent scans and growth checks at dyadic scales.

Three reproducible experiments share one configuration record:

  * `exponent_scan` measures the maximal-function ratio
    ||sup_t |u|||_{L^p(B_R)} / ||f||_2 across scales for a seeded random
    ensemble plus the focusing candidate, fits the log-log slope, and
    carries a single-plane-wave control whose exact slope is 2/p.
  * `part_a_check` builds single-direction fields (spectrum in one cap
    of radius 1/(K M) with K M near sqrt R), measures the growth of the
    p-th power of the broad norm, and compares the fitted slope to
    (3 - p)/2.
  * `reduction_demo` runs the broad/narrow domination certificate on
    fixed fields and reports the measured split cell by cell.

Random ensembles give lower-bound evidence for sup-over-f quantities;
every report records measured margins rather than asserting inequalities.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.fft

from .broad import (
    BroadParams,
    _norm_p_power,
    broad_data,
    broad_vs_full_decomposition,
    caps,
    decomposition_certificate,
    make_ball_random,
)
from .gridfield import (
    GridField,
    focusing_field,
    make_band_limited_random,
    maximal_field,
    region_lp_norm,
    time_grid,
)

__all__ = [
    "ExperimentConfig",
    "ScanResult",
    "band_block",
    "config_hash",
    "exponent_scan",
    "part_a_check",
    "plane_wave_field",
    "reduction_demo",
    "survey_max_ratio",
    "worker_count",
]

FOCUSING_SEED = -1


def worker_count() -> int:
    """FFT worker budget: cpu count capped by MAXWAVE_THREADS when set."""
    cpus = os.cpu_count() or 1
    cap = os.environ.get("MAXWAVE_THREADS", "")
    if cap.strip():
        return max(1, min(cpus, int(cap)))
    return cpus


@dataclass(frozen=True)
class ExperimentConfig:
    """Shared experiment settings; every field is echoed into the outputs."""

    radii: tuple = (64, 128, 256, 512)
    p: float = 3.2
    q: float = 4.0
    K: int = None
    M: float = 1.0
    A: int = 2
    seeds: tuple = (1, 2)
    include_focusing: bool = True
    dt: float = 0.125
    grid: str = "band"
    single_precision: bool = True
    band: tuple = (0.5, 2.0)

    def __post_init__(self):
        object.__setattr__(self, "radii", tuple(int(R) for R in self.radii))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "band", tuple(float(b) for b in self.band))
        if not self.radii or any(R <= 0 for R in self.radii):
            raise ValueError("radii must be positive")
        if list(self.radii) != sorted(set(self.radii)):
            raise ValueError("radii must be strictly increasing")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.grid not in ("band", "full"):
            raise ValueError("grid must be 'band' or 'full'")
        if self.p < 1 or self.q < 1:
            raise ValueError("p and q must be at least 1")
        if FOCUSING_SEED in self.seeds:
            raise ValueError("seed -1 is reserved for the focusing field")

    def as_dict(self) -> dict:
        return {
            "radii": list(self.radii),
            "p": self.p,
            "q": self.q,
            "K": self.K,
            "M": self.M,
            "A": self.A,
            "seeds": list(self.seeds),
            "include_focusing": self.include_focusing,
            "dt": self.dt,
            "grid": self.grid,
            "single_precision": self.single_precision,
            "band": list(self.band),
        }

    def ensemble_seeds(self) -> tuple:
        extra = (FOCUSING_SEED,) if self.include_focusing else ()
        return self.seeds + extra


def config_hash(config: ExperimentConfig) -> str:
    blob = json.dumps(config.as_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


# ------------------------------------------------------------ the survey


def band_block(f: GridField, band_max: float = 2.0, guard: int = 2) -> GridField:
    """Same function on the smallest fast grid holding the frequency band.

    Band-limited fields are resolved exactly by any grid whose Nyquist box
    contains their modes, so this is a lossless change of sample density;
    norms and propagated values are preserved to machine precision.
    """
    n = f.n
    kmax = int(band_max * f.half_side / math.pi) + guard
    m = scipy.fft.next_fast_len(2 * kmax + 2)
    while m % 2:
        m = scipy.fft.next_fast_len(m + 1)
    if m >= n:
        return f
    c = scipy.fft.fftshift(f.coefficients())
    h = n // 2
    block = c[h - m // 2 : h + m // 2, h - m // 2 : h + m // 2]
    return GridField.from_coefficients(scipy.fft.ifftshift(block), f.half_side)


def survey_max_ratio(f: GridField, R: float, p, dt: float,
                     grid: str = "band", single_precision: bool = True,
                     band_max: float = 2.0, workers: int = None):
    """||sup over t in dt*{1..nt} of |u|||_{L^p(B_R)} / ||f||_2.

    The band path evolves the spectrum through a cached one-step phase
    multiplier on the reduced grid, which is what makes the large scales
    affordable; the full path defers to `maximal_field` on the native
    grid.  Single precision drifts the phases by about sqrt(nt) ulp,
    far below the slope tolerances the scans use.  `p` may be a single
    exponent or a sequence; the sup field is computed once either way.
    """
    workers = worker_count() if workers is None else workers
    ps = (p,) if np.isscalar(p) else tuple(p)
    if grid == "full":
        times = time_grid(R, dt, include_zero=False)
        sup = maximal_field(f, times, workers=workers,
                            single_precision=single_precision)
        half = f.half_side
    else:
        g = band_block(f, band_max)
        xi = g.freq_axis()
        qsq = xi[:, None] ** 2 + xi[None, :] ** 2
        cdtype = np.complex64 if single_precision else np.complex128
        step = np.exp(1j * dt * qsq).astype(cdtype)
        spec = (scipy.fft.fft2(g.data) * np.exp(1j * dt * qsq)).astype(cdtype)
        nt = max(1, int(round(R / dt)))
        sup = np.abs(scipy.fft.ifft2(spec, workers=workers))
        for _ in range(nt - 1):
            spec *= step
            np.maximum(sup, np.abs(scipy.fft.ifft2(spec, workers=workers)),
                       out=sup)
        half = g.half_side
    norm = f.l2_norm()
    out = [region_lp_norm(sup, pe, half, radius=R) / norm for pe in ps]
    return out[0] if np.isscalar(p) else out


def plane_wave_field(R: int, band: tuple = (0.5, 2.0)) -> GridField:
    """Single mode nearest |xi| = 1: its maximal field is exactly constant."""
    n, L = 4 * R, 2.0 * R
    k0 = int(round(L / math.pi))
    c = np.zeros((n, n), dtype=complex)
    c[k0, 0] = 1.0
    c /= 2.0 * L * np.linalg.norm(c)
    return GridField.from_coefficients(c, L)


def _plane_wave_control(config: ExperimentConfig, workers: int) -> list:
    """Ratios of one constant maximal field over the growing balls.

    A single mode has |u| constant in space and time, so sweeping the
    integration ball on a fixed torus isolates the region quadrature:
    the ratio must scale exactly like |B_R|^(1/p), slope 2/p.  One time
    slice per radius exercises the same survey path as the ensemble.
    """
    f = plane_wave_field(max(config.radii), config.band)
    return [
        survey_max_ratio(f, float(R), config.p, dt=float(R), grid=config.grid,
                         single_precision=config.single_precision,
                         band_max=config.band[1], workers=workers)
        for R in config.radii
    ]


def _field_for_seed(R: int, seed: int, band: tuple) -> GridField:
    if seed == FOCUSING_SEED:
        return focusing_field(R, band)
    return make_band_limited_random(R, seed, band)


def _fit_loglog(radii, values):
    """(slope, intercept, rms residual) of log value against log R."""
    if len(radii) < 3:
        raise ValueError("need at least 3 radii to fit a slope")
    x = np.log(np.asarray(radii, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return float(slope), float(intercept), resid


def _running_slopes(radii, values):
    """Per-prefix fitted slope, None until three radii are available."""
    out = []
    for i in range(len(radii)):
        if i < 2:
            out.append(None)
        else:
            s, _, _ = _fit_loglog(radii[: i + 1], values[: i + 1])
            out.append(s)
    return out


@dataclass
class ScanResult:
    """Rows, per-scale maxima, fitted slope, and the reference exponents."""

    experiment: str
    config: ExperimentConfig
    rows: list
    max_ratios: dict
    fit: dict
    comparison: dict
    extras: dict = field(default_factory=dict)

    @property
    def slope(self) -> float:
        return self.fit["slope"]


def scan_target_exponent(p: float) -> float:
    """Expected growth exponent of the max ratio at L^p: max(2/p - 5/8, 0)."""
    return max(2.0 / p - 5.0 / 8.0, 0.0)


def exponent_scan(config: ExperimentConfig) -> ScanResult:
    """Maximal-function ratio scan over the ensemble, with control.

    The sup field per (R, seed) is measured once and its region norms
    are taken at the configured exponent and at the pair {2, 3.2}, so
    one pass settles both slope checks.
    """
    if len(config.radii) < 3:
        raise ValueError("need at least 3 radii to fit a slope")
    workers = worker_count()
    ps = sorted({2.0, 3.2, float(config.p)})
    series = {p: {seed: [] for seed in config.ensemble_seeds()} for p in ps}
    for R in config.radii:
        for seed in config.ensemble_seeds():
            f = _field_for_seed(R, seed, config.band)
            ratios = survey_max_ratio(
                f, float(R), ps, config.dt, grid=config.grid,
                single_precision=config.single_precision,
                band_max=config.band[1], workers=workers,
            )
            for p, ratio in zip(ps, ratios):
                series[p][seed].append(ratio)
    rows = []
    main = series[float(config.p)]
    for seed in config.ensemble_seeds():
        partial = _running_slopes(config.radii, main[seed])
        for R, ratio, sp in zip(config.radii, main[seed], partial):
            rows.append({"R": R, "seed": seed, "ratio": ratio,
                         "slope_partial": sp})
    rows.sort(key=lambda r: (r["R"], r["seed"]))
    fits = {}
    for p in ps:
        maxima = [max(series[p][seed][i] for seed in series[p])
                  for i in range(len(config.radii))]
        slope, intercept, resid = _fit_loglog(config.radii, maxima)
        target = scan_target_exponent(p)
        fits[p] = {"slope": slope, "intercept": intercept, "residual": resid,
                   "target": target, "margin": target + 0.15 - slope,
                   "maxima": maxima}
    main_fit = fits[float(config.p)]
    max_ratios = {R: main_fit["maxima"][i]
                  for i, R in enumerate(config.radii)}
    control_vals = _plane_wave_control(config, workers)
    c_slope, _, c_resid = _fit_loglog(config.radii, control_vals)
    comparison = {
        "theorem_exponent": 2.0 / config.p - 5.0 / 8.0,
        "conjecture_exponent": 0.0 if config.p >= 3 else None,
        "target_exponent": main_fit["target"],
        "slope_margin": main_fit["margin"],
        "fits_by_p": {str(p): {k: v for k, v in fits[p].items()
                               if k != "maxima"} for p in ps},
        "control_slope": c_slope,
        "control_target": 2.0 / config.p,
        "control_error": abs(c_slope - 2.0 / config.p),
    }
    return ScanResult(
        experiment="scan",
        config=config,
        rows=rows,
        max_ratios=max_ratios,
        fit={"slope": main_fit["slope"], "intercept": main_fit["intercept"],
             "residual": main_fit["residual"], "n_radii": len(config.radii)},
        comparison=comparison,
        extras={"control_values": control_vals,
                "control_residual": c_resid,
                "note": "random ensembles bound the sup over fields from below"},
    )


# ------------------------------------------------- single-direction growth


def _auto_K(R: int) -> int:
    """Integer nearest sqrt(R), so K M tracks R^(1/2) at M = 1."""
    return max(2, round(math.sqrt(R)))


DIRECTION_CENTER = (0.7, 0.3)


def part_a_check(config: ExperimentConfig) -> ScanResult:
    """Broad-norm growth of single-direction fields against (3 - p)/2.

    The fields have spectrum in one cap of radius 1/(K M), which is the
    single-direction packet ensemble when K M is near sqrt R.  Slopes are
    fitted for the configured p and for the pair {2, 3.2}; the exclusion
    count A = 0 dominates every other A cellwise, so its bound covers all
    of them.
    """
    if len(config.radii) < 3:
        raise ValueError("need at least 3 radii to fit a slope")
    ps = sorted({2.0, 3.2, float(config.p)})
    series = {p: {seed: [] for seed in config.seeds} for p in ps}
    used_K = {}
    for R in config.radii:
        K = config.K or _auto_K(R)
        family = caps((0.0, 0.0), config.M, K)
        est = len(family) * (4 * R) ** 2 * 8
        if est > 3 * 2**30:
            raise ValueError(
                f"R={R}, K={K} needs about {est / 2**30:.1f} GiB of cap "
                "weights; use smaller radii (perfect squares up to 144 "
                "keep K M = sqrt(R) exactly)")
        used_K[R] = K
        params = BroadParams(A=config.A, K=K, M=config.M, p=config.p,
                             q=config.q)
        inv_m = params.cap_radius
        for seed in config.seeds:
            f = make_ball_random(R, seed, center=DIRECTION_CENTER, inv_m=inv_m)
            data = broad_data(f, params, p_list=ps)
            for p in ps:
                power = _norm_p_power(data, None, p=p)
                series[p][seed].append(power ** (1.0 / p))
    rows = []
    partials = {
        seed: _running_slopes(config.radii, series[config.p][seed])
        for seed in config.seeds
    }
    for i, R in enumerate(config.radii):
        for seed in config.seeds:
            rows.append({
                "R": R, "seed": seed,
                "ratio": series[config.p][seed][i],
                "slope_partial": partials[seed][i],
            })
    rows.sort(key=lambda r: (r["R"], r["seed"]))
    fits = {}
    for p in ps:
        maxima = [max(series[p][seed][i] for seed in config.seeds)
                  for i in range(len(config.radii))]
        slope, intercept, resid = _fit_loglog(config.radii, maxima)
        target = (3.0 - p) / 2.0
        fits[p] = {"slope": slope, "intercept": intercept, "residual": resid,
                   "target": target, "margin": target + 0.1 - slope,
                   "maxima": maxima}
    main = fits[float(config.p)]
    return ScanResult(
        experiment="part_a",
        config=config,
        rows=rows,
        max_ratios={R: main["maxima"][i] for i, R in enumerate(config.radii)},
        fit={"slope": main["slope"], "intercept": main["intercept"],
             "residual": main["residual"], "n_radii": len(config.radii)},
        comparison={"target_exponent": main["target"],
                    "slope_margin": main["margin"],
                    "fits_by_p": {str(p): {k: v for k, v in fits[p].items()
                                           if k != "maxima"} for p in ps}},
        extras={"K_per_R": used_K, "direction_center": list(DIRECTION_CENTER),
                "statistic": "broad norm over the star-shaped region"},
    )


# -------------------------------------------------------- reduction demo


def reduction_demo(config: ExperimentConfig) -> ScanResult:
    """Broad/narrow domination certificate on fixed fields, with the split.

    Runs the cellwise certificate at the configured A and again at A = 0
    (where the broad part alone must dominate), and tabulates the split
    on the most energetic cells of the first field.
    """
    R = config.radii[0]
    K = config.K or 8
    params = BroadParams(A=config.A, K=K, M=config.M, p=config.p, q=config.q)
    rows, certs = [], []
    first = None
    for seed in config.seeds:
        f = make_ball_random(R, seed)
        data = broad_data(f, params, p_list=[config.p])
        cert = decomposition_certificate(f, params, data)
        certs.append({"seed": seed, **{k: cert[k] for k in
                      ("violations", "worst_relative_margin",
                       "max_narrow_caps_per_line", "caps_per_line_bound",
                       "ok")}})
        rows.append({"R": R, "seed": seed,
                     "ratio": cert["worst_relative_margin"],
                     "slope_partial": None})
        if first is None:
            first = (f, data)
    f, data = first
    zero_params = replace(params, A=0)
    zero_data = broad_data(f, zero_params, p_list=[config.p])
    zero_cert = decomposition_certificate(f, zero_params, zero_data)
    mu, _ = data.mu_all()
    order = np.argsort(mu)[::-1][:12]
    lat = data.lattice
    cells = []
    n_time = lat.n_time
    for flat in order:
        b, it = divmod(int(flat), n_time)
        cell = (int(lat.ball_index[b][0]), int(lat.ball_index[b][1]), it)
        split = broad_vs_full_decomposition(f, cell, params, data)
        cells.append({"cell": list(cell), **split})
    single_cap = _single_cap_split(R, config.seeds[0], params)
    return ScanResult(
        experiment="reduction",
        config=config,
        rows=rows,
        max_ratios={R: max(r["ratio"] for r in rows)},
        fit=None,
        comparison={
            "violations_total": int(sum(c["violations"] for c in certs)),
            "worst_relative_margin": max(c["worst_relative_margin"]
                                         for c in certs),
            "zero_exclusion_violations": zero_cert["violations"],
            "single_cap_narrow_share": single_cap["narrow_share"],
        },
        extras={"certificates": certs, "cells": cells,
                "zero_exclusion_certificate": {
                    k: zero_cert[k] for k in
                    ("violations", "worst_relative_margin", "ok")},
                "single_cap": single_cap},
    )


def _single_cap_split(R: int, seed: int, params: BroadParams) -> dict:
    """Split on the hottest cell of a one-cap field: narrow must carry it.

    With every exclusion hitting the only occupied direction, the broad
    term vanishes and the narrow coherent sum alone dominates.
    """
    f = make_ball_random(R, seed, center=DIRECTION_CENTER,
                         inv_m=params.cap_radius)
    data = broad_data(f, params, p_list=[params.p])
    zero_data = broad_data(f, replace(params, A=0), p_list=[params.p])
    mu0, _ = zero_data.mu_all()
    flat = int(np.argmax(mu0))
    lat = zero_data.lattice
    b, it = divmod(flat, lat.n_time)
    cell = (int(lat.ball_index[b][0]), int(lat.ball_index[b][1]), it)
    split = broad_vs_full_decomposition(f, cell, params, data)
    weight = split["broad_mass"] + split["narrow_mass"]
    share = split["narrow_mass"] / weight if weight > 0 else 0.0
    return {"cell": list(cell), "narrow_share": share, **split}
