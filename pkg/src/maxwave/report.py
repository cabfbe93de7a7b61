"""Report emission: delimited tables, plot data, JSON summaries, figures.

Every file carries the config hash and the seed list, and rerunning
with the same config reproduces each byte.  Floats are printed through
one shared format so the delimited outputs cannot drift between runs.
"""

from __future__ import annotations

import json
import math
from importlib import resources
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .experiments import ScanResult, config_hash

FLOAT_FMT = "%.12g"
CSV_HEADER = "R, seed, ratio, slope_partial"


def _fmt(x) -> str:
    if x is None:
        return "nan"
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return FLOAT_FMT % float(x)


def _clean(obj):
    """JSON-safe copy: tuples to lists, numpy scalars to Python, no NaN."""
    if obj is None or isinstance(obj, (str, bool, int)):
        return obj
    if isinstance(obj, float):
        if math.isnan(obj) or math.isinf(obj):
            return None
        return obj
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item"):
        return _clean(obj.item())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def load_schema() -> dict:
    """The summary schema shipped with the package."""
    text = resources.files("maxwave.schemas").joinpath(
        "summary.schema.json").read_text()
    return json.loads(text)


def summary_dict(result: ScanResult) -> dict:
    """JSON summary of one result; validates against `load_schema()`."""
    cfg = result.config.as_dict()
    return _clean({
        "experiment": result.experiment,
        "config": cfg,
        "config_hash": config_hash(result.config),
        "seeds": list(result.config.ensemble_seeds()),
        "rows": result.rows,
        "fit": result.fit,
        "comparison": result.comparison,
        "extras": result.extras,
    })


def _preamble(result: ScanResult, comment: str) -> list:
    cfg = result.config.as_dict()
    return [
        f"{comment} maxwave {result.experiment} report",
        f"{comment} config_hash: {config_hash(result.config)}",
        f"{comment} seeds: "
        + ", ".join(str(s) for s in result.config.ensemble_seeds()),
        f"{comment} config: {json.dumps(cfg, sort_keys=True)}",
    ]


def render_csv(result: ScanResult) -> str:
    lines = _preamble(result, "#")
    lines.append(CSV_HEADER)
    for row in result.rows:
        lines.append(", ".join([
            _fmt(row["R"]), _fmt(row["seed"]),
            _fmt(row["ratio"]), _fmt(row["slope_partial"]),
        ]))
    return "\n".join(lines) + "\n"


def render_dat(result: ScanResult) -> str:
    """Gnuplot columns: log R, log max ratio, fitted line at that R."""
    lines = _preamble(result, "#")
    lines.append("# log_R log_max_ratio fit")
    fit = result.fit
    for R in sorted(result.max_ratios):
        lx = math.log(R)
        ratio = result.max_ratios[R]
        ly = math.log(ratio) if ratio > 0 else float("nan")
        cols = [FLOAT_FMT % lx, FLOAT_FMT % ly]
        if fit:
            cols.append(FLOAT_FMT % (fit["slope"] * lx + fit["intercept"]))
        else:
            cols.append("nan")
        lines.append(" ".join(cols))
    return "\n".join(lines) + "\n"


def render_figure(result: ScanResult, path: Path) -> None:
    """Log-log ratio plot with the per-seed series, maxima, and fit."""
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    by_seed = {}
    for row in result.rows:
        by_seed.setdefault(row["seed"], []).append((row["R"], row["ratio"]))
    log_y = all(row["ratio"] > 0 for row in result.rows)
    for seed, pts in sorted(by_seed.items()):
        pts.sort()
        ax.plot([q[0] for q in pts], [q[1] for q in pts],
                "o--", ms=4, lw=0.8, label=f"seed {seed}")
    radii = sorted(result.max_ratios)
    maxima = [result.max_ratios[R] for R in radii]
    ax.plot(radii, maxima, "k-", lw=1.6, label="ensemble max")
    if result.fit and log_y:
        fit_y = [math.exp(result.fit["slope"] * math.log(R)
                          + result.fit["intercept"]) for R in radii]
        ax.plot(radii, fit_y, "r:", lw=1.4,
                label=f"fit slope {result.fit['slope']:+.3f}")
    ax.set_xscale("log")
    if log_y:
        ax.set_yscale("log")
    ax.set_xlabel("R")
    ax.set_ylabel("ratio")
    ax.set_title(f"{result.experiment}  [{config_hash(result.config)}]")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": "maxwave"})
    plt.close(fig)


def emit_report(results, outdir) -> list:
    """Write csv/dat/json/png per result under `outdir`; returns the paths.

    The JSON is checked against the shipped schema before writing, so a
    malformed summary fails here rather than downstream.
    """
    if isinstance(results, ScanResult):
        results = [results]
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    import jsonschema

    schema = load_schema()
    written = []
    for result in results:
        base = outdir / result.experiment.replace("_", "-")
        summary = summary_dict(result)
        jsonschema.validate(summary, schema)

        csv_path = base.with_suffix(".csv")
        csv_path.write_text(render_csv(result))
        written.append(csv_path)

        dat_path = base.with_suffix(".dat")
        dat_path.write_text(render_dat(result))
        written.append(dat_path)

        json_path = base.with_suffix(".json")
        json_path.write_text(
            json.dumps(summary, indent=2, allow_nan=False) + "\n")
        written.append(json_path)

        png_path = base.with_suffix(".png")
        render_figure(result, png_path)
        written.append(png_path)
    return written
