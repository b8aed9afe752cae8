"""Report assembly for a finished run: the pieces behind ``analyze`` and ``compare``."""

from __future__ import annotations

import math
from dataclasses import asdict

import numpy as np

from . import stats, theory
from .engine import SimResult

REFERENCE_ZIPF_RHOS = (1.32, 1.5)
HEAD_DISCREPANCY = 0.10
DEVIATE_COUNT = 1000


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def analyze_run(
    result: SimResult,
    *,
    xmin_scan: bool = True,
    zipf: bool = True,
    growth_fit: bool = True,
    window: tuple[int, int] | None = None,
    seed: int = 0,
) -> tuple[dict, dict[str, tuple[tuple[str, ...], list]]]:
    """Return ``(report, tables)``; tables map file names to ``(header, rows)``."""
    degrees = result.degree
    report: dict = {
        "run": {
            "final_tick": result.final_tick,
            "node_count": result.node_count,
            "event_count": result.event_count,
            "config": result.config.to_dict(),
        },
        "seed": seed,
    }
    tables: dict[str, tuple[tuple[str, ...], list]] = {}

    fractions = stats.degree_set_fractions(degrees)
    report["degree_fractions"] = {str(q): fractions[q] for q in sorted(fractions)[:10]}
    tables["degree_fractions.csv"] = (("q", "fraction"), sorted(fractions.items()))

    dist = stats.build_empirical(degrees)
    tables["survival.csv"] = (("degree", "survival_ge"), dist.survival_points())

    ticks, births = result.births_series()
    if len(ticks):
        series = np.column_stack([ticks, births])
        full = stats.births_summary(series)
        report["births"] = {
            "full_run": asdict(full),
            "window": asdict(stats.births_summary(series, window)) if window else None,
            "note": "std is outlier-sensitive and reported only; depends strongly on the window choice",
        }
        birth_dist = stats.build_empirical(births + 1)  # shift so zero-birth ticks are representable
        deviates = stats.sample_empirical(birth_dist, DEVIATE_COUNT, seed) - 1
        values, counts = np.unique(deviates, return_counts=True)
        tables["births_histogram.csv"] = (("births", "frequency"), list(zip(values.tolist(), counts.tolist())))

    if xmin_scan:
        try:
            fit = stats.scan_xmin(degrees)
        except ValueError as exc:
            report["power_law"] = {"error": str(exc)}
        else:
            report["power_law"] = {
                "alpha": fit.alpha,
                "alpha_approx": fit.alpha_approx,
                "x_min": fit.x_min,
                "ks_distance": fit.ks_distance,
                "normalization": fit.normalization,
                "tail_count": fit.tail_count,
                "scan_points": len(fit.scan),
                "theory_alpha": float(theory.ALPHA),
            }
            tables["xmin_scan.csv"] = (
                ("x_min", "alpha", "ks_distance", "tail_count"),
                [(r.x_min, r.alpha, r.ks_distance, r.tail_count) for r in fit.scan],
            )

    if zipf:
        deviates = stats.sample_empirical(dist, DEVIATE_COUNT, seed)
        zfit = stats.fit_zipf_mle(degrees)
        report["zipf"] = {
            **asdict(zfit),
            "reference_rhos": list(REFERENCE_ZIPF_RHOS),
            "deviate_fit_rho": stats.fit_zipf_mle(deviates, zfit.support_n).rho,
        }
        n = zfit.support_n
        rows = []
        sf_mle = _zipf_survival(zfit.rho, n) if not zfit.degenerate else None
        sf_cands = [_zipf_survival(r, n) for r in REFERENCE_ZIPF_RHOS]
        for x, emp in dist.survival_points():
            row = [x, emp, float(sf_mle[x - 1]) if sf_mle is not None else float("nan")]
            row += [float(sf[x - 1]) for sf in sf_cands]
            rows.append(tuple(row))
        header = ("degree", "empirical", "zipf_mle") + tuple(f"zipf_{r}" for r in REFERENCE_ZIPF_RHOS)
        tables["zipf_overlay.csv"] = (header, rows)

    if growth_fit and len(ticks) >= 2:
        t, total = stats.population_series(result)
        _, d2 = stats.degree_set_series(result, 2)
        report["growth"] = {
            "total": asdict(stats.fit_growth_power_law(t, total)),
            "degree_2": asdict(stats.fit_growth_power_law(t, d2)),
        }
        tables["growth.csv"] = (("tick", "total", "degree_2"), list(zip(t.tolist(), total.tolist(), d2.tolist())))

    return _clean(report), tables


def _zipf_survival(rho: float, n: int) -> np.ndarray:
    """``P[X >= x]`` for ``x = 1..n``."""
    k = np.arange(1, n + 1, dtype=np.float64)
    w = k ** -(rho + 1.0)
    tail = np.cumsum(w[::-1])[::-1]
    return tail / tail[0]


def compare_run(result: SimResult, max_q: int, zipf_rho: float | None = None) -> tuple[list[dict], dict]:
    """Per-degree empirical share vs. the theory columns and the fitted Zipf PMF."""
    if max_q < 1:
        raise ValueError("max_q must be >= 1")
    degrees = result.degree
    fractions = stats.degree_set_fractions(degrees)
    support_n = int(degrees.max())
    if zipf_rho is None:
        zipf_rho = stats.fit_zipf_mle(degrees).rho
    rec = theory.degree_pmf_recursive(max(max_q, support_n))
    rows = []
    for q in range(1, max_q + 1):
        emp = fractions.get(q, 0.0)
        p_rec = float(rec[q - 1])
        p_asym = theory.degree_pmf_asymptotic(q)
        z = stats.zipf_pmf(q, zipf_rho, support_n) if q <= support_n and math.isfinite(zipf_rho) else 0.0
        rows.append(
            {
                "q": q,
                "empirical": emp,
                "p_recursive": p_rec,
                "p_asymptotic": p_asym,
                "zipf_pmf": z,
                "empirical_over_theory": emp / p_rec,
                "empirical_over_asymptotic": emp / p_asym,
                "discrepancy": int(abs(emp / p_rec - 1.0) > HEAD_DISCREPANCY),
            }
        )
    emp_cdf = np.cumsum([fractions.get(q, 0.0) for q in range(1, support_n + 1)])
    theory_cdf = np.cumsum(rec[:support_n])
    summary = {
        "ks_empirical_vs_theory": float(np.abs(emp_cdf - theory_cdf).max()),
        "zipf_rho": zipf_rho,
        "node_count": result.node_count,
        "head_note": "degree-1 excess over 3/7 is expected from the hard stop at the end of the run",
    }
    return rows, _clean(summary)
