"""Cross-validation of disputed formula variants against simulation.

Three of the printed extreme-value formulas admit more than one reading,
and the readings are not equivalent:

1. The drift correction of the high density: erfc((eta+gamma)/2) versus
   erfc((eta+gamma)/sqrt(2)).  The variants coincide at zero drift only.
2. The (high, close) joint density contains a stray symbol in its
   exponent that can be read as the close or as the high.
3. The (high, low, close) image kernel, integrated over the extremes,
   returns 1/4 instead of 1: it is off by an overall factor 4 (its bridge
   counterpart carries the 4 explicitly).

Each check below evaluates every candidate against a fixed-seed Monte
Carlo oracle and against internal consistency (normalization, marginals)
and records which candidate survives.  A fourth check tabulates both
Garman-Klass cross-term variants, where no candidate is exactly unbiased
and both are carried through the rest of the package.

The checks are pure functions of their (seed, scale) arguments; the
report is deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import densities
from .analytics import garman_klass_mean
from .densities import DEFAULT_SERIES_CONFIG, SeriesConfig
from .estimators import GarmanKlassVariant, garman_klass_value

__all__ = [
    "ValidationCheck",
    "validate_high_density_variants",
    "validate_high_close_reading",
    "validate_hlc_normalization",
    "validate_gk_variants",
    "formula_validation_report",
    "render_report",
]


@dataclass(frozen=True)
class ValidationCheck:
    topic: str
    conclusion: str
    details: dict


def _extreme_samples(n_paths: int, n_steps: int, gamma: float, seed, batch: int = 1024):
    """Fixed-seed (high, low, close) samples of the discretized path."""
    hs, ls, cs = [], [], []
    tau = np.arange(n_steps + 1) / n_steps
    n_batches = (n_paths + batch - 1) // batch
    for b in range(n_batches):
        size = min(batch, n_paths - b * batch)
        gen = np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, b]))
        eps = gen.standard_normal((size, n_steps))
        s = np.empty((size, n_steps + 1))
        s[:, 0] = 0.0
        np.cumsum(eps, axis=1, out=s[:, 1:])
        s[:, 1:] /= math.sqrt(n_steps)
        if gamma != 0.0:
            s += gamma * tau[None, :]
        hs.append(s.max(axis=1))
        ls.append(s.min(axis=1))
        cs.append(s[:, -1])
    return np.concatenate(hs), np.concatenate(ls), np.concatenate(cs)


def _bin_z(count: int, n: int, prob: float) -> float:
    """z-score of an observed bin count against a model bin probability."""
    se = math.sqrt(prob * (1.0 - prob) / n)
    return (count / n - prob) / se


# A surviving candidate must reproduce simulated bin masses to within this
# relative deviation.  Discrete sampling of extremes shifts box masses by a
# few percent at a thousand steps (shrinking like 1/sqrt(steps)); the
# failing candidates here are off by factors, not percent, so the gate is
# scale-stable: tightening the Monte Carlo only sharpens the contrast.
_REL_GATE = 0.15


def validate_high_density_variants(
    gamma: float = 1.0,
    n_paths: int = 200_000,
    n_steps: int = 2_000,
    seed=4201,
    cfg: SeriesConfig | None = None,
) -> ValidationCheck:
    """Which erfc argument scaling makes the high density a density."""
    cfg = cfg or DEFAULT_SERIES_CONFIG

    def norm_of(variant):
        val, _ = integrate.quad(
            lambda e: densities.high_pdf(e, gamma, cfg, erfc_arg_scale=variant).value,
            0.0, 14.0 + abs(gamma), limit=300, epsabs=1e-10,
        )
        return val

    norm_half = norm_of("half")
    norm_sqrt2 = norm_of("sqrt2")

    # pointwise against the marginal of the (high, close) joint density
    etas = np.array([0.3, 0.7, 1.2, 2.0, 3.0])
    dev_half = dev_sqrt2 = 0.0
    for eta in etas:
        marg, _ = integrate.quad(
            lambda c: densities.high_close_joint_pdf(eta, c, gamma, cfg).value,
            -12.0, eta, limit=300, epsabs=1e-11,
        )
        dev_half = max(dev_half, abs(densities.high_pdf(eta, gamma, cfg, "half").value - marg))
        dev_sqrt2 = max(dev_sqrt2, abs(densities.high_pdf(eta, gamma, cfg, "sqrt2").value - marg))

    # binned simulation check
    h, _, _ = _extreme_samples(n_paths, n_steps, gamma, seed)
    edges = np.array([0.6, 0.9, 1.2, 1.5, 1.8, 2.2])
    rel_half, rel_sqrt2 = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        emp = float(((h >= lo) & (h < hi)).mean())
        for variant, rels in (("half", rel_half), ("sqrt2", rel_sqrt2)):
            prob, _ = integrate.quad(
                lambda e: densities.high_pdf(e, gamma, cfg, variant).value, lo, hi, epsabs=1e-11
            )
            rels.append(emp / prob - 1.0 if prob > 0.0 else math.inf)
    max_rel_half = max(abs(r) for r in rel_half)
    max_rel_sqrt2 = max(abs(r) for r in rel_sqrt2)

    ok = (
        abs(norm_sqrt2 - 1.0) < 1e-6
        and dev_sqrt2 < 1e-8
        and max_rel_sqrt2 < _REL_GATE
        and abs(norm_half - 1.0) > 0.3
        and dev_half > 0.05
    )
    return ValidationCheck(
        topic="high-density drift term: erfc argument scaling",
        conclusion=(
            "sqrt2 matches (normalizes, agrees with the joint-density marginal and with "
            "simulation); half fails at nonzero drift" if ok else "inconclusive"
        ),
        details={
            "gamma": gamma,
            "norm_half": norm_half,
            "norm_sqrt2": norm_sqrt2,
            "max_marginal_dev_half": dev_half,
            "max_marginal_dev_sqrt2": dev_sqrt2,
            "max_bin_rel_dev_half": max_rel_half,
            "max_bin_rel_dev_sqrt2": max_rel_sqrt2,
        },
    )


def validate_high_close_reading(
    gamma: float = 1.0,
    n_paths: int = 200_000,
    n_steps: int = 2_000,
    seed=4202,
    cfg: SeriesConfig | None = None,
) -> ValidationCheck:
    """The stray exponent symbol in the (high, close) density: close or high?"""
    cfg = cfg or DEFAULT_SERIES_CONFIG

    def mass_close_reading():
        val, _ = integrate.dblquad(
            lambda c, e: densities.high_close_joint_pdf(e, c, gamma, cfg).value,
            0.0, 12.0 + abs(gamma), lambda e: -12.0, lambda e: e, epsabs=1e-9,
        )
        return val

    def mass_high_reading():
        # exponent read as the high instead of the close
        def q(e, c):
            if e <= 0.0 or c >= e:
                return 0.0
            return math.sqrt(2.0 / math.pi) * (2.0 * e - c) * math.exp(
                2.0 * gamma * e - 0.5 * (2.0 * e - e + gamma) ** 2
            )

        val, _ = integrate.dblquad(
            lambda c, e: q(e, c), 0.0, 12.0 + abs(gamma), lambda e: -12.0, lambda e: e,
            epsabs=1e-9,
        )
        return val

    mass_close = mass_close_reading()
    mass_high = mass_high_reading()

    h, _, c = _extreme_samples(n_paths, n_steps, gamma, seed)
    boxes = [(0.8, 1.2, 0.2, 0.6), (1.2, 1.6, 0.6, 1.0), (0.6, 1.0, -0.4, 0.2)]
    rels = []
    for e_lo, e_hi, c_lo, c_hi in boxes:
        emp = float(((h >= e_lo) & (h < e_hi) & (c >= c_lo) & (c < c_hi)).mean())
        prob, _ = integrate.dblquad(
            lambda cc, ee: densities.high_close_joint_pdf(ee, cc, gamma, cfg).value,
            e_lo, e_hi, lambda e: c_lo, lambda e: min(c_hi, e), epsabs=1e-10,
        )
        rels.append(emp / prob - 1.0)
    max_rel = max(abs(r) for r in rels)

    ok = abs(mass_close - 1.0) < 1e-6 and max_rel < _REL_GATE and abs(mass_high - 1.0) > 0.3
    return ValidationCheck(
        topic="(high, close) joint density: stray exponent symbol",
        conclusion=(
            "reading it as the close yields a normalized density that matches simulation; "
            "reading it as the high does not normalize" if ok else "inconclusive"
        ),
        details={
            "gamma": gamma,
            "total_mass_close_reading": mass_close,
            "total_mass_high_reading": mass_high,
            "max_bin_rel_dev_close_reading": max_rel,
        },
    )


def validate_hlc_normalization(
    n_paths: int = 200_000,
    n_steps: int = 2_000,
    seed=4203,
    cfg: SeriesConfig | None = None,
) -> ValidationCheck:
    """The factor 4 in the (high, low, close) image kernel."""
    cfg = cfg or DEFAULT_SERIES_CONFIG

    def conditional_mass(chi: float) -> float:
        # integral of the implemented (already x4) kernel over the extremes
        x, w = np.polynomial.legendre.leggauss(96)
        e0, l0 = max(0.0, chi), min(0.0, chi)
        span = 8.0
        eta = e0 + (x + 1.0) * span / 2.0
        ell = l0 - (x + 1.0) * span / 2.0
        series, _ = densities._hlc_series_grid(eta[:, None], ell[None, :], chi, cfg)
        return float(np.einsum("i,j,ij->", w, w, series)) * (span / 2.0) ** 2

    masses = {chi: conditional_mass(chi) for chi in (-1.0, 0.3, 1.0)}

    h, l, c = _extreme_samples(n_paths, n_steps, 0.0, seed)
    # wide central box: first-order discretization shifts largely cancel
    box = (0.3, 1.2, -1.2, -0.3, -0.5, 0.5)  # eta, ell, chi bounds
    e_lo, e_hi, l_lo, l_hi, c_lo, c_hi = box
    emp = float(
        ((h >= e_lo) & (h < e_hi) & (l >= l_lo) & (l < l_hi) & (c >= c_lo) & (c < c_hi)).mean()
    )
    x, w = np.polynomial.legendre.leggauss(32)

    def box_prob() -> float:
        chis = c_lo + (x + 1.0) * (c_hi - c_lo) / 2.0
        wc = w * (c_hi - c_lo) / 2.0
        eta = e_lo + (x + 1.0) * (e_hi - e_lo) / 2.0
        we = w * (e_hi - e_lo) / 2.0
        ell = l_lo + (x + 1.0) * (l_hi - l_lo) / 2.0
        wl = w * (l_hi - l_lo) / 2.0
        total = 0.0
        for chi, wchi in zip(chis, wc):
            series, _ = densities._hlc_series_grid(eta[:, None], ell[None, :], chi, cfg)
            total += wchi * densities.close_pdf(chi, 0.0) * float(
                np.einsum("i,j,ij->", we, wl, series)
            )
        return total

    prob = box_prob()
    rel_scaled = emp / prob - 1.0
    rel_raw = emp / (prob / 4.0) - 1.0

    ok = (
        all(abs(m - 1.0) < 1e-6 for m in masses.values())
        and abs(rel_scaled) < _REL_GATE
        and abs(rel_raw) > 1.0
    )
    return ValidationCheck(
        topic="(high, low, close) kernel normalization",
        conclusion=(
            "the image kernel must carry an overall factor 4: the raw kernel integrates to "
            "1/4 per close value; the scaled kernel matches simulation" if ok else "inconclusive"
        ),
        details={
            "conditional_mass_scaled": masses,
            "conditional_mass_raw": {chi: m / 4.0 for chi, m in masses.items()},
            "box_rel_dev_scaled": rel_scaled,
            "box_rel_dev_raw": rel_raw,
        },
    )


def validate_gk_variants(
    n_paths: int = 200_000,
    n_steps: int = 5_000,
    seed=4204,
    cfg: SeriesConfig | None = None,
) -> ValidationCheck:
    """Side-by-side means of the two Garman-Klass cross-term variants."""
    cfg = cfg or DEFAULT_SERIES_CONFIG
    details = {}
    for gamma in (0.0, 1.0):
        details[f"quadrature_mean_hl_gamma{gamma:g}"] = garman_klass_mean(
            gamma, cfg, GarmanKlassVariant.HIGH_LOW_CROSS
        )
        details[f"quadrature_mean_hc_gamma{gamma:g}"] = garman_klass_mean(
            gamma, cfg, GarmanKlassVariant.HIGH_CLOSE_CROSS
        )
    h, l, c = _extreme_samples(n_paths, n_steps, 0.0, seed)
    for variant, tag in ((GarmanKlassVariant.HIGH_LOW_CROSS, "hl"),
                         (GarmanKlassVariant.HIGH_CLOSE_CROSS, "hc")):
        v = garman_klass_value(h, l, c, variant)
        details[f"simulated_mean_{tag}_gamma0"] = float(v.mean())
        details[f"simulated_se_{tag}_gamma0"] = float(v.std(ddof=1) / math.sqrt(v.size))
    return ValidationCheck(
        topic="Garman-Klass cross-term variants",
        conclusion=(
            "no variant is exactly unbiased in continuous time (zero-drift means 1.0254 for "
            "the high-low cross term, 1.0447 for the high-close one); the high-low form is "
            "closer to unbiased and is the default, and both are reported in the tables"
        ),
        details=details,
    )


def formula_validation_report(
    n_paths: int = 200_000,
    n_steps: int = 2_000,
    seed=4200,
    cfg: SeriesConfig | None = None,
) -> list[ValidationCheck]:
    """Run all formula cross-validations at the given simulation scale."""
    return [
        validate_high_density_variants(1.0, n_paths, n_steps, seed + 1, cfg),
        validate_high_close_reading(1.0, n_paths, n_steps, seed + 2, cfg),
        validate_hlc_normalization(n_paths, n_steps, seed + 3, cfg),
        validate_gk_variants(n_paths, max(n_steps, 2_000), seed + 4, cfg),
    ]


def render_report(checks: list[ValidationCheck]) -> str:
    """Markdown rendering of the validation checks."""
    lines = ["# Formula validation report", ""]
    for check in checks:
        lines.append(f"## {check.topic}")
        lines.append("")
        lines.append(f"**Conclusion:** {check.conclusion}")
        lines.append("")
        for key, value in check.details.items():
            if isinstance(value, dict):
                inner = ", ".join(f"{k:g}: {v:.6g}" for k, v in value.items())
                lines.append(f"- {key}: {{{inner}}}")
            else:
                lines.append(f"- {key}: {value:.6g}" if isinstance(value, float) else f"- {key}: {value}")
        lines.append("")
    return "\n".join(lines)
