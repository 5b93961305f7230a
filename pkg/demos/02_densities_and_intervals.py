#!/usr/bin/env python3
"""Exact densities, moments, and what they buy you for interval estimates.

Evaluates the analytic densities of the path range and the bridge range,
checks their celebrated moments, tabulates the estimator pdfs to CSV
(plot-ready), and computes the factor-N interval probabilities that make
the bridge estimator attractive: Pr{true vol < 2 * estimate} is 0.918 for
the bridge versus 0.813 for Parkinson at zero drift.
"""

import math
import pathlib

import numpy as np

from rangevol import (
    EstimatorKind,
    bridge_estimator_pdf,
    bridge_range_pdf,
    coverage_probability,
    interval_probability,
    mean_range_squared_series,
    parkinson_estimator_pdf,
    range_pdf,
    theoretical_moments,
)

OUT = pathlib.Path(__file__).resolve().parent / "output"
OUT.mkdir(exist_ok=True)

print("=" * 70)
print("1. The mean squared range is ln 16 (series vs quadrature)")
print("=" * 70)
from scipy import integrate

series = mean_range_squared_series(100_000)
quad, _ = integrate.quad(lambda d: d * d * range_pdf(d).value, 0.02, 13, limit=300)
print(f"series limit      : {series:.12f}")
print(f"density moment    : {quad:.12f}")
print(f"ln 16             : {math.log(16):.12f}")

print()
print("=" * 70)
print("2. Bridge range moments")
print("=" * 70)
m2, _ = integrate.quad(lambda d: d * d * bridge_range_pdf(d).value, 0.02, 7, limit=300)
m4, _ = integrate.quad(lambda d: d**4 * bridge_range_pdf(d).value, 0.02, 8, limit=300)
print(f"E[s^2] = {m2:.10f}   (pi^2/6  = {math.pi**2 / 6:.10f})")
print(f"E[s^4] = {m4:.10f}   (pi^4/30 = {math.pi**4 / 30:.10f})")

print()
print("=" * 70)
print("3. Estimator moments from the densities")
print("=" * 70)
for kind, gamma in [
    (EstimatorKind.PARKINSON, 0.0),
    (EstimatorKind.PARKINSON, 1.0),
    (EstimatorKind.PARKINSON, 2.0),
    (EstimatorKind.BRIDGE, 0.0),
]:
    rep = theoretical_moments(kind, gamma)
    print(
        f"{kind.value:10s} gamma={gamma:3.1f}: mean = {rep.mean:.6f}  "
        f"variance = {rep.variance:.6f}  relative bias = {rep.relative_bias:+.4f}"
    )
print("(Parkinson drifts away from 1 as gamma grows; the bridge never moves.)")

print()
print("=" * 70)
print("4. Plot-ready estimator pdfs -> demos/output/*.csv")
print("=" * 70)
xs = np.linspace(0.01, 6.0, 600)
for name, pdf in [
    ("parkinson_pdf_gamma0", lambda x: parkinson_estimator_pdf(x, 0.0).value),
    ("parkinson_pdf_gamma1", lambda x: parkinson_estimator_pdf(x, 1.0).value),
    ("bridge_pdf", lambda x: bridge_estimator_pdf(x).value),
]:
    path = OUT / f"{name}.csv"
    with open(path, "w") as fh:
        fh.write("x,density\n")
        fh.writelines(f"{x:.6f},{pdf(float(x)):.10e}\n" for x in xs)
    print(f"wrote {path}")

print()
print("=" * 70)
print("5. Interval probabilities F(N) = Pr{true vol < N * estimate}")
print("=" * 70)
print("      N     bridge   Parkinson(gamma=0)")
for level in (1.0, 1.5, 2.0, 3.0, 5.0):
    fb = interval_probability(EstimatorKind.BRIDGE, 0.0, level)
    fp = interval_probability(EstimatorKind.PARKINSON, 0.0, level)
    print(f"  {level:5.1f}   {fb:.4f}   {fp:.4f}")

pb = coverage_probability(EstimatorKind.BRIDGE)
pp = coverage_probability(EstimatorKind.PARKINSON, 0.0)
print()
print(f"factor-2 coverage Pr{{est/2 < vol < 2 est}}: bridge {pb:.4f}, Parkinson {pp:.4f}")
