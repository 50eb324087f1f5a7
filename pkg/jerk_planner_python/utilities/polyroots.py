"""Closed-form real roots of polynomials up to degree four.

Coefficients are given highest degree first, as for numpy.polyval.
Every closed-form root is refined with Newton steps on the original
polynomial and kept only if the step does not increase the residual.
"""

import math
import numpy as np
from typing import List, Sequence

DEDUP_TOL = 1e-9
_REL_ZERO = 1e-13


def _newton_polish(coeffs: Sequence[float], x: float, steps: int=2) -> float:
    derivative = np.polyder(coeffs)
    best_x, best_res = x, abs(np.polyval(coeffs, x))
    for _ in range(steps):
        slope = np.polyval(derivative, x)
        if slope == 0 or not np.isfinite(slope):
            break
        x = x - np.polyval(coeffs, x) / slope
        res = abs(np.polyval(coeffs, x))
        if not np.isfinite(x) or res > best_res:
            break
        best_x, best_res = x, res
    return float(best_x)


def dedup(roots: List[float], tol: float=DEDUP_TOL) -> List[float]:
    unique = []
    for r in sorted(roots):
        if not unique or abs(r - unique[-1]) > tol * max(1.0, abs(r)):
            unique.append(r)
    return unique


def _trim(coeffs: Sequence[float]) -> np.ndarray:
    """Drops leading coefficients that are negligible against the largest one."""
    coeffs = np.asarray(coeffs, dtype=float)
    scale = np.max(np.abs(coeffs)) if coeffs.size else 0.0
    if scale == 0:
        return np.zeros(1)
    idx = 0
    while idx < coeffs.size - 1 and abs(coeffs[idx]) <= _REL_ZERO * scale:
        idx += 1
    return coeffs[idx:]


def is_identically_zero(coeffs: Sequence[float], tol: float=1e-12) -> bool:
    return bool(np.all(np.abs(np.asarray(coeffs, dtype=float)) <= tol))


def linear_roots(a: float, b: float) -> List[float]:
    if a == 0:
        return []
    return [-b / a]


def quadratic_roots(a: float, b: float, c: float) -> List[float]:
    """Real roots of a*x^2 + b*x + c."""
    if a == 0:
        return linear_roots(b, c)
    disc = b * b - 4 * a * c
    if disc < 0:
        # round-off around a double root
        if disc > -1e-12 * max(b * b, abs(4 * a * c)):
            return [-b / (2 * a)]
        return []
    sqrt_disc = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(sqrt_disc, b))
    if q == 0:
        return [0.0]
    return dedup([q / a, c / q])


def cubic_roots(a: float, b: float, c: float, d: float) -> List[float]:
    """Real roots of a*x^3 + b*x^2 + c*x + d (trigonometric or Cardano form)."""
    if a == 0:
        return quadratic_roots(b, c, d)
    B, C, D = b / a, c / a, d / a
    shift = B / 3.0
    p = C - B * B / 3.0
    q = 2.0 * B ** 3 / 27.0 - B * C / 3.0 + D
    half_q = 0.5 * q
    third_p = p / 3.0
    disc = half_q * half_q + third_p ** 3
    scale = half_q * half_q + abs(third_p) ** 3

    roots = []
    if disc > 0:
        sqrt_disc = math.sqrt(disc)
        u = np.cbrt(-half_q - math.copysign(sqrt_disc, half_q))
        t = u - third_p / u if u != 0 else 0.0
        roots.append(t)
        # nearly repeated pair lost to round-off
        if disc <= 1e-12 * scale:
            roots.append(float(np.cbrt(half_q)))
    elif p == 0:
        roots.append(0.0)
    else:
        r = 2.0 * math.sqrt(-third_p)
        arg = np.clip(3.0 * q / (2.0 * p) * math.sqrt(-3.0 / p), -1.0, 1.0)
        phi = math.acos(arg) / 3.0
        for k in range(3):
            roots.append(r * math.cos(phi - 2.0 * math.pi * k / 3.0))

    coeffs = (a, b, c, d)
    return dedup([_newton_polish(coeffs, t - shift) for t in roots])


def quartic_roots(a: float, b: float, c: float, d: float, e: float) -> List[float]:
    """Real roots of a*x^4 + b*x^3 + c*x^2 + d*x + e (Ferrari's method)."""
    coeffs = _trim((a, b, c, d, e))
    if coeffs.size < 5:
        return [r for r in _roots_by_degree(coeffs)]
    B, C, D, E = coeffs[1:] / coeffs[0]
    shift = B / 4.0
    # depressed quartic y^4 + p*y^2 + q*y + r
    p = C - 3.0 * B * B / 8.0
    q = B ** 3 / 8.0 - B * C / 2.0 + D
    r = -3.0 * B ** 4 / 256.0 + B * B * C / 16.0 - B * D / 4.0 + E

    roots = []
    if abs(q) <= 1e-14 * max(1.0, abs(p) ** 1.5, abs(r) ** 0.75):
        for z in quadratic_roots(1.0, p, r):
            if z >= 0:
                roots.extend([math.sqrt(z), -math.sqrt(z)])
            elif z > -1e-12:
                roots.append(0.0)
    else:
        resolvent = cubic_roots(1.0, p, p * p / 4.0 - r, -q * q / 8.0)
        m = max(resolvent)
        if m <= 0:
            return []
        s = math.sqrt(2.0 * m)
        roots.extend(quadratic_roots(1.0, -s, 0.5 * p + m + q / (2.0 * s)))
        roots.extend(quadratic_roots(1.0, s, 0.5 * p + m - q / (2.0 * s)))

    return dedup([_newton_polish(coeffs, y - shift, steps=3) for y in roots])


def _roots_by_degree(coeffs: Sequence[float]) -> List[float]:
    coeffs = list(coeffs)
    degree = len(coeffs) - 1
    if degree == 4:
        return quartic_roots(*coeffs)
    if degree == 3:
        return cubic_roots(*coeffs)
    if degree == 2:
        return quadratic_roots(*coeffs)
    if degree == 1:
        return linear_roots(*coeffs)
    return []


def real_roots_in(coeffs: Sequence[float], lo: float, hi: float) -> List[float]:
    """Real roots of a polynomial of degree <= 4 inside [lo, hi].

    The polynomial is rewritten over the unit interval before degree
    reduction so that negligible leading terms are judged on the interval
    scale. Returns an empty list for the zero polynomial.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    span = hi - lo
    if span <= 0:
        value = np.polyval(coeffs, lo)
        return [float(lo)] if abs(value) <= 1e-12 else []

    # Taylor shift to x = lo + span*u
    degree = coeffs.size - 1
    unit = np.zeros(degree + 1)
    derivative = coeffs
    for k in range(degree + 1):
        unit[degree - k] = np.polyval(derivative, lo) * span ** k / math.factorial(k)
        derivative = np.polyder(derivative) if derivative.size > 1 else np.zeros(1)
    unit = _trim(unit)

    roots = []
    for u in _roots_by_degree(unit):
        if -1e-12 <= u <= 1.0 + 1e-12:
            x = lo + span * min(max(u, 0.0), 1.0)
            x = _newton_polish(coeffs, x)
            roots.append(min(max(x, lo), hi))
    return dedup(roots)
