"""Special functions and Gaussian covariance-matrix primitives.

Conventions used throughout the package: hbar = 2 (vacuum quadrature
variance 1) and quadrature ordering (x1, p1, ..., xn, pn).

All special functions accept scalars or numpy arrays and broadcast.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateMeasurementError, DomainError, NumericalError

_INV_E = np.exp(-1.0)
# crossover between the Bessel power series and the asymptotic expansion
_BESSEL_SPLIT = 15.0


def _as_array(x, name):
    a = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(a)):
        raise DomainError(f"{name} must be finite")
    return a


def _scalar_like(value, template):
    return float(value) if np.isscalar(template) or np.ndim(template) == 0 else value


def lambert_w0(x):
    """Principal branch of the Lambert W function, w * exp(w) = x.

    Halley iteration seeded by a log-based asymptotic guess; converges to
    1e-14 relative in well under the 50-iteration cap for x >= -1/e.
    """
    a = _as_array(x, "x")
    if np.any(a < -_INV_E):
        raise DomainError("lambert_w0 requires x >= -1/e")
    la = np.log(np.maximum(a, np.e))
    w = np.select(
        [a > np.e, a < -0.25],
        # log asymptote for large x, square-root expansion near the branch point
        [la - np.log(la), -1.0 + np.sqrt(np.maximum(2.0 * (np.e * a + 1.0), 0.0))],
        default=0.5 * a,
    )
    converged = np.zeros_like(w, dtype=bool)
    for _ in range(50):
        ew = np.exp(w)
        f = w * ew - a
        wp1 = w + 1.0
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * np.where(wp1 == 0.0, 1.0, wp1))
        step = np.where(converged | (denom == 0.0), 0.0, f / np.where(denom == 0.0, 1.0, denom))
        w = w - step
        converged = converged | (np.abs(step) <= 1e-14 * (1.0 + np.abs(w)))
        if np.all(converged):
            break
    else:
        if not np.all(converged):
            raise NumericalError("lambert_w0 did not converge within 50 iterations")
    return _scalar_like(w, x)


def _lambert_w0_of_exp(y):
    """Solve w * exp(w) = exp(y) without forming exp(y); overflow-safe.

    Used for the effective-radius formula, whose Lambert argument is an
    exponential that can exceed float range for narrow beams.
    """
    y = np.asarray(y, dtype=float)
    small = y < 700.0
    out = np.empty_like(y)
    if np.any(small):
        out[small] = lambert_w0(np.exp(y[small]))
    rest = ~small
    if np.any(rest):
        yr = y[rest]
        # w + log(w) = y; Newton on h(w) = w + log(w) - y
        w = yr - np.log(yr)
        for _ in range(50):
            step = (w + np.log(w) - yr) * w / (w + 1.0)
            w = w - step
            if np.all(np.abs(step) <= 1e-14 * np.abs(w)):
                break
        else:
            raise NumericalError("log-domain Lambert solve did not converge")
        out[rest] = w
    return out


def _bessel_series(order, x):
    # ascending series sum_m (x/2)^(2m+order) / (m! (m+order)!)
    q = 0.25 * x * x
    term = np.ones_like(x) if order == 0 else 0.5 * x
    total = term.copy()
    for m in range(1, 60):
        term = term * q / (m * (m + order))
        total += term
    return total


def _bessel_asymptotic_scaled(order, x):
    # e^-x I_order(x) ~ (2 pi x)^(-1/2) * sum_k t_k, summed while terms shrink
    mu = 4.0 * order * order
    term = np.ones_like(x)
    total = term.copy()
    active = np.ones_like(x, dtype=bool)
    for k in range(1, 40):
        new = term * ((2 * k - 1.0) ** 2 - mu) / (8.0 * k * x)
        grow = np.abs(new) >= np.abs(term)
        active = active & ~grow
        total = np.where(active, total + new, total)
        term = np.where(active, new, term)
        if not np.any(active):
            break
    return total / np.sqrt(2.0 * np.pi * x)


def bessel_i_scaled(order, x):
    """exp(-x) * I_order(x) for order in {0, 1}; stable for large x."""
    if order not in (0, 1):
        raise DomainError("bessel_i_scaled supports orders 0 and 1")
    a = _as_array(x, "x")
    if np.any(a < 0.0):
        raise DomainError("bessel_i_scaled requires x >= 0")
    a = np.atleast_1d(a)
    out = np.empty_like(a)
    lo = a < _BESSEL_SPLIT
    if np.any(lo):
        out[lo] = np.exp(-a[lo]) * _bessel_series(order, a[lo])
    if np.any(~lo):
        out[~lo] = _bessel_asymptotic_scaled(order, a[~lo])
    return _scalar_like(out.reshape(np.shape(x)), x)


def bessel_i(order, x):
    """Modified Bessel function I_order(x) for order in {0, 1}, x >= 0.

    Power series below x = 15, scaled asymptotic expansion above; relative
    accuracy ~1e-13 or better across the switch.
    """
    if order not in (0, 1):
        raise DomainError("bessel_i supports orders 0 and 1")
    a = _as_array(x, "x")
    if np.any(a < 0.0):
        raise DomainError("bessel_i requires x >= 0")
    a = np.atleast_1d(a)
    out = np.empty_like(a)
    lo = a < _BESSEL_SPLIT
    if np.any(lo):
        out[lo] = _bessel_series(order, a[lo])
    if np.any(~lo):
        with np.errstate(over="ignore"):
            out[~lo] = _bessel_asymptotic_scaled(order, a[~lo]) * np.exp(a[~lo])
    return _scalar_like(out.reshape(np.shape(x)), x)


def symplectic_form(n_modes):
    """Block-diagonal symplectic form for (x1, p1, ..., xn, pn) ordering."""
    omega = np.zeros((2 * n_modes, 2 * n_modes))
    for j in range(n_modes):
        omega[2 * j, 2 * j + 1] = 1.0
        omega[2 * j + 1, 2 * j] = -1.0
    return omega


def symplectic_eigenvalues(gamma, pair_tol=1e-8):
    """Symplectic spectrum of a covariance matrix, sorted descending.

    Computed as |eigvals(i * Omega * gamma)|; the eigenvalues must come in
    +-i*nu pairs, and a NumericalError is raised if the pairing is broken
    beyond pair_tol (relative).
    """
    g = np.asarray(gamma, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] % 2 != 0:
        raise DomainError("covariance matrix must be square with even dimension")
    n = g.shape[0] // 2
    if not np.allclose(g, g.T, rtol=0.0, atol=1e-8 * max(1.0, np.abs(g).max())):
        raise DomainError("covariance matrix must be symmetric")
    try:
        np.linalg.cholesky(g + 1e-12 * np.eye(2 * n))
    except np.linalg.LinAlgError:
        raise DomainError("covariance matrix must be positive definite") from None
    ev = np.linalg.eigvals(symplectic_form(n) @ g)
    mags = np.sort(np.abs(ev))
    nus = np.empty(n)
    for j in range(n):
        a, b = mags[2 * j], mags[2 * j + 1]
        if abs(a - b) > pair_tol * max(1.0, abs(b)):
            raise NumericalError("symplectic spectrum does not pair within tolerance")
        nus[j] = 0.5 * (a + b)
    return np.sort(nus)[::-1]


def condition_on_homodyne(gamma, measured_mode, quadrature="x"):
    """Covariance matrix of the remaining modes after a homodyne detection.

    Implements gamma_rest - (1/V_q) * sigma_q sigma_q^T, where sigma_q is the
    column of covariances with the measured quadrature and V_q its variance.
    """
    g = np.asarray(gamma, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] % 2 != 0:
        raise DomainError("covariance matrix must be square with even dimension")
    n = g.shape[0] // 2
    if not 0 <= measured_mode < n:
        raise DomainError(f"measured_mode {measured_mode} out of range for {n} modes")
    if quadrature not in ("x", "p"):
        raise DomainError("quadrature must be 'x' or 'p'")
    iq = 2 * measured_mode + (0 if quadrature == "x" else 1)
    v_q = g[iq, iq]
    if v_q <= 1e-12:
        raise DegenerateMeasurementError("measured quadrature variance is not positive")
    keep = [i for i in range(2 * n) if i not in (2 * measured_mode, 2 * measured_mode + 1)]
    rest = g[np.ix_(keep, keep)]
    col = g[keep, iq]
    out = rest - np.outer(col, col) / v_q
    return 0.5 * (out + out.T)


def g_function(x):
    """Bosonic entropy g(x) = ((x+1)/2)log2((x+1)/2) - ((x-1)/2)log2((x-1)/2).

    Values in [1 - 1e-9, 1] are treated as exactly 1 (zero entropy); smaller
    arguments are a domain error.
    """
    a = np.asarray(x, dtype=float)
    if np.any(a < 1.0 - 1e-9):
        raise DomainError("g_function requires x >= 1 - 1e-9")
    ap = 0.5 * (a + 1.0)
    am = 0.5 * (a - 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = ap * np.log2(ap) - np.where(am > 0.0, am * np.log2(np.where(am > 0.0, am, 1.0)), 0.0)
    out = np.where(a <= 1.0, 0.0, out)
    return _scalar_like(out, x)
