"""Transmissivity of an elliptic Gaussian beam through a circular aperture.

The beam reaching the aperture plane is described by its centroid (x, y),
log-squared semi-axes theta1/theta2 (W_i = W0 exp(theta_i / 2)) and
orientation phi.  All functions broadcast over numpy arrays; the shape
functions depend on their width argument only through t = (r0 W)^2, where W
has units of inverse length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .specfun import _lambert_w0_of_exp, bessel_i_scaled

# below this t = (r0 W)^2 the direct formulas lose all precision to
# cancellation; switch to series expansions (relative error ~t^3)
_T_SERIES = 1e-4


@dataclass(frozen=True)
class BeamSample:
    """One realization of the beam state at the receiver plane."""

    x: float
    y: float
    theta1: float
    theta2: float
    phi: float
    W0: float

    def __post_init__(self):
        if not self.W0 > 0.0:
            raise DomainError("W0 must be > 0")
        # semi-axis orientation has period pi
        if not (0.0 <= self.phi < math.pi):
            raise DomainError("phi must lie in [0, pi)")
        for name in ("x", "y", "theta1", "theta2"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")

    @property
    def W1(self):
        return self.W0 * math.exp(0.5 * self.theta1)

    @property
    def W2(self):
        return self.W0 * math.exp(0.5 * self.theta2)


def _lambda_and_log(t):
    """Shape exponent lambda(t) and the log factor L(t) shared with R(t).

    t = (r0 W)^2.  Uses scaled Bessel evaluations so the direct branch is
    stable for arbitrarily large t, and series expansions below _T_SERIES.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise DomainError("t = (r0*W)^2 must be >= 0")
    lam = np.empty_like(t)
    lg = np.empty_like(t)
    small = t < _T_SERIES
    if np.any(small):
        ts = t[small]
        poly_em = 1.0 - 0.75 * ts + (5.0 / 12.0) * ts**2 - (35.0 / 192.0) * ts**3
        p = (1.0 - ts + (5.0 / 8.0) * ts**2 - (7.0 / 24.0) * ts**3) / poly_em
        q = (0.5 - 0.375 * ts + (17.0 / 96.0) * ts**2) / poly_em
        lg_s = np.log1p(ts * q)
        lam[small] = np.where(ts > 0.0, ts * p / np.where(lg_s > 0.0, lg_s, 1.0), 2.0)
        lg[small] = lg_s
    big = ~small
    if np.any(big):
        tb = t[big]
        em1 = 1.0 - bessel_i_scaled(0, tb)
        num1 = 2.0 * tb * bessel_i_scaled(1, tb)
        num2 = 2.0 * (1.0 - np.exp(-0.5 * tb))
        lg_b = np.log(num2 / em1)
        lam[big] = num1 / em1 / lg_b
        lg[big] = lg_b
    return lam, lg


def shaping_lambda(W, r0):
    """Shape exponent of the aperture-transmission law; even in W."""
    t = _t_of(W, r0)
    lam, _ = _lambda_and_log(t)
    return float(lam) if np.ndim(t) == 0 else lam


def scaling_R(W, r0):
    """Scale parameter of the aperture-transmission law, in units of r0."""
    t = _t_of(W, r0)
    if np.any(np.asarray(t) == 0.0):
        raise DomainError("scaling_R diverges at W = 0")
    lam, lg = _lambda_and_log(t)
    out = lg ** (-1.0 / lam)
    return float(out) if np.ndim(t) == 0 else out


def _t_of(W, r0):
    if not np.all(np.asarray(r0) > 0.0):
        raise DomainError("r0 must be > 0")
    w = np.asarray(W, dtype=float)
    return (np.asarray(r0, dtype=float) * w) ** 2


def effective_radius_sq(phi_rel, W1, W2, r0):
    """Squared effective spot radius seen along the displacement direction."""
    w1 = np.asarray(W1, dtype=float)
    w2 = np.asarray(W2, dtype=float)
    if np.any(w1 <= 0.0) or np.any(w2 <= 0.0) or not np.all(np.asarray(r0) > 0.0):
        raise DomainError("W1, W2 and r0 must be > 0")
    r0sq = np.asarray(r0, dtype=float) ** 2
    cos2 = np.cos(phi_rel) ** 2
    log_arg = (
        np.log(4.0 * r0sq / (w1 * w2))
        + (r0sq / w1**2) * (1.0 + 2.0 * cos2)
        + (r0sq / w2**2) * (1.0 + 2.0 * (1.0 - cos2))
    )
    return 4.0 * r0sq / _lambert_w0_of_exp(log_arg)


def max_transmissivity(W1, W2, r0):
    """Peak transmissivity T0 of a centered elliptic beam."""
    w1 = np.asarray(W1, dtype=float)
    w2 = np.asarray(W2, dtype=float)
    if np.any(w1 <= 0.0) or np.any(w2 <= 0.0) or not np.all(np.asarray(r0) > 0.0):
        raise DomainError("W1, W2 and r0 must be > 0")
    scalar = np.ndim(W1) == 0 and np.ndim(W2) == 0
    w1, w2 = np.atleast_1d(w1), np.atleast_1d(w2)
    w1, w2 = np.broadcast_arrays(w1, w2)
    r0sq = float(np.asarray(r0)) ** 2
    d1 = 1.0 / w1**2
    d2 = 1.0 / w2**2
    gap = r0sq * np.abs(d1 - d2)
    # I0(gap) e^(-r0^2 (d1+d2)) via the scaled Bessel: gap <= r0^2 (d1+d2)
    centered = bessel_i_scaled(0, gap) * np.exp(gap - r0sq * (d1 + d2))
    delta = 1.0 / w1 - 1.0 / w2
    degenerate = np.abs(delta) < 1e-9 / w1
    delta_safe = np.where(degenerate, 1.0 / w1, delta)
    lam, lg = _lambda_and_log(r0sq * delta_safe**2)
    ratio = (w1 + w2) ** 2 / np.abs(w1**2 - w2**2 + np.where(degenerate, 1.0, 0.0))
    with np.errstate(over="ignore"):
        exponent = (ratio / lg ** (-1.0 / lam)) ** lam
    mismatch = 2.0 * (1.0 - np.exp(-0.5 * r0sq * delta**2)) * np.exp(-exponent)
    t0 = 1.0 - centered - np.where(degenerate, 0.0, mismatch)
    t0 = np.clip(t0, 0.0, 1.0)
    return float(t0[0]) if scalar else t0.reshape(np.broadcast(np.asarray(W1), np.asarray(W2)).shape)


def transmissivity(sample, r0):
    """Aperture transmissivity T_E for one beam realization."""
    t = transmissivity_batch(
        np.asarray(sample.x),
        np.asarray(sample.y),
        np.asarray(sample.theta1),
        np.asarray(sample.theta2),
        np.asarray(sample.phi),
        sample.W0,
        r0,
    )
    return float(t)


def transmissivity_batch(x, y, theta1, theta2, phi, W0, r0):
    """Vectorized transmissivity for arrays of beam realizations."""
    if not W0 > 0.0 or not r0 > 0.0:
        raise DomainError("W0 and r0 must be > 0")
    w1 = W0 * np.exp(0.5 * np.asarray(theta1, dtype=float))
    w2 = W0 * np.exp(0.5 * np.asarray(theta2, dtype=float))
    t0 = max_transmissivity(w1, w2, r0)
    phi0 = np.arctan2(y, x)
    weff2 = effective_radius_sq(np.asarray(phi) - phi0, w1, w2, r0)
    lam, lg = _lambda_and_log(4.0 * r0**2 / weff2)
    d = np.hypot(x, y)
    # R = lg^(-1/lam); exponent (d / (r0 R))^lam, overflow collapses to T = 0
    with np.errstate(over="ignore"):
        exponent = (d / r0 * lg ** (1.0 / lam)) ** lam
        t_e = t0 * np.exp(-exponent)
    return t_e
