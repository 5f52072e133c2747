"""Two-mode source states: TMSV and its photon-subtracted/added variants.

The non-Gaussian operation is a beam splitter of transmissivity T_S on one
mode followed by a photon-number measurement on the tapped port.  Subtracting
N photons from one mode produces the same ket as adding N to the other, so
both conditioned schemes share the addition success probability; `tps` keeps
the extra photons in mode A, `tpa` keeps them in mode B.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import CutoffError, DomainError, UnphysicalStateError

SCHEMES = ("tmsv", "tps", "tpa")


@dataclass(frozen=True)
class SourceParams:
    """Source selection: scheme, TMSV mean photon number, tap and count."""

    scheme: str
    alpha2: float
    T_S: float = 1.0
    N: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise DomainError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not self.alpha2 >= 0.0:
            raise DomainError("alpha2 must be >= 0")
        if not 0.0 < self.T_S <= 1.0:
            raise DomainError("T_S must be in (0, 1]")
        if self.N < 0 or int(self.N) != self.N:
            raise DomainError("N must be a nonnegative integer")
        if self.scheme == "tmsv" and self.N != 0:
            raise DomainError("tmsv takes no conditioning, N must be 0")


@dataclass(frozen=True)
class TwoModeCM:
    """Two-mode covariance matrix diag-blocks (x_var I, y_var I), off-diag z_corr sigma_z."""

    x_var: float
    y_var: float
    z_corr: float

    def __post_init__(self):
        if self.x_var < 1.0 - 1e-9 or self.y_var < 1.0 - 1e-9:
            raise UnphysicalStateError("mode variances must be >= 1 (vacuum)")
        if self.x_var * self.y_var - self.z_corr**2 < 1.0 - 1e-9:
            raise UnphysicalStateError("covariance matrix violates the uncertainty bound")

    def as_matrix(self):
        sz = np.diag([1.0, -1.0])
        out = np.zeros((4, 4))
        out[:2, :2] = self.x_var * np.eye(2)
        out[2:, 2:] = self.y_var * np.eye(2)
        out[:2, 2:] = self.z_corr * sz
        out[2:, :2] = self.z_corr * sz
        return out


def tmsv_cm(alpha2):
    """Covariance matrix of a TMSV state with mean photon number alpha2 per mode."""
    if not alpha2 >= 0.0:
        raise DomainError("alpha2 must be >= 0")
    v = 1.0 + 2.0 * alpha2
    return TwoModeCM(v, v, 2.0 * math.sqrt(alpha2 * (alpha2 + 1.0)))


def squeezing_db(alpha2):
    """Two-mode squeezing of the TMSV in dB: r = asinh(sqrt(alpha2))."""
    if not alpha2 >= 0.0:
        raise DomainError("alpha2 must be >= 0")
    r = math.asinh(math.sqrt(alpha2))
    return 20.0 * r / math.log(10.0)


def subtraction_probability(alpha2, T_S, N, efficiency=1.0):
    """Success probability of heralding N subtracted photons.

    efficiency is a scalar heralding-detector multiplier (ideal by default).
    """
    _check_tap(alpha2, T_S, N, efficiency)
    p = (alpha2 * (1.0 - T_S)) ** N / (1.0 + alpha2 - alpha2 * T_S) ** (N + 1)
    return efficiency * p


def addition_probability(alpha2, T_S, N, efficiency=1.0):
    """Success probability of heralding N added photons (also used for tps)."""
    _check_tap(alpha2, T_S, N, efficiency)
    p = ((alpha2 + 1.0) * (1.0 - T_S)) ** N / (1.0 + alpha2 - alpha2 * T_S) ** (N + 1)
    if np.any(np.asarray(p) > 1.0):
        warnings.warn("addition probability exceeded 1; inputs are outside the physical range")
    return efficiency * p


def _check_tap(alpha2, T_S, N, efficiency=1.0):
    if np.any(np.asarray(alpha2) < 0.0):
        raise DomainError("alpha2 must be >= 0")
    t = np.asarray(T_S)
    if np.any((t <= 0.0) | (t > 1.0)):
        raise DomainError("T_S must be in (0, 1]")
    if np.any(np.asarray(N) < 0):
        raise DomainError("N must be >= 0")
    if not 0.0 <= efficiency <= 1.0:
        raise DomainError("efficiency must be in [0, 1]")


def cm_entries(scheme, alpha2, T_S, N):
    """Vectorized covariance entries and success probability.

    Returns (x_var, y_var, z_corr, p_success) broadcast over alpha2 / T_S.
    """
    if scheme not in SCHEMES:
        raise DomainError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    a2 = np.asarray(alpha2, dtype=float)
    if scheme == "tmsv":
        v = 1.0 + 2.0 * a2
        z = 2.0 * np.sqrt(a2 * (a2 + 1.0))
        one = np.ones_like(v)
        return v, v * one, z, one
    ts = np.asarray(T_S, dtype=float)
    t = a2 * ts / (1.0 + a2)
    x = 1.0 + 2.0 * (N + t) / (1.0 - t)
    y = 1.0 + 2.0 * (N + 1.0) * t / (1.0 - t)
    z = 2.0 * np.sqrt(t) * (N + 1.0) / (1.0 - t)
    p = addition_probability(a2, ts, N)
    if scheme == "tps":
        return x, y, z, p
    return y, x, z, p


def pss_cm(alpha2, T_S, N):
    """Covariance matrix after keeping the N extra photons in mode A."""
    x, y, z, _ = cm_entries("tps", alpha2, T_S, N)
    return TwoModeCM(float(x), float(y), float(z))


def pas_cm(alpha2, T_S, N):
    """Covariance matrix after keeping the N extra photons in mode B."""
    x, y, z, _ = cm_entries("tpa", alpha2, T_S, N)
    return TwoModeCM(float(x), float(y), float(z))


def default_cutoff(alpha2, N):
    """Fock cutoff so the retained geometric tail is below 1e-12."""
    ratio = alpha2 / (1.0 + alpha2)
    if ratio <= 0.0:
        base = 0
    else:
        base = int(math.ceil(math.log(1e-12) / math.log(ratio)))
    return 2 * max(base, 20) + 2 * N


@dataclass(frozen=True)
class FockTwoModeState:
    """Sparse two-mode ket with real amplitudes, map (n_A, n_B) -> amplitude."""

    coefficients: dict = field(repr=False)
    n_max: int
    tail_bound: float

    def norm_sq(self):
        return float(sum(c * c for c in self.coefficients.values()))


def fock_ket(params, n_max=None):
    """Fock expansion of the source state selected by `params`.

    TMSV amplitudes are a_n = sqrt(alpha2^n / (1+alpha2)^(n+1)); the
    conditioned schemes weight them by the beam-splitter amplitude
    r(n, N) = sqrt(C(n, N)) T_S^((n-N)/2) (1-T_S)^(N/2) and normalize by the
    analytic success probability.  The global (-1)^N phase is dropped.
    """
    if n_max is None:
        n_max = default_cutoff(params.alpha2, params.N)
    if params.N > n_max:
        raise CutoffError(f"n_max={n_max} cannot host N={params.N} extra photons")
    a2 = params.alpha2
    ratio = a2 / (1.0 + a2)
    a_n = np.sqrt(ratio ** np.arange(n_max + 1) / (1.0 + a2))
    coeffs = {}
    if params.scheme == "tmsv":
        for n in range(n_max + 1):
            coeffs[(n, n)] = float(a_n[n])
    else:
        n_cond = params.N
        t = params.T_S
        p = addition_probability(a2, t, n_cond)
        for m in range(n_max + 1 - n_cond):
            r = math.sqrt(math.comb(m + n_cond, n_cond)) * t ** (m / 2.0) * (1.0 - t) ** (n_cond / 2.0)
            amp = float(a_n[m]) * r / math.sqrt(p)
            if params.scheme == "tps":
                coeffs[(m + n_cond, m)] = amp
            else:
                coeffs[(m, m + n_cond)] = amp
    tail = max(0.0, 1.0 - sum(c * c for c in coeffs.values()))
    if tail > 1e-10:
        raise CutoffError(
            f"n_max={n_max} leaves a truncated norm tail of {tail:.3e} (> 1e-10)"
        )
    return FockTwoModeState(coefficients=coeffs, n_max=n_max, tail_bound=tail)


def oracle_cm_from_fock(state):
    """Covariance matrix from Fock amplitudes via ladder-operator moments.

    Renormalizes within the cutoff, verifies first moments vanish and the
    second moments have the (x_var I, y_var I, z_corr sigma_z) structure, and
    returns the matching TwoModeCM.
    """
    coeffs = state.coefficients
    norm = state.norm_sq()
    if norm <= 0.0:
        raise UnphysicalStateError("state has zero norm")
    get = coeffs.get
    n_a = n_b = ab = a2m = b2m = abdag = amean = bmean = 0.0
    for (i, j), c in coeffs.items():
        n_a += c * c * i
        n_b += c * c * j
        ab += get((i - 1, j - 1), 0.0) * c * math.sqrt(i * j)
        a2m += get((i - 2, j), 0.0) * c * math.sqrt(i * (i - 1))
        b2m += get((i, j - 2), 0.0) * c * math.sqrt(j * (j - 1))
        abdag += get((i - 1, j + 1), 0.0) * c * math.sqrt(i * (j + 1))
        amean += get((i - 1, j), 0.0) * c * math.sqrt(i)
        bmean += get((i, j - 1), 0.0) * c * math.sqrt(j)
    n_a, n_b, ab, a2m, b2m, abdag = (v / norm for v in (n_a, n_b, ab, a2m, b2m, abdag))
    amean, bmean = amean / norm, bmean / norm
    tol = 1e-8
    if max(abs(amean), abs(bmean)) > tol:
        raise UnphysicalStateError("first moments do not vanish")
    if max(abs(a2m), abs(b2m), abs(abdag)) > tol:
        raise UnphysicalStateError("second moments are not of sigma_z form")
    return TwoModeCM(1.0 + 2.0 * n_a, 1.0 + 2.0 * n_b, 2.0 * ab)
