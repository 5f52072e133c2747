"""Turbulence profile, Rytov/scintillation chain, and beam statistics.

The chain is: refractive-index structure profile along the path -> Rytov
variance -> scintillation index sigma_I^2 -> log-normal beam-width statistics
and centroid-wandering variance used by the fading channel sampler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError, InvalidCovarianceError, NumericalError

LINKS = ("uplink", "downlink")
# aperture-averaging exponents of the scintillation formula per direction
_ZETA = {"uplink": 0.56, "downlink": 1.11}


@dataclass(frozen=True)
class TurbulenceScenario:
    """Geometry and profile parameters for one propagation path.

    Lengths are in meters: wavelength, launch beam waist W0, receiver
    aperture radius r0, path length L, transmitter altitude h0.  v is the
    rms wind speed (m/s) and A the ground-level structure constant.
    """

    wavelength: float
    W0: float
    r0: float
    L: float
    h0: float = 0.0
    v: float = 21.0
    A: float = 1.7e-14
    link: str = "downlink"

    def __post_init__(self):
        for name in ("wavelength", "W0", "r0", "L"):
            if not getattr(self, name) > 0.0:
                raise DomainError(f"{name} must be > 0")
        if self.h0 < 0.0:
            raise DomainError("h0 must be >= 0")
        if self.v < 0.0 or self.A < 0.0:
            raise DomainError("v and A must be >= 0")
        if self.link not in LINKS:
            raise DomainError(f"link must be one of {LINKS}")

    @property
    def wavenumber(self):
        return 2.0 * math.pi / self.wavelength

    @property
    def omega(self):
        """Fresnel number Omega = k W0^2 / (2 L) of the launch beam."""
        return self.wavenumber * self.W0**2 / (2.0 * self.L)

    @property
    def zeta(self):
        return _ZETA[self.link]


def cn2_profile(h, scenario):
    """Altitude profile of the refractive-index structure constant C_n^2(h)."""
    hh = np.asarray(h, dtype=float)
    if np.any(hh < 0.0):
        raise DomainError("altitude must be >= 0")
    out = (
        0.00594 * (scenario.v / 27.0) ** 2 * (hh * 1e-5) ** 10 * np.exp(-hh / 1000.0)
        + 2.7e-16 * np.exp(-hh / 1500.0)
        + scenario.A * np.exp(-hh / 100.0)
    )
    return float(out) if np.ndim(h) == 0 else out


def rytov_variance(scenario, profile=None):
    """sigma_R^2 = 2.25 k^(7/6) * integral of C_n^2(h) (h - h0)^(5/6) over the path.

    Adaptive quadrature with explicit splits at the profile knees (1 km and
    20 km above the transmitter); raises NumericalError if the estimate does
    not converge to 1e-8 relative.
    """
    prof = profile if profile is not None else (lambda h: cn2_profile(h, scenario))
    lo = scenario.h0
    hi = scenario.h0 + scenario.L
    knees = [p for p in (lo + 1000.0, lo + 20000.0) if lo < p < hi]
    val, err = integrate.quad(
        lambda h: prof(h) * (h - lo) ** (5.0 / 6.0),
        lo,
        hi,
        points=knees or None,
        limit=300,
        epsabs=0.0,
        epsrel=1e-10,
    )
    if not math.isfinite(val) or (val > 0.0 and err > 1e-8 * val):
        raise NumericalError("path integral for the Rytov variance did not converge")
    return 2.25 * scenario.wavenumber ** (7.0 / 6.0) * val


def scintillation_index(sigma_R2, link):
    """Scintillation index sigma_I^2 from the Rytov variance."""
    if link not in LINKS:
        raise DomainError(f"link must be one of {LINKS}")
    s = np.asarray(sigma_R2, dtype=float)
    if np.any(s < 0.0):
        raise DomainError("sigma_R2 must be >= 0")
    zeta = _ZETA[link]
    s65 = s ** (6.0 / 5.0)
    out = (
        np.exp(
            0.49 * s / (1.0 + zeta * s65) ** (7.0 / 6.0)
            + 0.51 * s / (1.0 + 0.69 * s65) ** (5.0 / 6.0)
        )
        - 1.0
    )
    return float(out) if np.ndim(sigma_R2) == 0 else out


@dataclass(frozen=True)
class BeamStatistics:
    """Log-normal beam parameters feeding the Monte Carlo sampler.

    mean_theta / var_theta / cov_theta describe the two log-squared-width
    variables; var_centroid is the per-axis beam-wandering variance (m^2).
    """

    mean_theta: float
    var_theta: float
    cov_theta: float
    var_centroid: float
    sigma_I2: float
    omega: float
    sigma_R2: float | None = None

    def __post_init__(self):
        if self.var_theta < 0.0 or self.var_centroid < 0.0:
            raise InvalidCovarianceError("variances must be >= 0")
        if abs(self.cov_theta) > self.var_theta + 1e-15:
            raise InvalidCovarianceError("|cov_theta| must not exceed var_theta")

    def theta_cholesky(self):
        """Lower Cholesky factor of the 2x2 (theta1, theta2) covariance."""
        v, c = self.var_theta, self.cov_theta
        if v == 0.0:
            return np.zeros((2, 2))
        a = math.sqrt(v)
        return np.array([[a, 0.0], [c / a, math.sqrt(max(v - c * c / v, 0.0))]])


def beam_statistics(scenario, sigma_I2, sigma_R2=None):
    """Beam-width and wandering statistics for a given scintillation index.

    sigma_R2 is informational (recorded when the index came from a profile).
    """
    if sigma_I2 < 0.0:
        raise DomainError("sigma_I2 must be >= 0")
    omega = scenario.omega
    s = sigma_I2 * omega ** (5.0 / 6.0)
    big = 1.0 + 2.96 * s
    mean_theta = math.log(big**2 / (omega**2 * math.sqrt(big**2 + 1.2 * s)))
    var_theta = math.log(1.0 + 1.2 * s / big**2)
    cov_theta = math.log(1.0 - 0.8 * s / big**2)
    var_centroid = 0.33 * scenario.W0**2 * sigma_I2 * omega ** (-7.0 / 6.0)
    return BeamStatistics(
        mean_theta=mean_theta,
        var_theta=var_theta,
        cov_theta=cov_theta,
        var_centroid=var_centroid,
        sigma_I2=sigma_I2,
        omega=omega,
        sigma_R2=sigma_R2,
    )


def scenario_sigma_I2(scenario):
    """Scintillation index implied by the scenario's turbulence profile."""
    return scintillation_index(rytov_variance(scenario), scenario.link)
