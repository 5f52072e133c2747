"""Monte Carlo transmissivity ensembles over the fading channel.

Sampling is counter-based: a Philox stream keyed by the u64 seed emits a
fixed stride of 8 raw 64-bit words per sample, so any chunking of the index
range reproduces the single-stream sequence bit for bit.  Normal variates
come from the inverse CDF (no rejection), keeping the stride exact.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.random import Philox
from scipy.special import ndtri

from .beam import BeamSample, transmissivity_batch
from .errors import DomainError, NumericalError

_RAWS_PER_SAMPLE = 8  # two Philox counter blocks of 4 words each
_CHUNK = 1 << 16

MODEL_KINDS = ("full", "wandering_only")


@dataclass(frozen=True)
class ChannelModelKind:
    """Fading model selector; wandering_only freezes a circular beam."""

    kind: str = "full"
    fixed_ratio: float = 2.0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise DomainError(f"kind must be one of {MODEL_KINDS}")
        if not self.fixed_ratio > 0.0:
            raise DomainError("fixed_ratio must be > 0")


@dataclass(frozen=True)
class TransmissivityEnsemble:
    """Sampled transmissivities plus summary statistics."""

    samples: np.ndarray
    seed: int
    n_samples: int
    mean_T: float
    mean_attenuation_db: float
    n_flagged: int = 0


def _uniform_lanes(seed, start, count):
    """Uniforms in (0,1), shape (count, 8), for samples [start, start+count)."""
    gen = Philox(key=seed)
    if start:
        gen.advance(_RAWS_PER_SAMPLE * start // 4)
    raw = gen.random_raw(_RAWS_PER_SAMPLE * count)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return u.reshape(count, _RAWS_PER_SAMPLE)


def _fields_from_uniforms(u, stats, scenario, model):
    """Map uniform lanes to beam fields (x, y, theta1, theta2, phi)."""
    sd_c = math.sqrt(stats.var_centroid)
    x = sd_c * ndtri(u[:, 0])
    y = sd_c * ndtri(u[:, 1])
    if model.kind == "wandering_only":
        theta = 2.0 * math.log(scenario.r0 / (model.fixed_ratio * scenario.W0))
        theta1 = np.full(u.shape[0], theta)
        theta2 = theta1
        phi = np.zeros(u.shape[0])
    else:
        chol = stats.theta_cholesky()
        n1 = ndtri(u[:, 2])
        n2 = ndtri(u[:, 3])
        theta1 = stats.mean_theta + chol[0, 0] * n1
        theta2 = stats.mean_theta + chol[1, 0] * n1 + chol[1, 1] * n2
        phi = math.pi * u[:, 4]
    return x, y, theta1, theta2, phi


def sample_beam(stats, scenario, rng):
    """Draw a single BeamSample using an externally supplied Generator."""
    u = np.asarray(rng.random(_RAWS_PER_SAMPLE)).reshape(1, _RAWS_PER_SAMPLE)
    x, y, t1, t2, phi = _fields_from_uniforms(u, stats, scenario, ChannelModelKind("full"))
    return BeamSample(
        x=float(x[0]), y=float(y[0]), theta1=float(t1[0]), theta2=float(t2[0]),
        phi=float(phi[0]), W0=scenario.W0,
    )


def _chunk_transmissivities(seed, start, count, stats, scenario, model):
    u = _uniform_lanes(seed, start, count)
    x, y, t1, t2, phi = _fields_from_uniforms(u, stats, scenario, model)
    return transmissivity_batch(x, y, t1, t2, phi, scenario.W0, scenario.r0)


def sample_ensemble(stats, scenario, model, n_samples, seed, workers=1):
    """Sample n_samples transmissivities; chunking never changes the values.

    Samples that come out non-finite or outside [0, 1] are excluded and
    counted in n_flagged (none are expected for valid statistics).
    """
    if n_samples <= 0:
        raise DomainError("n_samples must be > 0")
    if not 0 <= seed < 2**64:
        raise DomainError("seed must be a u64")
    out = np.empty(n_samples)
    starts = list(range(0, n_samples, _CHUNK))

    def fill(start):
        count = min(_CHUNK, n_samples - start)
        out[start : start + count] = _chunk_transmissivities(
            seed, start, count, stats, scenario, model
        )

    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, starts))
    else:
        for start in starts:
            fill(start)
    valid = np.isfinite(out) & (out >= 0.0) & (out <= 1.0)
    n_flagged = int(n_samples - valid.sum())
    samples = out if n_flagged == 0 else out[valid]
    if samples.size == 0:
        raise NumericalError("all transmissivity samples were flagged")
    mean_t = float(np.mean(samples))
    # n_samples counts the retained samples; requested = n_samples + n_flagged
    return TransmissivityEnsemble(
        samples=samples,
        seed=seed,
        n_samples=samples.size,
        mean_T=mean_t,
        mean_attenuation_db=-10.0 * math.log10(mean_t),
        n_flagged=n_flagged,
    )


@dataclass(frozen=True)
class EnsembleStatistics:
    mean_T: float
    mean_attenuation_db: float
    hist_counts: np.ndarray
    hist_edges: np.ndarray


def ensemble_statistics(ensemble, bins=200):
    """Mean transmissivity, mean attenuation and a fixed-range histogram."""
    counts, edges = np.histogram(ensemble.samples, bins=bins, range=(0.0, 1.0))
    return EnsembleStatistics(
        mean_T=ensemble.mean_T,
        mean_attenuation_db=ensemble.mean_attenuation_db,
        hist_counts=counts,
        hist_edges=edges,
    )


def calibrate_sigma_I2(scenario, model, target_db, n_probe=1 << 15, seed=7, tol_db=0.05):
    """Scintillation index whose ensemble hits a target mean attenuation.

    Mean transmissivity decreases monotonically with sigma_I2, so a bisection
    on log(sigma_I2) converges; returns the calibrated sigma_I2.
    """
    from .atmosphere import beam_statistics

    if not target_db > 0.0:
        raise DomainError("target_db must be > 0")

    def attenuation(sigma_i2):
        stats = beam_statistics(scenario, sigma_i2)
        ens = sample_ensemble(stats, scenario, model, n_probe, seed)
        return ens.mean_attenuation_db

    lo, hi = 1e-4, 1e-4
    if attenuation(lo) > target_db:
        raise DomainError("target attenuation below the zero-turbulence floor")
    for _ in range(80):
        hi *= 4.0
        if attenuation(hi) > target_db:
            break
    else:
        raise NumericalError("could not bracket the target attenuation")
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        a = attenuation(mid)
        if abs(a - target_db) <= tol_db:
            return mid
        if a > target_db:
            hi = mid
        else:
            lo = mid
    raise NumericalError("sigma_I2 calibration did not converge")
