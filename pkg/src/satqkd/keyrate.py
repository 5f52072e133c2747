"""Asymptotic secret key rates with reverse reconciliation.

Pipeline per channel use: source two-mode state (mode B transmitted through
a lossy, noisy channel), imperfect homodyne detection modeled as a beam
splitter of transmissivity eta_d mixing B with one arm of a TMSV of variance
nu (modes G, H kept by Eve), x-quadrature homodyne on the surviving mode B3.
The rate is K = P_success * (eta_r * I(A:B3) - chi(E:B3)), clamped at 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import specfun
from .errors import DomainError, UnphysicalStateError
from .states import SourceParams, TwoModeCM, cm_entries, pas_cm, pss_cm, tmsv_cm
from .states import addition_probability

_SZ = np.diag([1.0, -1.0])
# symplectic eigenvalues this close below 1 are rounding, not physics
_EIG_CLAMP = 1e-6
_BATCH = 1 << 16


@dataclass(frozen=True)
class NoiseParams:
    """Channel excess noise and detector model, shared across sources."""

    epsilon: float = 0.1
    nu: float = 1.1
    eta_d: float = 0.68
    eta_r: float = 0.95

    def __post_init__(self):
        if self.epsilon < 0.0:
            raise DomainError("epsilon must be >= 0")
        if self.nu < 1.0:
            raise DomainError("nu must be >= 1")
        if not 0.0 < self.eta_d <= 1.0:
            raise DomainError("eta_d must be in (0, 1]")
        if not 0.0 < self.eta_r <= 1.0:
            raise DomainError("eta_r must be in (0, 1]")


@dataclass(frozen=True)
class ProtocolParams:
    """Source selection plus channel/detector noise for one evaluation."""

    source: SourceParams
    epsilon: float = 0.1
    nu: float = 1.1
    eta_d: float = 0.68
    eta_r: float = 0.95

    def __post_init__(self):
        NoiseParams(self.epsilon, self.nu, self.eta_d, self.eta_r)

    @property
    def noise(self):
        return NoiseParams(self.epsilon, self.nu, self.eta_d, self.eta_r)

    @classmethod
    def from_noise(cls, source, noise):
        return cls(source, noise.epsilon, noise.nu, noise.eta_d, noise.eta_r)


@dataclass(frozen=True)
class KeyRateResult:
    """Key rate and its pieces; sympl_eigs is None for ensemble averages."""

    rate: float
    raw_rate: float
    mutual_info: float
    holevo: float
    success_prob: float
    sympl_eigs: tuple | None = None


def source_cm(source):
    """Covariance matrix and heralding probability of the selected source."""
    if source.scheme == "tmsv":
        return tmsv_cm(source.alpha2), 1.0
    prob = float(addition_probability(source.alpha2, source.T_S, source.N))
    if source.scheme == "tps":
        return pss_cm(source.alpha2, source.T_S, source.N), prob
    return pas_cm(source.alpha2, source.T_S, source.N), prob


def evolve_channel(cm, t_channel, epsilon):
    """Mode-B evolution through loss t_channel with excess noise epsilon."""
    if not 0.0 <= t_channel <= 1.0:
        raise DomainError("t_channel must be in [0, 1]")
    if epsilon < 0.0:
        raise DomainError("epsilon must be >= 0")
    return TwoModeCM(
        cm.x_var,
        t_channel * (cm.y_var + epsilon) + (1.0 - t_channel),
        math.sqrt(t_channel) * cm.z_corr,
    )


def detector_cm(cm_ab2, eta_d, nu):
    """8x8 covariance matrix of modes (A, G, H, B3) after the detector model."""
    if not 0.0 < eta_d <= 1.0:
        raise DomainError("eta_d must be in (0, 1]")
    if nu < 1.0:
        raise DomainError("nu must be >= 1")
    x, yp, zp = cm_ab2.x_var, cm_ab2.y_var, cm_ab2.z_corr
    c_ag = -math.sqrt(1.0 - eta_d) * zp
    g_var = eta_d * nu + (1.0 - eta_d) * yp
    c_gh = math.sqrt(eta_d * (nu**2 - 1.0))
    y_pp = eta_d * yp + (1.0 - eta_d) * nu
    s_a = math.sqrt(eta_d) * zp
    s_g = math.sqrt((1.0 - eta_d) * eta_d) * (nu - yp)
    s_h = math.sqrt((1.0 - eta_d) * (nu**2 - 1.0))
    out = np.zeros((8, 8))
    blocks = {
        (0, 0): x * np.eye(2),
        (1, 1): g_var * np.eye(2),
        (2, 2): nu * np.eye(2),
        (3, 3): y_pp * np.eye(2),
        (0, 1): c_ag * _SZ,
        (1, 2): c_gh * _SZ,
        (0, 3): s_a * _SZ,
        # G and B3 are outputs of one beam splitter fed by uncorrelated
        # modes, so their cross block is proportional to the identity.
        (1, 3): s_g * np.eye(2),
        (2, 3): s_h * _SZ,
    }
    for (i, j), blk in blocks.items():
        out[2 * i : 2 * i + 2, 2 * j : 2 * j + 2] = blk
        if i != j:
            out[2 * j : 2 * j + 2, 2 * i : 2 * i + 2] = blk.T
    nus = specfun.symplectic_eigenvalues(out)
    if np.any(nus < 1.0 - _EIG_CLAMP):
        raise UnphysicalStateError("detector covariance matrix is unphysical")
    return out


def mutual_information(cm, t_channel, epsilon, eta_d, nu):
    """I(A:B3) for x-quadrature homodyne, closed form in the source entries."""
    x, y, z = cm.x_var, cm.y_var, cm.z_corr
    _check_channel_args(t_channel, epsilon, eta_d, nu)
    c = eta_d * ((1.0 - t_channel) + t_channel * epsilon) + (1.0 - eta_d) * nu
    arg = 1.0 - eta_d * t_channel * z**2 / (eta_d * t_channel * x * y + c * x)
    if arg <= 0.0:
        raise UnphysicalStateError("mutual-information log argument is not positive")
    return -0.5 * math.log2(arg)


def _check_channel_args(t_channel, epsilon, eta_d, nu):
    if not 0.0 <= t_channel <= 1.0:
        raise DomainError("t_channel must be in [0, 1]")
    if epsilon < 0.0:
        raise DomainError("epsilon must be >= 0")
    if not 0.0 < eta_d <= 1.0:
        raise DomainError("eta_d must be in (0, 1]")
    if nu < 1.0:
        raise DomainError("nu must be >= 1")


def _closed_two_mode_eigs(x, yp, zp):
    """Symplectic spectrum of the post-channel two-mode CM, closed form."""
    s = np.sqrt((x + yp) ** 2 - 4.0 * zp**2)
    return 0.5 * (s + (yp - x)), 0.5 * (s - (yp - x))


def _g_clamped(values):
    v = np.asarray(values, dtype=float)
    if np.any(v < 1.0 - _EIG_CLAMP):
        raise UnphysicalStateError("symplectic eigenvalue below 1 beyond tolerance")
    return specfun.g_function(np.maximum(v, 1.0))


def _holevo_with_eigs(cm, t_channel, epsilon, eta_d, nu, quadrature="x"):
    _check_channel_args(t_channel, epsilon, eta_d, nu)
    evolved = evolve_channel(cm, t_channel, epsilon)
    l1, l2 = _closed_two_mode_eigs(evolved.x_var, evolved.y_var, evolved.z_corr)
    full = detector_cm(evolved, eta_d, nu)
    conditioned = specfun.condition_on_homodyne(full, measured_mode=3, quadrature=quadrature)
    rest = specfun.symplectic_eigenvalues(conditioned)
    chi = float(np.sum(_g_clamped([l1, l2])) - np.sum(_g_clamped(rest)))
    if chi < -1e-9:
        raise UnphysicalStateError("Holevo bound came out negative beyond tolerance")
    return max(chi, 0.0), (float(l1), float(l2), *map(float, rest))


def holevo_bound(cm, t_channel, epsilon, eta_d, nu, quadrature="x"):
    """Holevo bound chi(E:B3) against a collective Gaussian attack.

    Entropies from the symplectic spectra of the post-channel pair (closed
    two-mode form) and of the three retained modes conditioned on the
    homodyne outcome (general routine on the 8x8 detector CM).
    """
    chi, _ = _holevo_with_eigs(cm, t_channel, epsilon, eta_d, nu, quadrature)
    return chi


def key_rate(params, t_channel):
    """Secret key rate for a fixed channel transmissivity."""
    cm, prob = source_cm(params.source)
    mi = mutual_information(cm, t_channel, params.epsilon, params.eta_d, params.nu)
    chi, eigs = _holevo_with_eigs(cm, t_channel, params.epsilon, params.eta_d, params.nu)
    raw = prob * (params.eta_r * mi - chi)
    return KeyRateResult(
        rate=max(raw, 0.0),
        raw_rate=raw,
        mutual_info=mi,
        holevo=chi,
        success_prob=prob,
        sympl_eigs=eigs,
    )


def rates_batch(x_var, y_var, z_corr, prob, t_channel, noise):
    """Vectorized raw and clamped rates over broadcast parameter arrays.

    Same math as key_rate: closed-form lambda_1,2 plus the symplectic
    spectrum of the conditioned three-mode CM, obtained as sqrt of the
    eigenvalues of P X (the CM is x/p block diagonal after conditioning).
    """
    x, y, z, pn, t = np.broadcast_arrays(
        *(np.asarray(a, dtype=float) for a in (x_var, y_var, z_corr, prob, t_channel))
    )
    eps, nu, eta_d, eta_r = noise.epsilon, noise.nu, noise.eta_d, noise.eta_r
    zp = np.sqrt(t) * z
    yp = t * (y + eps) + (1.0 - t)
    c = eta_d * ((1.0 - t) + t * eps) + (1.0 - eta_d) * nu
    arg = 1.0 - eta_d * t * z**2 / (eta_d * t * x * y + c * x)
    if np.any(arg <= 0.0):
        raise UnphysicalStateError("mutual-information log argument is not positive")
    mi = -0.5 * np.log2(arg)
    l1, l2 = _closed_two_mode_eigs(x, yp, zp)
    c_ag = -math.sqrt(1.0 - eta_d) * zp
    g_var = eta_d * nu + (1.0 - eta_d) * yp
    c_gh = math.sqrt(eta_d * (nu**2 - 1.0))
    y_pp = eta_d * yp + (1.0 - eta_d) * nu
    s_a = math.sqrt(eta_d) * zp
    s_g = math.sqrt((1.0 - eta_d) * eta_d) * (nu - yp)
    s_h = math.sqrt((1.0 - eta_d) * (nu**2 - 1.0)) * np.ones_like(yp)
    shape = x.shape + (3, 3)
    xs = np.empty(shape)
    xs[..., 0, 0] = x - s_a**2 / y_pp
    xs[..., 0, 1] = xs[..., 1, 0] = c_ag - s_a * s_g / y_pp
    xs[..., 0, 2] = xs[..., 2, 0] = -s_a * s_h / y_pp
    xs[..., 1, 1] = g_var - s_g**2 / y_pp
    xs[..., 1, 2] = xs[..., 2, 1] = c_gh - s_g * s_h / y_pp
    xs[..., 2, 2] = nu - s_h**2 / y_pp
    ps = np.empty(shape)
    ps[..., 0, 0] = x
    ps[..., 0, 1] = ps[..., 1, 0] = -c_ag
    ps[..., 0, 2] = ps[..., 2, 0] = 0.0
    ps[..., 1, 1] = g_var
    ps[..., 1, 2] = ps[..., 2, 1] = -c_gh
    ps[..., 2, 2] = nu
    ev = np.linalg.eigvals(ps @ xs)
    if np.any(np.abs(ev.imag) > 1e-8 * np.maximum(1.0, np.abs(ev.real))):
        raise UnphysicalStateError("conditioned CM produced complex symplectic spectrum")
    rest = np.sqrt(np.maximum(ev.real, 0.0))
    chi = _g_clamped(l1) + _g_clamped(l2) - np.sum(_g_clamped(rest), axis=-1)
    if np.any(chi < -1e-9):
        raise UnphysicalStateError("Holevo bound came out negative beyond tolerance")
    chi = np.maximum(chi, 0.0)
    raw = pn * (eta_r * mi - chi)
    return raw, np.maximum(raw, 0.0), mi, chi


def average_key_rate(params, ensemble):
    """Ensemble average of the clamped per-sample rates (raw mean alongside)."""
    cm, prob = source_cm(params.source)
    samples = ensemble.samples
    raw = np.empty(samples.size)
    clamped = np.empty(samples.size)
    mi = np.empty(samples.size)
    chi = np.empty(samples.size)
    for start in range(0, samples.size, _BATCH):
        sl = slice(start, min(start + _BATCH, samples.size))
        raw[sl], clamped[sl], mi[sl], chi[sl] = rates_batch(
            cm.x_var, cm.y_var, cm.z_corr, prob, samples[sl], params.noise
        )
    return KeyRateResult(
        rate=float(np.mean(clamped)),
        raw_rate=float(np.mean(raw)),
        mutual_info=float(np.mean(mi)),
        holevo=float(np.mean(chi)),
        success_prob=prob,
        sympl_eigs=None,
    )


def repeaterless_bound(t_channel):
    """Two-way repeaterless capacity bound -log2(1 - T)."""
    t = np.asarray(t_channel, dtype=float)
    if np.any((t < 0.0) | (t >= 1.0)):
        raise DomainError("t_channel must be in [0, 1)")
    out = -np.log2(1.0 - t)
    return specfun._scalar_like(out, t_channel)


def repeaterless_bound_ensemble(ensemble):
    """Ensemble average of the bound; skips samples at T >= 1 - 1e-15."""
    t = ensemble.samples
    keep = t < 1.0 - 1e-15
    skipped = int(t.size - keep.sum())
    if not np.any(keep):
        raise DomainError("no samples below the bound's domain limit")
    return float(np.mean(-np.log2(1.0 - t[keep]))), skipped
