"""Closed-form results for damped coherent states and their superpositions
under photon counting, and the jump-overlay construction built from them.

Times are in units of 1/kappa. Under a record with no counts the amplitudes
decay as ``alpha_i(t) = alpha_i e^{-t}`` and each component is weighted by the
square root of its null probability ``lambda(|alpha_i|^2; t)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import poisson

from .fock import coherent_amplitudes
from .semiclassical import localization_intersection, null_probability

__all__ = [
    "SuperpositionSpec",
    "JumpOverlay",
    "null_probability",
    "initial_superposition_photon",
    "null_record_photon_exact",
    "null_record_photon_approx",
    "null_record_density_matrix",
    "poisson_count_prob",
    "first_downward_crossing",
    "build_jump_overlay",
    "overlay_deviation",
]


@dataclass(frozen=True)
class SuperpositionSpec:
    """Amplitudes of ``|alpha1> + |alpha2>``; alpha1 is the brighter component."""

    alpha1: complex
    alpha2: complex

    def __post_init__(self):
        for a in (self.alpha1, self.alpha2):
            if not np.isfinite(complex(a).real) or not np.isfinite(complex(a).imag):
                raise ValueError("amplitudes must be finite")
        object.__setattr__(self, "alpha1", complex(self.alpha1))
        object.__setattr__(self, "alpha2", complex(self.alpha2))


def _parts(s: SuperpositionSpec, t):
    """Weights and cross term of the unnormalized no-count state at time(s) t."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    x1, x2 = abs(s.alpha1) ** 2, abs(s.alpha2) ** 2
    decay = np.exp(-2.0 * t)
    l1, l2 = null_probability(x1, t), null_probability(x2, t)
    a1t, a2t = s.alpha1 * np.exp(-t), s.alpha2 * np.exp(-t)
    # sqrt(l1 l2) <a1(t)|a2(t)>, combined in the exponent to avoid underflow
    log_cross = (-0.5 * (x1 + x2) * (1.0 - decay)
                 - 0.5 * (x1 + x2) * decay + np.conj(a1t) * a2t)
    cross = np.exp(log_cross)
    return x1 * decay, x2 * decay, l1, l2, np.conj(a1t) * a2t, cross


def initial_superposition_photon(s: SuperpositionSpec) -> float:
    """<a^+a> in (|a1> + |a2>) / sqrt(2 [1 + Re<a1|a2>])."""
    return float(null_record_photon_exact(s, 0.0))


def null_record_photon_exact(s: SuperpositionSpec, t):
    """Conditional photon number after a count-free interval of length t.

    Includes the interference term carried by ``<alpha1(t)|alpha2(t)>``.
    Accepts scalar or array ``t``.
    """
    n1, n2, l1, l2, prod, cross = _parts(s, t)
    num = n1 * l1 + n2 * l2 + 2.0 * (prod * cross).real
    den = l1 + l2 + 2.0 * cross.real
    out = num / den
    return float(out) if np.ndim(out) == 0 else out


def null_record_photon_approx(s: SuperpositionSpec, t):
    """As :func:`null_record_photon_exact` with the interference terms dropped."""
    n1, n2, l1, l2, _, _ = _parts(s, t)
    out = (n1 * l1 + n2 * l2) / (l1 + l2)
    return float(out) if np.ndim(out) == 0 else out


def null_record_density_matrix(s: SuperpositionSpec, t: float, l_max: int) -> np.ndarray:
    """Conditional cavity density matrix after a count-free interval of length t.

    ``rho = sum_ij sqrt(l_i l_j) |a_i(t)><a_j(t)| / C(t)`` with
    ``C(t) = l1 + l2 + 2 Re[sqrt(l1 l2) <a1(t)|a2(t)>]``. Truncation leakage
    shows up as a trace deficit.
    """
    _, _, l1, l2, _, cross = _parts(s, t)
    amps = coherent_amplitudes(np.array([s.alpha1, s.alpha2]) * np.exp(-t), l_max)
    psi = np.sqrt(l1) * amps[0] + np.sqrt(l2) * amps[1]
    c = l1 + l2 + 2.0 * cross.real
    return np.outer(psi, psi.conj()) / c


def poisson_count_prob(alpha: complex, t: float, n: int) -> float:
    """Probability of n counts in [0, t) from a damped coherent state."""
    if n < 0 or t < 0:
        raise ValueError("need n >= 0 and t >= 0")
    mean = abs(alpha) ** 2 * -np.expm1(-2.0 * t) if np.isfinite(t) else abs(alpha) ** 2
    return float(poisson.pmf(n, mean))


@dataclass(frozen=True)
class JumpOverlay:
    """Analytic null-record curve and its point reflection about ``(t_mid, n_mid)``.

    ``forward_curve`` and ``inverted_curve`` are ``(2, k)`` arrays of
    ``(t, <n>)`` rows; both start at ``tau = 0`` so their first entries are
    ``(t_mid, n_mid)``.
    """

    t_mid: float
    dt_end: float
    n_mid: float
    spec: SuperpositionSpec
    forward_curve: np.ndarray
    inverted_curve: np.ndarray

    def evaluate(self, t):
        """Overlay value at arbitrary times inside ``[t_mid - dt_end, t_mid + dt_end]``."""
        t = np.asarray(t, dtype=float)
        tau = np.abs(t - self.t_mid)
        fwd = null_record_photon_exact(self.spec, tau)
        return np.where(t >= self.t_mid, fwd, 2.0 * self.n_mid - fwd)


def first_downward_crossing(t, n, level, window=None) -> float:
    """Linearly interpolated time of the first sample pair with ``n_i >= level > n_{i+1}``."""
    t = np.asarray(t, dtype=float)
    n = np.asarray(n, dtype=float)
    lo, hi = (-np.inf, np.inf) if window is None else window
    inside = (t >= lo) & (t <= hi)
    idx = np.nonzero(inside[:-1] & inside[1:] & (n[:-1] >= level) & (n[1:] < level))[0]
    if idx.size == 0:
        raise ValueError(f"<n> never crosses n_mid = {level:.6g} downward inside window {window}")
    i = idx[0]
    return float(t[i] + (n[i] - level) / (n[i] - n[i + 1]) * (t[i + 1] - t[i]))


def _samples(record):
    if hasattr(record, "sample_t"):
        return np.asarray(record.sample_t), np.asarray(record.sample_n)
    t, n = record
    return np.asarray(t, dtype=float), np.asarray(n, dtype=float)


def build_jump_overlay(record, s: SuperpositionSpec, jump_window) -> JumpOverlay:
    """Overlay the null-record prediction on a simulated downward switch.

    Parameters
    ----------
    record : PhotonRecord or (t, n) pair
        Sampled conditional photon number.
    s : SuperpositionSpec
        Bright and intermediate amplitudes read off the conditional state.
    jump_window : (float, float)
        Interval searched for the first downward crossing of ``n_mid``.

    Returns
    -------
    JumpOverlay
        Forward curve on ``[t_mid, t_mid + dt_end]`` and its reflection on
        ``[t_mid - dt_end, t_mid]``, sampled with the record's spacing.
    """
    t, n = _samples(record)
    n_mid = initial_superposition_photon(s)
    t_mid = first_downward_crossing(t, n, n_mid, jump_window)
    dt_end = localization_intersection(s.alpha1, s.alpha2)
    step = float(np.median(np.diff(t))) if t.size > 1 else dt_end
    tau = np.arange(0.0, dt_end, step)
    if dt_end - tau[-1] < 1e-9 * step:
        tau = tau[:-1]
    tau = np.append(tau, dt_end)
    fwd = np.asarray(null_record_photon_exact(s, tau))
    forward = np.vstack([t_mid + tau, fwd])
    inverted = np.vstack([t_mid - tau, 2.0 * n_mid - fwd])
    return JumpOverlay(t_mid, dt_end, n_mid, s, forward, inverted)


def overlay_deviation(overlay: JumpOverlay, record) -> float:
    """Sup-norm gap between the record and the overlay over the localization window."""
    t, n = _samples(record)
    mask = np.abs(t - overlay.t_mid) <= overlay.dt_end
    if not mask.any():
        raise ValueError("record has no samples inside the overlay window")
    return float(np.max(np.abs(n[mask] - overlay.evaluate(t[mask]))))
