"""Steady states of the master equation and the analytic Kerr Wigner benchmark.

The steady state is obtained by default from a sparse direct solve of
``L vec(rho) = 0`` with one row replaced by the trace condition; a fixed-step
RK4 time integration from the vacuum is available as a cross-check.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps
from scipy.sparse.linalg import expm_multiply, spsolve
from scipy.special import gammaln, loggamma

from .fock import GridSpec, PhaseGrid, partial_trace_atom
from .integrators import rk4_step
from .models import ModelParams, lindblad_rhs, liouvillian, model_space

__all__ = [
    "SteadyReport",
    "steady_state",
    "multiphoton_reference",
    "field_observables",
    "evolve_density",
    "bessel_j_series",
    "kerr_wigner_analytic",
    "normalize_over",
    "kerr_wigner_grid",
]

MULTIPHOTON_POINTS = {
    "two_photon": dict(g=50.0, epsilon=5.3, delta_omega=36.10),
    "three_photon": dict(g=50.0, epsilon=5.3, delta_omega=29.35),
}


@dataclass
class SteadyReport:
    """Stationary observables.

    ``rho_ss`` is the full density matrix (atom (x) Fock when the atom is
    coupled); ``rho_cav`` is the cavity marginal.
    """

    photon_number: float
    g2_zero: float
    rho_ss: np.ndarray
    rho_cav: np.ndarray
    residual: float
    method: str
    elapsed: float


def field_observables(rho_cav: np.ndarray) -> tuple[float, float]:
    """(<a^+a>, <a^+2 a^2>/<a^+a>^2) of a Fock-basis density matrix."""
    p = np.diag(rho_cav).real
    n = np.arange(p.size)
    mean = float(p @ n)
    if mean <= 0:
        return 0.0, float("nan")
    return mean, float(p @ (n * (n - 1)) / mean**2)


def _residual(p, sp, rho):
    return float(np.max(np.abs(lindblad_rhs(rho, p, sp))))


def _direct(L: sps.csr_matrix, dim: int) -> np.ndarray:
    A = L.tolil()
    A[0, :] = 0
    A[0, np.arange(dim) * (dim + 1)] = 1.0
    b = np.zeros(dim * dim, dtype=complex)
    b[0] = 1.0
    return spsolve(A.tocsc(), b).reshape(dim, dim)


def _integrate(p, sp, tol, dt, max_time):
    L = liouvillian(p, sp)
    f = lambda _t, v: L @ v
    v = np.zeros(sp.dim * sp.dim, dtype=complex)
    v[0] = 1.0
    t = 0.0
    best = np.inf
    stalled = 0
    while t < max_time:
        for _ in range(100):
            v = rk4_step(f, t, v, dt)
            t += dt
        res = float(np.max(np.abs(L @ v)))
        if res < tol:
            return v.reshape(sp.dim, sp.dim), res
        # stagnation guard: give up if 50 checks pass without improvement
        if res < 0.999 * best:
            best, stalled = res, 0
        else:
            stalled += 1
            if stalled > 50:
                break
    raise RuntimeError(f"steady state not reached by t={t:.4g}: residual {res:.3e} > tol {tol:g}")


def steady_state(p: ModelParams, l_max: int, tol: float = 1e-9, method: str = "direct",
                 dt: float = 1e-3, max_time: float = 2000.0) -> SteadyReport:
    """Stationary state of the master equation.

    Parameters
    ----------
    p : ModelParams
        JC or Kerr parameters.
    l_max : int
        Fock truncation.
    tol : float
        Bound on ``max |d rho/dt|`` at the returned state; exceeded -> error.
    method : {"direct", "integrate"}
        Sparse linear solve, or RK4 evolution from the vacuum with step ``dt``
        until the residual falls below ``tol`` (bounded by ``max_time``).
    """
    t0 = time.perf_counter()
    sp = model_space(p, l_max)
    if method == "direct":
        rho = _direct(liouvillian(p, sp), sp.dim)
    elif method == "integrate":
        rho, _ = _integrate(p, sp, tol, dt, max_time)
    else:
        raise ValueError(f"unknown method {method!r}")
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    res = _residual(p, sp, rho)
    if res > tol:
        raise RuntimeError(f"steady-state residual {res:.3e} exceeds tol {tol:g}")
    rho_cav = partial_trace_atom(rho, l_max) if sp.atom else rho
    n, g2 = field_observables(rho_cav)
    return SteadyReport(n, g2, rho, rho_cav, res, method, time.perf_counter() - t0)


def multiphoton_reference(p: ModelParams, l_max: int = 20, **kw) -> SteadyReport:
    """Steady state at a multiphoton-resonance point; see ``MULTIPHOTON_POINTS``."""
    return steady_state(p, l_max, **kw)


def evolve_density(p: ModelParams, rho0: np.ndarray, times, l_max: int | None = None) -> np.ndarray:
    """Master-equation solution at each of ``times`` (starting from ``t = 0``).

    Returns an array of shape ``(len(times), dim, dim)``.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    dim = rho0.shape[0]
    if l_max is None:
        l_max = dim // 2 - 1 if p.needs_atom else dim - 1
    sp = model_space(p, l_max)
    if sp.dim != dim:
        raise ValueError(f"rho0 has dimension {dim}, expected {sp.dim}")
    times = np.asarray(times, dtype=float)
    if p.epsilon_ramp is not None:
        raise ValueError("evolve_density supports constant drive only")
    L = liouvillian(p, sp)
    out = np.empty((times.size, dim, dim), dtype=complex)
    v = rho0.ravel()
    t_prev = 0.0
    for k, t in enumerate(times):
        if t < t_prev:
            raise ValueError("times must be non-decreasing")
        if t > t_prev:
            v = expm_multiply(L * (t - t_prev), v)
        out[k] = v.reshape(dim, dim)
        t_prev = t
    return out


def bessel_j_series(nu: complex, z, n_terms: int = 400):
    """J_nu(z) for complex order and argument from its defining power series.

    ``(z/2)^nu sum_k (-z^2/4)^k / (k! Gamma(nu + k + 1))``, principal branch
    for the prefactor. Raises when the series has not converged within
    ``n_terms`` terms.
    """
    z = np.asarray(z, dtype=complex)
    w = -0.25 * z * z
    s = _hyp0f1_series(nu + 1.0, w, n_terms)
    with np.errstate(divide="ignore", invalid="ignore"):
        pref = np.exp(nu * np.log(0.5 * z) - loggamma(nu + 1.0))
    return pref * s


def _hyp0f1_series(b: complex, w, n_terms: int = 400, rel_tol: float = 1e-16):
    """sum_k w^k / (k! (b)_k), with terms formed in log space via log-Gamma."""
    w = np.asarray(w, dtype=complex)
    total = np.zeros(w.shape, dtype=complex)
    with np.errstate(divide="ignore"):
        log_w = np.where(w == 0, 0.0, np.log(np.where(w == 0, 1.0, w)))
    b = complex(b)
    lg_b = loggamma(b)
    zero = w == 0
    converged = False
    for k in range(n_terms):
        if k == 0:
            term = np.ones(w.shape, dtype=complex)
        else:
            log_t = k * log_w - gammaln(k + 1.0) - (loggamma(b + k) - lg_b)
            term = np.where(zero, 0.0, np.exp(log_t))
        total += term
        # early exit once the terms are past their peak and negligible
        if k > max(abs(w).max() ** 0.5, -b.real) and np.all(np.abs(term) <= rel_tol * np.abs(total)):
            converged = True
            break
    if not converged:
        raise ArithmeticError(
            f"power series did not converge within {n_terms} terms (max |w| = {np.abs(w).max():.3g})"
        )
    return total


def kerr_wigner_analytic(x, y, p: ModelParams, n_terms: int = 400):
    """Unnormalized steady-state Wigner function of the driven Kerr oscillator.

    ``exp(-2|a|^2) |J_{l-1}(z) / z^{l-1}|^2`` with ``z^2 = -8 e~ conj(a)``,
    ``l = (kappa - i dw)/(i chi)`` and ``e~ = eps/(i chi)``. The Bessel ratio
    is an entire function of ``z^2``; it is evaluated as that series,
    ``0F1(; l; 2 e~ conj(a)) / Gamma(l)`` up to a constant, which avoids the
    branch cuts of the separate power and Bessel factors.
    """
    if p.model != "kerr":
        raise ValueError("Kerr parameters required")
    alpha = np.asarray(x, dtype=float) + 1j * np.asarray(y, dtype=float)
    lam = (p.kappa - 1j * p.delta_omega) / (1j * p.chi)
    eps_t = p.epsilon / (1j * p.chi)
    f = _hyp0f1_series(lam, 2.0 * eps_t * np.conj(alpha), n_terms)
    return np.exp(-2.0 * np.abs(alpha) ** 2) * np.abs(f) ** 2


def normalize_over(values: np.ndarray, grid: GridSpec) -> PhaseGrid:
    """Scale values so that their Riemann sum over ``grid`` is 1."""
    total = values.sum() * grid.cell_area
    if not total > 0:
        raise ValueError("cannot normalize a distribution with non-positive integral")
    return PhaseGrid(grid, values / total)


def kerr_wigner_grid(p: ModelParams, grid: GridSpec, n_terms: int = 400) -> PhaseGrid:
    """Analytic Kerr Wigner function normalized over ``grid``."""
    a = grid.alphas()
    return normalize_over(kerr_wigner_analytic(a.real, a.imag, p, n_terms), grid)
