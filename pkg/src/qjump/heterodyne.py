"""Heterodyne unraveling of the driven JC model and the empty-cavity
cumulative-charge protocol.

Two pieces live here:

* the nonlinear stochastic Schrodinger equation for the normalized state
  conditioned on a heterodyne current (deterministic part by adaptive
  Cash-Karp inside each macro-step, noise by a first-order Euler term);
* the linear charge equation for a freely decaying cavity read out with a
  mode-matched local oscillator, written in ``nu = 1 - exp(-2 kappa t)``:
  ``dQ = -dV/dQ* dnu + dzeta`` with
  ``V = -ln <psi0| e^{Q* a^+} (1-nu)^{a^+a} e^{Q a} |psi0>``.
  Its long-time distribution of ``conj(Q)`` is the Q function of ``psi0``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sps
from scipy.stats import chi2 as chi2_dist

from .fock import GridSpec, coherent_ket, ket_to_dm, q_function
from .integrators import CASH_KARP, integrate_adaptive
from .mcwf import derive_seed
from .models import ModelParams, effective_hamiltonian, model_space

__all__ = [
    "HeterodyneRecord",
    "run_heterodyne_batch",
    "run_heterodyne_trajectory",
    "heterodyne_ensemble_photon",
    "ChargeRecord",
    "charge_records",
    "charge_record",
    "charge_ket_closed_form",
    "ChiSquareReport",
    "charge_distribution_test",
    "projective_readout_batch",
    "projective_readout",
]

_BLOCK = 2048


@dataclass
class HeterodyneRecord:
    """Sampled conditional ``<a^+a>`` and ``<a>`` along one heterodyne trajectory.

    ``noise`` accumulates ``n``, the sums of ``dW_x``, ``dW_y`` and the sums of
    their squares and cross product for the cavity channel.
    """

    params: ModelParams
    seed: int
    dt: float
    l_max: int
    sample_t: np.ndarray
    sample_n: np.ndarray
    sample_a: np.ndarray
    noise: dict = field(default_factory=dict)
    final_state: np.ndarray | None = None

    def noise_covariance_check(self) -> dict:
        """Empirical mean, variances and cross-covariance of the increments, per dt."""
        s = self.noise
        n = s["n"]
        mx, my = s["sx"] / n, s["sy"] / n
        return {
            "n_steps": n,
            "mean_x": mx / self.dt,
            "mean_y": my / self.dt,
            "var_x": (s["sxx"] / n - mx * mx) / self.dt,
            "var_y": (s["syy"] / n - my * my) / self.dt,
            "cov_xy": (s["sxy"] / n - mx * my) / self.dt,
        }

    def to_csv(self, path) -> None:
        data = np.column_stack([self.sample_t, self.sample_n, self.sample_a.real, self.sample_a.imag])
        np.savetxt(path, data, delimiter=",", header="t,n,re_a,im_a", comments="", fmt="%.12g")


def _channels(p: ModelParams, sp):
    ops = [math.sqrt(2.0 * p.kappa) * sp.a]
    if sp.atom and p.gamma > 0:
        ops.append(math.sqrt(p.gamma) * sp.sigma_minus)
    return [sps.csr_matrix(o) for o in ops]


def _cdot(u, v):
    # column-wise <u|v>
    return np.sum(u.conj() * v, axis=0)


def _norm2(u):
    return np.sum(u.real**2 + u.imag**2, axis=0)


def _expect(op, psi):
    # column-wise <psi|op|psi> / <psi|psi>
    return _cdot(psi, op @ psi) / _norm2(psi)


def run_heterodyne_batch(p: ModelParams, l_max: int, dt: float, t_final: float, seeds, psi0=None,
                         sample_every: int = 1, rtol: float = 1e-7, atol: float = 1e-9,
                         norm_tol: float = 1e-3) -> list[HeterodyneRecord]:
    """Heterodyne trajectories run side by side, one column per seed.

    Every macro-step of length ``dt`` integrates the drift
    ``(-i H_eff + sum_c [conj(<J_c>) J_c - |<J_c>|^2 / 2]) psi`` with an
    adaptive Cash-Karp pair (tolerances ``rtol``/``atol``, step size shared
    by the batch), then adds ``sum_c dZ_c (J_c - <J_c>) psi`` evaluated at the
    start of the step, then renormalizes. ``J = sqrt(2 kappa) a`` is always
    monitored; with ``gamma > 0`` the atomic channel ``sqrt(gamma) s_-`` is
    heterodyned as well with its own noise.

    Raises
    ------
    FloatingPointError
        When the squared norm after the drift differs from its first-order
        value ``1 - dt sum_c Var(J_c)`` by more than ``norm_tol``: the
        macro-step is too coarse for the dynamics. (The noise term changes the
        norm by ``O(dt Var(J))`` in every step by construction; that part is
        removed by the renormalization and is not a step-size signal.)
    """
    if p.model != "jc" or p.n_bar != 0:
        raise ValueError("heterodyne trajectories need the JC model with n_bar = 0")
    sp = model_space(p, l_max)
    D = sp.dim
    seeds = [int(s) for s in seeds]
    B = len(seeds)
    if psi0 is None:
        psi0 = sp.ground()
    psi0 = np.asarray(psi0, dtype=complex)
    if sp.atom and psi0.size == sp.n_fock:
        psi0 = np.kron(psi0, [1.0, 0.0])
    if psi0.size != D:
        raise ValueError(f"initial ket has length {psi0.size}, expected {D}")
    psi = np.repeat((psi0 / np.linalg.norm(psi0))[:, None], B, axis=1)

    mh = sps.csr_matrix(-1j * effective_hamiltonian(p, sp))
    ops = _channels(p, sp)
    n_ch = len(ops)

    def drift(_t, y):
        out = mh @ y
        for J in ops:
            Jy = J @ y
            m = _cdot(y, Jy) / _norm2(y)
            out = out + Jy * m.conj() - y * (0.5 * np.abs(m) ** 2)
        return out

    n_steps = int(round(t_final / dt))
    n_samp = n_steps // sample_every + 1
    samp_t = np.arange(n_samp) * (sample_every * dt)
    samp_n = np.empty((n_samp, B))
    samp_a = np.empty((n_samp, B), dtype=complex)
    num, a_op = sps.csr_matrix(sp.number), sps.csr_matrix(sp.a)
    samp_n[0] = _expect(num, psi).real
    samp_a[0] = _expect(a_op, psi)
    rngs = [np.random.default_rng(s) for s in seeds]
    stats = np.zeros((5, B))
    sq = math.sqrt(dt)
    h = dt
    block = None
    for i in range(1, n_steps + 1):
        j = (i - 1) % _BLOCK
        if j == 0:
            block = np.stack([r.standard_normal((_BLOCK, 2 * n_ch)) for r in rngs], axis=2) * sq
        dw = block[j]  # (2 n_ch, B)
        t = (i - 1) * dt
        noise = np.zeros_like(psi)
        var_sum = np.zeros(B)
        for c, J in enumerate(ops):
            dz = (dw[2 * c] + 1j * dw[2 * c + 1]) / math.sqrt(2.0)
            Jy = J @ psi
            m = _cdot(psi, Jy)
            dev = Jy - psi * m
            noise += dev * dz
            var_sum += _norm2(dev)
        psi_d, h, _ = integrate_adaptive(drift, t, psi, t + dt, CASH_KARP, rtol=rtol, atol=atol, h0=h)
        h = min(h, dt)
        drift_norm = _norm2(psi_d)
        excess = np.abs(drift_norm - 1.0 + dt * var_sum)
        if np.any(excess > norm_tol) or not np.all(np.isfinite(drift_norm)):
            b = int(np.nanargmax(np.where(np.isfinite(excess), excess, np.inf)))
            raise FloatingPointError(
                f"norm drift {excess[b]:.3e} > {norm_tol:g} at t={t + dt:.6g} (seed {seeds[b]}); reduce dt"
            )
        psi = psi_d + noise
        norm2 = _norm2(psi)
        psi = psi / np.sqrt(norm2)
        x, y = dw[0], dw[1]
        stats += np.stack([x, y, x * x, y * y, x * y])
        if i % sample_every == 0:
            k = i // sample_every
            samp_n[k] = _expect(num, psi).real
            samp_a[k] = _expect(a_op, psi)

    out = []
    for b, s in enumerate(seeds):
        noise_stats = dict(n=n_steps, sx=stats[0, b], sy=stats[1, b], sxx=stats[2, b],
                           syy=stats[3, b], sxy=stats[4, b])
        out.append(HeterodyneRecord(p, s, dt, l_max, samp_t, samp_n[:, b].copy(), samp_a[:, b].copy(),
                                    noise_stats, psi[:, b].copy()))
    return out


def run_heterodyne_trajectory(p: ModelParams, l_max: int, dt: float, t_final: float, seed: int,
                              psi0=None, sample_every: int = 1, **kw) -> HeterodyneRecord:
    """Single heterodyne trajectory; see :func:`run_heterodyne_batch`."""
    return run_heterodyne_batch(p, l_max, dt, t_final, [seed], psi0, sample_every, **kw)[0]


def heterodyne_ensemble_photon(p: ModelParams, l_max: int, dt: float, t_final: float, n_traj: int,
                               master_seed: int, chunk: int = 256, psi0=None, sample_every: int = 1):
    """Per-trajectory ``<a^+a>`` samples for ``n_traj`` heterodyne runs.

    Returns ``(t, n)`` with ``n`` of shape ``(len(t), n_traj)``; trajectory
    ``i`` uses ``derive_seed(master_seed, i)``.
    """
    seeds = [derive_seed(master_seed, i) for i in range(n_traj)]
    cols = []
    t = None
    for lo in range(0, n_traj, chunk):
        recs = run_heterodyne_batch(p, l_max, dt, t_final, seeds[lo:lo + chunk], psi0, sample_every)
        t = recs[0].sample_t
        cols.extend(r.sample_n for r in recs)
    return t, np.column_stack(cols)


# --- cumulative charge -------------------------------------------------------


@dataclass
class ChargeRecord:
    """Final cumulative complex charge and its sampled path in ``nu``.

    ``trace_nu``/``trace_q`` always start at ``(0, 0)``. ``ket_error`` is the
    Frobenius distance between the incrementally propagated conditional state
    and its closed form at the end of the run, when tracked.
    """

    q_tilde: complex
    trace_nu: np.ndarray
    trace_q: np.ndarray
    seed: int
    branch: int | None = None
    ket_error: float | None = None


def _as_components(initial, weights):
    comps = np.asarray(initial, dtype=complex)
    if comps.ndim == 1:
        comps = comps[:, None]
    comps = comps / np.linalg.norm(comps, axis=0)
    if weights is None:
        if comps.shape[1] != 1:
            raise ValueError("weights are required with several components")
        weights = np.ones(1)
    weights = np.asarray(weights, dtype=float)
    if weights.size != comps.shape[1] or np.any(weights < 0) or not weights.sum() > 0:
        raise ValueError("need one non-negative weight per component")
    return comps, weights / weights.sum()


def _apply_exp_lower(phi, dq, sqrt_n, tol=1e-17):
    """``exp(dq a) phi`` column-wise, by its (terminating) Taylor series."""
    out = phi.copy()
    term = phi
    L = phi.shape[0] - 1
    for k in range(1, L + 1):
        nxt = np.zeros_like(term)
        nxt[:-1] = sqrt_n[1:, None] * term[1:]
        term = nxt * (dq / k)
        out += term
        if np.max(np.abs(term)) <= tol * np.max(np.abs(out)):
            break
    return out


def charge_ket_closed_form(initial: np.ndarray, q: complex, nu: float) -> np.ndarray:
    """Normalized ``(1-nu)^{a^+a/2} e^{q a} |psi0>``, via a dense matrix exponential."""
    psi0 = np.asarray(initial, dtype=complex)
    L = psi0.size - 1
    a = np.diag(np.sqrt(np.arange(1, L + 1)), 1).astype(complex)
    v = scipy.linalg.expm(q * a) @ psi0
    v = v * (1.0 - nu) ** (0.5 * np.arange(L + 1))
    return v / np.linalg.norm(v)


def _uniform_nu(n_steps, nu_end):
    return np.linspace(0.0, nu_end, n_steps + 1)


def charge_records(initial, seeds, nu_grid=None, weights=None, n_steps: int = 10_000,
                   nu_end: float = 1.0 - 1e-6, trace_every: int = 100,
                   track_ket: bool = False) -> list[ChargeRecord]:
    """Integrate the cumulative-charge equation for a batch of seeds.

    Parameters
    ----------
    initial : ndarray
        Fock-basis ket of the freely decaying cavity, or a ``(L+1, N)`` array
        whose columns are components of an incoherent sum (pointer states
        correlated with orthogonal states of another system).
    seeds : sequence of int
        One independent noise stream per run.
    nu_grid : array_like, optional
        Increasing grid starting at 0; defaults to ``n_steps`` uniform steps
        up to ``nu_end``.
    weights : array_like, optional
        Component weights ``|c_j|^2`` when ``initial`` has several columns.
    trace_every : int
        Store ``(nu, Q)`` every this many steps (first and last always kept).
    track_ket : bool
        Also compare the propagated state with :func:`charge_ket_closed_form`
        at the end (single component only).

    Notes
    -----
    Each component is carried as ``phi_j = e^{Q a} psi_j`` (rescaled freely)
    and updated by ``e^{dQ a}``, so no truncation error enters. The drift is
    ``sum_j w_j sum_n (1-nu)^n sqrt(n+1) phi_n conj(phi_{n+1}) /
    sum_j w_j sum_n (1-nu)^n |phi_n|^2`` (component norms tracked in log space).
    Euler-Maruyama with ``E|dzeta|^2 = dnu``.
    """
    comps, w = _as_components(initial, weights)
    L = comps.shape[0] - 1
    nc = comps.shape[1]
    if track_ket and nc != 1:
        raise ValueError("ket tracking needs a single pure component")
    nu = _uniform_nu(n_steps, nu_end) if nu_grid is None else np.asarray(nu_grid, dtype=float)
    if nu[0] != 0.0 or np.any(np.diff(nu) <= 0) or nu[-1] >= 1.0:
        raise ValueError("nu grid must start at 0, increase, and stay below 1")
    seeds = [int(s) for s in seeds]
    B = len(seeds)
    n = np.arange(L + 1)
    sqrt_n = np.sqrt(n)
    radius = math.sqrt(L) + 5.0
    # phi[:, j, b]; log_scale[j, b] tracks the norm removed by rescaling
    phi = np.repeat(comps[:, :, None], B, axis=2)
    log_scale = np.zeros((nc, B))
    log_w = np.log(np.where(w > 0, w, 1.0))[:, None] + np.where(w > 0, 0.0, -np.inf)[:, None]
    q = np.zeros(B, dtype=complex)
    rngs = [np.random.default_rng(s) for s in seeds]
    keep = [0]
    n_grid = nu.size - 1
    keep += [k for k in range(trace_every, n_grid, trace_every)]
    if n_grid not in keep:
        keep.append(n_grid)
    keep_set = set(keep)
    trace_q = [q.copy()]
    block = None
    for k in range(n_grid):
        j = k % _BLOCK
        if j == 0:
            block = np.stack([r.standard_normal((_BLOCK, 2)) for r in rngs], axis=2)
        dnu = nu[k + 1] - nu[k]
        wn = (1.0 - nu[k]) ** n
        den_c = np.einsum("n,njb->jb", wn, np.abs(phi) ** 2)
        num_c = np.einsum("n,njb->jb", wn[:-1] * sqrt_n[1:], phi[:-1] * phi[1:].conj())
        lw = log_w + 2.0 * log_scale
        ref = lw.max(axis=0)
        cw = np.exp(lw - ref)
        drift = np.sum(cw * num_c, axis=0) / np.sum(cw * den_c, axis=0)
        dz = (block[j, 0] + 1j * block[j, 1]) * math.sqrt(0.5 * dnu)
        dq = drift * dnu + dz
        q = q + dq
        if not np.all(np.isfinite(q)) or np.any(np.abs(q) > radius):
            bad = int(np.argmax(~np.isfinite(q) | (np.abs(q) > radius)))
            raise FloatingPointError(
                f"charge left the region supported by the truncation (|Q| = {abs(q[bad]):.3g} > "
                f"{radius:.3g}, seed {seeds[bad]}); increase l_max"
            )
        phi = _apply_exp_lower(phi.reshape(L + 1, nc * B), np.tile(dq, nc), sqrt_n).reshape(L + 1, nc, B)
        s = np.max(np.abs(phi), axis=0)
        phi = phi / s
        log_scale += np.log(s)
        if k + 1 in keep_set:
            trace_q.append(q.copy())
    trace_nu = nu[keep]
    trace_q = np.array(trace_q)
    out = []
    for b, s in enumerate(seeds):
        err = None
        if track_ket:
            v = phi[:, 0, b] * (1.0 - nu[-1]) ** (0.5 * n)
            v = v / np.linalg.norm(v)
            ref = charge_ket_closed_form(comps[:, 0], q[b], nu[-1])
            err = float(np.linalg.norm(ket_to_dm(v) - ket_to_dm(ref)))
        out.append(ChargeRecord(complex(q[b]), trace_nu, trace_q[:, b].copy(), s, None, err))
    return out


def charge_record(initial, seed: int, nu_grid=None, **kw) -> ChargeRecord:
    """Single cumulative-charge run; see :func:`charge_records`."""
    return charge_records(initial, [seed], nu_grid, **kw)[0]


def _final_charges(initial, n_samples, master_seed, chunk, weights=None, **kw):
    seeds = [derive_seed(master_seed, i) for i in range(n_samples)]
    q = []
    for lo in range(0, n_samples, chunk):
        recs = charge_records(initial, seeds[lo:lo + chunk], weights=weights, trace_every=10**9, **kw)
        q.extend(r.q_tilde for r in recs)
    return np.array(q)


@dataclass
class ChiSquareReport:
    statistic: float
    dof: int
    p_value: float
    n_bins: int
    n_samples: int
    samples: np.ndarray = field(repr=False, default=None)

    @property
    def passed(self) -> bool:
        return self.p_value > 0.01


def charge_distribution_test(initial, n_samples: int, master_seed: int, half_width: float | None = None,
                             n_bins: int = 16, chunk: int = 500, **kw) -> ChiSquareReport:
    """Chi-square comparison of final ``conj(Q)`` samples with the Q function of ``initial``.

    Expected bin counts come from the Q function integrated over each cell of
    an ``n_bins x n_bins`` square (8 x 8 sub-samples per cell). Cells with
    expected count below 5 are pooled, together with the probability outside
    the square, into one remainder cell.
    """
    if n_samples < 1000:
        raise ValueError("need at least 1000 samples")
    psi0 = np.asarray(initial, dtype=complex)
    psi0 = psi0 / np.linalg.norm(psi0)
    q = _final_charges(psi0, n_samples, master_seed, chunk, **kw)
    z = np.conj(q)
    if half_width is None:
        n = np.arange(psi0.size)
        mean_a = np.sum(np.sqrt(n[1:]) * psi0[:-1].conj() * psi0[1:])
        spread = math.sqrt(float(np.sum(n * np.abs(psi0) ** 2)) + 1.0)
        half_width = abs(mean_a.real) + abs(mean_a.imag) + 2.0 * spread + 1.0
    edges = np.linspace(-half_width, half_width, n_bins + 1)
    sub = 8
    d = 2.0 * half_width / (n_bins * sub)
    c0, c1 = -half_width + 0.5 * d, half_width - 0.5 * d
    fine = GridSpec(c0, c1, c0, c1, n_bins * sub, n_bins * sub)  # sub-cell centres
    qf = q_function(ket_to_dm(psi0), fine).values
    prob = qf.reshape(n_bins, sub, n_bins, sub).sum(axis=(1, 3)) * fine.cell_area
    obs, _, _ = np.histogram2d(z.real, z.imag, bins=[edges, edges])
    exp_ = prob * n_samples
    use = exp_ >= 5.0
    o = list(obs[use])
    e = list(exp_[use])
    rest_e = n_samples - exp_[use].sum()
    rest_o = n_samples - obs[use].sum()
    if rest_e >= 5.0:
        o.append(rest_o)
        e.append(rest_e)
    o, e = np.array(o), np.array(e)
    stat = float(np.sum((o - e) ** 2 / e))
    dof = o.size - 1
    return ChiSquareReport(stat, dof, float(chi2_dist.sf(stat, dof)), o.size, n_samples, z)


def projective_readout_batch(coefficients, meter_amplitudes, seeds, l_max: int | None = None, **kw):
    """Branch index per seed for a readout through coherent meter states.

    The meters ``|alpha_j>`` are correlated with orthogonal eigenstates, so
    the charge sees the incoherent sum ``sum_j |c_j|^2 |alpha_j><alpha_j|``.
    The branch is the meter amplitude nearest the final ``conj(Q)``.
    """
    c = np.asarray(coefficients, dtype=complex)
    amps = np.asarray(meter_amplitudes, dtype=complex)
    if c.shape != amps.shape or c.ndim != 1:
        raise ValueError("need one coefficient per meter amplitude")
    if abs(np.sum(np.abs(c) ** 2) - 1.0) > 1e-9:
        raise ValueError("coefficients must satisfy sum |c_j|^2 = 1")
    if amps.size == 1:
        return np.zeros(len(list(seeds)), dtype=int)
    sep = np.abs(amps[:, None] - amps[None, :]) ** 2
    if np.min(sep[~np.eye(amps.size, dtype=bool)]) < 9.0:
        warnings.warn("meter amplitudes closer than |a_i - a_j|^2 = 9: branching is unreliable",
                      RuntimeWarning, stacklevel=2)
    if l_max is None:
        l_max = int(np.ceil(np.max(np.abs(amps)) ** 2 + 8.0 * np.max(np.abs(amps)) + 16))
    comps = np.column_stack([coherent_ket(a, l_max) for a in amps])
    recs = charge_records(comps, seeds, weights=np.abs(c) ** 2, trace_every=10**9, **kw)
    z = np.conj([r.q_tilde for r in recs])
    return np.argmin(np.abs(z[:, None] - amps[None, :]), axis=1)


def projective_readout(coefficients, meter_amplitudes, seed: int, **kw) -> int:
    """Single-run version of :func:`projective_readout_batch`."""
    return int(projective_readout_batch(coefficients, meter_amplitudes, [seed], **kw)[0])
