"""Mean-field description: Maxwell-Bloch equations, neoclassical steady state,
system-size parameters and localization times of a decaying two-state superposition.

All rates are in units of kappa (kappa = 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

from .models import ModelParams

__all__ = [
    "SemiclassicalState",
    "Root",
    "BistabilityRoots",
    "neoclassical_residual",
    "neoclassical_roots",
    "MBETrajectory",
    "mbe_rhs",
    "mbe_integrate",
    "null_probability",
    "localization_bound",
    "localization_intersection",
]

ROOT_LABELS = {1: ("stable",), 2: ("lower", "upper"), 3: ("dim", "unstable", "bright")}


@dataclass(frozen=True)
class SemiclassicalState:
    """Mean field ``alpha = <a>``, polarization ``beta = <s_->`` and inversion ``zeta = <s_z>``."""

    alpha: complex = 0j
    beta: complex = 0j
    zeta: float = -1.0

    @property
    def bloch_length(self) -> float:
        return 4.0 * abs(self.beta) ** 2 + self.zeta**2


@dataclass(frozen=True)
class Root:
    amp_scaled_sq: float
    amp_unscaled: float
    label: str


@dataclass(frozen=True)
class BistabilityRoots:
    """Steady-state intensities sorted ascending, with the system-size scales.

    Labels follow the ordering only: with three roots they are dim, unstable and
    bright.
    """

    roots: list[Root]
    n_scale: float
    n_scale_weak: float | None = None

    def __len__(self):
        return len(self.roots)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([r.amp_unscaled for r in self.roots])


def neoclassical_residual(s, p: ModelParams):
    """Residual of the neoclassical steady-state condition for ``s = |alpha~|^2``.

    ``s - (2 eps/g)^2 / (1 + (|dw| - 1/sqrt(dw^2/g^4 + s))^2)``, vanishing at
    steady states. ``s`` is the intensity scaled by ``n_scale``.
    """
    s = np.asarray(s, dtype=float)
    dw = p.delta_omega
    y2 = (2.0 * p.epsilon / p.g) ** 2
    det = abs(dw) - 1.0 / np.sqrt(dw**2 / p.g**4 + s)
    return s - y2 / (1.0 + det**2)


def neoclassical_roots(p: ModelParams, n_sweep: int = 20000) -> BistabilityRoots:
    """All non-negative roots of :func:`neoclassical_residual`.

    The residual is sampled on a log-spaced sweep; every sign change is refined
    by bisection to 1e-12.
    """
    if p.model != "jc" or p.g <= 0:
        raise ValueError("neoclassical roots need the JC model with g > 0")
    n_scale = p.n_scale
    weak = p.gamma**2 / (8.0 * p.g**2) if p.gamma > 0 else None
    if p.epsilon == 0:
        return BistabilityRoots([Root(0.0, 0.0, "stable")], n_scale, weak)

    s_max = (2.0 * p.epsilon / p.g) ** 2  # residual > 0 beyond this
    grid = np.concatenate([[0.0], np.geomspace(s_max * 1e-14, s_max * (1 + 1e-9), n_sweep)])
    r = neoclassical_residual(grid, p)
    found = []
    for i in np.nonzero(np.sign(r[:-1]) * np.sign(r[1:]) <= 0)[0]:
        lo, hi = grid[i], grid[i + 1]
        if r[i] == 0:
            s = lo
        elif r[i + 1] == 0:
            continue  # picked up as the left end of the next interval
        else:
            s = bisect(lambda v: float(neoclassical_residual(v, p)), lo, hi, xtol=1e-12 * max(hi, 1e-300),
                       rtol=4 * np.finfo(float).eps, maxiter=500)
        found.append(s)
    labels = ROOT_LABELS.get(len(found), tuple(f"root{i}" for i in range(len(found))))
    roots = [Root(s, math.sqrt(s * n_scale), lab) for s, lab in zip(found, labels)]
    return BistabilityRoots(roots, n_scale, weak)


def mbe_rhs(state: SemiclassicalState, p: ModelParams) -> SemiclassicalState:
    """Time derivative of the Maxwell-Bloch equations, returned as a state-shaped tuple."""
    a, b, z = state.alpha, state.beta, state.zeta
    dw, g = p.delta_omega, p.g
    da = -(p.kappa - 1j * dw) * a - 1j * g * b - 1j * p.epsilon
    db = 1j * dw * b + 1j * g * a * z
    dz = (2j * g * (a.conjugate() * b - a * b.conjugate())).real
    return SemiclassicalState(da, db, dz)


@dataclass
class MBETrajectory:
    t: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    zeta: np.ndarray
    method: str = "gauss4"
    extra: dict = field(default_factory=dict)

    @property
    def bloch_length(self) -> np.ndarray:
        return 4.0 * np.abs(self.beta) ** 2 + self.zeta**2

    def state(self, i: int) -> SemiclassicalState:
        return SemiclassicalState(complex(self.alpha[i]), complex(self.beta[i]), float(self.zeta[i]))


def _f(y, c):
    # y = (Re a, Im a, Re b, Im b, z); c = (kappa, dw, g, eps)
    ar, ai, br, bi, z = y
    kap, dw, g, eps = c
    return (
        -kap * ar - dw * ai + g * bi,
        -kap * ai + dw * ar - g * br - eps,
        -dw * bi - g * ai * z,
        dw * br + g * ar * z,
        4.0 * g * (ai * br - ar * bi),
    )


_S3 = math.sqrt(3.0)
_GA = ((0.25, 0.25 - _S3 / 6), (0.25 + _S3 / 6, 0.25))


def _gauss4_step(y, h, c, tol=1e-15, max_iter=100):
    """Two-stage Gauss-Legendre step, stages solved by fixed-point iteration."""
    k1 = k2 = _f(y, c)
    (a11, a12), (a21, a22) = _GA
    for _ in range(max_iter):
        y1 = tuple(yi + h * (a11 * u + a12 * v) for yi, u, v in zip(y, k1, k2))
        y2 = tuple(yi + h * (a21 * u + a22 * v) for yi, u, v in zip(y, k1, k2))
        n1, n2 = _f(y1, c), _f(y2, c)
        change = max(max(abs(u - v) for u, v in zip(n1, k1)), max(abs(u - v) for u, v in zip(n2, k2)))
        k1, k2 = n1, n2
        if h * change <= tol:
            break
    else:
        raise RuntimeError("implicit stage equations did not converge; reduce dt")
    return tuple(yi + 0.5 * h * (u + v) for yi, u, v in zip(y, k1, k2))


def _rk4_step(y, h, c):
    k1 = _f(y, c)
    k2 = _f(tuple(yi + 0.5 * h * k for yi, k in zip(y, k1)), c)
    k3 = _f(tuple(yi + 0.5 * h * k for yi, k in zip(y, k2)), c)
    k4 = _f(tuple(yi + h * k for yi, k in zip(y, k3)), c)
    return tuple(yi + h / 6.0 * (u + 2 * v + 2 * w + x) for yi, u, v, w, x in zip(y, k1, k2, k3, k4))


def mbe_integrate(s0: SemiclassicalState, p: ModelParams, t_final: float, dt: float = 1e-3,
                  method: str = "gauss4", sample_every: int = 1) -> MBETrajectory:
    """Integrate the Maxwell-Bloch equations with a fixed fourth-order Runge-Kutta step.

    Parameters
    ----------
    s0 : SemiclassicalState
        Initial condition; its Bloch length must be 1.
    method : {"gauss4", "rk4"}
        ``gauss4`` is the implicit two-stage Gauss-Legendre method, which
        conserves the Bloch length exactly up to the stage-solver tolerance.
        ``rk4`` is the classic explicit scheme; it does not conserve the Bloch
        length when the Rabi frequency ``2 g |alpha|`` approaches ``1/dt``.
    sample_every : int
        Keep every ``sample_every``-th step (the initial state is always kept).
    """
    if abs(s0.bloch_length - 1.0) > 1e-9:
        raise ValueError(f"initial Bloch length must be 1, got {s0.bloch_length!r}")
    if method not in ("gauss4", "rk4"):
        raise ValueError(f"unknown method {method!r}")
    if p.model != "jc":
        raise ValueError("Maxwell-Bloch equations need the JC model")
    n_steps = int(round(t_final / dt))
    c = (p.kappa, p.delta_omega, p.g, p.epsilon)
    a0, b0 = complex(s0.alpha), complex(s0.beta)
    y = (a0.real, a0.imag, b0.real, b0.imag, float(s0.zeta))
    step = _gauss4_step if method == "gauss4" else _rk4_step
    keep = [y]
    times = [0.0]
    for i in range(1, n_steps + 1):
        y = step(y, dt, c)
        if i % sample_every == 0:
            keep.append(y)
            times.append(i * dt)
    arr = np.array(keep)
    return MBETrajectory(
        np.array(times), arr[:, 0] + 1j * arr[:, 1], arr[:, 2] + 1j * arr[:, 3], arr[:, 4], method
    )


def null_probability(x, t):
    """lambda(x; t) = exp[-x (1 - e^{-2t})]: probability of no count from |alpha|^2 = x."""
    return np.exp(-np.asarray(x) * -np.expm1(-2.0 * np.asarray(t)))


def localization_bound(alpha1: complex, alpha2: complex) -> float:
    """Lower bound on the time for a decaying superposition to localize on the smaller state.

    ``-ln(|a2| / (|a1|^2 - |a2|(|a2| - 1))) / (2 (|a1|^2 - |a2|^2))``.
    """
    m1, m2 = abs(alpha1), abs(alpha2)
    gap = m1**2 - m2**2
    if m2 > 0 and abs(gap) < 1e-9:
        raise ValueError(
            "|alpha1| and |alpha2| coincide: the bound is indeterminate (phase-bistability limit)"
        )
    if not m1 > m2 > 0:
        raise ValueError("need |alpha1| > |alpha2| > 0")
    arg = m2 / (m1**2 - m2 * (m2 - 1.0))
    if not arg > 0:
        raise ValueError(f"logarithm argument {arg:g} is not positive")
    return -math.log(arg) / (2.0 * gap)


def localization_intersection(alpha1: complex, alpha2: complex, t_max: float = 5.0) -> float:
    """Time at which the null-record photon number of the superposition falls to |alpha2|^2.

    Root of ``|a1(t)|^2 l1 + |a2(t)|^2 l2 - |a2|^2 (l1 + l2)`` with decayed
    intensities ``|a_i|^2 e^{-2t}`` and ``l_i = null_probability(|a_i|^2, t)``,
    bracketed on ``[0, t_max]``.
    """
    x1, x2 = abs(alpha1) ** 2, abs(alpha2) ** 2
    if not x1 > x2:
        raise ValueError("need |alpha1| > |alpha2|")

    def h(t):
        l1, l2 = null_probability(x1, t), null_probability(x2, t)
        return float((x1 * l1 + x2 * l2) * math.exp(-2 * t) - x2 * (l1 + l2))

    if h(0.0) * h(t_max) > 0:
        raise ValueError(f"no sign change of the intersection condition on [0, {t_max}]")
    return bisect(h, 0.0, t_max, xtol=1e-10, maxiter=200)
