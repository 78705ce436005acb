"""Generators of the dynamics: Hamiltonians, effective Hamiltonians and master equations.

Two models are supported.

``jc``
    Driven, damped Jaynes-Cummings model in the interaction picture,
    ``H = -dw (a^+a + s_+s_-) + i g (a^+ s_- - a s_+) + i eps (a^+ - a)``,
    cavity damping ``kappa (2 a rho a^+ - a^+a rho - rho a^+a)`` and optional
    spontaneous emission at rate ``gamma``. Time is measured in units of
    ``1/kappa`` with ``kappa = 1``.

``kerr``
    Driven Kerr oscillator, ``H = -dw a^+a + chi a^+2 a^2 + i eps (a^+ - a)``,
    with ``chi = 1`` fixing the time unit and ``kappa`` given as kappa/chi.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sps

from .fock import Space, space

__all__ = [
    "ModelParams",
    "model_space",
    "system_hamiltonian",
    "jc_hamiltonian",
    "jc_effective_hamiltonian",
    "effective_hamiltonian",
    "jump_operators",
    "jc_lindblad_rhs",
    "kerr_hamiltonian",
    "kerr_lindblad_rhs",
    "kerr_lindblad_rhs_printed",
    "lindblad_rhs",
    "liouvillian",
]


@dataclass(frozen=True)
class ModelParams:
    """Physical rates and couplings.

    For ``model="jc"`` all rates are in units of kappa (``kappa`` must stay 1).
    For ``model="kerr"`` they are in units of chi (``chi`` is 1) and ``kappa``
    carries the ratio kappa/chi.

    ``epsilon_ramp = (start, stop, duration)`` replaces the constant drive by a
    linear ramp from ``start`` to ``stop`` over ``duration``, held at ``stop``
    afterwards.
    """

    model: str = "jc"
    g: float = 0.0
    epsilon: float = 0.0
    delta_omega: float = 0.0
    gamma: float = 0.0
    n_bar: float = 0.0
    eta: float = 1.0
    chi: float | None = None
    kappa: float = 1.0
    epsilon_ramp: tuple[float, float, float] | None = None

    def __post_init__(self):
        if self.model not in ("jc", "kerr"):
            raise ValueError(f"model must be 'jc' or 'kerr', got {self.model!r}")
        for name in ("g", "epsilon", "gamma", "n_bar"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if self.model == "jc":
            if self.chi is not None:
                raise ValueError("chi is only meaningful for the Kerr model")
            if self.kappa != 1.0:
                raise ValueError("the JC model is expressed in units of kappa; kappa must be 1")
        else:
            if self.chi is None:
                object.__setattr__(self, "chi", 1.0)
            if self.g != 0 or self.gamma != 0:
                raise ValueError("the Kerr model has no atom: g and gamma must be 0")
        if self.epsilon_ramp is not None:
            start, stop, duration = self.epsilon_ramp
            if duration <= 0:
                raise ValueError("ramp duration must be positive")
            object.__setattr__(self, "epsilon_ramp", (float(start), float(stop), float(duration)))

    @classmethod
    def jc(cls, g, epsilon, delta_omega, gamma=0.0, **kw) -> "ModelParams":
        return cls("jc", g=g, epsilon=epsilon, delta_omega=delta_omega, gamma=gamma, **kw)

    @classmethod
    def kerr(cls, kappa_over_chi, epsilon, delta_omega, **kw) -> "ModelParams":
        return cls("kerr", epsilon=epsilon, delta_omega=delta_omega, chi=1.0,
                   kappa=kappa_over_chi, **kw)

    @property
    def needs_atom(self) -> bool:
        """True unless the atom is decoupled and never excited."""
        return self.model == "jc" and (self.g != 0 or self.gamma != 0)

    @property
    def n_scale(self) -> float:
        """Strong-coupling system size [g/(2 kappa)]^2."""
        return (self.g / (2.0 * self.kappa)) ** 2

    def drive_at(self, t: float) -> float:
        if self.epsilon_ramp is None:
            return self.epsilon
        start, stop, duration = self.epsilon_ramp
        return start + (stop - start) * min(max(t / duration, 0.0), 1.0)

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)


def model_space(p: ModelParams, l_max: int, atom: bool | None = None) -> Space:
    """The truncated space appropriate for a model (atom dropped when decoupled)."""
    if atom is None:
        atom = p.needs_atom
    if not atom and p.needs_atom:
        raise ValueError("this parameter set couples the atom; a Fock-only space is invalid")
    return space(l_max, atom)


def _drive_op(sp: Space) -> np.ndarray:
    return 1j * (sp.adag - sp.a)


def system_hamiltonian(p: ModelParams, sp: Space, epsilon: float | None = None) -> np.ndarray:
    """Hermitian Hamiltonian of either model on the given space."""
    eps = p.epsilon if epsilon is None else epsilon
    if p.model == "kerr":
        return kerr_hamiltonian(p, sp, eps)
    h = -p.delta_omega * sp.number + eps * _drive_op(sp)
    if sp.atom:
        h = h - p.delta_omega * sp.excited
        h = h + 1j * p.g * (sp.adag @ sp.sigma_minus - sp.a @ sp.sigma_plus)
    elif p.g != 0:
        raise ValueError("g != 0 requires the atom (x) Fock space")
    return h


def _require(p: ModelParams, model: str):
    if p.model != model:
        raise ValueError(f"operation requires model {model!r}, got {p.model!r}")


def jc_hamiltonian(p: ModelParams, l_max: int) -> np.ndarray:
    """JC Hamiltonian (units of hbar kappa) on the atom (x) Fock basis."""
    _require(p, "jc")
    return system_hamiltonian(p, space(l_max, True))


def effective_hamiltonian(p: ModelParams, sp: Space, epsilon: float | None = None) -> np.ndarray:
    """Non-Hermitian H - i kappa a^+a - i (gamma/2) s_+s_-."""
    h = system_hamiltonian(p, sp, epsilon) - 1j * p.kappa * sp.number
    if sp.atom and p.gamma:
        h = h - 0.5j * p.gamma * sp.excited
    return h


def jc_effective_hamiltonian(p: ModelParams, l_max: int) -> np.ndarray:
    _require(p, "jc")
    return effective_hamiltonian(p, space(l_max, True))


def jump_operators(p: ModelParams, sp: Space) -> list[np.ndarray]:
    """Collapse operators of the master equation (thermal terms included)."""
    ops = [np.sqrt(2.0 * p.kappa * (p.n_bar + 1.0)) * sp.a]
    if p.n_bar:
        ops.append(np.sqrt(2.0 * p.kappa * p.n_bar) * sp.adag)
    if sp.atom and p.gamma:
        ops.append(np.sqrt(p.gamma) * sp.sigma_minus)
    return ops


def lindblad_rhs(rho: np.ndarray, p: ModelParams, sp: Space, epsilon: float | None = None) -> np.ndarray:
    """d rho/dt = -i[H, rho] + sum_c (C rho C^+ - {C^+C, rho}/2)."""
    h = system_hamiltonian(p, sp, epsilon)
    out = -1j * (h @ rho - rho @ h)
    for c in jump_operators(p, sp):
        cd = c.conj().T
        cdc = cd @ c
        out += c @ rho @ cd - 0.5 * (cdc @ rho + rho @ cdc)
    return out


def jc_lindblad_rhs(rho: np.ndarray, p: ModelParams, l_max: int | None = None) -> np.ndarray:
    """JC master equation right-hand side on the atom (x) Fock basis."""
    _require(p, "jc")
    if l_max is None:
        l_max = rho.shape[0] // 2 - 1
    return lindblad_rhs(rho, p, space(l_max, True))


def kerr_hamiltonian(p: ModelParams, sp: Space, epsilon: float | None = None) -> np.ndarray:
    _require(p, "kerr")
    eps = p.epsilon if epsilon is None else epsilon
    n = sp.number
    return -p.delta_omega * n + p.chi * (n @ n - n) + eps * _drive_op(sp)


def kerr_lindblad_rhs(rho: np.ndarray, p: ModelParams) -> np.ndarray:
    """Kerr master equation in the Hermiticity-preserving form -i[H, rho] + damping."""
    _require(p, "kerr")
    return lindblad_rhs(rho, p, space(rho.shape[0] - 1, False))


def kerr_lindblad_rhs_printed(rho: np.ndarray, p: ModelParams) -> np.ndarray:
    """Kerr equation with the commutator prefactors taken literally:
    dw[a^+a, rho] - i chi[a^+2 a^2, rho] + eps[a^+ - a, rho] + damping.

    Kept for comparison only: the real prefactor on the detuning commutator
    does not preserve Hermiticity.
    """
    _require(p, "kerr")
    sp = space(rho.shape[0] - 1, False)
    n = sp.number
    n2 = n @ n - n
    d = sp.adag - sp.a

    def comm(x):
        return x @ rho - rho @ x

    out = p.delta_omega * comm(n) - 1j * p.chi * comm(n2) + p.epsilon * comm(d)
    a, ad = sp.a, sp.adag
    out += p.kappa * (2 * a @ rho @ ad - rho @ n - n @ rho)
    return out


def liouvillian(p: ModelParams, sp: Space, epsilon: float | None = None) -> sps.csr_matrix:
    """Sparse superoperator acting on row-major ``rho.ravel()``.

    Uses vec(A rho B) = (A kron B^T) vec(rho).
    """
    h = sps.csr_matrix(system_hamiltonian(p, sp, epsilon))
    eye = sps.identity(sp.dim, dtype=complex, format="csr")
    L = -1j * (sps.kron(h, eye) - sps.kron(eye, h.T))
    for c in jump_operators(p, sp):
        c = sps.csr_matrix(c)
        cd = c.conj().T
        cdc = (cd @ c).tocsr()
        L = L + sps.kron(c, c.conj()) - 0.5 * sps.kron(cdc, eye) - 0.5 * sps.kron(eye, cdc.T)
    return L.tocsr()
