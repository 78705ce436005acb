"""Truncated Hilbert-space core.

States are plain numpy arrays: kets are 1-D complex vectors, density
matrices 2-D complex arrays. The basis is described by a :class:`Space`:

* Fock-only: ``|n>``, ``n = 0..l_max``, index ``n``.
* atom (x) Fock: ``|n>|s>`` with ``s = 0`` for the lower atomic state ``|->``
  and ``s = 1`` for the upper state ``|+>``; index ``2*n + s``.

Phase-space convention: ``alpha = x + i y`` with ``x = Re(alpha)``, so the
vacuum has ``<x^2> = 1/4`` and the vacuum Q function is
``exp(-x^2 - y^2) / pi``.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.special import gammaln

__all__ = [
    "Space",
    "space",
    "GridSpec",
    "PhaseGrid",
    "log_factorials",
    "coherent_amplitudes",
    "coherent_ket",
    "coherent_overlap",
    "superposition_ket",
    "normalize",
    "ket_to_dm",
    "embed",
    "partial_trace_atom",
    "expectation",
    "q_function",
    "wigner_function",
    "default_grid",
]


@dataclass(frozen=True)
class Space:
    """Truncated basis with cached dense operators."""

    l_max: int
    atom: bool = True

    def __post_init__(self):
        if self.l_max < 1:
            raise ValueError(f"l_max must be >= 1, got {self.l_max}")

    @property
    def n_fock(self) -> int:
        return self.l_max + 1

    @property
    def dim(self) -> int:
        return 2 * self.n_fock if self.atom else self.n_fock

    def _lift(self, field_op, atom_op=None):
        if not self.atom:
            if atom_op is not None:
                raise ValueError("atomic operator requested on a Fock-only space")
            return field_op
        return np.kron(field_op, np.eye(2) if atom_op is None else atom_op)

    @cached_property
    def a(self) -> np.ndarray:
        a = np.diag(np.sqrt(np.arange(1, self.n_fock, dtype=float)), 1).astype(complex)
        return self._lift(a)

    @cached_property
    def adag(self) -> np.ndarray:
        return self.a.conj().T.copy()

    @cached_property
    def sigma_minus(self) -> np.ndarray:
        sm = np.array([[0, 1], [0, 0]], dtype=complex)
        return self._lift(np.eye(self.n_fock), sm)

    @cached_property
    def sigma_plus(self) -> np.ndarray:
        return self.sigma_minus.conj().T.copy()

    @cached_property
    def photon_numbers(self) -> np.ndarray:
        """Diagonal of a^dagger a."""
        n = np.arange(self.n_fock, dtype=float)
        return np.repeat(n, 2) if self.atom else n

    @cached_property
    def excitations(self) -> np.ndarray:
        """Diagonal of sigma_+ sigma_- (upper-state projector)."""
        if not self.atom:
            return np.zeros(self.dim)
        return np.tile([0.0, 1.0], self.n_fock)

    @cached_property
    def number(self) -> np.ndarray:
        return np.diag(self.photon_numbers).astype(complex)

    @cached_property
    def excited(self) -> np.ndarray:
        return np.diag(self.excitations).astype(complex)

    @property
    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex)

    def ground(self) -> np.ndarray:
        """|0>|-> (or |0> without the atom)."""
        psi = np.zeros(self.dim, dtype=complex)
        psi[0] = 1.0
        return psi


@lru_cache(maxsize=None)
def space(l_max: int, atom: bool = True) -> Space:
    return Space(int(l_max), bool(atom))


@lru_cache(maxsize=None)
def log_factorials(n_max: int) -> np.ndarray:
    """``log(k!)`` for ``k = 0..n_max``."""
    return gammaln(np.arange(n_max + 1) + 1.0)


def coherent_amplitudes(alpha, l_max: int) -> np.ndarray:
    """Fock amplitudes ``exp(-|a|^2/2) a^n / sqrt(n!)``, computed in log space.

    ``alpha`` may be a scalar or an array; the Fock index is the last axis.
    """
    alpha = np.asarray(alpha, dtype=complex)
    n = np.arange(l_max + 1)
    mod = np.abs(alpha)[..., None]
    phase = np.angle(alpha)[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        log_mod = np.log(mod)
        # 0 * log(0) must be 0 for the vacuum component
        log_pow = np.where(n == 0, 0.0, n * log_mod)
    log_c = -0.5 * mod**2 + log_pow - 0.5 * log_factorials(l_max)
    return np.exp(log_c) * np.exp(1j * n * phase)


def coherent_ket(alpha: complex, l_max: int) -> np.ndarray:
    """Truncated coherent state |alpha> in the Fock-only basis.

    Warns when ``|alpha|^2 > l_max / 2`` since truncation leakage then stops
    being negligible. The ket is not renormalized after truncation.
    """
    alpha = complex(alpha)
    if not np.isfinite(alpha.real) or not np.isfinite(alpha.imag):
        raise ValueError(f"coherent amplitude must be finite, got {alpha}")
    if abs(alpha) ** 2 > l_max / 2:
        warnings.warn(
            f"|alpha|^2 = {abs(alpha) ** 2:.3g} exceeds l_max/2 = {l_max / 2}; "
            "truncation is unsafe",
            RuntimeWarning,
            stacklevel=2,
        )
    return coherent_amplitudes(alpha, l_max)


def coherent_overlap(alpha1: complex, alpha2: complex) -> complex:
    """<alpha1|alpha2> = exp(-|a1|^2/2 - |a2|^2/2 + conj(a1) a2)."""
    return np.exp(
        -0.5 * abs(alpha1) ** 2 - 0.5 * abs(alpha2) ** 2 + np.conj(alpha1) * alpha2
    )


def superposition_ket(alpha1: complex, alpha2: complex, l_max: int) -> np.ndarray:
    """(|a1> + |a2>) / sqrt(2 [1 + Re<a1|a2>])."""
    psi = coherent_ket(alpha1, l_max) + coherent_ket(alpha2, l_max)
    norm = np.sqrt(2.0 * (1.0 + coherent_overlap(alpha1, alpha2).real))
    return psi / norm


def normalize(psi: np.ndarray) -> np.ndarray:
    """Return a unit-norm copy of a ket, or a unit-trace copy of a density matrix."""
    psi = np.asarray(psi)
    if psi.ndim == 1:
        return psi / np.linalg.norm(psi)
    rho = 0.5 * (psi + psi.conj().T)
    return rho / np.trace(rho).real


def ket_to_dm(psi: np.ndarray) -> np.ndarray:
    return np.outer(psi, psi.conj())


def embed(field_ket: np.ndarray, atom_ket=(1.0, 0.0)) -> np.ndarray:
    """Product state |field> (x) |atom> in the atom (x) Fock ordering."""
    return np.kron(np.asarray(field_ket, dtype=complex), np.asarray(atom_ket, dtype=complex))


def partial_trace_atom(rho: np.ndarray, l_max: int) -> np.ndarray:
    """Trace the two-level atom out of an atom (x) Fock density matrix or ket."""
    n = l_max + 1
    rho = np.asarray(rho)
    if rho.ndim == 1:
        rho = ket_to_dm(rho)
    if rho.shape != (2 * n, 2 * n):
        raise ValueError(
            f"expected a {2 * n}x{2 * n} atom-Fock matrix for l_max={l_max}, "
            f"got shape {rho.shape}"
        )
    return np.einsum("isjs->ij", rho.reshape(n, 2, n, 2))


_TAGS = ("photon_number", "field_amplitude", "atomic_inversion", "atomic_polarization")


def expectation(op_tag: str, state: np.ndarray, sp: Space) -> complex | float:
    """Expectation value of a named operator in a ket or density matrix.

    ``photon_number`` and ``atomic_inversion`` return real floats.
    """
    if op_tag == "photon_number":
        op = sp.number
    elif op_tag == "field_amplitude":
        op = sp.a
    elif op_tag == "atomic_inversion":
        op = sp.sigma_plus @ sp.sigma_minus * 2 - sp.identity
    elif op_tag == "atomic_polarization":
        op = sp.sigma_minus
    else:
        raise ValueError(f"unknown operator tag {op_tag!r}; choose from {_TAGS}")
    state = np.asarray(state)
    if state.shape[0] != sp.dim:
        raise ValueError(f"state dimension {state.shape[0]} does not match space {sp.dim}")
    if state.ndim == 1:
        val = np.vdot(state, op @ state)
    else:
        val = np.trace(op @ state)
    if op_tag in ("photon_number", "atomic_inversion"):
        if abs(val.imag) > 1e-10:
            raise ValueError(f"Hermitian expectation has imaginary residue {val.imag:g}")
        return float(val.real)
    return complex(val)


@dataclass(frozen=True)
class GridSpec:
    """Rectangular phase-space grid, inclusive of its end points."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int = 121
    ny: int = 121

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def y(self) -> np.ndarray:
        return np.linspace(self.y_min, self.y_max, self.ny)

    @property
    def cell_area(self) -> float:
        dx = (self.x_max - self.x_min) / (self.nx - 1)
        dy = (self.y_max - self.y_min) / (self.ny - 1)
        return dx * dy

    def alphas(self) -> np.ndarray:
        """Complex amplitudes, shape (nx, ny), ``[i, j] = x_i + i y_j``."""
        return self.x[:, None] + 1j * self.y[None, :]

    @classmethod
    def square(cls, half_width: float, n: int = 121) -> "GridSpec":
        return cls(-half_width, half_width, -half_width, half_width, n, n)


@dataclass(frozen=True)
class PhaseGrid:
    """Scalar field sampled on a :class:`GridSpec`; ``values[i, j]`` at (x_i, y_j)."""

    spec: GridSpec
    values: np.ndarray

    @property
    def x(self) -> np.ndarray:
        return self.spec.x

    @property
    def y(self) -> np.ndarray:
        return self.spec.y

    def integral(self) -> float:
        """Riemann sum times cell area."""
        return float(self.values.sum() * self.spec.cell_area)

    def to_csv(self, path) -> None:
        """Write ``x,y,value`` rows, y in the outer loop, 9 significant digits."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "value"])
            for j, yv in enumerate(self.y):
                for i, xv in enumerate(self.x):
                    w.writerow([f"{xv:.9g}", f"{yv:.9g}", f"{self.values[i, j]:.9g}"])

    @classmethod
    def from_csv(cls, path) -> "PhaseGrid":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        xs = np.unique(data[:, 0])
        ys = np.unique(data[:, 1])
        spec = GridSpec(xs[0], xs[-1], ys[0], ys[-1], len(xs), len(ys))
        values = data[:, 2].reshape(len(ys), len(xs)).T
        return cls(spec, values)


def default_grid(*alphas: complex, n: int = 121) -> GridSpec:
    """121 x 121 square grid spanning 1.5 max|alpha| (at least +-3)."""
    half = max([1.5 * abs(a) for a in alphas] + [3.0])
    return GridSpec.square(half, n)


def _fock_density(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho)
    if rho.ndim == 1:
        rho = ket_to_dm(rho)
    if rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got {rho.shape}")
    return rho


def q_function(rho: np.ndarray, grid: GridSpec) -> PhaseGrid:
    """Husimi Q(x+iy) = <alpha|rho|alpha> / pi of a Fock-only state."""
    rho = _fock_density(rho)
    l_max = rho.shape[0] - 1
    u = coherent_amplitudes(grid.alphas(), l_max)  # (nx, ny, N), includes exp(-|a|^2/2)
    vals = np.einsum("ijm,mn,ijn->ij", u.conj(), rho, u, optimize=True).real / np.pi
    return PhaseGrid(grid, vals)


def _laguerre_table(k: int, m_max: int, x: np.ndarray) -> list:
    """L_m^(k)(x) for m = 0..m_max by the upward three-term recurrence."""
    out = [np.ones_like(x)]
    if m_max >= 1:
        out.append(1.0 + k - x)
    for m in range(1, m_max):
        out.append(((2 * m + 1 + k - x) * out[m] - (m + k) * out[m - 1]) / (m + 1))
    return out


def wigner_function(rho: np.ndarray, grid: GridSpec) -> PhaseGrid:
    """Wigner function W = (2/pi) Tr[rho D(alpha) P D(alpha)^dagger], P the parity.

    Uses the closed-form Fock matrix elements
    <n|D(2a) P|m> = (-1)^m sqrt(m!/n!) (2a)^(n-m) e^(-2|a|^2) L_m^(n-m)(4|a|^2),
    n >= m.
    """
    rho = _fock_density(rho)
    N = rho.shape[0]
    alpha = grid.alphas()
    r2 = np.abs(alpha) ** 2
    x = 4.0 * r2
    lf = log_factorials(N - 1)
    with np.errstate(divide="ignore"):
        log_two_r = np.log(2.0 * np.sqrt(r2))
    phase = np.exp(1j * np.angle(alpha))
    w = np.zeros(alpha.shape)
    for k in range(N):
        lag = _laguerre_table(k, N - 1 - k, x)
        if k == 0:
            radial = np.exp(-2.0 * r2)
        else:
            radial = np.exp(k * log_two_r - 2.0 * r2)
        ang = phase**k
        for m in range(N - k):
            n = m + k
            coef = (-1) ** m * np.exp(0.5 * (lf[m] - lf[n]))
            t_nm = coef * radial * lag[m]
            if k == 0:
                w += rho[m, m].real * t_nm
            else:
                w += 2.0 * (rho[m, n] * t_nm * ang).real
    return PhaseGrid(grid, 2.0 / np.pi * w)
