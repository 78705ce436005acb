"""Monte Carlo wavefunction trajectories under direct photodetection.

The pure-state path follows the fixed-step scheme: at every step of length
``dt`` the emission probability ``p = [2 kappa <a^+a> + gamma <s_+s_->] dt`` of
the normalized state is compared with a uniform draw ``r``; if ``p > r`` a
jump operator is applied, otherwise the ket is advanced by one RK4 (3/8 rule)
step of the non-Hermitian effective Hamiltonian. The state is renormalized
after every step and jump times are the step end points.

Trajectories run in batches: kets are stored as the columns of a ``(dim, B)``
array and every trajectory owns a random generator from which it draws a
fixed number of uniforms per step, so a trajectory's record depends only on
its own seed and the batch it was run in.
"""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.ndimage import maximum_filter

from .fock import GridSpec, default_grid, partial_trace_atom, q_function
from .integrators import FEHLBERG, integrate_adaptive, rk4_38_propagator, rk4_38_step
from .models import ModelParams, effective_hamiltonian, model_space

__all__ = [
    "SCHEMA_VERSION",
    "PhotonRecord",
    "JumpCounts",
    "derive_seed",
    "run_batch",
    "run_trajectory_pure",
    "run_ensemble",
    "classify_jumps",
    "EnsembleDensity",
    "ensemble_density",
    "MixedRecord",
    "run_trajectory_mixed",
    "no_click_rhs",
    "find_q_peaks",
    "coherence_block_max",
    "Switch",
    "detect_switches",
    "cavity_state",
]

SCHEMA_VERSION = 1
DEFAULT_CHUNK = 256
_BLOCK = 2048


@dataclass
class PhotonRecord:
    """Photon-counting record of one trajectory.

    Events are stored column-wise: ``event_t`` (step end times),
    ``event_channel`` ("cavity" or "atom") and ``event_kind`` ("up" or
    "down"). ``sample_t``/``sample_n`` hold the conditional photon number on
    the sampling grid. ``snapshots`` maps snapshot times to kets.
    """

    params: ModelParams
    seed: int
    dt: float
    l_max: int
    t_final: float
    event_t: np.ndarray
    event_channel: np.ndarray
    event_kind: np.ndarray
    sample_t: np.ndarray
    sample_n: np.ndarray
    snapshots: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def events(self) -> list[dict]:
        return [
            {"t": float(t), "channel": str(c), "kind": str(k)}
            for t, c, k in zip(self.event_t, self.event_channel, self.event_kind)
        ]

    @property
    def samples(self) -> list[dict]:
        return [{"t": float(t), "n_cond": float(n)} for t, n in zip(self.sample_t, self.sample_n)]

    def header(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "params": asdict(self.params),
            "seed": int(self.seed),
            "dt": self.dt,
            "l_max": self.l_max,
            "t_final": self.t_final,
        }

    def to_jsonl(self, path) -> None:
        """Header line, then events and samples merged in time order."""
        lines = [json.dumps(self.header())]
        ev = [(t, 0, {"t": float(t), "ch": str(c), "kind": str(k)})
              for t, c, k in zip(self.event_t, self.event_channel, self.event_kind)]
        sm = [(t, 1, {"t": float(t), "n": float(n)}) for t, n in zip(self.sample_t, self.sample_n)]
        for _, _, obj in sorted(ev + sm, key=lambda x: (x[0], x[1])):
            lines.append(json.dumps(obj))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def from_jsonl(cls, path) -> "PhotonRecord":
        with open(path) as fh:
            head = json.loads(fh.readline())
            if head.get("schema_version") != SCHEMA_VERSION:
                raise ValueError(f"unsupported record schema {head.get('schema_version')!r}")
            et, ec, ek, st, sn = [], [], [], [], []
            for line in fh:
                obj = json.loads(line)
                if "ch" in obj:
                    et.append(obj["t"])
                    ec.append(obj["ch"])
                    ek.append(obj["kind"])
                else:
                    st.append(obj["t"])
                    sn.append(obj["n"])
        params = head["params"]
        if params.get("epsilon_ramp") is not None:
            params["epsilon_ramp"] = tuple(params["epsilon_ramp"])
        return cls(ModelParams(**params), head["seed"], head["dt"], head["l_max"], head["t_final"],
                   np.array(et, dtype=float), np.array(ec, dtype=str), np.array(ek, dtype=str),
                   np.array(st, dtype=float), np.array(sn, dtype=float))


def derive_seed(master_seed: int, index: int) -> int:
    """64-bit seed of trajectory ``index`` in an ensemble.

    ``SeedSequence(master_seed, spawn_key=(index,))`` hashed to one uint64.
    """
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, np.uint64)[0])


def _snapshot_steps(times, dt, n_steps):
    steps = []
    for ts in times:
        if ts < 0:
            raise ValueError("snapshot times must be non-negative")
        steps.append(min(int(math.ceil(ts / dt - 1e-9)), n_steps))
    return steps


def _per_trajectory_steps(snapshot_times, B, dt, n_steps):
    """Snapshot steps per trajectory from a shared or a per-trajectory list of times."""
    times = list(snapshot_times)
    per_traj = len(times) == B and B > 0 and all(np.ndim(x) == 1 for x in times)
    if not per_traj:
        shared = sorted(set(_snapshot_steps(times, dt, n_steps)))
        return [shared] * B
    return [sorted(set(_snapshot_steps(x, dt, n_steps))) for x in times]


def run_batch(p: ModelParams, l_max: int, dt: float, t_final: float, seeds, psi0=None,
              sample_every: int = 1, snapshot_times=(), warn: bool = True) -> list[PhotonRecord]:
    """Run one batch of pure-state trajectories side by side.

    Parameters
    ----------
    p : ModelParams
        ``n_bar`` must be 0 and ``eta`` 1 (use :func:`run_trajectory_mixed`
        otherwise).
    seeds : sequence of int
        One seed per trajectory.
    psi0 : ndarray, optional
        Initial ket on the model space; defaults to ``|0>|->``. A Fock-only ket
        is accepted for models with an atom and embedded with the atom in ``|->``.
    sample_every : int
        Store ``<a^+a>`` every this many steps (plus ``t = 0``).
    snapshot_times : sequence of float, or one such sequence per trajectory
        Kets are stored at the first step end at or after each time.
    """
    if p.n_bar != 0 or p.eta != 1:
        raise ValueError("pure-state trajectories need n_bar = 0 and eta = 1")
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

    kappa2 = 2.0 * p.kappa
    gamma = p.gamma if sp.atom else 0.0
    k_draw = 2 if gamma > 0 else 1
    n_diag = sp.photon_numbers
    e_diag = sp.excitations
    top = n_diag == l_max
    a_op, sm_op = sp.a, (sp.sigma_minus if sp.atom else None)

    if p.epsilon_ramp is None:
        P = rk4_38_propagator(-1j * effective_hamiltonian(p, sp), dt)
        advance = lambda t, y: P @ y
    else:
        h0 = -1j * effective_hamiltonian(p, sp, epsilon=0.0)
        hd = -1j * (effective_hamiltonian(p, sp, epsilon=1.0) - effective_hamiltonian(p, sp, epsilon=0.0))
        f = lambda t, y: h0 @ y + p.drive_at(t) * (hd @ y)
        advance = lambda t, y: rk4_38_step(f, t, y, dt)

    n_steps = int(round(t_final / dt))
    rngs = [np.random.default_rng(s) for s in seeds]
    n_samp = n_steps // sample_every + 1
    samp_t = np.arange(n_samp) * (sample_every * dt)
    samp_n = np.empty((n_samp, B))
    snap_steps = _per_trajectory_steps(snapshot_times, B, dt, n_steps)
    snap_at: dict = {}
    for b, steps in enumerate(snap_steps):
        for s in steps:
            snap_at.setdefault(s, []).append(b)
    snaps = [[] for _ in range(B)]
    events = [[] for _ in range(B)]
    warned = [[] for _ in range(B)]

    prob = np.abs(psi) ** 2
    n_now = n_diag @ prob
    e_now = e_diag @ prob if gamma > 0 else None
    samp_n[0] = n_now
    for b in snap_at.get(0, ()):
        snaps[b].append((0.0, psi[:, b].copy()))

    U = None
    for step in range(n_steps):
        j = step % _BLOCK
        if j == 0:
            U = np.stack([rng.random((_BLOCK, k_draw)) for rng in rngs], axis=1)
        t = step * dt
        n_before = n_now
        rate_cav = kappa2 * n_before
        rate = rate_cav + gamma * e_now if gamma > 0 else rate_cav
        p_rec = rate * dt
        r = U[j]
        jump = p_rec > r[:, 0]
        new = advance(t, psi)
        jumped = np.nonzero(jump)[0]
        channels = []
        for b in jumped:
            if gamma > 0 and not r[b, 1] < rate_cav[b] / rate[b]:
                new[:, b] = sm_op @ psi[:, b]
                channels.append("atom")
            else:
                new[:, b] = a_op @ psi[:, b]
                channels.append("cavity")
        norms = np.sqrt(np.einsum("ij,ij->j", new.real, new.real) + np.einsum("ij,ij->j", new.imag, new.imag))
        psi = new / norms
        prob = psi.real**2 + psi.imag**2
        n_now = n_diag @ prob
        if gamma > 0:
            e_now = e_diag @ prob
        t_end = (step + 1) * dt
        for b, ch in zip(jumped, channels):
            kind = "up" if n_now[b] > n_before[b] else "down"
            events[b].append((t_end, ch, kind))
        if warn:
            if np.any(p_rec > 0.1):
                for b in np.nonzero(p_rec > 0.1)[0]:
                    if "dt" not in warned[b]:
                        warned[b].append("dt")
            top_pop = prob[top].sum(axis=0)
            if np.any(top_pop > 1e-6):
                for b in np.nonzero(top_pop > 1e-6)[0]:
                    if "truncation" not in warned[b]:
                        warned[b].append("truncation")
        if (step + 1) % sample_every == 0:
            samp_n[(step + 1) // sample_every] = n_now
        for b in snap_at.get(step + 1, ()):
            snaps[b].append((t_end, psi[:, b].copy()))

    messages = {
        "dt": "emission probability per step exceeded 0.1; dt is too coarse",
        "truncation": "population of the top Fock level exceeded 1e-6; increase l_max",
    }
    records = []
    for key, msg in messages.items():
        hit = [seeds[b] for b in range(B) if key in warned[b]]
        if hit:
            warnings.warn(f"{len(hit)} of {B} trajectories (first seed {hit[0]}): {msg}",
                          RuntimeWarning, stacklevel=2)
    for b in range(B):
        wl = [messages[w] for w in warned[b]]
        ev = events[b]
        records.append(PhotonRecord(
            p, seeds[b], dt, l_max, n_steps * dt,
            np.array([e[0] for e in ev], dtype=float),
            np.array([e[1] for e in ev], dtype="<U6"),
            np.array([e[2] for e in ev], dtype="<U4"),
            samp_t.copy(), samp_n[:, b].copy(), snaps[b], wl,
        ))
    return records


def run_trajectory_pure(p: ModelParams, l_max: int, dt: float, t_final: float, seed: int,
                        sample_every: int = 1, psi0=None, snapshot_times=()) -> PhotonRecord:
    """Single pure-state trajectory; see :func:`run_batch`."""
    return run_batch(p, l_max, dt, t_final, [seed], psi0, sample_every, snapshot_times)[0]


def _run_chunk(args):
    p, l_max, dt, t_final, seeds, psi0, sample_every, snapshot_times = args
    return run_batch(p, l_max, dt, t_final, seeds, psi0, sample_every, snapshot_times)


def run_ensemble(p: ModelParams, l_max: int, dt: float, t_final: float, n_traj: int, master_seed: int,
                 workers: int = 1, chunk: int = DEFAULT_CHUNK, psi0=None, sample_every: int = 1,
                 snapshot_times=()) -> list[PhotonRecord]:
    """``n_traj`` trajectories with seeds ``derive_seed(master_seed, i)``.

    Trajectories are split into fixed chunks of ``chunk`` consecutive indices,
    so the result does not depend on ``workers``.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    seeds = [derive_seed(master_seed, i) for i in range(n_traj)]
    jobs = [(p, l_max, dt, t_final, seeds[i:i + chunk], psi0, sample_every, tuple(snapshot_times))
            for i in range(0, n_traj, chunk)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as ex:
            parts = list(ex.map(_run_chunk, jobs))
    else:
        parts = [_run_chunk(j) for j in jobs]
    return [r for part in parts for r in part]


@dataclass(frozen=True)
class JumpCounts:
    upward: int
    downward: int
    by_channel: dict

    @property
    def total(self) -> int:
        return self.upward + self.downward

    @property
    def fraction(self) -> float:
        return self.upward / self.total if self.total else float("nan")


def classify_jumps(*records: PhotonRecord) -> JumpCounts:
    """Count upward and downward jumps, overall and per channel, over one or more records."""
    up = down = 0
    chans: dict = {}
    for rec in records:
        for ch, kind in zip(rec.event_channel, rec.event_kind):
            c = chans.setdefault(str(ch), {"upward": 0, "downward": 0})
            if kind == "up":
                up += 1
                c["upward"] += 1
            else:
                down += 1
                c["downward"] += 1
    return JumpCounts(up, down, chans)


def cavity_state(psi: np.ndarray, l_max: int) -> np.ndarray:
    """Cavity density matrix of a ket on either basis."""
    psi = np.asarray(psi)
    if psi.size == 2 * (l_max + 1):
        return partial_trace_atom(psi, l_max)
    return np.outer(psi, psi.conj())


@dataclass
class EnsembleDensity:
    """Trajectory average of ``|psi><psi|`` on a time grid.

    ``rho[k]`` is the mean projector at ``t[k]`` and ``n[i, k]`` the
    conditional photon number of trajectory ``i`` there.
    """

    t: np.ndarray
    rho: np.ndarray
    n: np.ndarray

    @property
    def n_traj(self) -> int:
        return self.n.shape[0]

    def mean_photon(self) -> np.ndarray:
        return self.n.mean(axis=0)

    def standard_error(self) -> np.ndarray:
        if self.n_traj < 2:
            return np.full(self.t.shape, np.nan)
        return self.n.std(axis=0, ddof=1) / np.sqrt(self.n_traj)


def ensemble_density(p: ModelParams, l_max: int, dt: float, n_traj: int, t_grid, master_seed: int,
                     workers: int = 1, chunk: int = DEFAULT_CHUNK, psi0=None) -> EnsembleDensity:
    """Mean of ``|psi><psi|`` over ``n_traj`` trajectories at the times ``t_grid``."""
    t_grid = np.asarray(t_grid, dtype=float)
    recs = run_ensemble(p, l_max, dt, float(t_grid.max()), n_traj, master_seed, workers, chunk, psi0,
                        sample_every=max(1, int(round(t_grid.max() / dt))), snapshot_times=t_grid)
    sp = model_space(p, l_max)
    D = sp.dim
    rho = np.zeros((t_grid.size, D, D), dtype=complex)
    n = np.empty((n_traj, t_grid.size))
    for i, rec in enumerate(recs):
        for k, (_, ket) in enumerate(rec.snapshots):
            rho[k] += np.outer(ket, ket.conj())
            n[i, k] = sp.photon_numbers @ (np.abs(ket) ** 2)
    return EnsembleDensity(t_grid, rho / n_traj, n)


# ---------------------------------------------------------------- mixed path


def no_click_rhs(rho: np.ndarray, p: ModelParams) -> np.ndarray:
    """Generator of the unnormalized conditional cavity state between clicks.

    Empty cavity (no drive, no atom) coupled to a thermal bath of occupation
    ``n_bar``, watched by a detector of efficiency ``eta``::

        d rho_mn/dt = -kappa [(n+1)(m+n) + n (m+n+2)] rho_mn
                      + 2 kappa (n+1-eta) sqrt((m+1)(n+1)) rho_{m+1,n+1}
                      + 2 kappa n sqrt(mn) rho_{m-1,n-1}

    (``n`` is ``n_bar`` in the coefficients).
    """
    N = rho.shape[0]
    m = np.arange(N, dtype=float)
    k, nb, eta = p.kappa, p.n_bar, p.eta
    msum = m[:, None] + m[None, :]
    out = -k * ((nb + 1.0) * msum + nb * (msum + 2.0)) * rho
    up = np.sqrt(np.outer(m[1:], m[1:]))  # sqrt((m+1)(n+1)) for m, n < N-1
    out[:-1, :-1] += 2.0 * k * (nb + 1.0 - eta) * up * rho[1:, 1:]
    if nb:
        out[1:, 1:] += 2.0 * k * nb * up * rho[:-1, :-1]
    return out


@dataclass
class MixedRecord:
    """Record of the mixed-state path: click times plus sampled states."""

    params: ModelParams
    seed: int | None
    dt: float
    l_max: int
    click_t: np.ndarray
    sample_t: np.ndarray
    sample_n: np.ndarray
    snapshots: list = field(default_factory=list)


def run_trajectory_mixed(p: ModelParams, l_max: int, dt: float, t_final: float, seed: int | None,
                         rho0=None, sample_every: int = 1, snapshot_times=(), click_steps=None,
                         stop_below: float | None = None, rtol: float = 1e-10,
                         atol: float = 1e-13) -> MixedRecord:
    """Conditional cavity density matrix for an empty cavity with imperfect detection.

    Parameters
    ----------
    p : ModelParams
        ``g``, ``epsilon`` and ``gamma`` must vanish; ``n_bar`` and ``eta``
        set the bath occupation and detector efficiency.
    rho0 : ndarray, optional
        Initial cavity state (ket or density matrix); defaults to vacuum.
    click_steps : iterable of int, optional
        Replay mode: clicks occur exactly at the end of these steps (0-based)
        and no random numbers are drawn.
    stop_below : float, optional
        Stop at the first step end where ``<a^+a>`` falls below this value,
        once it has been at or above it, and store a snapshot there.

    Notes
    -----
    Between clicks the unnormalized state follows :func:`no_click_rhs`,
    integrated with an adaptive Runge-Kutta-Fehlberg pair inside every step.
    A click, of probability ``eta 2 kappa <a^+a> dt``, maps ``rho`` to
    ``a rho a^+`` and the state is renormalized every step.
    """
    if p.g or p.epsilon or p.gamma:
        raise ValueError("the mixed-state path covers the undriven empty cavity only")
    N = l_max + 1
    if rho0 is None:
        rho = np.zeros((N, N), dtype=complex)
        rho[0, 0] = 1.0
    else:
        rho = np.asarray(rho0, dtype=complex)
        if rho.ndim == 1:
            rho = np.outer(rho, rho.conj())
        rho = rho / np.trace(rho).real
    if rho.shape != (N, N):
        raise ValueError(f"initial state must be {N}x{N}")
    n_steps = int(round(t_final / dt))
    rng = None if click_steps is not None else np.random.default_rng(seed)
    forced = set(int(s) for s in click_steps) if click_steps is not None else None
    fock_n = np.arange(N, dtype=float)
    sqrt_n = np.sqrt(fock_n[1:])
    snap_steps = _snapshot_steps(snapshot_times, dt, n_steps)
    f = lambda _t, r: no_click_rhs(r, p)

    clicks, st, sn, snaps = [], [0.0], [float(fock_n @ np.diag(rho).real)], []
    if 0 in snap_steps:
        snaps.append((0.0, rho.copy()))
    h = None
    armed = stop_below is not None and sn[0] >= stop_below
    for step in range(n_steps):
        n_mean = float(fock_n @ np.diag(rho).real)
        if forced is None:
            click = p.eta * 2.0 * p.kappa * n_mean * dt > rng.random()
        else:
            click = step in forced
        t_end = (step + 1) * dt
        if click:
            a_rho = sqrt_n[:, None] * rho[1:, 1:] * sqrt_n[None, :]
            rho = np.zeros_like(rho)
            rho[:-1, :-1] = a_rho
            clicks.append(t_end)
        else:
            rho, h, _ = integrate_adaptive(f, step * dt, rho, t_end, FEHLBERG, rtol, atol, h0=h)
        rho = 0.5 * (rho + rho.conj().T)
        rho /= np.trace(rho).real
        n_now = float(fock_n @ np.diag(rho).real)
        if (step + 1) % sample_every == 0:
            st.append(t_end)
            sn.append(n_now)
        if step + 1 in snap_steps:
            snaps.append((t_end, rho.copy()))
        if stop_below is not None:
            if armed and n_now < stop_below:
                snaps.append((t_end, rho.copy()))
                break
            armed = armed or n_now >= stop_below
    return MixedRecord(p, seed, dt, l_max, np.array(clicks), np.array(st), np.array(sn), snaps)


# ---------------------------------------------------------- analysis helpers


def find_q_peaks(rho_cav: np.ndarray, grid: GridSpec | None = None, rel_threshold: float = 0.05,
                 n_grid: int = 121) -> list[complex]:
    """Local maxima of the Q function, highest first, refined by a parabola through neighbours.

    Only maxima above ``rel_threshold`` times the global maximum count.
    Without a grid, a square grid is sized from ``sqrt(<a^+a>)``.
    """
    rho_cav = np.asarray(rho_cav)
    if grid is None:
        n_mean = float(np.arange(rho_cav.shape[0]) @ np.diag(rho_cav).real)
        grid = default_grid(2.0 * math.sqrt(max(n_mean, 1.0)) + 1.0, n=n_grid)
    q = q_function(rho_cav, grid).values
    is_max = (q == maximum_filter(q, size=3, mode="constant", cval=-np.inf)) & (q > rel_threshold * q.max())
    is_max[0, :] = is_max[-1, :] = is_max[:, 0] = is_max[:, -1] = False
    ii, jj = np.nonzero(is_max)
    order = np.argsort(-q[ii, jj])
    x, y = grid.x, grid.y
    dx, dy = x[1] - x[0], y[1] - y[0]
    peaks = []
    for i, j in zip(ii[order], jj[order]):
        def offset(lo, mid, hi):
            den = lo - 2.0 * mid + hi
            return 0.0 if den == 0 else 0.5 * (lo - hi) / den
        px = x[i] + dx * offset(q[i - 1, j], q[i, j], q[i + 1, j])
        py = y[j] + dy * offset(q[i, j - 1], q[i, j], q[i, j + 1])
        peaks.append(complex(px, py))
    return peaks


def coherence_block_max(rho_cav: np.ndarray, alpha1: complex, alpha2: complex, t: float = 0.0,
                        half_width: float = 3.0) -> float:
    """Largest ``|rho_mn|`` in the off-diagonal block linking two decaying components.

    The block is centred on ``(m, n) = (|alpha1(t)|^2, |alpha2(t)|^2)`` with
    ``alpha_i(t) = alpha_i e^{-t}``. By Hermiticity the transposed block
    carries the same magnitudes.
    """
    rho_cav = np.asarray(rho_cav)
    idx = np.arange(rho_cav.shape[0])
    decay = math.exp(-2.0 * t)
    rows = np.abs(idx - abs(alpha1) ** 2 * decay) <= half_width
    cols = np.abs(idx - abs(alpha2) ** 2 * decay) <= half_width
    if not rows.any() or not cols.any():
        raise ValueError("coherence block lies outside the truncated basis")
    return float(np.abs(rho_cav[np.ix_(rows, cols)]).max())


@dataclass(frozen=True)
class Switch:
    """A passage between the two bands ``n < low`` and ``n > high``.

    ``t_start`` is the last sample in the band being left and ``t_end`` the
    first sample in the band being entered.
    """

    direction: str  # "down" (bright to dim) or "up"
    t_start: float
    t_end: float


def detect_switches(t, n, low: float, high: float) -> list[Switch]:
    """Hysteresis detection of switches between a dim band and a bright band."""
    t = np.asarray(t)
    n = np.asarray(n)
    state = None
    last_idx = None
    out = []
    for i, v in enumerate(n):
        band = "bright" if v > high else ("dim" if v < low else None)
        if band is None:
            continue
        if state is not None and band != state:
            out.append(Switch("down" if band == "dim" else "up", float(t[last_idx]), float(t[i])))
        state = band
        last_idx = i
    return out
