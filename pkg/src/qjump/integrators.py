"""Runge-Kutta steppers shared by the trajectory and master-equation code.

All steppers work on arbitrary numpy arrays (kets, batches of kets stored as
columns, density matrices) so one implementation serves every caller.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "rk4_38_step",
    "rk4_38_propagator",
    "rk4_step",
    "Tableau",
    "CASH_KARP",
    "FEHLBERG",
    "embedded_step",
    "integrate_adaptive",
]


def rk4_38_step(f, t, y, h):
    """One step of the fourth-order Runge-Kutta 3/8 rule."""
    k1 = f(t, y)
    k2 = f(t + h / 3.0, y + (h / 3.0) * k1)
    k3 = f(t + 2.0 * h / 3.0, y + h * (k2 - k1 / 3.0))
    k4 = f(t + h, y + h * (k1 - k2 + k3))
    return y + (h / 8.0) * (k1 + 3.0 * (k2 + k3) + k4)


def rk4_38_propagator(A: np.ndarray, h: float) -> np.ndarray:
    """Matrix that performs one 3/8-rule step of ``y' = A y``.

    For a constant linear generator the stage arithmetic collapses to a fixed
    matrix, so a step becomes a single matrix product.
    """
    eye = np.eye(A.shape[0], dtype=np.result_type(A, complex))
    return rk4_38_step(lambda _t, Y: A @ Y, 0.0, eye, h)


def rk4_step(f, t, y, h):
    """Classic fourth-order Runge-Kutta step."""
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)


@dataclass(frozen=True)
class Tableau:
    """Embedded explicit pair; ``b`` is propagated, ``b_low`` only estimates error."""

    name: str
    c: tuple
    a: tuple
    b: tuple
    b_low: tuple
    order: int


CASH_KARP = Tableau(
    "cash-karp",
    c=(0.0, 1 / 5, 3 / 10, 3 / 5, 1.0, 7 / 8),
    a=(
        (),
        (1 / 5,),
        (3 / 40, 9 / 40),
        (3 / 10, -9 / 10, 6 / 5),
        (-11 / 54, 5 / 2, -70 / 27, 35 / 27),
        (1631 / 55296, 175 / 512, 575 / 13824, 44275 / 110592, 253 / 4096),
    ),
    b=(37 / 378, 0.0, 250 / 621, 125 / 594, 0.0, 512 / 1771),
    b_low=(2825 / 27648, 0.0, 18575 / 48384, 13525 / 55296, 277 / 14336, 1 / 4),
    order=5,
)

FEHLBERG = Tableau(
    "fehlberg",
    c=(0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2),
    a=(
        (),
        (1 / 4,),
        (3 / 32, 9 / 32),
        (1932 / 2197, -7200 / 2197, 7296 / 2197),
        (439 / 216, -8.0, 3680 / 513, -845 / 4104),
        (-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40),
    ),
    b=(16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55),
    b_low=(25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0),
    order=5,
)


def embedded_step(f, t, y, h, tab: Tableau = CASH_KARP):
    """Return ``(y_new, err)`` for one step of an embedded pair."""
    ks = []
    for i, ci in enumerate(tab.c):
        yi = y
        for aij, kj in zip(tab.a[i], ks):
            if aij:
                yi = yi + (h * aij) * kj
        ks.append(f(t + ci * h, yi))
    y_new = y
    err = 0.0
    for bi, bl, k in zip(tab.b, tab.b_low, ks):
        if bi:
            y_new = y_new + (h * bi) * k
        if bi != bl:
            err = err + (h * (bi - bl)) * k
    return y_new, err


def integrate_adaptive(f, t0, y0, t1, tab: Tableau = CASH_KARP, rtol=1e-8, atol=1e-10,
                       h0=None, max_steps=100000):
    """Integrate from ``t0`` to ``t1`` with step-size control.

    Returns ``(y1, h_last, n_steps)``; ``h_last`` is a good first guess for the
    next call. The error norm is the max over all array entries, so batched
    states share one step size.
    """
    span = t1 - t0
    if span <= 0:
        return y0, h0, 0
    h = span if h0 is None else min(h0, span)
    t, y = t0, y0
    n = 0
    expo = -1.0 / tab.order
    while t < t1:
        if n >= max_steps:
            raise RuntimeError(f"adaptive integration exceeded {max_steps} steps")
        h = min(h, t1 - t)
        y_new, err = embedded_step(f, t, y, h, tab)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        e = float(np.max(np.abs(err) / scale))
        n += 1
        if e <= 1.0:
            t += h
            y = y_new
            # avoid landing a hair short of t1 through rounding
            if t1 - t < 1e-12 * max(1.0, abs(t1)):
                t = t1
            grow = 5.0 if e == 0 else min(5.0, 0.9 * e**expo)
            h_next = h * grow
        else:
            h_next = h * max(0.2, 0.9 * e**expo)
        h = h_next
    return y, h, n
