"""Finite-difference gradient checking.

`numeric_grad` estimates d(scalar)/d(array) by central differences, one
coordinate at a time; `check_gradients` runs a function under a fresh tape,
backpropagates, and compares every analytic gradient against the numeric
estimate with the usual  |a - n| <= atol + rtol * |n|  test.

Run these in float64: at the default step 1e-5 the truncation plus roundoff
error of a float32 evaluation would swamp the quantity being measured.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .tensor import Tape, Tensor, backward


def numeric_grad(f: Callable[[], float], x: np.ndarray, *, step: float = 1e-5,
                 coords: Optional[Iterable[tuple]] = None) -> np.ndarray:
    """Central-difference gradient of the scalar `f()` w.r.t. `x`, which `f`
    must read in place. With `coords`, only those index tuples are probed
    (the rest stay zero)."""
    grad = np.zeros_like(x)
    if coords is None:
        it = np.nditer(x, flags=["multi_index"])
        coords = []
        while not it.finished:
            coords.append(it.multi_index)
            it.iternext()
    for idx in coords:
        orig = x[idx]
        x[idx] = orig + step
        f_plus = f()
        x[idx] = orig - step
        f_minus = f()
        x[idx] = orig
        grad[idx] = (f_plus - f_minus) / (2.0 * step)
    return grad


@dataclass
class GradMismatch:
    name: str
    index: tuple
    analytic: float
    numeric: float

    def __str__(self):
        return (f"{self.name}{list(self.index)}: analytic {self.analytic:.6e} "
                f"vs numeric {self.numeric:.6e}")


def check_gradients(f: Callable[[], Tensor], wrt: dict[str, Tensor], *,
                    rtol: float = 1e-5, atol: float = 1e-8, step: float = 1e-5,
                    coords: Optional[dict[str, Sequence[tuple]]] = None) -> list[GradMismatch]:
    """Compare analytic and numeric gradients of the scalar `f()`.

    `f` is called once under a tape for the analytic pass and repeatedly
    (untaped) for the numeric probes, so it must be deterministic and read
    the tensors in `wrt` in place. Returns the list of failing coordinates;
    empty means everything agreed within  atol + rtol * |numeric|.
    """
    with Tape() as tape:
        loss = f()
    tape.zero_grads()          # drop buffers left over from any earlier backward
    for t in wrt.values():
        t.grad = None
    backward(tape, loss)
    analytic = {name: t.grad.copy() for name, t in wrt.items()}

    mismatches: list[GradMismatch] = []
    for name, t in wrt.items():
        want = numeric_grad(lambda: f().item(), t.data, step=step,
                            coords=None if coords is None else coords.get(name))
        probe = (coords or {}).get(name)
        if probe is None:
            it = np.nditer(t.data, flags=["multi_index"])
            probe = []
            while not it.finished:
                probe.append(it.multi_index)
                it.iternext()
        for idx in probe:
            a, n = float(analytic[name][idx]), float(want[idx])
            if abs(a - n) > atol + rtol * abs(n):
                mismatches.append(GradMismatch(name, tuple(idx) if isinstance(idx, tuple) else (idx,),
                                               a, n))
    return mismatches
