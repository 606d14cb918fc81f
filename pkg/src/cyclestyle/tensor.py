"""Dense tensors and the reverse-mode differentiation tape.

A `Tensor` is a numpy array (row-major, NHWC for images) plus an optional
gradient buffer of the same shape. Operations in `ops` record onto the
innermost active `Tape`; `backward` replays the tape in reverse and
accumulates gradients into every tensor that participated.

Precision is dual: float32 is the training default, float64 is used by the
tests so finite-difference checks are meaningful. Tape construction and
backward are single-threaded; with a fixed seed an op sequence is
bit-reproducible run to run.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ShapeError

DEFAULT_DTYPE = np.float32

_FLOAT_DTYPES = (np.float32, np.float64)


class Tensor:
    """N-dimensional float array with an optional gradient buffer."""

    __slots__ = ("data", "grad")

    def __init__(self, data, dtype=None):
        if dtype is None:
            arr = np.asarray(data)
            if arr.dtype not in _FLOAT_DTYPES:
                arr = arr.astype(DEFAULT_DTYPE)
        else:
            arr = np.asarray(data, dtype=dtype)
        self.data: np.ndarray = arr
        self.grad: Optional[np.ndarray] = None

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ValueError(f"item() requires a scalar tensor, got shape {self.shape}")
        return float(self.data.reshape(())[()])

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype.name})"


# Backward callback: takes the output gradient, returns one gradient array
# (or None) per node input, in input order.
BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class TapeNode:
    __slots__ = ("op", "inputs", "output", "backward_fn")

    def __init__(self, op: str, inputs: tuple, output: Tensor, backward_fn: BackwardFn):
        self.op = op
        self.inputs = inputs
        self.output = output
        self.backward_fn = backward_fn


class Tape:
    """Append-only record of primitive applications, in execution order.

    Used as a context manager: ops executed inside `with Tape() as t:` are
    recorded on `t`. Nodes are appended as they run, so every node's inputs
    precede it and a single reverse sweep implements the chain rule.
    """

    def __init__(self, check_finite: bool = False):
        self.nodes: list[TapeNode] = []
        self.check_finite = check_finite
        self._tensors: dict[int, Tensor] = {}

    def __enter__(self) -> "Tape":
        _ACTIVE.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        popped = _ACTIVE.pop()
        assert popped is self

    def add(self, node: TapeNode):
        if self.check_finite and not np.all(np.isfinite(node.output.data)):
            raise FloatingPointError(f"non-finite values produced by op '{node.op}'")
        self.nodes.append(node)
        for t in node.inputs:
            self._tensors[id(t)] = t
        self._tensors[id(node.output)] = node.output

    def tensors(self) -> list[Tensor]:
        return list(self._tensors.values())

    def zero_grads(self):
        """Drop all gradient buffers so a fresh backward can run."""
        for t in self._tensors.values():
            t.grad = None

    def count_ops(self, op: str) -> int:
        return sum(1 for n in self.nodes if n.op == op)


_ACTIVE: list[Tape] = []


def active_tape() -> Optional[Tape]:
    return _ACTIVE[-1] if _ACTIVE else None


def record(op: str, inputs: tuple, output: Tensor, backward_fn: BackwardFn):
    """Record one primitive application onto the active tape, if any."""
    tape = active_tape()
    if tape is not None:
        tape.add(TapeNode(op, inputs, output, backward_fn))


def backward(tape: Tape, loss: Tensor):
    """Accumulate d(loss)/d(tensor) into `.grad` of every tensor on the tape.

    The loss gradient is seeded to 1; nodes are visited exactly once in
    reverse recording order. Tensors not on any path to the loss end up
    with an all-zero gradient buffer.
    """
    if loss.data.size != 1:
        raise ValueError(f"backward requires a scalar loss, got shape {loss.shape}")
    loss.grad = np.ones_like(loss.data)
    for node in reversed(tape.nodes):
        out_grad = node.output.grad
        if out_grad is None:
            continue
        grads = node.backward_fn(out_grad)
        for tensor, g in zip(node.inputs, grads):
            if g is None:
                continue
            if tensor.grad is None:
                tensor.grad = np.zeros_like(tensor.data)
            tensor.grad += g
    for t in tape.tensors():
        if t.grad is None:
            t.grad = np.zeros_like(t.data)


def require_same_shape(a: Tensor, b: Tensor, op: str):
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} differ")
