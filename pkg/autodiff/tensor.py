"""
tensor.py

Reverse-mode automatic differentiation over numpy arrays.

A ``Tensor`` wraps a row-major ``np.ndarray``. Every differentiable primitive is a
``Function`` subclass with a ``forward`` over raw arrays and a ``backward`` that
maps the output gradient to one gradient per input. ``Function.apply`` records
the call on the output tensor so ``Tensor.backward`` can walk the graph in
reverse topological order.

Key Features:
    - Deterministic traversal order (inputs are visited in call order)
    - Gradient accumulation across repeated backward calls
    - ``no_grad()`` for inference and target computations
    - ``default_dtype()`` to run gradient checks in float64

Note:
    - Graphs are kept after backward so a loss may be differentiated again.
    - Grad mode and default dtype are thread-local.
"""

from __future__ import annotations

import contextlib
import threading
from typing import Any, Iterator, Sequence

import numpy as np

from autodiff.errors import AutodiffContractError

_LOCAL = threading.local()


def _grad_enabled() -> bool:
    return getattr(_LOCAL, "grad_enabled", True)


def get_default_dtype() -> np.dtype:
    """Return the dtype used for tensors built from python scalars or lists."""
    return getattr(_LOCAL, "dtype", np.dtype(np.float32))


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording inside the block."""
    previous = _grad_enabled()
    _LOCAL.grad_enabled = False
    try:
        yield
    finally:
        _LOCAL.grad_enabled = previous


@contextlib.contextmanager
def default_dtype(dtype: Any) -> Iterator[None]:
    """Temporarily change the default floating dtype (float64 for gradient checks)."""
    previous = get_default_dtype()
    _LOCAL.dtype = np.dtype(dtype)
    try:
        yield
    finally:
        _LOCAL.dtype = previous


def as_array(value: Any, dtype: Any | None = None) -> np.ndarray:
    """Convert ``value`` to a floating array, keeping the dtype of float arrays."""
    if isinstance(value, Tensor):
        return value.data
    if dtype is not None:
        return np.asarray(value, dtype=dtype)
    if isinstance(value, np.ndarray) and np.issubdtype(value.dtype, np.floating):
        return value
    return np.asarray(value, dtype=get_default_dtype())


class Function:
    """
    Base class for differentiable primitives.

    Subclasses implement ``forward`` on raw arrays and ``backward`` returning one
    gradient (or ``None``) per tensor input.
    """

    def __init__(self, *inputs: "Tensor"):
        self.inputs = inputs
        self.saved: dict[str, Any] = {}

    def forward(self, *arrays: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__}.forward")

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        raise NotImplementedError(f"{type(self).__name__}.backward")

    @classmethod
    def apply(cls, *inputs: Any, **kwargs: Any) -> "Tensor":
        """Run the primitive and attach it to the output when gradients are needed."""
        tensors = tuple(item if isinstance(item, Tensor) else Tensor(item) for item in inputs)
        func = cls(*tensors)
        out_data = func.forward(*(t.data for t in tensors), **kwargs)
        requires_grad = _grad_enabled() and any(t.requires_grad for t in tensors)
        out = Tensor(out_data, requires_grad=requires_grad)
        if requires_grad:
            out._ctx = func
        return out


class Tensor:
    """
    n-dimensional real array with an optional gradient.

    Attributes:
        data (np.ndarray): Values in row-major order
        grad (np.ndarray | None): Accumulated gradient, same shape as ``data``
        requires_grad (bool): Whether backward should populate ``grad``
    """

    __slots__ = ("data", "grad", "requires_grad", "name", "_ctx")

    __array_priority__ = 100.0

    def __init__(self, data: Any, requires_grad: bool = False, *, name: str | None = None):
        self.data = as_array(data)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name
        self._ctx: Function | None = None

    # ------------------------------------------------------------------ basics
    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"

    def __len__(self) -> int:
        return self.shape[0]

    # --------------------------------------------------------------- operators
    def __add__(self, other: Any) -> "Tensor":
        from autodiff import ops

        return ops.add(self, other)

    def __radd__(self, other: Any) -> "Tensor":
        from autodiff import ops

        return ops.add(other, self)

    def __sub__(self, other: Any) -> "Tensor":
        from autodiff import ops

        return ops.sub(self, other)

    def __rsub__(self, other: Any) -> "Tensor":
        from autodiff import ops

        return ops.sub(other, self)

    def __mul__(self, other: Any) -> "Tensor":
        from autodiff import ops

        return ops.mul(self, other)

    def __rmul__(self, other: Any) -> "Tensor":
        from autodiff import ops

        return ops.mul(other, self)

    def __truediv__(self, other: Any) -> "Tensor":
        from autodiff import ops

        return ops.div(self, other)

    def __neg__(self) -> "Tensor":
        from autodiff import ops

        return ops.neg(self)

    def __matmul__(self, other: Any) -> "Tensor":
        from autodiff import ops

        return ops.matmul(self, other)

    def __getitem__(self, index: Any) -> "Tensor":
        from autodiff import ops

        return ops.getitem(self, index)

    def sum(self, axis: int | Sequence[int] | None = None, keepdims: bool = False) -> "Tensor":
        from autodiff import ops

        return ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: int | Sequence[int] | None = None, keepdims: bool = False) -> "Tensor":
        from autodiff import ops

        return ops.mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape: int) -> "Tensor":
        from autodiff import ops

        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def permute(self, *axes: int) -> "Tensor":
        from autodiff import ops

        return ops.permute(self, axes)

    # ---------------------------------------------------------------- backward
    def _topological_order(self) -> list["Tensor"]:
        order: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if id(node) in visited:
                continue
            if expanded:
                visited.add(id(node))
                order.append(node)
                continue
            stack.append((node, True))
            if node._ctx is not None:
                # reversed so that inputs are finished in call order
                for parent in reversed(node._ctx.inputs):
                    if parent.requires_grad and id(parent) not in visited:
                        stack.append((parent, False))
        return order

    def backward(self) -> None:
        """
        Back-propagate from this scalar into every tensor that requires gradients.

        Gradients are added to any existing ``grad``; call ``zero_grad`` on
        parameters between optimizer steps.

        Raises:
            AutodiffContractError: If this tensor is not a scalar or has no graph
        """
        if self.data.size != 1:
            raise AutodiffContractError(f"backward() needs a scalar loss, got shape {self.shape}")
        if not self.requires_grad:
            raise AutodiffContractError("backward() on a tensor that does not require gradients")

        pending: dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}
        for node in reversed(self._topological_order()):
            grad = pending.pop(id(node), None)
            if grad is None:
                continue
            node.grad = grad.copy() if node.grad is None else node.grad + grad
            if node._ctx is None:
                continue
            input_grads = node._ctx.backward(grad)
            for parent, parent_grad in zip(node._ctx.inputs, input_grads):
                if parent_grad is None or not parent.requires_grad:
                    continue
                if parent_grad.shape != parent.shape:
                    parent_grad = parent_grad.reshape(parent.shape)
                key = id(parent)
                pending[key] = parent_grad if key not in pending else pending[key] + parent_grad


def tensor(data: Any, requires_grad: bool = False, dtype: Any | None = None) -> Tensor:
    """Build a tensor, copying ``data`` into the requested dtype."""
    array = np.array(data, dtype=dtype if dtype is not None else get_default_dtype())
    return Tensor(array, requires_grad=requires_grad)
