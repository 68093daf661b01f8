"""
ops.py

Differentiable primitives used by the representation, affordance, policy and
critic networks. Each public function validates shapes, then dispatches to a
``Function`` subclass.

Broadcasting is limited to what the networks need: numpy broadcasting for the
elementwise arithmetic ops, with gradients summed back to the operand shape.
"""

from __future__ import annotations

from typing import Any, Sequence

import numpy as np

from autodiff.errors import ConvConfigError, ShapeError, TargetIndexError
from autodiff.tensor import Function, Tensor, as_array


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _check_broadcast(op: str, a: np.ndarray, b: np.ndarray) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError as exc:
        raise ShapeError(op, a.shape, b.shape) from exc


# --------------------------------------------------------------------------- arithmetic
class _Add(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        _check_broadcast("add", a, b)
        return a + b

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        a, b = self.inputs
        return _unbroadcast(grad, a.shape), _unbroadcast(grad, b.shape)


class _Sub(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        _check_broadcast("sub", a, b)
        return a - b

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        a, b = self.inputs
        return _unbroadcast(grad, a.shape), _unbroadcast(-grad, b.shape)


class _Mul(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        _check_broadcast("mul", a, b)
        return a * b

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        a, b = self.inputs
        return _unbroadcast(grad * b.data, a.shape), _unbroadcast(grad * a.data, b.shape)


class _Div(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        _check_broadcast("div", a, b)
        return a / b

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        a, b = self.inputs
        grad_a = grad / b.data
        grad_b = -grad * a.data / (b.data * b.data)
        return _unbroadcast(grad_a, a.shape), _unbroadcast(grad_b, b.shape)


class _Neg(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        return -a

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return (-grad,)


def add(a: Any, b: Any) -> Tensor:
    return _Add.apply(a, b)


def sub(a: Any, b: Any) -> Tensor:
    return _Sub.apply(a, b)


def mul(a: Any, b: Any) -> Tensor:
    return _Mul.apply(a, b)


def div(a: Any, b: Any) -> Tensor:
    return _Div.apply(a, b)


def neg(a: Any) -> Tensor:
    return _Neg.apply(a)


# --------------------------------------------------------------------------- matmul
class _MatMul(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return a @ b

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        a, b = self.inputs
        return grad @ b.data.T, a.data.T @ grad


def matmul(a: Any, b: Any) -> Tensor:
    """
    Matrix product of ``a`` (m×k) and ``b`` (k×n).

    Raises:
        ShapeError: If either operand is not 2-D or the inner dimensions differ
    """
    a_shape = as_array(a).shape
    b_shape = as_array(b).shape
    if len(a_shape) != 2 or len(b_shape) != 2 or a_shape[1] != b_shape[0]:
        raise ShapeError("matmul", a_shape, b_shape)
    return _MatMul.apply(a, b)


# --------------------------------------------------------------------------- reductions and layout
class _Sum(Function):
    def forward(self, a: np.ndarray, axis: Any = None, keepdims: bool = False) -> np.ndarray:
        self.saved["axis"] = axis
        self.saved["keepdims"] = keepdims
        return np.asarray(a.sum(axis=axis, keepdims=keepdims))

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        (a,) = self.inputs
        axis = self.saved["axis"]
        if axis is not None and not self.saved["keepdims"]:
            axes = (axis,) if isinstance(axis, int) else tuple(axis)
            axes = tuple(ax % a.ndim for ax in axes)
            grad = np.expand_dims(grad, axes)
        return (np.broadcast_to(grad, a.shape).copy(),)


def sum(a: Any, axis: int | Sequence[int] | None = None, keepdims: bool = False) -> Tensor:  # pylint: disable=redefined-builtin
    if isinstance(axis, list):
        axis = tuple(axis)
    return _Sum.apply(a, axis=axis, keepdims=keepdims)


def mean(a: Any, axis: int | Sequence[int] | None = None, keepdims: bool = False) -> Tensor:
    data = as_array(a)
    if axis is None:
        count = data.size
    else:
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        count = int(np.prod([data.shape[ax] for ax in axes]))
    total = sum(a, axis=axis, keepdims=keepdims)
    return mul(total, np.asarray(1.0 / count, dtype=total.dtype))


class _Reshape(Function):
    def forward(self, a: np.ndarray, shape: tuple[int, ...] = ()) -> np.ndarray:
        return a.reshape(shape)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return (grad.reshape(self.inputs[0].shape),)


def reshape(a: Any, shape: Sequence[int]) -> Tensor:
    data = as_array(a)
    try:
        target = np.empty(data.shape, dtype=np.bool_).reshape(tuple(shape)).shape
    except ValueError as exc:
        raise ShapeError("reshape", data.shape, tuple(shape)) from exc
    return _Reshape.apply(a, shape=target)


class _Permute(Function):
    def forward(self, a: np.ndarray, axes: tuple[int, ...] = ()) -> np.ndarray:
        self.saved["axes"] = axes
        return np.ascontiguousarray(a.transpose(axes))

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        inverse = np.argsort(self.saved["axes"])
        return (np.ascontiguousarray(grad.transpose(inverse)),)


def permute(a: Any, axes: Sequence[int]) -> Tensor:
    data = as_array(a)
    if sorted(axes) != list(range(data.ndim)):
        raise ShapeError("permute", data.shape, tuple(axes))
    return _Permute.apply(a, axes=tuple(axes))


def transpose(a: Any) -> Tensor:
    return permute(a, (1, 0))


class _Concat(Function):
    def forward(self, *arrays: np.ndarray, axis: int = 0) -> np.ndarray:
        self.saved["axis"] = axis
        self.saved["sizes"] = [arr.shape[axis] for arr in arrays]
        return np.concatenate(arrays, axis=axis)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        splits = np.cumsum(self.saved["sizes"])[:-1]
        return tuple(np.split(grad, splits, axis=self.saved["axis"]))


def concat(tensors: Sequence[Any], axis: int = 0) -> Tensor:
    arrays = [as_array(t) for t in tensors]
    reference = arrays[0].shape
    for arr in arrays[1:]:
        if arr.ndim != len(reference) or any(
            arr.shape[dim] != reference[dim] for dim in range(arr.ndim) if dim != axis % arr.ndim
        ):
            raise ShapeError("concat", reference, arr.shape)
    return _Concat.apply(*tensors, axis=axis)


class _GetItem(Function):
    def forward(self, a: np.ndarray, index: Any = None) -> np.ndarray:
        self.saved["index"] = index
        return np.array(a[index])

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        out = np.zeros_like(self.inputs[0].data)
        np.add.at(out, self.saved["index"], grad)
        return (out,)


def getitem(a: Any, index: Any) -> Tensor:
    return _GetItem.apply(a, index=index)


# --------------------------------------------------------------------------- elementwise
class _Exp(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        out = np.exp(a)
        self.saved["out"] = out
        return out

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return (grad * self.saved["out"],)


class _Log(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        return np.log(a)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return (grad / self.inputs[0].data,)


class _Tanh(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        out = np.tanh(a)
        self.saved["out"] = out
        return out

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        out = self.saved["out"]
        return (grad * (1.0 - out * out),)


class _Sigmoid(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        # tanh form never overflows
        out = 0.5 * (1.0 + np.tanh(0.5 * a))
        self.saved["out"] = out
        return out

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        out = self.saved["out"]
        return (grad * out * (1.0 - out),)


class _Relu(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        return np.maximum(a, 0)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return (grad * (self.inputs[0].data > 0),)


class _Square(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        return a * a

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return (2.0 * grad * self.inputs[0].data,)


class _Clip(Function):
    def forward(self, a: np.ndarray, low: float = -np.inf, high: float = np.inf) -> np.ndarray:
        self.saved["inside"] = (a >= low) & (a <= high)
        return np.clip(a, low, high)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return (grad * self.saved["inside"],)


def exp(a: Any) -> Tensor:
    return _Exp.apply(a)


def log(a: Any) -> Tensor:
    return _Log.apply(a)


def tanh(a: Any) -> Tensor:
    return _Tanh.apply(a)


def sigmoid(a: Any) -> Tensor:
    return _Sigmoid.apply(a)


def relu(a: Any) -> Tensor:
    return _Relu.apply(a)


def square(a: Any) -> Tensor:
    return _Square.apply(a)


def clip(a: Any, low: float, high: float) -> Tensor:
    return _Clip.apply(a, low=low, high=high)


# --------------------------------------------------------------------------- softmax family
def _log_softmax_array(a: np.ndarray) -> np.ndarray:
    shifted = a - a.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


class _Softmax(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        out = np.exp(_log_softmax_array(a))
        self.saved["out"] = out
        return out

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        out = self.saved["out"]
        return (out * (grad - (grad * out).sum(axis=-1, keepdims=True)),)


class _LogSoftmax(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        out = _log_softmax_array(a)
        self.saved["probs"] = np.exp(out)
        return out

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        probs = self.saved["probs"]
        return (grad - probs * grad.sum(axis=-1, keepdims=True),)


def softmax(a: Any) -> Tensor:
    """Softmax over the last axis."""
    data = as_array(a)
    if data.ndim == 0 or data.shape[-1] < 1:
        raise ShapeError("softmax", data.shape)
    return _Softmax.apply(a)


def log_softmax(a: Any) -> Tensor:
    data = as_array(a)
    if data.ndim == 0 or data.shape[-1] < 1:
        raise ShapeError("log_softmax", data.shape)
    return _LogSoftmax.apply(a)


_ACTIVATIONS = {
    "relu": relu,
    "tanh": tanh,
    "softmax": softmax,
    "sigmoid": sigmoid,
}


def activation(x: Any, kind: str) -> Tensor:
    """Apply a named activation (``relu``, ``tanh``, ``softmax`` over the last axis, ``sigmoid``)."""
    try:
        fn = _ACTIVATIONS[kind]
    except KeyError as exc:
        raise ValueError(f"Unsupported activation: {kind!r}") from exc
    return fn(x)


class _CrossEntropy(Function):
    def forward(self, logits: np.ndarray, targets: np.ndarray | None = None) -> np.ndarray:
        log_probs = _log_softmax_array(logits)
        rows = np.arange(logits.shape[0])
        self.saved["probs"] = np.exp(log_probs)
        self.saved["rows"] = rows
        self.saved["targets"] = targets
        return np.asarray(-log_probs[rows, targets].mean(), dtype=logits.dtype)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        probs = self.saved["probs"].copy()
        probs[self.saved["rows"], self.saved["targets"]] -= 1.0
        return (probs * (grad / probs.shape[0]),)


def cross_entropy_logits(logits: Any, targets: Any) -> Tensor:
    """
    Mean negative log-likelihood of integer ``targets`` under ``softmax(logits)``.

    Args:
        logits: N×K scores
        targets: N class indices

    Raises:
        ShapeError: If logits are not 2-D or the target count differs from N
        TargetIndexError: If a target lies outside ``[0, K)``
    """
    data = as_array(logits)
    target_arr = np.asarray(targets, dtype=np.int64).reshape(-1)
    if data.ndim != 2 or target_arr.shape[0] != data.shape[0]:
        raise ShapeError("cross_entropy_logits", data.shape, target_arr.shape)
    if target_arr.size and (target_arr.min() < 0 or target_arr.max() >= data.shape[1]):
        raise TargetIndexError(
            f"cross_entropy_logits: target index out of range [0, {data.shape[1]}): "
            f"min={int(target_arr.min())}, max={int(target_arr.max())}"
        )
    return _CrossEntropy.apply(logits, targets=target_arr)


def mse_loss(prediction: Any, target: Any) -> Tensor:
    return mean(square(sub(prediction, target)))


# --------------------------------------------------------------------------- gradient routing
class _StopGradient(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        return a

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return (None,)


class _StraightThrough(Function):
    def forward(self, continuous: np.ndarray, quantized: np.ndarray) -> np.ndarray:
        return quantized.copy()

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return grad, None


def stop_gradient(a: Any) -> Tensor:
    return _StopGradient.apply(a)


def straight_through(continuous: Any, quantized: Any) -> Tensor:
    """
    Forward the values of ``quantized`` and route the whole gradient to ``continuous``.

    The output is bitwise equal to ``quantized``; ``quantized`` receives no gradient.
    """
    c_shape = as_array(continuous).shape
    q_shape = as_array(quantized).shape
    if c_shape != q_shape:
        raise ShapeError("straight_through", c_shape, q_shape)
    return _StraightThrough.apply(continuous, quantized)


class _Embedding(Function):
    def forward(self, weight: np.ndarray, indices: np.ndarray | None = None) -> np.ndarray:
        self.saved["indices"] = indices
        return weight[indices]

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        weight = self.inputs[0].data
        out = np.zeros_like(weight)
        np.add.at(out, self.saved["indices"].reshape(-1), grad.reshape(-1, weight.shape[1]))
        return (out,)


def embedding(weight: Any, indices: Any) -> Tensor:
    """Look up rows of a K×D ``weight`` table; gradients are scattered back to the rows."""
    table = as_array(weight)
    idx = np.asarray(indices, dtype=np.int64)
    if table.ndim != 2:
        raise ShapeError("embedding", table.shape, idx.shape)
    if idx.size and (idx.min() < 0 or idx.max() >= table.shape[0]):
        raise TargetIndexError(f"embedding: index out of range [0, {table.shape[0]})")
    return _Embedding.apply(weight, indices=idx)


# --------------------------------------------------------------------------- convolution
def conv_output_size(size: int, kernel: int, stride: int, padding: int) -> int:
    return (size + 2 * padding - kernel) // stride + 1


def _windows(padded: np.ndarray, kernel: int, stride: int, out_h: int, out_w: int) -> np.ndarray:
    view = np.lib.stride_tricks.sliding_window_view(padded, (kernel, kernel), axis=(2, 3))
    return view[:, :, : (out_h - 1) * stride + 1 : stride, : (out_w - 1) * stride + 1 : stride]


def _pad(x: np.ndarray, padding: int) -> np.ndarray:
    if padding == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))


def _conv_forward(x: np.ndarray, w: np.ndarray, stride: int, padding: int) -> tuple[np.ndarray, np.ndarray]:
    k = w.shape[2]
    out_h = conv_output_size(x.shape[2], k, stride, padding)
    out_w = conv_output_size(x.shape[3], k, stride, padding)
    windows = _windows(_pad(x, padding), k, stride, out_h, out_w)
    out = np.tensordot(windows, w, axes=([1, 4, 5], [1, 2, 3]))
    return np.ascontiguousarray(out.transpose(0, 3, 1, 2)), windows


def _col2im(
    cols: np.ndarray, padded_shape: tuple[int, ...], kernel: int, stride: int, padding: int
) -> np.ndarray:
    """Scatter-add N×h×w×C×k×k window values back onto a padded N×C×H×W grid, then crop."""
    out_h, out_w = cols.shape[1:3]
    padded = np.zeros(padded_shape, dtype=cols.dtype)
    for i in range(kernel):
        for j in range(kernel):
            padded[
                :, :, i : i + stride * (out_h - 1) + 1 : stride, j : j + stride * (out_w - 1) + 1 : stride
            ] += cols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
    if padding:
        padded = padded[:, :, padding:-padding, padding:-padding]
    return np.ascontiguousarray(padded)


class _Conv2d(Function):
    def forward(self, x: np.ndarray, w: np.ndarray, stride: int = 1, padding: int = 0) -> np.ndarray:
        out, windows = _conv_forward(x, w, stride, padding)
        self.saved.update(stride=stride, padding=padding, windows=windows)
        return out

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        x, w = self.inputs
        stride, padding = self.saved["stride"], self.saved["padding"]
        k = w.shape[2]
        grad_w = np.tensordot(grad, self.saved["windows"], axes=([0, 2, 3], [0, 2, 3]))
        grad_x = None
        if x.requires_grad:
            cols = np.tensordot(grad, w.data, axes=([1], [0]))
            padded_shape = (x.shape[0], x.shape[1], x.shape[2] + 2 * padding, x.shape[3] + 2 * padding)
            grad_x = _col2im(cols, padded_shape, k, stride, padding)
        return grad_x, grad_w


class _ConvTranspose2d(Function):
    def forward(
        self, y: np.ndarray, w: np.ndarray, stride: int = 1, padding: int = 0, output_padding: int = 0
    ) -> np.ndarray:
        k = w.shape[2]
        out_h = (y.shape[2] - 1) * stride - 2 * padding + k + output_padding
        out_w = (y.shape[3] - 1) * stride - 2 * padding + k + output_padding
        cols = np.tensordot(y, w, axes=([1], [0]))
        padded_shape = (y.shape[0], w.shape[1], out_h + 2 * padding, out_w + 2 * padding)
        self.saved.update(stride=stride, padding=padding)
        return _col2im(cols, padded_shape, k, stride, padding)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        y, w = self.inputs
        stride, padding = self.saved["stride"], self.saved["padding"]
        k = w.shape[2]
        windows = _windows(_pad(grad, padding), k, stride, y.shape[2], y.shape[3])
        grad_w = np.tensordot(y.data, windows, axes=([0, 2, 3], [0, 2, 3]))
        grad_y = None
        if y.requires_grad:
            grad_y = np.tensordot(windows, w.data, axes=([1, 4, 5], [1, 2, 3]))
            grad_y = np.ascontiguousarray(grad_y.transpose(0, 3, 1, 2))
        return grad_y, grad_w


def _batched(x: Any) -> tuple[Tensor, bool]:
    tensor_x = x if isinstance(x, Tensor) else Tensor(x)
    if tensor_x.ndim == 3:
        return reshape(tensor_x, (1, *tensor_x.shape)), True
    if tensor_x.ndim != 4:
        raise ShapeError("conv", tensor_x.shape)
    return tensor_x, False


def _add_channel_bias(out: Tensor, bias: Any | None) -> Tensor:
    if bias is None:
        return out
    b = bias if isinstance(bias, Tensor) else Tensor(bias)
    return add(out, reshape(b, (1, b.shape[0], 1, 1)))


def conv2d(x: Any, weight: Any, bias: Any | None = None, stride: int = 1, padding: int = 0) -> Tensor:
    """
    Cross-correlation of ``x`` (N×C_in×H×W or C_in×H×W) with ``weight`` (C_out×C_in×k×k).

    Raises:
        ShapeError: If the channel counts differ or the kernel is not square
        ConvConfigError: If stride, padding and kernel leave no output pixels
    """
    batched, squeeze = _batched(x)
    w = as_array(weight)
    if w.ndim != 4 or w.shape[2] != w.shape[3] or w.shape[1] != batched.shape[1]:
        raise ShapeError("conv2d", batched.shape, w.shape)
    if stride < 1 or padding < 0:
        raise ConvConfigError(f"conv2d: stride must be >= 1 and padding >= 0, got {stride}, {padding}")
    out_h = conv_output_size(batched.shape[2], w.shape[2], stride, padding)
    out_w = conv_output_size(batched.shape[3], w.shape[2], stride, padding)
    if out_h < 1 or out_w < 1:
        raise ConvConfigError(
            f"conv2d: non-positive output size {out_h}x{out_w} for input {batched.shape[2:]}, "
            f"kernel {w.shape[2]}, stride {stride}, padding {padding}"
        )
    out = _add_channel_bias(_Conv2d.apply(batched, weight, stride=stride, padding=padding), bias)
    return reshape(out, out.shape[1:]) if squeeze else out


def conv_transpose2d(
    x: Any,
    weight: Any,
    bias: Any | None = None,
    stride: int = 1,
    padding: int = 0,
    output_padding: int = 0,
) -> Tensor:
    """
    Adjoint of ``conv2d``: maps N×C_out×h×w back to N×C_in×H×W with ``weight`` C_out×C_in×k×k.

    ``<conv2d(x, w), y> == <x, conv_transpose2d(y, w)>`` for matching stride/padding.
    """
    batched, squeeze = _batched(x)
    w = as_array(weight)
    if w.ndim != 4 or w.shape[2] != w.shape[3] or w.shape[0] != batched.shape[1]:
        raise ShapeError("conv_transpose2d", batched.shape, w.shape)
    if stride < 1 or padding < 0 or not 0 <= output_padding < max(stride, 1):
        raise ConvConfigError(
            f"conv_transpose2d: invalid stride/padding/output_padding {stride}/{padding}/{output_padding}"
        )
    out_h = (batched.shape[2] - 1) * stride - 2 * padding + w.shape[2] + output_padding
    if out_h < 1:
        raise ConvConfigError(f"conv_transpose2d: non-positive output size {out_h}")
    out = _ConvTranspose2d.apply(
        batched, weight, stride=stride, padding=padding, output_padding=output_padding
    )
    out = _add_channel_bias(out, bias)
    return reshape(out, out.shape[1:]) if squeeze else out


def gated_activation(x: Any) -> Tensor:
    """Split channels in half and return ``tanh(a) * sigmoid(b)``."""
    tensor_x = x if isinstance(x, Tensor) else Tensor(x)
    channels = tensor_x.shape[1]
    if channels % 2:
        raise ShapeError("gated_activation", tensor_x.shape)
    half = channels // 2
    return mul(tanh(tensor_x[:, :half]), sigmoid(tensor_x[:, half:]))
