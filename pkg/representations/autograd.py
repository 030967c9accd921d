"""Reverse-mode automatic differentiation over float64 numpy buffers.

Every operation returns a new :class:`Tensor`. When gradient recording is
enabled and at least one operand requires a gradient, the result keeps a
reference to its parents together with a closure computing the
vector-Jacobian product for each of them. :func:`backward` walks that graph
in reverse topological order and accumulates into the ``grad`` buffer of the
leaf tensors only.
"""

import contextlib
import contextvars
import math

import numpy as np
from scipy.special import erf, expit

from representations.exceptions import ContractError, DimensionError, NumericError

_grad_enabled = contextvars.ContextVar("grad_enabled", default=True)

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@contextlib.contextmanager
def no_grad():
    token = _grad_enabled.set(False)
    try:
        yield
    finally:
        _grad_enabled.reset(token)


def is_grad_enabled():
    return _grad_enabled.get()


class Tensor:
    # ndarray <op> Tensor must dispatch to the Tensor reflected operators
    __array_priority__ = 100

    def __init__(self, data, requires_grad=False, parents=(), grad_fn=None, op=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = None
        self.op = op
        self._parents = parents
        self._grad_fn = grad_fn

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def is_leaf(self):
        return self._grad_fn is None

    def item(self):
        return float(self.data.reshape(-1)[0])

    def numpy(self):
        return self.data

    def detach(self):
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def backward(self):
        backward(self)

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)


def as_tensor(value):
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def _result(data, parents, grad_fn, op):
    if _grad_enabled.get() and any(p.requires_grad for p in parents):
        return Tensor(data, requires_grad=True, parents=tuple(parents), grad_fn=grad_fn, op=op)
    return Tensor(data, op=op)


def _unbroadcast(grad, shape):
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _check_broadcast(op, a, b):
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError as exc:
        raise DimensionError(f"{op}: operand shapes {a.shape} and {b.shape} are incompatible") from exc


def _first_bad(mask):
    return tuple(int(i) for i in np.argwhere(mask)[0])


# elementwise


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("add", a, b)
    return _result(
        a.data + b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
        "add",
    )


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("sub", a, b)
    return _result(
        a.data - b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
        "sub",
    )


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("mul", a, b)
    return _result(
        a.data * b.data,
        (a, b),
        lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
        "mul",
    )


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("div", a, b)
    if np.any(b.data == 0):
        raise NumericError(f"div: zero divisor at index {_first_bad(b.data == 0)}")
    return _result(
        a.data / b.data,
        (a, b),
        lambda g: (
            _unbroadcast(g / b.data, a.shape),
            _unbroadcast(-g * a.data / (b.data * b.data), b.shape),
        ),
        "div",
    )


def scalar_mul(a, c):
    a = as_tensor(a)
    c = float(c)
    return _result(a.data * c, (a,), lambda g: (g * c,), "scalar_mul")


def neg(a):
    return scalar_mul(a, -1.0)


def square(a):
    a = as_tensor(a)
    return _result(a.data * a.data, (a,), lambda g: (2.0 * a.data * g,), "square")


def exp(a):
    a = as_tensor(a)
    with np.errstate(over="ignore"):
        out = np.exp(a.data)
    overflow = np.isposinf(out) & np.isfinite(a.data)
    if np.any(overflow):
        idx = _first_bad(overflow)
        raise NumericError(f"exp: overflow at index {idx} (input {a.data[idx]!r})")
    return _result(out, (a,), lambda g: (g * out,), "exp")


def log(a):
    a = as_tensor(a)
    bad = ~(a.data > 0)
    if np.any(bad):
        idx = _first_bad(bad)
        raise NumericError(f"log: domain violation at index {idx} (input {a.data[idx]!r})")
    return _result(np.log(a.data), (a,), lambda g: (g / a.data,), "log")


def sin(a):
    a = as_tensor(a)
    return _result(np.sin(a.data), (a,), lambda g: (g * np.cos(a.data),), "sin")


def gelu(a):
    """Exact GeLU, x * Phi(x) with the Gaussian CDF written through erf."""
    a = as_tensor(a)
    cdf = 0.5 * (1.0 + erf(a.data / _SQRT2))
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * a.data * a.data)
    return _result(a.data * cdf, (a,), lambda g: (g * (cdf + a.data * pdf),), "gelu")


def relu(a):
    a = as_tensor(a)
    return _result(np.maximum(a.data, 0.0), (a,), lambda g: (g * (a.data > 0),), "relu")


def sigmoid(a):
    a = as_tensor(a)
    s = expit(a.data)
    return _result(s, (a,), lambda g: (g * s * (1.0 - s),), "sigmoid")


def clip_min(a, low):
    a = as_tensor(a)
    return _result(np.maximum(a.data, low), (a,), lambda g: (g * (a.data > low),), "clip_min")


ELEMENTWISE = {
    "gelu": gelu,
    "relu": relu,
    "sigmoid": sigmoid,
    "exp": exp,
    "log": log,
    "add": add,
    "sub": sub,
    "mul": mul,
    "scalar_mul": scalar_mul,
}


def elementwise(op_kind, *args):
    try:
        fn = ELEMENTWISE[op_kind]
    except KeyError:
        raise ContractError(f"unknown elementwise op {op_kind!r}") from None
    return fn(*args)


# reductions and shape plumbing


def _expand(g, shape, axis, keepdims):
    if axis is not None and not keepdims:
        g = np.expand_dims(g, axis)
    return np.broadcast_to(g, shape)


def sum(a, axis=None, keepdims=False):
    a = as_tensor(a)
    return _result(
        a.data.sum(axis=axis, keepdims=keepdims),
        (a,),
        lambda g: (_expand(g, a.shape, axis, keepdims),),
        "sum",
    )


def mean(a, axis=None, keepdims=False):
    a = as_tensor(a)
    count = a.size if axis is None else np.prod([a.shape[i] for i in np.atleast_1d(axis)])
    if count == 0:
        raise ContractError("mean over an empty axis")
    return scalar_mul(sum(a, axis=axis, keepdims=keepdims), 1.0 / count)


def reshape(a, shape):
    a = as_tensor(a)
    return _result(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),), "reshape")


def transpose(a, axes):
    a = as_tensor(a)
    inverse = np.argsort(axes)
    return _result(a.data.transpose(axes), (a,), lambda g: (g.transpose(inverse),), "transpose")


def concat(tensors, axis=-1):
    tensors = [as_tensor(t) for t in tensors]
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        raise DimensionError(f"concat: {exc}") from exc
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]
    return _result(out, tensors, lambda g: tuple(np.split(g, bounds, axis=axis)), "concat")


def _is_basic_index(index):
    parts = index if isinstance(index, tuple) else (index,)
    return all(p is None or p is Ellipsis or isinstance(p, (int, slice)) for p in parts)


def getitem(a, index):
    a = as_tensor(a)
    basic = _is_basic_index(index)

    def grad_fn(g):
        out = np.zeros(a.shape)
        if basic:
            out[index] = g
        else:
            np.add.at(out, index, g)
        return (out,)

    return _result(a.data[index], (a,), grad_fn, "getitem")


def logsumexp(a, axis=-1, keepdims=False):
    """log(sum(exp(a))) with the row maximum subtracted inside the exponent."""
    a = as_tensor(a)
    m = np.max(a.data, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    shifted = np.exp(a.data - m)
    total = shifted.sum(axis=axis, keepdims=True)
    out = m + np.log(total)
    softmax = shifted / total
    if not keepdims:
        out = np.squeeze(out, axis=axis)

    def grad_fn(g):
        if not keepdims:
            g = np.expand_dims(g, axis)
        return (g * softmax,)

    return _result(out, (a,), grad_fn, "logsumexp")


# linear algebra


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul: cannot multiply {a.shape} by {b.shape}")

    def grad_fn(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return _result(np.matmul(a.data, b.data), (a, b), grad_fn, "matmul")


def linear(x, weight, bias=None):
    """``x @ weight + bias`` over the last axis of ``x``."""
    x, weight = as_tensor(x), as_tensor(weight)
    if weight.ndim != 2 or x.shape[-1] != weight.shape[0]:
        raise DimensionError(f"linear: input width {x.shape[-1]} does not match weight {weight.shape}")
    out = x.data @ weight.data
    parents = [x, weight]
    if bias is not None:
        bias = as_tensor(bias)
        out = out + bias.data
        parents.append(bias)

    def grad_fn(g):
        g2 = g.reshape(-1, weight.shape[1])
        x2 = x.data.reshape(-1, weight.shape[0])
        grads = [g @ weight.data.T, x2.T @ g2]
        if bias is not None:
            grads.append(g2.sum(axis=0))
        return tuple(grads)

    return _result(out, parents, grad_fn, "linear")


def conv1d(x, weight, bias=None, dilation=1, padding=0):
    """Dilated cross-correlation of ``x[B, Cin, L]`` with ``weight[Cout, Cin, k]``."""
    x, weight = as_tensor(x), as_tensor(weight)
    if x.ndim != 3 or weight.ndim != 3:
        raise DimensionError(f"conv1d: expected 3-d input and weight, got {x.shape} and {weight.shape}")
    batch, c_in, length = x.shape
    c_out, w_in, k = weight.shape
    if c_in != w_in:
        raise DimensionError(f"conv1d: input has {c_in} channels, weight expects {w_in}")
    if k < 1 or dilation < 1 or padding < 0:
        raise ContractError(f"conv1d: invalid kernel={k} dilation={dilation} padding={padding}")
    l_out = length + 2 * padding - dilation * (k - 1)
    if l_out < 1:
        raise DimensionError(f"conv1d: input length {length} too short for receptive field")

    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding))) if padding else x.data
    cols = np.stack([xp[:, :, j * dilation : j * dilation + l_out] for j in range(k)], axis=2)
    cols = cols.reshape(batch, c_in * k, l_out)
    w2 = weight.data.reshape(c_out, c_in * k)
    out = np.matmul(w2, cols)
    parents = [x, weight]
    if bias is not None:
        bias = as_tensor(bias)
        out = out + bias.data[None, :, None]
        parents.append(bias)

    def grad_fn(g):
        gw = np.matmul(g, cols.transpose(0, 2, 1)).sum(axis=0).reshape(weight.shape)
        gcols = np.matmul(w2.T, g).reshape(batch, c_in, k, l_out)
        gxp = np.zeros(xp.shape)
        for j in range(k):
            gxp[:, :, j * dilation : j * dilation + l_out] += gcols[:, :, j]
        gx = gxp[:, :, padding : padding + length]
        grads = [gx, gw]
        if bias is not None:
            grads.append(g.sum(axis=(0, 2)))
        return tuple(grads)

    return _result(out, parents, grad_fn, "conv1d")


# pooling over the last axis, kernel == stride, final partial window kept


def _pool_geometry(x, k):
    if k < 1:
        raise ContractError(f"pooling kernel must be >= 1, got {k}")
    length = x.shape[-1]
    n_out = -(-length // k)
    return length, n_out, n_out * k - length


def maxpool1d(x, k):
    x = as_tensor(x)
    length, n_out, pad = _pool_geometry(x, k)
    padded = np.pad(x.data, [(0, 0)] * (x.ndim - 1) + [(0, pad)], constant_values=-np.inf)
    windows = padded.reshape(x.shape[:-1] + (n_out, k))
    # np.argmax returns the first index on ties
    arg = np.argmax(windows, axis=-1)[..., None]
    out = np.take_along_axis(windows, arg, axis=-1)[..., 0]

    def grad_fn(g):
        routed = np.zeros(windows.shape)
        np.put_along_axis(routed, arg, g[..., None], axis=-1)
        return (routed.reshape(x.shape[:-1] + (n_out * k,))[..., :length],)

    return _result(out, (x,), grad_fn, "maxpool1d")


def avgpool1d(x, k):
    x = as_tensor(x)
    length, n_out, pad = _pool_geometry(x, k)
    padded = np.pad(x.data, [(0, 0)] * (x.ndim - 1) + [(0, pad)])
    counts = np.full(n_out, float(k))
    counts[-1] = length - (n_out - 1) * k
    out = padded.reshape(x.shape[:-1] + (n_out, k)).sum(axis=-1) / counts

    def grad_fn(g):
        return (np.repeat(g / counts, k, axis=-1)[..., :length],)

    return _result(out, (x,), grad_fn, "avgpool1d")


# reverse pass


def _topological_order(root):
    order = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(loss):
    """Accumulate d(loss)/d(leaf) into every reachable leaf with requires_grad."""
    if loss.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        return
    grads = {id(loss): np.ones_like(loss.data)}
    for node in reversed(_topological_order(loss)):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.is_leaf:
            node.grad = np.array(g) if node.grad is None else node.grad + g
            continue
        for parent, pg in zip(node._parents, node._grad_fn(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            grads[key] = pg if key not in grads else grads[key] + pg
