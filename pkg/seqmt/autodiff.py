"""Reverse-mode automatic differentiation over float64 numpy arrays.

Every operation builds a graph node holding its forward values and a closure
that pushes the incoming gradient to its parents. ``backward()`` walks the
graph in reverse topological order. Graph nodes are confined to the worker
that built them; nothing in here takes a lock.

Coordinates follow the (x=column, y=row) convention with the origin at the
centre of the top-left pixel.
"""

# Standard Library Imports
from __future__ import annotations

import itertools
import logging
from collections import Counter
from typing import TYPE_CHECKING, Any, Callable, Sequence

# Third-Party Imports
import numpy as np

# Local Imports
from seqmt.config import Padding
from seqmt.errors import ContractError, NumericError

if TYPE_CHECKING:
    import sys
    from types import TracebackType

    if sys.version_info >= (3, 11):
        from typing import Self
    else:
        from typing_extensions import Self

logger = logging.getLogger(__name__)

_NODE_IDS = itertools.count()
_ACTIVE_COUNTERS: list[Counter] = []

GradHook = Callable[[np.ndarray], np.ndarray]


class OpCounter:
    """Context manager counting the graph nodes created inside it, by op name.

    Example::

        with OpCounter() as counter:
            loss = composite(net, batch, weights, sampler)
        assert counter.counts["softmax_cross_entropy"] == 0
    """

    def __init__(self) -> None:
        self.counts: Counter = Counter()

    def __enter__(self) -> Self:
        """Enter the context."""
        _ACTIVE_COUNTERS.append(self.counts)
        return self

    def __exit__(
        self,
        exc_type: None | type[BaseException],
        exc_value: None | BaseException,
        tb: None | TracebackType,
    ) -> None:
        """Exit the context."""
        _ACTIVE_COUNTERS.remove(self.counts)


class Tensor:
    """An n-dimensional value-plus-gradient node of the computation graph.

    Args:
        values (Any): Array-like values, stored as a float64 array.
        parents (Sequence[Tensor]): The nodes this node was computed from.
        op (str): Name of the operation that created the node.
        requires_grad (bool): Whether gradients should be accumulated in this
            node. Non-leaf nodes require grad if any parent does.
        name (None | str): Optional name, used for parameters and diagnostics.
    """

    def __init__(
        self,
        values: Any,
        parents: Sequence[Tensor] = (),
        op: str = "leaf",
        requires_grad: bool = False,
        name: None | str = None,
    ) -> None:
        self.values: np.ndarray = np.asarray(values, dtype=np.float64)
        self.grad: None | np.ndarray = None
        self.parents: tuple[Tensor, ...] = tuple(parents)
        self.op = op
        self.name = name
        self.requires_grad = requires_grad or any(
            p.requires_grad for p in self.parents
        )
        self.node_id = next(_NODE_IDS)
        self._backward: None | Callable[[np.ndarray], None] = None
        self._hooks: list[GradHook] = []
        for counts in _ACTIVE_COUNTERS:
            counts[op] += 1

    @classmethod
    def parameter(cls, values: Any, name: None | str = None) -> Tensor:
        """Create a trainable leaf tensor owning a copy of the given values.

        Args:
            values (Any): Array-like initial values.
            name (None | str): The parameter name.

        Returns:
            Tensor: The parameter.
        """
        return cls(np.array(values, dtype=np.float64), requires_grad=True, name=name)

    @property
    def shape(self) -> tuple[int, ...]:
        """tuple[int, ...]: The shape of the values."""
        return self.values.shape

    @property
    def ndim(self) -> int:
        """int: Number of dimensions."""
        return self.values.ndim

    @property
    def size(self) -> int:
        """int: Number of elements."""
        return self.values.size

    @property
    def is_leaf(self) -> bool:
        """bool: True if the node was not produced by an operation."""
        return not self.parents

    def item(self) -> float:
        """Return the value of a single element tensor.

        Raises:
            ContractError: The tensor has more than one element.

        Returns:
            float: The value.
        """
        if self.size != 1:
            raise ContractError(f"item() needs a single element, got shape {self.shape}")
        return float(self.values.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        """Return a copy of the values.

        Returns:
            np.ndarray: The values.
        """
        return self.values.copy()

    def zero_grad(self) -> None:
        """Drop the accumulated gradient."""
        self.grad = None

    def register_hook(self, hook: GradHook) -> None:
        """Register a function rewriting this node's gradient during backward.

        The hook receives the fully accumulated gradient of this node and
        returns the gradient that is propagated further.

        Args:
            hook (GradHook): The hook.
        """
        self._hooks.append(hook)

    def detach(self) -> Tensor:
        """Return a constant tensor sharing these values.

        Returns:
            Tensor: The detached tensor.
        """
        return Tensor(self.values, op="detach")

    def backward(self) -> None:
        """Back-propagate from this scalar node."""
        backward(self)

    def __repr__(self) -> str:
        label = f" '{self.name}'" if self.name else ""
        return f"Tensor{label}(op={self.op}, shape={self.shape})"

    def __add__(self, other: Any) -> Tensor:
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other: Any) -> Tensor:
        return add(self, negative(as_tensor(other)))

    def __rsub__(self, other: Any) -> Tensor:
        return add(as_tensor(other), negative(self))

    def __mul__(self, other: Any) -> Tensor:
        return multiply(self, other)

    __rmul__ = __mul__

    def __neg__(self) -> Tensor:
        return negative(self)

    def __truediv__(self, other: Any) -> Tensor:
        if isinstance(other, Tensor):
            return multiply(self, power(other, -1.0))
        return multiply(self, 1.0 / np.asarray(other, dtype=np.float64))

    def __pow__(self, exponent: float) -> Tensor:
        return power(self, exponent)

    def __matmul__(self, other: Tensor) -> Tensor:
        return matmul(self, other)

    def sum(self, axis: None | int | tuple[int, ...] = None, keepdims: bool = False) -> Tensor:
        """Sum over the given axes. See :func:`tensor_sum`."""
        return tensor_sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: None | int | tuple[int, ...] = None) -> Tensor:
        """Average over the given axes. See :func:`mean`."""
        return mean(self, axis=axis)

    def reshape(self, *shape: int) -> Tensor:
        """Reshape to the given shape. See :func:`reshape`."""
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)


def as_tensor(value: Any) -> Tensor:
    """Wrap constants into a Tensor, pass tensors through.

    Args:
        value (Any): A Tensor or array-like constant.

    Returns:
        Tensor: The tensor.
    """
    return value if isinstance(value, Tensor) else Tensor(value, op="constant")


def _node(
    values: np.ndarray,
    parents: Sequence[Tensor],
    op: str,
    backward_fn: Callable[[np.ndarray], None],
) -> Tensor:
    out = Tensor(values, parents=parents, op=op)
    if out.requires_grad:
        out._backward = backward_fn
    return out


def _accumulate(tensor: Tensor, grad: np.ndarray) -> None:
    if not tensor.requires_grad:
        return
    grad = _unbroadcast(np.asarray(grad, dtype=np.float64), tensor.shape)
    if tensor.grad is None:
        tensor.grad = np.array(grad, dtype=np.float64)
    else:
        tensor.grad += grad


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


def _topological_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if node.node_id in visited:
            continue
        visited.add(node.node_id)
        stack.append((node, True))
        stack.extend((p, False) for p in node.parents if p.requires_grad)
    return order


def first_non_finite(root: Tensor) -> None | Tensor:
    """Return the earliest computed node of the graph holding NaN or inf.

    Nodes are visited in creation order, so the returned node is where the
    non-finite values first appeared.

    Args:
        root (Tensor): The output node.

    Returns:
        None | Tensor: The node, or None if every value is finite.
    """
    nodes: dict[int, Tensor] = {}
    stack = [root]
    while stack:
        node = stack.pop()
        if node.node_id in nodes:
            continue
        nodes[node.node_id] = node
        stack.extend(node.parents)
    for node_id in sorted(nodes):
        if not np.isfinite(nodes[node_id].values).all():
            return nodes[node_id]
    return None


def describe_node(node: Tensor) -> str:
    """Return the name of a node, or its op and id for unnamed nodes."""
    return node.name if node.name else f"{node.op}#{node.node_id}"


def backward(loss: Tensor) -> None:
    """Populate ``grad`` of every tensor the scalar loss depends on.

    Gradients of leaf tensors accumulate over repeated calls; gradients of
    intermediate nodes are recomputed on every call.

    Args:
        loss (Tensor): A single element tensor.

    Raises:
        ContractError: The loss is not a scalar.
    """
    if loss.size != 1:
        raise ContractError(f"backward() needs a scalar loss, got shape {loss.shape}")
    order = _topological_order(loss)
    for node in order:
        if not node.is_leaf:
            node.grad = None
    loss.grad = np.ones_like(loss.values)
    for node in reversed(order):
        if node.grad is None:
            continue
        for hook in node._hooks:
            node.grad = np.asarray(hook(node.grad), dtype=np.float64)
        if node._backward is not None:
            node._backward(node.grad)


# elementwise and reductions


def add(a: Any, b: Any) -> Tensor:
    """Broadcasting addition."""
    a, b = as_tensor(a), as_tensor(b)

    def backward_fn(g: np.ndarray) -> None:
        _accumulate(a, g)
        _accumulate(b, g)

    return _node(a.values + b.values, (a, b), "add", backward_fn)


def negative(a: Tensor) -> Tensor:
    """Elementwise negation."""

    def backward_fn(g: np.ndarray) -> None:
        _accumulate(a, -g)

    return _node(-a.values, (a,), "negative", backward_fn)


def multiply(a: Any, b: Any) -> Tensor:
    """Broadcasting elementwise product."""
    a, b = as_tensor(a), as_tensor(b)

    def backward_fn(g: np.ndarray) -> None:
        _accumulate(a, g * b.values)
        _accumulate(b, g * a.values)

    return _node(a.values * b.values, (a, b), "multiply", backward_fn)


def power(a: Tensor, exponent: float) -> Tensor:
    """Elementwise power with a constant exponent."""
    exponent = float(exponent)

    def backward_fn(g: np.ndarray) -> None:
        _accumulate(a, g * exponent * a.values ** (exponent - 1.0))

    return _node(a.values**exponent, (a,), "power", backward_fn)


def absolute(a: Tensor) -> Tensor:
    """Elementwise absolute value, with subgradient 0 at 0."""

    def backward_fn(g: np.ndarray) -> None:
        _accumulate(a, g * np.sign(a.values))

    return _node(np.abs(a.values), (a,), "absolute", backward_fn)


def tensor_sum(
    a: Tensor, axis: None | int | tuple[int, ...] = None, keepdims: bool = False
) -> Tensor:
    """Sum over the given axes (all axes by default)."""
    values = a.values.sum(axis=axis, keepdims=keepdims)

    def backward_fn(g: np.ndarray) -> None:
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        _accumulate(a, np.broadcast_to(g, a.shape))

    return _node(values, (a,), "sum", backward_fn)


def mean(a: Tensor, axis: None | int | tuple[int, ...] = None) -> Tensor:
    """Average over the given axes (all axes by default)."""
    total = tensor_sum(a, axis=axis)
    count = a.size // max(total.size, 1)
    return multiply(total, 1.0 / count)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    """Reshape without changing the row-major element order."""

    def backward_fn(g: np.ndarray) -> None:
        _accumulate(a, g.reshape(a.shape))

    return _node(a.values.reshape(tuple(shape)), (a,), "reshape", backward_fn)


def take(a: Tensor, indices: Sequence[int] | np.ndarray) -> Tensor:
    """Gather entries along the first axis; repeated indices are allowed."""
    indices = np.asarray(indices, dtype=np.int64)

    def backward_fn(g: np.ndarray) -> None:
        grad = np.zeros_like(a.values)
        np.add.at(grad, indices, g)
        _accumulate(a, grad)

    return _node(a.values[indices], (a,), "take", backward_fn)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Product of two matrices."""
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ContractError(f"matmul: incompatible shapes {a.shape} and {b.shape}")

    def backward_fn(g: np.ndarray) -> None:
        _accumulate(a, g @ b.values.T)
        _accumulate(b, a.values.T @ g)

    return _node(a.values @ b.values, (a, b), "matmul", backward_fn)


# layers


def relu(x: Tensor) -> Tensor:
    """Rectified linear unit; the gradient at 0 is 0."""
    mask = x.values > 0

    def backward_fn(g: np.ndarray) -> None:
        _accumulate(x, g * mask)

    return _node(x.values * mask, (x,), "relu", backward_fn)


def fully_connected(x: Tensor, weight: Tensor, bias: None | Tensor = None) -> Tensor:
    """Affine layer ``x @ weight.T + bias``.

    Args:
        x (Tensor): Input of shape [N, in].
        weight (Tensor): Weights of shape [out, in].
        bias (None | Tensor): Bias of shape [out].

    Raises:
        ContractError: The input width does not match the weights.

    Returns:
        Tensor: Output of shape [N, out].
    """
    if x.ndim != 2 or x.shape[1] != weight.shape[1]:
        raise ContractError(
            f"fully_connected: input shape {x.shape} does not match "
            f"weight shape {weight.shape}"
        )
    values = x.values @ weight.values.T
    if bias is not None:
        values = values + bias.values
    parents = (x, weight) if bias is None else (x, weight, bias)

    def backward_fn(g: np.ndarray) -> None:
        _accumulate(x, g @ weight.values)
        _accumulate(weight, g.T @ x.values)
        if bias is not None:
            _accumulate(bias, g.sum(axis=0))

    return _node(values, parents, "fully_connected", backward_fn)


def same_padding(size: int, kernel: int, stride: int) -> tuple[int, int, int]:
    """Return the output size and the (before, after) zero padding for SAME.

    The extra pixel of an odd padding deficit goes after (bottom/right).

    Args:
        size (int): Input size along one axis.
        kernel (int): Kernel size along that axis.
        stride (int): Stride along that axis.

    Returns:
        tuple[int, int, int]: Output size, padding before, padding after.
    """
    out = -(-size // stride)
    total = max((out - 1) * stride + kernel - size, 0)
    return out, total // 2, total - total // 2


def conv2d(
    x: Tensor,
    weight: Tensor,
    bias: None | Tensor = None,
    stride: int = 1,
    padding: str | Padding = Padding.Same,
) -> Tensor:
    """2-D cross-correlation (no kernel flip) over NCHW inputs.

    Args:
        x (Tensor): Input of shape [N, C, H, W].
        weight (Tensor): Kernel of shape [F, C, kh, kw].
        bias (None | Tensor): Bias of shape [F].
        stride (int): Stride along both spatial axes.
        padding (str | Padding): SAME zero-pads so that H' = ceil(H / stride),
            VALID does not pad.

    Raises:
        ContractError: Channel mismatch, stride < 1 or kernel larger than the
            (padded) input.

    Returns:
        Tensor: Output of shape [N, F, H', W'].
    """
    padding = Padding.to_padding(padding)
    if x.ndim != 4 or weight.ndim != 4:
        raise ContractError(
            f"conv2d: expected 4-D input and kernel, got {x.shape} and {weight.shape}"
        )
    n, c, h, w = x.shape
    f, kc, kh, kw = weight.shape
    if c != kc:
        raise ContractError(
            f"conv2d: input has {c} channels but the kernel expects {kc}"
        )
    if stride < 1:
        raise ContractError(f"conv2d: stride should be >= 1, not {stride}")
    if padding is Padding.Same:
        out_h, top, bottom = same_padding(h, kh, stride)
        out_w, left, right = same_padding(w, kw, stride)
    else:
        if kh > h or kw > w:
            raise ContractError(
                f"conv2d: kernel {kh}x{kw} is larger than the input {h}x{w}"
            )
        top = bottom = left = right = 0
        out_h = (h - kh) // stride + 1
        out_w = (w - kw) // stride + 1

    padded = np.pad(x.values, ((0, 0), (0, 0), (top, bottom), (left, right)))
    # channels last so that every kernel tap is a single matrix product
    padded_nhwc = padded.transpose(0, 2, 3, 1)
    row_span = stride * (out_h - 1) + 1
    col_span = stride * (out_w - 1) + 1

    def patch(i: int, j: int) -> np.ndarray:
        return padded_nhwc[:, i : i + row_span : stride, j : j + col_span : stride, :]

    out = np.zeros((n, out_h, out_w, f))
    for i in range(kh):
        for j in range(kw):
            out += patch(i, j) @ weight.values[:, :, i, j].T
    if bias is not None:
        out += bias.values
    parents = (x, weight) if bias is None else (x, weight, bias)

    def backward_fn(g: np.ndarray) -> None:
        g_nhwc = g.transpose(0, 2, 3, 1)
        g_rows = g_nhwc.reshape(-1, f)
        grad_w = np.zeros_like(weight.values)
        grad_padded = np.zeros_like(padded_nhwc)
        for i in range(kh):
            for j in range(kw):
                grad_w[:, :, i, j] = g_rows.T @ patch(i, j).reshape(-1, c)
                grad_padded[
                    :, i : i + row_span : stride, j : j + col_span : stride, :
                ] += g_nhwc @ weight.values[:, :, i, j]
        _accumulate(weight, grad_w)
        _accumulate(x, grad_padded[:, top : top + h, left : left + w, :].transpose(0, 3, 1, 2))
        if bias is not None:
            _accumulate(bias, g_rows.sum(axis=0))

    return _node(
        np.ascontiguousarray(out.transpose(0, 3, 1, 2)), parents, "conv2d", backward_fn
    )


def maxpool2d(x: Tensor, size: int = 2, stride: int = 2) -> Tensor:
    """Max pooling without padding (output size rounds down).

    The gradient is routed to the maximum of each window; ties go to the
    first element in row-major order.

    Args:
        x (Tensor): Input of shape [N, C, H, W].
        size (int): Window size.
        stride (int): Window stride.

    Raises:
        ContractError: The window is larger than the input.

    Returns:
        Tensor: Output of shape [N, C, H', W'].
    """
    n, c, h, w = x.shape
    if size > h or size > w:
        raise ContractError(f"maxpool2d: window {size} is larger than the input {h}x{w}")
    windows = np.lib.stride_tricks.sliding_window_view(x.values, (size, size), axis=(2, 3))
    windows = windows[:, :, ::stride, ::stride]
    out_h, out_w = windows.shape[2], windows.shape[3]
    flat = windows.reshape(n, c, out_h, out_w, size * size)
    index = flat.argmax(axis=-1)
    values = np.take_along_axis(flat, index[..., None], axis=-1)[..., 0]
    row_span = stride * (out_h - 1) + 1
    col_span = stride * (out_w - 1) + 1

    def backward_fn(g: np.ndarray) -> None:
        grad = np.zeros_like(x.values)
        for di in range(size):
            for dj in range(size):
                grad[:, :, di : di + row_span : stride, dj : dj + col_span : stride] += g * (
                    index == di * size + dj
                )
        _accumulate(x, grad)

    return _node(values, (x,), "maxpool2d", backward_fn)


def dropout(
    x: Tensor, probability: float, rng: np.random.Generator, training: bool = True
) -> Tensor:
    """Inverted dropout; a no-op outside training.

    Args:
        x (Tensor): The input.
        probability (float): Drop probability in [0, 1).
        rng (np.random.Generator): Source of the drop mask.
        training (bool): Whether to drop.

    Raises:
        ContractError: The probability is out of range.

    Returns:
        Tensor: The output.
    """
    if not 0.0 <= probability < 1.0:
        raise ContractError(
            f"dropout: probability should be in [0, 1), not {probability}"
        )
    if not training or probability == 0.0:
        return x
    mask = (rng.random(x.shape) >= probability) / (1.0 - probability)

    def backward_fn(g: np.ndarray) -> None:
        _accumulate(x, g * mask)

    return _node(x.values * mask, (x,), "dropout", backward_fn)


def _softmax_last(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _check_finite_map(name: str, m: Tensor) -> None:
    if m.ndim != 4:
        raise ContractError(f"{name}: expected a [N, K, H, W] map, got {m.shape}")
    if np.isnan(m.values).any():
        raise NumericError(f"{name}: input contains NaN")


def spatial_softmax(m: Tensor) -> Tensor:
    """Softmax over the two spatial axes of every (n, k) slice.

    Args:
        m (Tensor): Maps of shape [N, K, H, W].

    Raises:
        NumericError: The input contains NaN.

    Returns:
        Tensor: Probability maps of the same shape.
    """
    _check_finite_map("spatial_softmax", m)
    n, k, h, w = m.shape
    p = _softmax_last(m.values.reshape(n, k, h * w))

    def backward_fn(g: np.ndarray) -> None:
        g = g.reshape(n, k, h * w)
        _accumulate(m, (p * (g - (g * p).sum(axis=-1, keepdims=True))).reshape(m.shape))

    return _node(p.reshape(m.shape), (m,), "spatial_softmax", backward_fn)


def soft_argmax(m: Tensor, beta: float = 1.0) -> Tensor:
    """Expected pixel coordinates under the spatial softmax of ``beta * m``.

    Args:
        m (Tensor): Maps of shape [N, K, H, W].
        beta (float): Temperature, > 0. Larger values sharpen towards argmax.

    Raises:
        ContractError: beta is not positive.
        NumericError: The input contains NaN.

    Returns:
        Tensor: Coordinates of shape [N, K, 2] as (x, y) pairs.
    """
    if not beta > 0:
        raise ContractError(f"soft_argmax: beta should be > 0, not {beta}")
    _check_finite_map("soft_argmax", m)
    n, k, h, w = m.shape
    p = _softmax_last(beta * m.values.reshape(n, k, h * w)).reshape(m.shape)
    cols = np.arange(w, dtype=np.float64)
    rows = np.arange(h, dtype=np.float64)
    x = (p.sum(axis=2) * cols).sum(axis=-1)
    y = (p.sum(axis=3) * rows).sum(axis=-1)

    def backward_fn(g: np.ndarray) -> None:
        gx = g[..., 0][..., None, None]
        gy = g[..., 1][..., None, None]
        dx = cols[None, None, None, :] - x[..., None, None]
        dy = rows[None, None, :, None] - y[..., None, None]
        _accumulate(m, beta * p * (gx * dx + gy * dy))

    return _node(np.stack([x, y], axis=-1), (m,), "soft_argmax", backward_fn)


def softmax_cross_entropy(logits: Tensor, labels: Sequence[int] | np.ndarray) -> Tensor:
    """Mean negative log-likelihood of the labels under softmax(logits).

    Args:
        logits (Tensor): Scores of shape [N, C].
        labels (Sequence[int] | np.ndarray): N class indices.

    Raises:
        ContractError: A label is out of range or the batch is empty.

    Returns:
        Tensor: The scalar loss.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ContractError(
            f"softmax_cross_entropy: logits {logits.shape} do not match "
            f"labels {labels.shape}"
        )
    n, c = logits.shape
    if n == 0:
        raise ContractError("softmax_cross_entropy: empty batch")
    if labels.min() < 0 or labels.max() >= c:
        raise ContractError(
            f"softmax_cross_entropy: labels should be in [0, {c - 1}], "
            f"got [{labels.min()}, {labels.max()}]"
        )
    z = logits.values
    shifted = z - z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    rows = np.arange(n)
    loss = (log_norm - shifted[rows, labels]).mean()

    def backward_fn(g: np.ndarray) -> None:
        grad = _softmax_last(z)
        grad[rows, labels] -= 1.0
        _accumulate(logits, grad * (g / n))

    return _node(np.asarray(loss), (logits,), "softmax_cross_entropy", backward_fn)


def transform_coords(points: Tensor, matrices: np.ndarray) -> Tensor:
    """Apply per-sample 2x3 affine matrices to (x, y) coordinates.

    Args:
        points (Tensor): Coordinates of shape [M, K, 2].
        matrices (np.ndarray): Constant matrices of shape [M, 2, 3] or [2, 3].

    Returns:
        Tensor: Transformed coordinates of shape [M, K, 2].
    """
    matrices = np.asarray(matrices, dtype=np.float64)
    if matrices.ndim == 2:
        matrices = np.broadcast_to(matrices, (points.shape[0], 2, 3))
    linear = matrices[:, :, :2]
    offset = matrices[:, :, 2]
    values = np.einsum("mij,mkj->mki", linear, points.values) + offset[:, None, :]

    def backward_fn(g: np.ndarray) -> None:
        _accumulate(points, np.einsum("mij,mki->mkj", linear, g))

    return _node(values, (points,), "transform_coords", backward_fn)
