"""Weight-shared encoder + projector MLP with a hand-written backward pass.

Layout: ``input -> encoder (ReLU after every layer) -> y -> projector (ReLU on
hidden layers, linear last layer) -> L2 normalisation -> z``.  Both
augmentation branches run through the same :class:`MlpParams` object.
Activations are stored column-wise: a batch is a ``(dim, N)`` matrix.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from .densela import ShapeError


@dataclass(frozen=True)
class NetConfig:
    input_dim: int
    encoder_dims: tuple
    projector_dims: tuple
    hidden_activation: str = "relu"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "encoder_dims", tuple(int(d) for d in self.encoder_dims))
        object.__setattr__(self, "projector_dims", tuple(int(d) for d in self.projector_dims))
        if self.input_dim < 1 or any(d < 1 for d in self.encoder_dims + self.projector_dims):
            raise ValueError("all layer widths must be >= 1")
        if not self.projector_dims:
            raise ValueError("projector needs at least one layer")
        if self.hidden_activation != "relu":
            raise ValueError(f"unsupported activation {self.hidden_activation!r}")

    @property
    def layer_shapes(self):
        dims = (self.input_dim,) + self.encoder_dims + self.projector_dims
        return [(dims[i + 1], dims[i]) for i in range(len(dims) - 1)]

    @property
    def feature_dim(self):
        return self.encoder_dims[-1] if self.encoder_dims else self.input_dim

    @property
    def output_dim(self):
        return self.projector_dims[-1]


@dataclass
class MlpParams:
    weights: list
    biases: list
    n_encoder: int

    def __post_init__(self):
        if len(self.weights) != len(self.biases):
            raise ShapeError("one bias per weight matrix is required")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if b.shape != (w.shape[0],):
                raise ShapeError(f"layer {i}: bias {b.shape} does not match weight {w.shape}")
            if i and w.shape[1] != self.weights[i - 1].shape[0]:
                raise ShapeError(f"layer {i} input width {w.shape[1]} != previous output {self.weights[i - 1].shape[0]}")
        if not 0 <= self.n_encoder < len(self.weights):
            raise ShapeError("the projector must keep at least one layer")

    @property
    def n_layers(self):
        return len(self.weights)

    def arrays(self):
        """Flat parameter list in layer order: W0, b0, W1, b1, ..."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self):
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases], self.n_encoder)


@dataclass
class ForwardCache:
    inputs: list = field(default_factory=list)  # input to each layer
    pre: list = field(default_factory=list)  # pre-activations
    z_pre: np.ndarray = None
    z: np.ndarray = None


def init_params(config):
    """He-style uniform weights in ``+-sqrt(6 / fan_in)``, zero biases."""
    rng = np.random.default_rng(config.seed)
    weights, biases = [], []
    for fan_out, fan_in in config.layer_shapes:
        bound = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpParams(weights, biases, len(config.encoder_dims))


def _relu_layer(params, i):
    # every layer is ReLU except the final projector layer
    return i != params.n_layers - 1


def l2_normalize(z_pre):
    norms = np.linalg.norm(z_pre, axis=0)
    if np.any(norms == 0.0):
        raise FloatingPointError("zero-norm projector output column (dead network?)")
    return z_pre / norms


def l2_normalize_backward(z_pre, g_out):
    """Back-propagate through column-wise L2 normalisation.

    Per column: ``(I - zh zh^T) g / ||z_pre||`` with ``zh = z_pre / ||z_pre||``.
    """
    norms = np.linalg.norm(z_pre, axis=0)
    if np.any(norms == 0.0):
        raise FloatingPointError("zero-norm column in normalisation backward")
    zh = z_pre / norms
    return (g_out - zh * np.sum(zh * g_out, axis=0)) / norms


def forward(params, x):
    """Run the network on columns ``x`` (D_in x N).

    Returns ``(y, z, cache)`` with ``y`` the encoder features and ``z`` the
    normalised projector output.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != params.weights[0].shape[1] or x.shape[1] < 1:
        raise ShapeError(f"input of shape {x.shape} does not fit first layer {params.weights[0].shape}")
    cache = ForwardCache()
    h = x
    y = x
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        cache.inputs.append(h)
        a = w @ h + b[:, None]
        cache.pre.append(a)
        h = np.maximum(a, 0.0) if _relu_layer(params, i) else a
        if i == params.n_encoder - 1:
            y = h
    cache.z_pre = h
    cache.z = l2_normalize(h)
    return y, cache.z, cache


def backward(params, cache, g_z):
    """Gradients of a scalar whose gradient w.r.t. ``z`` is ``g_z``.

    Returns ``(grads, g_x)`` where ``grads`` mirrors :class:`MlpParams`.
    """
    if g_z.shape != cache.z.shape:
        raise ShapeError(f"g_z {g_z.shape} does not match output {cache.z.shape}")
    g = l2_normalize_backward(cache.z_pre, g_z)
    gw = [None] * params.n_layers
    gb = [None] * params.n_layers
    for i in range(params.n_layers - 1, -1, -1):
        if _relu_layer(params, i):
            g = g * (cache.pre[i] > 0.0)
        gw[i] = g @ cache.inputs[i].T
        gb[i] = g.sum(axis=1)
        g = params.weights[i].T @ g
    return MlpParams(gw, gb, params.n_encoder), g


def sgd_step(params, grads, velocity, lr, momentum, weight_decay):
    """SGD with momentum and L2 weight decay (PyTorch convention).

    ``v <- momentum * v + (grad + weight_decay * w)``; ``w <- w - lr * v``.
    ``velocity`` may be ``None`` on the first step.  Returns new
    ``(params, velocity)``; inputs are not modified.
    """
    if not lr > 0:
        raise ValueError("learning rate must be positive")
    ws, gs = params.arrays(), grads.arrays()
    vs = velocity if velocity is not None else [np.zeros_like(w) for w in ws]
    new_v = [momentum * v + g + weight_decay * w for v, g, w in zip(vs, gs, ws)]
    new_w = [w - lr * v for w, v in zip(ws, new_v)]
    return MlpParams(new_w[0::2], new_w[1::2], params.n_encoder), new_v


# -- checkpoint format -------------------------------------------------------
#
#   b"CIMX" | u32 version | u32 n_layers | n_layers x (u32 out, u32 in)
#   | per layer: weight (out*in f64, row-major), bias (out f64)
#   | u64 checksum = sum of all preceding bytes mod 2**64
# All integers and floats little-endian.

MAGIC = b"CIMX"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def _checksum(payload):
    # uint64 accumulation wraps mod 2**64
    return int(np.frombuffer(payload, dtype=np.uint8).sum(dtype=np.uint64))


def dumps_params(params):
    head = [MAGIC, struct.pack("<II", FORMAT_VERSION, params.n_layers)]
    head += [struct.pack("<II", *w.shape) for w in params.weights]
    body = []
    for w, b in zip(params.weights, params.biases):
        body.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
        body.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    payload = b"".join(head + body)
    return payload + struct.pack("<Q", _checksum(payload))


def loads_params(blob, n_encoder):
    """Parse a checkpoint.  ``n_encoder`` says how many leading layers are encoder."""
    if len(blob) < 20 or blob[:4] != MAGIC:
        raise CheckpointError("not a CIMX checkpoint")
    payload, (checksum,) = blob[:-8], struct.unpack("<Q", blob[-8:])
    if _checksum(payload) != checksum:
        raise CheckpointError("checkpoint checksum mismatch")
    version, n_layers = struct.unpack_from("<II", payload, 4)
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    off = 12
    shapes = []
    for _ in range(n_layers):
        shapes.append(struct.unpack_from("<II", payload, off))
        off += 8
    weights, biases = [], []
    for out_dim, in_dim in shapes:
        n = out_dim * in_dim
        weights.append(np.frombuffer(payload, "<f8", n, off).reshape(out_dim, in_dim).astype(np.float64))
        off += 8 * n
        biases.append(np.frombuffer(payload, "<f8", out_dim, off).astype(np.float64))
        off += 8 * out_dim
    if off != len(payload):
        raise CheckpointError("trailing bytes in checkpoint payload")
    return MlpParams(weights, biases, n_encoder)


def save_checkpoint(path, params):
    with open(path, "wb") as fh:
        fh.write(dumps_params(params))


def load_checkpoint(path, n_encoder):
    with open(path, "rb") as fh:
        return loads_params(fh.read(), n_encoder)
