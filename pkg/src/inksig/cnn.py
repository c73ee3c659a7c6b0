"""From-scratch convolutional network: forward, backprop, SGD, persistence.

The default stack mirrors the identification architecture: six valid
convolutions (3x3 first, then 2x2, stride 1), each of the first five
followed by 2x2/stride-2 max pooling, then one hidden fully-connected
layer and a softmax output over writers. On a 96x96 input the spatial
sizes run 96-94-47-46-23-22-11-10-5-4-2-1, so the last convolution emits
a 1x1 field. Inverted dropout (rates 0.1, 0.1, 0.5, 0.5) masks the
inputs of the last four weighted layers during training.

Everything is plain minibatch SGD in float32; float64 exists for
gradient checking. Construction rejects any stack whose shape arithmetic
does not stay integral.
"""

import struct
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigError, InvalidInputError, ParseError
from .trajectory import GRID_SIZE

PAPER_CONV_WIDTHS = (80, 160, 240, 320, 400, 480)
PAPER_FC_UNITS = 512
DESK_CONV_WIDTHS = (12, 24, 36, 48, 60, 72)
DESK_FC_UNITS = 64
DROPOUT_RATES = (0.1, 0.1, 0.5, 0.5)

KIND_CONV = "conv"
KIND_POOL = "maxpool"
KIND_FC = "fc"
KIND_OUTPUT = "output"

_KIND_TAGS = {KIND_CONV: 1, KIND_POOL: 2, KIND_FC: 3, KIND_OUTPUT: 4}
_TAG_KINDS = {v: k for k, v in _KIND_TAGS.items()}

MODEL_MAGIC = b"INKSIG01"


@dataclass
class LayerSpec:
    """One layer: conv / maxpool / fc / output (softmax).

    `dropout` is the inverted-dropout rate applied to this layer's input
    at training time.
    """

    kind: str
    out_units: int = 0
    kernel: int = 0
    stride: int = 1
    dropout: float = 0.0

    def __post_init__(self):
        if self.kind == KIND_CONV:
            if self.kernel not in (2, 3):
                raise InvalidInputError(f"conv kernel must be 2 or 3, got {self.kernel}")
            if self.stride != 1:
                raise InvalidInputError("conv stride must be 1")
            if self.out_units < 1:
                raise InvalidInputError("conv needs out_units >= 1")
        elif self.kind == KIND_POOL:
            if self.kernel != 2 or self.stride != 2:
                raise InvalidInputError("max pooling is fixed at 2x2, stride 2")
        elif self.kind in (KIND_FC, KIND_OUTPUT):
            if self.out_units < 1:
                raise InvalidInputError(f"{self.kind} needs out_units >= 1")
        else:
            raise InvalidInputError(f"unknown layer kind: {self.kind!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise InvalidInputError(f"dropout rate must be in [0, 1), got {self.dropout}")


def _softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class Network:
    """Layer stack with weights; see module docstring for the default."""

    def __init__(self, specs, input_channels, num_writers,
                 input_size=GRID_SIZE, seed=0, dtype=np.float32):
        if not specs or specs[-1].kind != KIND_OUTPUT:
            raise ConfigError("network must end in an output layer")
        if specs[-1].out_units != num_writers:
            raise ConfigError(
                f"output layer has {specs[-1].out_units} units for {num_writers} writers"
            )
        self.specs = list(specs)
        self.input_channels = int(input_channels)
        self.num_writers = int(num_writers)
        self.input_size = int(input_size)
        self.dtype = np.dtype(dtype)
        self.seed = seed
        self._infer_shapes()
        self._init_params(np.random.default_rng(seed))

    # -- construction ------------------------------------------------------

    def _infer_shapes(self):
        """Propagate (C, H, W) through the stack; reject broken arithmetic."""
        shape = (self.input_channels, self.input_size, self.input_size)
        flat = None  # units once the stack goes fully connected
        self.in_shapes = []
        self.out_shapes = []
        for i, spec in enumerate(self.specs):
            self.in_shapes.append(shape if flat is None else (flat,))
            if spec.kind == KIND_CONV:
                if flat is not None:
                    raise ConfigError(f"layer {i}: conv after fully-connected layers")
                c, h, w = shape
                ho, wo = h - spec.kernel + 1, w - spec.kernel + 1
                if ho < 1 or wo < 1:
                    raise ConfigError(f"layer {i}: {spec.kernel}x{spec.kernel} conv on {h}x{w} input")
                shape = (spec.out_units, ho, wo)
            elif spec.kind == KIND_POOL:
                if flat is not None:
                    raise ConfigError(f"layer {i}: pool after fully-connected layers")
                c, h, w = shape
                if h % 2 or w % 2 or h < 2 or w < 2:
                    raise ConfigError(
                        f"layer {i}: 2x2/2 pooling needs even spatial dims, got {h}x{w}"
                    )
                shape = (c, h // 2, w // 2)
            else:
                inp = int(np.prod(shape)) if flat is None else flat
                flat = spec.out_units
                shape = (flat,)
            self.out_shapes.append(shape if flat is None else (flat,))
        self.shape_before_fc = None
        for i, spec in enumerate(self.specs):
            if spec.kind in (KIND_FC, KIND_OUTPUT):
                self.shape_before_fc = self.in_shapes[i]
                break

    def _init_params(self, rng):
        """He-style uniform init scaled by fan-in; biases zero."""
        self.params = []
        shape = (self.input_channels, self.input_size, self.input_size)
        for spec, in_shape in zip(self.specs, self.in_shapes):
            if spec.kind == KIND_CONV:
                cin = in_shape[0]
                fan_in = cin * spec.kernel * spec.kernel
                bound = np.sqrt(6.0 / fan_in)
                w = rng.uniform(-bound, bound,
                                (spec.out_units, cin, spec.kernel, spec.kernel))
                self.params.append({"w": w.astype(self.dtype),
                                    "b": np.zeros(spec.out_units, self.dtype)})
            elif spec.kind in (KIND_FC, KIND_OUTPUT):
                fan_in = int(np.prod(in_shape))
                bound = np.sqrt(6.0 / fan_in)
                w = rng.uniform(-bound, bound, (spec.out_units, fan_in))
                self.params.append({"w": w.astype(self.dtype),
                                    "b": np.zeros(spec.out_units, self.dtype)})
            else:
                self.params.append(None)

    @classmethod
    def build(cls, input_channels, num_writers, conv_widths=PAPER_CONV_WIDTHS,
              fc_units=PAPER_FC_UNITS, dropout_rates=DROPOUT_RATES,
              input_size=GRID_SIZE, seed=0, dtype=np.float32):
        """Assemble the standard stack: conv-pool pyramid, FC, softmax.

        The first convolution is 3x3, the rest 2x2; each conv except the
        last is followed by pooling. Dropout rates attach to the inputs
        of the last len(dropout_rates) weighted layers.
        """
        specs = []
        for i, width in enumerate(conv_widths):
            specs.append(LayerSpec(KIND_CONV, out_units=width, kernel=3 if i == 0 else 2))
            if i < len(conv_widths) - 1:
                specs.append(LayerSpec(KIND_POOL, kernel=2, stride=2))
        specs.append(LayerSpec(KIND_FC, out_units=fc_units))
        specs.append(LayerSpec(KIND_OUTPUT, out_units=num_writers))
        rates = list(dropout_rates)
        for spec in reversed(specs):
            if not rates:
                break
            if spec.kind == KIND_POOL:
                continue
            spec.dropout = rates.pop()
        return cls(specs, input_channels, num_writers,
                   input_size=input_size, seed=seed, dtype=dtype)

    @property
    def spatial_trace(self):
        """Spatial side lengths from the input through the conv/pool stack."""
        trace = [self.input_size]
        for spec, out in zip(self.specs, self.out_shapes):
            if spec.kind in (KIND_CONV, KIND_POOL):
                trace.append(out[1])
        return trace

    def parameter_count(self):
        return sum(p["w"].size + p["b"].size for p in self.params if p)

    # -- forward / backward ------------------------------------------------

    def forward(self, x, training=False, rng=None):
        """Run the stack; returns (probs, cache). cache is None at inference."""
        x = np.ascontiguousarray(x, dtype=self.dtype)
        if x.ndim != 4 or x.shape[1:] != (self.input_channels, self.input_size, self.input_size):
            raise InvalidInputError(
                f"expected batch of shape (B, {self.input_channels}, "
                f"{self.input_size}, {self.input_size}), got {x.shape}"
            )
        cache = [] if training else None
        h = x
        for spec, p in zip(self.specs, self.params):
            step = {}
            if training and spec.dropout > 0.0:
                if rng is None:
                    raise ConfigError("training forward with dropout needs an rng")
                keep = 1.0 - spec.dropout
                mask = (rng.random(h.shape) < keep).astype(self.dtype)
                mask /= self.dtype.type(keep)
                h = h * mask
                step["mask"] = mask
            if spec.kind == KIND_CONV:
                pre = kernels.conv2d_forward(h, p["w"], p["b"])
                out = np.maximum(pre, 0)
                if training:
                    step.update(inp=h, relu=pre > 0)
            elif spec.kind == KIND_POOL:
                out, arg = kernels.maxpool2_forward(h)
                if training:
                    step.update(arg=arg, in_hw=h.shape[2:])
            elif spec.kind == KIND_FC:
                flat = h.reshape(h.shape[0], -1)
                pre = flat @ p["w"].T + p["b"]
                out = np.maximum(pre, 0)
                if training:
                    step.update(inp=flat, in_shape=h.shape, relu=pre > 0)
            else:
                flat = h.reshape(h.shape[0], -1)
                logits = flat @ p["w"].T + p["b"]
                out = _softmax(logits)
                if training:
                    step.update(inp=flat, in_shape=h.shape)
            if training:
                cache.append(step)
            h = out
        if training:
            return h, {"steps": cache, "probs": h}
        return h, None

    def backward(self, cache, labels):
        """Gradients of mean cross-entropy; list aligned with the layers."""
        if cache is None:
            raise ConfigError("backward needs the cache from forward(training=True)")
        probs = cache["probs"]
        steps = cache["steps"]
        batch = probs.shape[0]
        labels = np.asarray(labels)
        d = probs.copy()
        d[np.arange(batch), labels] -= 1.0
        d /= self.dtype.type(batch)
        grads = [None] * len(self.specs)
        for i in range(len(self.specs) - 1, -1, -1):
            spec, p, step = self.specs[i], self.params[i], steps[i]
            if spec.kind in (KIND_FC, KIND_OUTPUT):
                if spec.kind == KIND_FC:
                    d = d * step["relu"]
                grads[i] = {"w": d.T @ step["inp"], "b": d.sum(axis=0)}
                d = (d @ p["w"]).reshape(step["in_shape"])
            elif spec.kind == KIND_POOL:
                h, w = step["in_hw"]
                d = kernels.maxpool2_input_grad(d, step["arg"], h, w)
            else:
                d = d * step["relu"]
                dw, db = kernels.conv2d_param_grad(step["inp"], d, spec.kernel)
                grads[i] = {"w": dw, "b": db}
                d = kernels.conv2d_input_grad(d, p["w"], step["inp"].shape[2], step["inp"].shape[3])
            if "mask" in step:
                d = d * step["mask"]
        return grads


def cross_entropy(probs, labels):
    batch = probs.shape[0]
    picked = probs[np.arange(batch), np.asarray(labels)]
    return float(-np.log(np.maximum(picked, 1e-30)).mean())


def sgd_step(net: Network, grads, lr: float):
    for p, g in zip(net.params, grads):
        if p is None or g is None:
            continue
        p["w"] -= net.dtype.type(lr) * g["w"]
        p["b"] -= net.dtype.type(lr) * g["b"]
    return net


@dataclass
class TrainConfig:
    epochs: int = 10
    samples_per_epoch: int = 0  # must be set; streams are open-ended
    minibatch: int = 100
    lr: float = 0.01
    lr_decay: float = 0.7  # applied when an epoch fails to improve
    min_improve: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.minibatch < 1:
            raise ConfigError(f"minibatch must be >= 1, got {self.minibatch}")
        if self.samples_per_epoch < 1:
            raise ConfigError("samples_per_epoch must be set to the epoch length")


def train(net: Network, stream, cfg: TrainConfig):
    """Minibatch SGD over an augmented sample stream.

    `stream` yields (feature_maps, writer_index) pairs; each epoch
    consumes cfg.samples_per_epoch of them. Returns per-epoch rows of
    (epoch, top1_error, loss, lr); wall-clock time is reported separately
    by callers so logs from identical runs compare equal.
    """
    it = iter(stream)
    rng = np.random.default_rng(cfg.seed)
    rows = []
    best_err = np.inf
    lr = cfg.lr
    for epoch in range(cfg.epochs):
        seen = 0
        correct = 0
        loss_sum = 0.0
        while seen < cfg.samples_per_epoch:
            take = min(cfg.minibatch, cfg.samples_per_epoch - seen)
            xs, ys = [], []
            for _ in range(take):
                try:
                    fx, fy = next(it)
                except StopIteration:
                    raise ConfigError(
                        f"training stream exhausted after {seen} samples in epoch {epoch}"
                    ) from None
                xs.append(fx)
                ys.append(fy)
            x = np.stack(xs)
            y = np.array(ys, dtype=np.int64)
            probs, cache = net.forward(x, training=True, rng=rng)
            grads = net.backward(cache, y)
            sgd_step(net, grads, lr)
            correct += int((probs.argmax(axis=1) == y).sum())
            loss_sum += cross_entropy(probs, y) * take
            seen += take
        err = 1.0 - correct / seen
        rows.append({"epoch": epoch, "top1_error": round(err, 6),
                     "loss": round(loss_sum / seen, 6), "lr": lr})
        if err > best_err - cfg.min_improve:
            lr *= cfg.lr_decay
        best_err = min(best_err, err)
    return rows


# ---------------------------------------------------------------------------
# persistence: magic, little-endian dims, raw float32 weight blocks
# ---------------------------------------------------------------------------

def save_model(net: Network, path):
    blob = bytearray(MODEL_MAGIC)
    blob += struct.pack("<III", net.input_channels, net.num_writers, len(net.specs))
    for spec, in_shape in zip(net.specs, net.in_shapes):
        tag = _KIND_TAGS[spec.kind]
        if spec.kind == KIND_CONV:
            blob += struct.pack("<BIII", tag, spec.out_units, in_shape[0], spec.kernel)
        elif spec.kind == KIND_POOL:
            blob += struct.pack("<BI", tag, spec.kernel)
        else:
            blob += struct.pack("<BII", tag, spec.out_units, int(np.prod(in_shape)))
    for p in net.params:
        if p is None:
            continue
        blob += np.ascontiguousarray(p["w"], dtype="<f4").tobytes()
        blob += np.ascontiguousarray(p["b"], dtype="<f4").tobytes()
    with open(path, "wb") as f:
        f.write(blob)


def load_model(path, input_size=GRID_SIZE) -> Network:
    with open(path, "rb") as f:
        data = f.read()
    if data[:8] != MODEL_MAGIC:
        raise ParseError(f"{path}: not a model file (bad magic)", offset=0)
    off = 8
    try:
        in_ch, writers, n_layers = struct.unpack_from("<III", data, off)
        off += 12
        specs = []
        dims = []
        for _ in range(n_layers):
            (tag,) = struct.unpack_from("<B", data, off)
            off += 1
            kind = _TAG_KINDS.get(tag)
            if kind is None:
                raise ParseError(f"unknown layer tag {tag}", offset=off - 1)
            if kind == KIND_CONV:
                out_u, in_u, k = struct.unpack_from("<III", data, off)
                off += 12
                specs.append(LayerSpec(kind, out_units=out_u, kernel=k))
                dims.append((out_u, in_u))
            elif kind == KIND_POOL:
                (k,) = struct.unpack_from("<I", data, off)
                off += 4
                specs.append(LayerSpec(kind, kernel=k, stride=2))
                dims.append(None)
            else:
                out_u, in_u = struct.unpack_from("<II", data, off)
                off += 8
                specs.append(LayerSpec(kind, out_units=out_u))
                dims.append((out_u, in_u))
    except struct.error as e:
        raise ParseError(f"truncated model header: {e}", offset=off) from e
    net = Network(specs, in_ch, writers, input_size=input_size, seed=0, dtype=np.float32)
    for i, (p, dim, in_shape) in enumerate(zip(net.params, dims, net.in_shapes)):
        if p is None:
            continue
        declared_in = dim[1]
        actual_in = in_shape[0] if net.specs[i].kind == KIND_CONV else int(np.prod(in_shape))
        if declared_in != actual_in:
            raise ParseError(
                f"layer {i}: declared fan-in {declared_in} does not match stack ({actual_in})"
            )
        for key in ("w", "b"):
            count = p[key].size
            end = off + 4 * count
            if end > len(data):
                raise ParseError(f"truncated weight block for layer {i}", offset=off)
            p[key] = np.frombuffer(data[off:end], dtype="<f4").reshape(p[key].shape).copy()
            off = end
    if off != len(data):
        raise ParseError(f"{len(data) - off} trailing bytes after weights", offset=off)
    return net
