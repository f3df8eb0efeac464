"""Flat ``key = value`` run configuration.

One pair per line, ``#`` starts a comment.  Command-line overrides use the
same keys.  Every key has a default except ``out_dir``.
"""

import math
from dataclasses import dataclass, fields

from .data import AugmentConfig
from .loss import LossParams
from .net import NetConfig
from .train import TrainConfig


class ConfigError(ValueError):
    pass


def _int_list(text):
    items = [s.strip() for s in text.split(",") if s.strip()]
    if not items:
        raise ValueError("empty list")
    return tuple(int(s) for s in items)


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


# key -> (parser, validator or None)
_POSITIVE = (lambda v: v > 0, "must be > 0")
_NONNEG = (lambda v: v >= 0, "must be >= 0")
_UNIT = (lambda v: 0 <= v < 1, "must lie in [0, 1)")

SCHEMA = {
    "out_dir": (str, None),
    "run_id": (str, None),
    "seed": (int, None),
    "data_path": (str, None),
    "num_classes": (int, _POSITIVE),
    "per_class": (int, _POSITIVE),
    "d_in": (int, _POSITIVE),
    "separation": (float, _POSITIVE),
    "within_std": (float, _NONNEG),
    "test_fraction": (float, (lambda v: 0 < v < 1, "must lie in (0, 1)")),
    "encoder_dims": (_int_list, (lambda v: min(v) >= 1, "widths must be >= 1")),
    "projector_dims": (_int_list, (lambda v: min(v) >= 1, "widths must be >= 1")),
    "epochs": (int, _NONNEG),
    "batch_size": (int, _POSITIVE),
    "lr_max": (float, _POSITIVE),
    "lr_start": (float, _POSITIVE),
    "lr_min": (float, _POSITIVE),
    "warmup_epochs": (int, _NONNEG),
    "momentum": (float, _UNIT),
    "weight_decay": (float, _NONNEG),
    "lambda": (float, _UNIT),
    "eps": (float, _POSITIVE),
    "alpha": (float, _NONNEG),
    "dim_normalize": (_bool, None),
    "use_big_bang": (_bool, None),
    "noise_std": (float, _NONNEG),
    "mask_prob": (float, _UNIT),
    "scale_low": (float, _POSITIVE),
    "scale_high": (float, _POSITIVE),
    "rotate_pairs": (int, _NONNEG),
    "max_angle": (float, (math.isfinite, "must be finite")),
    "probe_epochs": (int, _NONNEG),
    "probe_lr": (float, _POSITIVE),
    "probe_momentum": (float, _UNIT),
    "gradcheck_cases": (int, _POSITIVE),
    "gradcheck_h": (float, _POSITIVE),
    "bench_dims": (_int_list, None),
    "bench_batch": (int, _POSITIVE),
    "bench_repeats": (int, _POSITIVE),
}

REQUIRED = ("out_dir",)


@dataclass(frozen=True)
class RunConfig:
    out_dir: str = ""
    run_id: str = "run"
    seed: int = 0
    data_path: str = ""
    # blobs generator
    num_classes: int = 4
    per_class: int = 500
    d_in: int = 16
    separation: float = 8.0
    within_std: float = 1.0
    test_fraction: float = 0.2
    # network
    encoder_dims: tuple = (64, 64)
    projector_dims: tuple = (64, 16)
    # optimisation
    epochs: int = 200
    batch_size: int = 128
    lr_max: float = 0.5
    lr_start: float = 0.05
    lr_min: float = 1e-3
    warmup_epochs: int = 10
    momentum: float = 0.9
    weight_decay: float = 1e-4
    # loss
    lam: float = 0.01
    eps: float = 1e-8
    alpha: float = 250.0
    dim_normalize: bool = True
    use_big_bang: bool = True
    # augmentation
    noise_std: float = 1.5
    mask_prob: float = 0.3
    scale_low: float = 0.5
    scale_high: float = 1.5
    rotate_pairs: int = 8
    max_angle: float = 1.0
    # linear probe
    probe_epochs: int = 100
    probe_lr: float = 0.2
    probe_momentum: float = 0.9
    # diagnostics
    gradcheck_cases: int = 20
    gradcheck_h: float = 1e-5
    bench_dims: tuple = (64, 128, 256)
    bench_batch: int = 256
    bench_repeats: int = 5

    def net_config(self):
        return NetConfig(self.d_in, self.encoder_dims, self.projector_dims, seed=self.seed)

    def loss_params(self):
        return LossParams(eps=self.eps, alpha=self.alpha, dim_normalize=self.dim_normalize,
                          use_big_bang=self.use_big_bang)

    def train_config(self):
        return TrainConfig(
            epochs=self.epochs, batch_size=self.batch_size, lr_max=self.lr_max, lr_start=self.lr_start,
            lr_min=self.lr_min, warmup_epochs=self.warmup_epochs, momentum=self.momentum,
            weight_decay=self.weight_decay, loss=self.loss_params(), forgetting=self.lam, seed=self.seed,
        )

    def augment_config(self):
        return AugmentConfig(self.noise_std, self.mask_prob, (self.scale_low, self.scale_high),
                             self.rotate_pairs, self.max_angle)


def _attr(key):
    return "lam" if key == "lambda" else key


def _key(attr):
    return "lambda" if attr == "lam" else attr


def _parse_value(key, text, where):
    if key not in SCHEMA:
        raise ConfigError(f"{where}: unknown key {key!r}")
    parser, check = SCHEMA[key]
    try:
        value = parser(text.strip())
    except ValueError as exc:
        raise ConfigError(f"{where}: cannot parse {key} = {text.strip()!r} ({exc})") from None
    if check is not None and not check[0](value):
        raise ConfigError(f"{where}: {key} = {text.strip()} out of range ({check[1]})")
    return value


def parse_text(text, source="<config>"):
    """Parse config text into a ``{key: value}`` dict (no defaults applied)."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        if "=" not in line:
            raise ConfigError(f"{where}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = _parse_value(key.strip(), value, where)
    return values


def parse_config(path=None, overrides=()):
    """Build a :class:`RunConfig` from an optional file plus ``key=value`` overrides."""
    values = {}
    if path:
        with open(path) as fh:
            values.update(parse_text(fh.read(), source=str(path)))
    for i, item in enumerate(overrides, 1):
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"override #{i}: expected key=value, got {item!r}")
        values[key.strip()] = _parse_value(key.strip(), value, f"override {key.strip()}")
    for key in REQUIRED:
        if not values.get(key):
            raise ConfigError(f"missing required key {key!r}")
    cfg = RunConfig(**{_attr(k): v for k, v in values.items()})
    _check_consistency(cfg)
    return cfg


def _check_consistency(cfg):
    if cfg.scale_low > cfg.scale_high:
        raise ConfigError("scale_low must not exceed scale_high")
    if cfg.warmup_epochs > cfg.epochs:
        raise ConfigError("warmup_epochs must not exceed epochs")


def dump_config(cfg):
    """Render every field; the output re-parses to an identical config."""
    lines = [f"{_key(f.name)} = {_fmt(getattr(cfg, f.name))}" for f in fields(cfg)]
    return "\n".join(lines) + "\n"
