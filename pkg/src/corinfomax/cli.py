"""Command-line entry point: ``corinfomax <command> [--config FILE] [--set key=value ...]``.

Exit codes: 0 success, 1 usage/config error, 2 numerical failure, 3 I/O error.
"""

import argparse
import logging
import os
import sys

import numpy as np

from . import data, diagnostics, evaluation, net, train
from .config import ConfigError, dump_config, parse_config
from .densela import NotPositiveDefinite

log = logging.getLogger("corinfomax")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3

DATASET_FILE = "dataset.csv"
CHECKPOINT_FILE = "model.cimx"
METRICS_FILE = "metrics.csv"
COVARIANCE_FILE = "r1.txt"
PROBE_FILE = "probe.csv"


def _path(cfg, name):
    return os.path.join(cfg.out_dir, name)


def _dataset(cfg):
    if cfg.data_path:
        return data.load_table(cfg.data_path)
    return data.gen_blobs(cfg.num_classes, cfg.per_class, cfg.d_in, cfg.separation, cfg.within_std, cfg.seed)


def _split(cfg):
    return data.train_test_split(_dataset(cfg), cfg.test_fraction, cfg.seed)


def cmd_gen_data(cfg):
    path = _path(cfg, DATASET_FILE)
    ds = _dataset(cfg)
    data.save_table(path, ds)
    print(f"wrote {len(ds)} samples ({ds.dim} features, {ds.num_classes} classes) to {path}")


def cmd_pretrain(cfg):
    train_set, _ = _split(cfg)
    params, state, metrics = train.pretrain(train_set, cfg.net_config(), cfg.train_config(), cfg.augment_config())
    net.save_checkpoint(_path(cfg, CHECKPOINT_FILE), params)
    train.write_metrics(_path(cfg, METRICS_FILE), metrics, append=False)
    np.savetxt(_path(cfg, COVARIANCE_FILE), state.r1, fmt="%.17g")
    with open(_path(cfg, "run.cfg"), "w") as fh:
        fh.write(dump_config(cfg))
    if metrics:
        last = metrics[-1]
        print(f"epochs={len(metrics)} loss={last.total_loss:.6g} ldmi={last.ldmi_tracked:.6g} "
              f"min_eig={last.min_eig:.3e} effective_rank={last.effective_rank:.3f}")


def _load_r1(cfg):
    path = _path(cfg, COVARIANCE_FILE)
    return np.atleast_2d(np.loadtxt(path)) if os.path.exists(path) else None


def cmd_probe(cfg):
    train_set, test_set = _split(cfg)
    params = net.load_checkpoint(_path(cfg, CHECKPOINT_FILE), len(cfg.encoder_dims))
    expected = [w.shape for w in net.init_params(cfg.net_config()).weights]
    if [w.shape for w in params.weights] != expected:
        raise ConfigError(f"checkpoint layer shapes do not match the configured network {expected}")
    probe = evaluation.probe_train(evaluation.embed(params, train_set), train_set.labels, cfg.probe_epochs,
                                   cfg.probe_lr, cfg.probe_momentum, cfg.seed, num_classes=train_set.num_classes)
    acc = evaluation.probe_accuracy(probe, evaluation.embed(params, test_set), test_set.labels)
    r1 = _load_r1(cfg)
    min_eig, erank = (float("nan"), float("nan"))
    if r1 is not None:
        spectrum = evaluation.spectrum_report(r1)
        min_eig, erank = spectrum.min_eig, spectrum.effective_rank
    path = _path(cfg, PROBE_FILE)
    new = not os.path.exists(path)
    with open(path, "a") as fh:
        if new:
            fh.write("run_id,probe_accuracy,min_eig,effective_rank\n")
        fh.write(f"{cfg.run_id},{acc!r},{min_eig!r},{erank!r}\n")
    print(f"run_id={cfg.run_id} probe_accuracy={acc:.4f} min_eig={min_eig:.3e} effective_rank={erank:.3f}")


def cmd_gradcheck(cfg):
    cases = diagnostics.gradcheck(cfg.gradcheck_cases, cfg.gradcheck_h, cfg.seed)
    worst = max(c.rel_err for c in cases)
    lines = ["dim,n,lambda,alpha,rel_err,coupled_gap"]
    lines += [f"{c.dim},{c.n},{c.lam!r},{c.alpha!r},{c.rel_err!r},{c.coupled_gap!r}" for c in cases]
    with open(_path(cfg, "gradcheck.csv"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    status = "PASS" if worst <= 1e-6 else "FAIL"
    print(f"max_rel_err={worst:.3e} {status}")
    return EXIT_OK if status == "PASS" else EXIT_NUMERIC


def cmd_spectrum(cfg):
    r1 = _load_r1(cfg)
    if r1 is None:
        raise FileNotFoundError(f"{_path(cfg, COVARIANCE_FILE)} not found; run pretrain first")
    spectrum = evaluation.spectrum_report(r1)
    with open(_path(cfg, "spectrum.csv"), "w") as fh:
        fh.write("index,eigenvalue\n")
        for i, v in enumerate(spectrum.eigenvalues):
            fh.write(f"{i},{float(v)!r}\n")
    print(f"min_eig={spectrum.min_eig:.3e} max_eig={spectrum.max_eig:.3e} effective_rank={spectrum.effective_rank:.3f}")


def cmd_bench_logdet(cfg):
    rows = diagnostics.bench_logdet(cfg.bench_dims, cfg.bench_batch, cfg.bench_repeats, cfg.d_in,
                                    cfg.encoder_dims, cfg.projector_dims[:-1], cfg.seed)
    with open(_path(cfg, "bench_logdet.csv"), "w") as fh:
        fh.write("dim,batch,logdet_seconds,step_seconds,ratio\n")
        for r in rows:
            fh.write(f"{r.dim},{r.batch},{r.logdet_seconds!r},{r.step_seconds!r},{r.ratio!r}\n")
    for r in rows:
        print(f"P={r.dim} N={r.batch} logdet={r.logdet_seconds * 1e3:.3f}ms step={r.step_seconds * 1e3:.3f}ms "
              f"ratio={r.ratio:.4f}")


COMMANDS = {
    "gen-data": cmd_gen_data,
    "pretrain": cmd_pretrain,
    "probe": cmd_probe,
    "gradcheck": cmd_gradcheck,
    "spectrum": cmd_spectrum,
    "bench-logdet": cmd_bench_logdet,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="corinfomax", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
    parser.add_argument("--out", help="shorthand for --set out_dir=DIR")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    overrides = list(args.overrides)
    if args.out:
        overrides.append(f"out_dir={args.out}")
    try:
        cfg = parse_config(args.config, overrides)
        os.makedirs(cfg.out_dir, exist_ok=True)
        code = COMMANDS[args.command](cfg)
        return EXIT_OK if code is None else code
    except NotPositiveDefinite as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:  # config, checkpoint and data-format errors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
