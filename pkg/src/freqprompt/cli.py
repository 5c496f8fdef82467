"""Command-line entry point: ``freqprompt <subcommand> ...``.

Exit codes: 0 success, 1 processing failure (or a failed check), 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import analysis, fga, fps, fvm, metrics, noise, tensor, wavelet
from .config import PipelineConfig, build_config, load_config_file
from .errors import ConfigError
from .pipeline import metrics_csv, run_pipeline

log = logging.getLogger("freqprompt")


class UsageError(Exception):
    pass


def _add_fps_flags(p, gate_default=None):
    p.add_argument("--window-size", type=int, default=None, help="window side on the frequency map")
    p.add_argument("--stride", type=int, default=None, help="window stride (default: window size)")
    p.add_argument("--top-k", type=int, default=None, help="number of windows kept")
    p.add_argument("--points-per-window", type=int, default=None,
                   help="t: highest and lowest cells taken per window")
    p.add_argument("--tau", type=float, default=None, help="coarse-mask binarization threshold")
    p.add_argument("--gate", type=float, default=gate_default,
                   help="confidence gate gamma in [0, 1]")
    p.add_argument("--soft-threshold", type=float, default=None, help="soft threshold on M^h")
    p.add_argument("--auto-window", action="store_true", default=None,
                   help="pick the window from the image resolution (side / 16)")


def _add_pipeline_flags(p):
    p.add_argument("--config", default=None, help="JSON file with settings (flags win)")
    p.add_argument("--image", action="extend", nargs="+", default=None, dest="images")
    p.add_argument("--coarse", action="extend", nargs="+", default=None)
    p.add_argument("--gt", action="extend", nargs="+", default=None)
    p.add_argument("--out", default=None, help="output directory")
    _add_fps_flags(p)
    p.add_argument("--lambda", type=float, default=None, dest="lam", help="IoU loss weight")
    p.add_argument("--noise", choices=noise.NOISE_KINDS, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--signed", action="store_true", default=None, help="signed M^h instead of magnitudes")
    p.add_argument("--demo", action="store_true", default=None, help="also run the FGA/FVM demo per image")


def pipeline_parser(prog="freqprompt pipeline") -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog=prog, description="batch pipeline with a hashed manifest")
    _add_pipeline_flags(p)
    return p


_FLAG_KEYS = {"images": "images", "coarse": "coarse", "gt": "gt", "out": "out",
              "window_size": "window_size", "stride": "stride", "top_k": "top_k",
              "points_per_window": "points_per_window", "tau": "tau", "gate": "gate",
              "soft_threshold": "soft_threshold", "auto_window": "auto_window",
              "lam": "lambda", "noise": "noise", "sigma": "sigma", "seed": "seed",
              "signed": "signed", "demo": "demo"}


def config_from_namespace(ns, file=None) -> PipelineConfig:
    file = file if file is not None else getattr(ns, "config", None)
    file_values = load_config_file(file) if file else {}
    overrides = {key: getattr(ns, attr) for attr, key in _FLAG_KEYS.items()}
    return build_config(file_values, overrides)


def parse_config(args=None, file=None) -> PipelineConfig:
    """Defaults < config file < flags.  Bad values raise :class:`ConfigError`."""
    ns = pipeline_parser().parse_args([] if args is None else list(args))
    return config_from_namespace(ns, file)


# --- subcommands ----------------------------------------------------------------------

def _gray(path):
    img = tensor.load_image(path)
    return tensor.to_gray(img) if img.ndim == 3 else img


def _emit(obj, out=None):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _fps_settings(ns, side):
    cfg = build_config(overrides={
        "window_size": ns.window_size, "stride": ns.stride, "top_k": ns.top_k,
        "points_per_window": ns.points_per_window, "tau": ns.tau,
        "gate": ns.gate, "soft_threshold": ns.soft_threshold,
    })
    win = fps.window_for_resolution(side) if ns.auto_window else cfg.window_size
    gamma = ns.gate  # None keeps the base, ungated selection
    return cfg, win, gamma


def cmd_dhwt(ns):
    img = _gray(ns.image)
    bands = wavelet.dhwt(img)
    recon = wavelet.idhwt(bands)
    if ns.out:
        tensor.save_tensor(ns.out, bands.stack())
    e_in = float(np.sum(img * img))
    e_out = float(np.sum(bands.stack() ** 2))
    _emit({"input_shape": list(img.shape), "band_shape": list(bands.shape),
           "reconstruction_max_abs_error": float(np.abs(recon - img).max()),
           "energy_relative_error": abs(e_out - e_in) / e_in if e_in else abs(e_out),
           "output": ns.out})
    return 0


def cmd_freqmap(ns):
    m = wavelet.frequency_map(_gray(ns.image), ns.soft_threshold or 0.0, magnitude=not ns.signed)
    if ns.out:
        tensor.save_image(ns.out, m)
    _emit({"shape": list(m.shape), "mean": float(m.mean()), "max": float(m.max()), "output": ns.out})
    return 0


def cmd_fps(ns):
    img = _gray(ns.image)
    cfg, win, gamma = _fps_settings(ns, min(img.shape))
    m = wavelet.frequency_map(img, cfg.soft_threshold)
    coarse = tensor.resize_bilinear(_gray(ns.coarse), *img.shape) if ns.coarse else None
    if coarse is None:
        windows = fps.select_top_k(fps.window_scores(m, win, cfg.stride), cfg.top_k)
        res = fps.FPSResult(windows, fps.PromptSet(()))
    else:
        res = fps.select_prompts(m, coarse, win, cfg.stride, cfg.top_k, cfg.points_per_window,
                                 cfg.tau, gamma)
    _emit(res.to_dict(), ns.out)
    return 0


def cmd_fga_demo(ns):
    img = _gray(ns.image)
    h, w = img.shape
    img = np.pad(img, ((0, -h % ns.patch), (0, -w % ns.patch)), mode="edge")
    win = fps.window_for_resolution(min(h, w)) if ns.auto_window else (ns.window_size or fps.DEFAULT_WINDOW)
    m = wavelet.frequency_map(img[:h, :w])
    windows = fps.select_top_k(fps.window_scores(m, win), ns.top_k or fps.DEFAULT_TOP_K)
    _, summary = fga.fga_demo(img, windows, scale=2, patch=ns.patch, dim=ns.dim,
                              depth=ns.depth, seed=ns.seed)
    _emit(summary, ns.out)
    return 0


def cmd_fvm_demo(ns):
    _, summary = fvm.fvm_demo(ns.seed, tuple(ns.shape))
    _emit(summary, ns.out)
    return 0


def cmd_grad_check(ns):
    reports = {}
    ok = True
    for s in ns.seed:
        rep = fvm.grad_check(seed=s, tolerance=ns.tolerance, step=ns.step)
        reports[str(s)] = rep.to_dict()
        ok &= rep.passed
    _emit({"passed": bool(ok), "tolerance": ns.tolerance, "step": ns.step, "seeds": reports}, ns.out)
    return 0 if ok else 1


def cmd_metrics(ns):
    if len(ns.pred) != len(ns.gt):
        raise UsageError(f"--pred/--coarse and --gt counts differ ({len(ns.pred)} vs {len(ns.gt)})")
    rows = []
    for p_path, g_path in zip(ns.pred, ns.gt):
        gt = _gray(g_path) > 0.5
        pred = _gray(p_path)
        if pred.shape != gt.shape:
            pred = tensor.resize_bilinear(pred, *gt.shape)
        rows.append({"image": Path(p_path).stem, **metrics.metric_suite(pred, gt).as_dict()})
    data = metrics_csv(rows)
    if ns.out:
        Path(ns.out).write_bytes(data)
    else:
        sys.stdout.write(data.decode())
    return 0


def cmd_noise(ns):
    if ns.sigma is not None and ns.sigma < 0:
        raise ConfigError("sigma", f"must be non-negative, got {ns.sigma}")
    img = tensor.load_image(ns.image)
    out = noise.add_noise(img, ns.noise, 0.05 if ns.sigma is None else ns.sigma,
                          seed=ns.seed, index=ns.index)
    tensor.save_image(ns.out, out)
    _emit({"output": ns.out, "kind": ns.noise, "sigma": ns.sigma, "seed": ns.seed, "index": ns.index,
           "mean_abs_change": float(np.abs(out - img).mean())})
    return 0


def cmd_error_analysis(ns):
    img = _gray(ns.image)
    cfg, win, gamma = _fps_settings(ns, min(img.shape))
    coarse = tensor.resize_bilinear(_gray(ns.coarse), *img.shape)
    gt = tensor.resize_bilinear(_gray(ns.gt), *img.shape) > 0.5
    m = wavelet.frequency_map(img, cfg.soft_threshold)
    res = fps.select_prompts(m, coarse, win, cfg.stride, cfg.top_k, cfg.points_per_window, cfg.tau, gamma)
    rep = analysis.prompt_error_analysis(res.prompts, res.windows, fps.binarize(coarse, cfg.tau), gt)
    _emit(rep.to_dict(), ns.out)
    return 0


def cmd_pipeline(ns):
    cfg = config_from_namespace(ns)
    manifest, code = run_pipeline(cfg)
    log.info("processed %d image(s), %d failed", manifest["n_images"], manifest["n_failed"])
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="freqprompt",
                                     description="frequency-prompted segmentation toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dhwt", help="level-1 Haar sub-bands of an image")
    p.add_argument("--image", required=True)
    p.add_argument("--out", help="tensor file for the (h, w, 4) sub-band stack")
    p.set_defaults(func=cmd_dhwt)

    p = sub.add_parser("freqmap", help="high-frequency map M^h")
    p.add_argument("--image", required=True)
    p.add_argument("--out", help=".hfpt tensor or .pgm image")
    p.add_argument("--soft-threshold", type=float, default=0.0)
    p.add_argument("--signed", action="store_true")
    p.set_defaults(func=cmd_freqmap)

    p = sub.add_parser("fps", help="windows and point prompts as JSON")
    p.add_argument("--image", required=True)
    p.add_argument("--coarse", help="coarse probability mask; without it only windows are reported")
    p.add_argument("--out")
    _add_fps_flags(p)
    p.set_defaults(func=cmd_fps)

    p = sub.add_parser("fga-demo", help="seeded adapter forward pass")
    p.add_argument("--image", required=True)
    p.add_argument("--out")
    p.add_argument("--window-size", type=int)
    p.add_argument("--top-k", type=int)
    p.add_argument("--auto-window", action="store_true")
    p.add_argument("--patch", type=int, default=16)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_fga_demo)

    p = sub.add_parser("fvm-demo", help="seeded state-space block forward pass")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shape", type=int, nargs=3, default=[16, 16, 8], metavar=("H", "W", "C"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_fvm_demo)

    p = sub.add_parser("grad-check", help="analytic vs finite-difference gradients")
    p.add_argument("--seed", type=int, nargs="+", default=[0, 1, 2, 3])
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--step", type=float, default=1e-5)
    p.add_argument("--out")
    p.set_defaults(func=cmd_grad_check)

    p = sub.add_parser("metrics", help="five-metric CSV for prediction / ground-truth pairs")
    p.add_argument("--pred", "--coarse", action="extend", nargs="+", required=True, dest="pred")
    p.add_argument("--gt", action="extend", nargs="+", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("noise", help="seeded gaussian or speckle corruption")
    p.add_argument("--image", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--noise", choices=noise.NOISE_KINDS, default="gaussian")
    p.add_argument("--sigma", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--index", type=int, default=0, help="stream index within the seed")
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("error-analysis", help="prompt error counts against ground truth")
    p.add_argument("--image", required=True)
    p.add_argument("--coarse", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out")
    _add_fps_flags(p)
    p.set_defaults(func=cmd_error_analysis)

    p = sub.add_parser("pipeline", help="batch run with a hashed manifest")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return ns.func(ns)
    except (ConfigError, UsageError) as exc:
        print(f"freqprompt {ns.command}: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"freqprompt {ns.command}: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
