"""Command-line driver: synth, match, fit-ddf, warp, eval, roundtrip, ablate.

Exit codes: 0 success, 1 algorithmic failure (no pairs above threshold,
diverged optimization, bad input data), 2 usage error.  Every run that
produces a directory also writes a run_record.json capturing the resolved
configuration, per-stage timings, and output paths.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import __version__
from .core import BinaryMask, RoiPair, RoiPairing, mask_centroid
from .ddf import (FitConfig, all_voxel_points, ddf_to_roi_pairs, fit_ddf,
                  load_ddf, reconstruct_ddf_from_pairs, save_ddf, warp_mask)
from .errors import RoiRegError
from .interchange import read_case, save_case
from .metrics import evaluate
from .pipeline import FilterConfig, match_cases
from .synthetic import SyntheticSpec, affine_about_center, generate_case

PAIRING_NAME = "pairing.json"
LOSS_HISTORY_NAME = "loss_history.csv"
RUN_RECORD_NAME = "run_record.json"
_F32 = np.dtype("<f4")


class UsageError(Exception):
    """Bad flag values; maps to exit code 2."""


@dataclass(frozen=True)
class RunRecord:
    """Reproducibility sidecar: what ran, with what, how long, writing what."""

    command: str
    config_snapshot: Dict[str, object]
    timings_ms: Dict[str, float]
    outputs: Tuple[str, ...]
    engine_version: str

    def to_json_dict(self) -> dict:
        return {
            "command": self.command,
            "config_snapshot": self.config_snapshot,
            "timings_ms": self.timings_ms,
            "outputs": list(self.outputs),
            "engine_version": self.engine_version,
        }


class _Timer:
    def __init__(self):
        self._t0 = time.perf_counter()
        self._last = self._t0
        self.stages: Dict[str, float] = {}

    def lap(self, name: str) -> None:
        now = time.perf_counter()
        self.stages[name] = round((now - self._last) * 1000.0, 3)
        self._last = now

    def done(self) -> Dict[str, float]:
        self.stages["total"] = round((time.perf_counter() - self._t0) * 1000.0, 3)
        return self.stages


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n",
                    encoding="utf-8")


def _write_record(out_dir: Path, command: str, snapshot: Dict[str, object],
                  timer: _Timer, outputs: Sequence[Path]) -> Path:
    record_path = out_dir / RUN_RECORD_NAME
    record = RunRecord(command=command, config_snapshot=snapshot,
                       timings_ms=timer.done(),
                       outputs=tuple(str(p) for p in outputs),
                       engine_version=__version__)
    _write_json(record_path, record.to_json_dict())
    return record_path


def _parse_ints(text: str, what: str) -> Tuple[int, ...]:
    try:
        values = tuple(int(tok) for tok in text.split(",") if tok.strip() != "")
    except ValueError as exc:
        raise UsageError(f"bad {what} {text!r}: {exc}") from exc
    if not values:
        raise UsageError(f"{what} must be a nonempty comma list")
    return values


def _parse_floats(text: str, what: str) -> Tuple[float, ...]:
    try:
        values = tuple(float(tok) for tok in text.split(",") if tok.strip() != "")
    except ValueError as exc:
        raise UsageError(f"bad {what} {text!r}: {exc}") from exc
    if not values:
        raise UsageError(f"{what} must be a nonempty comma list")
    return values


def _parse_dims(text: str) -> Tuple[int, ...]:
    dims = _parse_ints(text, "dims")
    if len(dims) not in (2, 3) or any(n < 1 for n in dims):
        raise UsageError(f"dims must be 2 or 3 positive integers, got {text!r}")
    return dims


# -- pairing persistence -----------------------------------------------------

def save_pairing(out_dir: Union[str, Path], pairing: RoiPairing,
                 moving_dims: Sequence[int], fixed_dims: Sequence[int],
                 spacing: Sequence[float], method: str,
                 stats: Optional[dict] = None) -> List[Path]:
    """Write pairing.json plus one raw mask file per pair side."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    entries = []
    for k, pair in enumerate(pairing.pairs):
        refs = (f"pair_{k:03d}_moving.raw", f"pair_{k:03d}_fixed.raw")
        for ref, mask in zip(refs, (pair.moving_mask, pair.fixed_mask)):
            path = out_dir / ref
            path.write_bytes(mask.bits.astype(np.uint8).tobytes())
            written.append(path)
        entries.append({
            "moving_index": pair.moving_index,
            "fixed_index": pair.fixed_index,
            "similarity": pair.similarity,
            "moving_mask_ref": refs[0],
            "fixed_mask_ref": refs[1],
        })
    doc = {
        "version": 1,
        "epsilon_used": pairing.epsilon_used,
        "method": method,
        "moving_dims": list(moving_dims),
        "fixed_dims": list(fixed_dims),
        "spacing": list(spacing),
        "pairs": entries,
        "stats": stats or {},
    }
    path = out_dir / PAIRING_NAME
    _write_json(path, doc)
    written.append(path)
    return written


def load_pairing(pairing_dir: Union[str, Path],
                 ) -> Tuple[RoiPairing, Tuple[int, ...], Tuple[float, ...]]:
    """Read a pairing directory back into memory.

    Returns (pairing, moving dims, spacing).  Raises RoiRegError subclasses
    on malformed content.
    """
    from .errors import (ManifestParseError, MissingFileError,
                         SizeMismatchError)

    pairing_dir = Path(pairing_dir)
    doc_path = pairing_dir / PAIRING_NAME
    if not doc_path.is_file():
        raise MissingFileError(f"no {PAIRING_NAME} in {pairing_dir}")
    try:
        doc = json.loads(doc_path.read_bytes())
        moving_dims = tuple(int(n) for n in doc["moving_dims"])
        fixed_dims = tuple(int(n) for n in doc["fixed_dims"])
        spacing = tuple(float(s) for s in doc["spacing"])
        epsilon = float(doc["epsilon_used"])
        entries = doc["pairs"]
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise ManifestParseError(f"bad {PAIRING_NAME}: {exc}") from exc

    def read_mask(ref: str, dims: Tuple[int, ...]) -> BinaryMask:
        path = pairing_dir / ref
        if not path.is_file():
            raise MissingFileError(f"pairing references missing file {path}")
        raw = path.read_bytes()
        expected = int(np.prod(dims))
        if len(raw) != expected:
            raise SizeMismatchError(
                f"{path} holds {len(raw)} bytes, expected {expected}")
        return BinaryMask(np.frombuffer(raw, dtype=np.uint8).reshape(dims) != 0)

    pairs = []
    try:
        for entry in entries:
            pairs.append(RoiPair(
                moving_index=int(entry["moving_index"]),
                fixed_index=int(entry["fixed_index"]),
                similarity=float(entry["similarity"]),
                moving_mask=read_mask(str(entry["moving_mask_ref"]), moving_dims),
                fixed_mask=read_mask(str(entry["fixed_mask_ref"]), fixed_dims)))
    except (KeyError, TypeError) as exc:
        raise ManifestParseError(f"bad pair entry in {PAIRING_NAME}: {exc}") from exc
    return RoiPairing(tuple(pairs), epsilon_used=epsilon), moving_dims, spacing


# -- command implementations -------------------------------------------------

def _translation_vector(args, ndim: int) -> Tuple[float, ...]:
    # Flags are named by world axis; storage order is (z,)y,x.
    if ndim == 2:
        return (args.ty, args.tx)
    return (args.tz, args.ty, args.tx)


def cmd_synth(args) -> int:
    timer = _Timer()
    dims = _parse_dims(args.dims)
    spacing = _parse_floats(args.spacing, "spacing") if args.spacing else None
    if spacing is not None and len(spacing) != len(dims):
        raise UsageError("spacing must have one value per axis")
    if args.shapes < 1:
        raise UsageError("--shapes must be >= 1")
    kinds = tuple(k.strip() for k in args.kinds.split(",") if k.strip())
    size_frac = _parse_floats(args.size_frac, "size-frac")
    if len(size_frac) != 2:
        raise UsageError("--size-frac takes exactly two values: lo,hi")
    transform = affine_about_center(dims, _translation_vector(args, len(dims)),
                                    rot_deg=args.rot_deg, scale=args.scale)
    try:
        spec = SyntheticSpec(
            dims=dims, num_shapes=args.shapes, shape_kinds=kinds,
            transform=transform, feature_channels=args.channels,
            feature_noise_sigma=args.noise, seed=args.seed, spacing=spacing,
            feature_stride=args.stride, size_frac=size_frac)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    moving, fixed, truth = generate_case(spec)
    timer.lap("generate")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_case(out_dir / "moving", "moving", *moving)
    save_case(out_dir / "fixed", "fixed", *fixed)
    truth_path = out_dir / "ground_truth.json"
    _write_json(truth_path, truth.to_json_dict())
    timer.lap("write")

    snapshot = {
        "dims": args.dims, "shapes": args.shapes, "kinds": args.kinds,
        "tx": args.tx, "ty": args.ty, "tz": args.tz,
        "rot_deg": args.rot_deg, "scale": args.scale, "noise": args.noise,
        "channels": args.channels, "stride": args.stride, "seed": args.seed,
        "spacing": args.spacing, "size_frac": args.size_frac,
        "out": str(out_dir),
    }
    _write_record(out_dir, "synth", snapshot, timer,
                  [out_dir / "moving", out_dir / "fixed", truth_path])
    print(f"synth: wrote case pair under {out_dir}")
    return 0


def cmd_match(args) -> int:
    timer = _Timer()
    try:
        filter_cfg = FilterConfig(
            min_area=args.min_area, max_area=args.max_area,
            max_overlap=args.max_overlap, min_pred_iou=args.min_pred_iou,
            min_stability=args.min_stability)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if not 0.0 <= args.epsilon <= 1.0:
        raise UsageError("--epsilon must be in [0, 1]")

    moving = read_case(args.moving_dir)
    fixed = read_case(args.fixed_dir)
    timer.lap("read")

    pairing, stats = match_cases(moving, fixed, filter_cfg,
                                 epsilon=args.epsilon, method=args.assignment,
                                 min_link_iou=args.min_link_iou)
    timer.lap("match")
    if len(pairing) == 0:
        print(f"match: no ROI pairs above epsilon={args.epsilon}",
              file=sys.stderr)
        return 1

    out_dir = Path(args.out)
    written = save_pairing(out_dir, pairing, moving[0].dims, fixed[0].dims,
                           moving[0].spacing, args.assignment, asdict(stats))
    timer.lap("write")
    snapshot = {
        "moving_dir": str(args.moving_dir), "fixed_dir": str(args.fixed_dir),
        "epsilon": args.epsilon, "min_area": args.min_area,
        "max_area": args.max_area, "max_overlap": args.max_overlap,
        "min_pred_iou": args.min_pred_iou, "min_stability": args.min_stability,
        "assignment": args.assignment, "min_link_iou": args.min_link_iou,
        "out": str(out_dir),
    }
    _write_record(out_dir, "match", snapshot, timer, written)
    print(f"match: {len(pairing)} pairs above epsilon={args.epsilon} "
          f"-> {out_dir}")
    return 0


def _fit_config(args) -> FitConfig:
    try:
        return FitConfig(lam=args.lam, iterations=args.iters,
                         step_size=args.step, convergence_tol=args.tol,
                         dice_smooth=args.dice_smooth)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _write_loss_history(path: Path, history) -> None:
    lines = ["iter,total,roi_mse,roi_dice,smoothness"]
    for i, entry in enumerate(history):
        lines.append(f"{i},{entry.total:.10g},{entry.roi_mse:.10g},"
                     f"{entry.roi_dice:.10g},{entry.smoothness:.10g}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_fit_ddf(args) -> int:
    timer = _Timer()
    cfg = _fit_config(args)
    pairing, moving_dims, spacing = load_pairing(args.pairing_dir)
    if args.top_k is not None:
        if args.top_k < 1:
            raise UsageError("--top-k must be >= 1")
        pairing = pairing.top_k(args.top_k)
    timer.lap("read")

    ddf, history = fit_ddf(pairing, cfg)
    timer.lap("fit")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_ddf(out_dir, ddf, spacing)
    history_path = out_dir / LOSS_HISTORY_NAME
    _write_loss_history(history_path, history)
    timer.lap("write")

    snapshot = {
        "pairing_dir": str(args.pairing_dir), "lambda": args.lam,
        "iters": args.iters, "step": args.step, "tol": args.tol,
        "dice_smooth": args.dice_smooth, "top_k": args.top_k,
        "out": str(out_dir),
    }
    _write_record(out_dir, "fit-ddf", snapshot, timer,
                  [out_dir / "ddf.raw", out_dir / "ddf.json", history_path])
    print(f"fit-ddf: {len(history)} loss evaluations, final total "
          f"{history[-1].total:.6g} -> {out_dir}")
    return 0


def cmd_warp(args) -> int:
    timer = _Timer()
    ddf, spacing = load_ddf(args.ddf_dir)
    input_path = Path(args.input)
    if input_path.is_dir():
        image, _, masks = read_case(input_path)
        if args.mask_index is not None:
            if not 0 <= args.mask_index < len(masks):
                raise UsageError(f"--mask-index out of range [0, {len(masks)})")
            grid = masks.masks[args.mask_index].bits.astype(np.float64)
        else:
            grid = image.data.astype(np.float64)
    else:
        if args.dims is None:
            raise UsageError("--dims is required when warping a raw file")
        dims = _parse_dims(args.dims)
        raw = input_path.read_bytes()
        expected = int(np.prod(dims)) * 4
        if len(raw) != expected:
            raise UsageError(
                f"{input_path} holds {len(raw)} bytes, expected {expected}")
        grid = np.frombuffer(raw, dtype=_F32).astype(np.float64).reshape(dims)
    timer.lap("read")

    warped = warp_mask(grid, ddf)
    timer.lap("warp")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    raw_path = out_dir / "warped.raw"
    raw_path.write_bytes(np.ascontiguousarray(warped, dtype=_F32).tobytes())
    meta_path = out_dir / "warped.json"
    _write_json(meta_path, {"dims": list(warped.shape), "spacing": list(spacing)})
    timer.lap("write")

    snapshot = {
        "ddf_dir": str(args.ddf_dir), "input": str(args.input),
        "mask_index": args.mask_index, "dims": args.dims, "out": str(out_dir),
    }
    _write_record(out_dir, "warp", snapshot, timer, [raw_path, meta_path])
    print(f"warp: wrote {raw_path}")
    return 0


def cmd_eval(args) -> int:
    pairing, moving_dims, spacing = load_pairing(args.pairing_dir)
    ddf = None
    if args.ddf is not None:
        ddf, ddf_spacing = load_ddf(args.ddf)
        spacing = ddf_spacing
    if args.spacing:
        spacing = _parse_floats(args.spacing, "spacing")
        if len(spacing) != len(moving_dims):
            raise UsageError("spacing must have one value per axis")
    report = evaluate(pairing, ddf, spacing)
    text = report.to_json()
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    return 0


def cmd_roundtrip(args) -> int:
    ddf, _ = load_ddf(args.ddf_dir)
    points = all_voxel_points(ddf.dims)
    pairing = ddf_to_roi_pairs(ddf, points)
    recon = reconstruct_ddf_from_pairs(pairing, ddf.dims)

    covered = np.zeros(ddf.dims, dtype=bool)
    for pair in pairing.pairs:
        voxel = tuple(np.rint(mask_centroid(pair.moving_mask)).astype(np.int64))
        covered[voxel] = True
    diff = np.abs(recon.vectors - ddf.vectors)[:, covered]
    report = {
        "num_points": int(points.shape[0]),
        "num_pairs": len(pairing),
        "num_skipped": int(points.shape[0] - len(pairing)),
        "max_abs_error": float(diff.max()) if diff.size else None,
        "mean_abs_error": float(diff.mean()) if diff.size else None,
        "per_component_max": [float(v) for v in diff.max(axis=1)] if diff.size else None,
    }
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    return 0


def cmd_ablate(args) -> int:
    timer = _Timer()
    try:
        filter_cfg = FilterConfig(
            min_area=args.min_area, max_area=args.max_area,
            max_overlap=args.max_overlap, min_pred_iou=args.min_pred_iou,
            min_stability=args.min_stability)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    cfg = _fit_config(args)

    moving = read_case(args.moving_dir)
    fixed = read_case(args.fixed_dir)
    timer.lap("read")

    rows = []
    if args.sweep == "k":
        values = [tok.strip() for tok in args.values.split(",") if tok.strip()]
        if not values:
            raise UsageError("empty sweep list")
        pairing, _ = match_cases(moving, fixed, filter_cfg,
                                 epsilon=args.epsilon, method=args.assignment,
                                 min_link_iou=args.min_link_iou)
        if len(pairing) == 0:
            print(f"ablate: no ROI pairs above epsilon={args.epsilon}",
                  file=sys.stderr)
            return 1
        for tok in values:
            if tok == "all":
                k = len(pairing)
            else:
                try:
                    k = int(tok)
                except ValueError as exc:
                    raise UsageError(f"bad k value {tok!r}") from exc
                if k < 1:
                    raise UsageError("k values must be >= 1 or 'all'")
            truncated = pairing.top_k(min(k, len(pairing)))
            ddf, _ = fit_ddf(truncated, cfg)
            report = evaluate(truncated, ddf, moving[0].spacing)
            rows.append((tok, report.mean_dice, report.tre))
    else:
        epsilons = _parse_floats(args.values, "epsilon sweep")
        for eps in epsilons:
            if not 0.0 <= eps <= 1.0:
                raise UsageError("epsilon values must be in [0, 1]")
            pairing, _ = match_cases(moving, fixed, filter_cfg, epsilon=eps,
                                     method=args.assignment,
                                     min_link_iou=args.min_link_iou)
            if len(pairing) == 0:
                print(f"ablate: no ROI pairs above epsilon={eps}",
                      file=sys.stderr)
                return 1
            ddf, _ = fit_ddf(pairing, cfg)
            report = evaluate(pairing, ddf, moving[0].spacing)
            rows.append((f"{eps:g}", report.mean_dice, report.tre))
    timer.lap("sweep")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "ablate.csv"
    lines = ["setting,mean_dice,tre"]
    for setting, dice, tre in rows:
        tre_text = f"{tre:.6f}" if tre is not None else ""
        lines.append(f"{setting},{dice:.6f},{tre_text}")
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    timer.lap("write")

    snapshot = {
        "moving_dir": str(args.moving_dir), "fixed_dir": str(args.fixed_dir),
        "sweep": args.sweep, "values": args.values, "epsilon": args.epsilon,
        "min_area": args.min_area, "max_area": args.max_area,
        "max_overlap": args.max_overlap, "min_pred_iou": args.min_pred_iou,
        "min_stability": args.min_stability, "assignment": args.assignment,
        "min_link_iou": args.min_link_iou, "lambda": args.lam,
        "iters": args.iters, "step": args.step, "tol": args.tol,
        "dice_smooth": args.dice_smooth, "out": str(out_dir),
    }
    _write_record(out_dir, "ablate", snapshot, timer, [csv_path])
    print(f"ablate: {len(rows)} settings -> {csv_path}")
    return 0


# -- parser ------------------------------------------------------------------

def _add_filter_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epsilon", type=float, default=0.8,
                   help="minimum similarity for a pair (default 0.8)")
    p.add_argument("--min-area", type=int, default=200)
    p.add_argument("--max-area", type=int, default=7000)
    p.add_argument("--max-overlap", type=float, default=0.8)
    p.add_argument("--min-pred-iou", type=float, default=0.90)
    p.add_argument("--min-stability", type=float, default=0.90)
    p.add_argument("--assignment", choices=("greedy", "optimal"),
                   default="greedy")
    p.add_argument("--min-link-iou", type=float, default=0.5,
                   help="2D-to-3D slice stacking link threshold")


def _add_fit_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda", dest="lam", type=float, default=1.0,
                   help="smoothness weight (default 1.0)")
    p.add_argument("--iters", type=int, default=300)
    p.add_argument("--step", type=float, default=0.1)
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--dice-smooth", type=float, default=1e-5)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roireg",
        description="Mask-pair image registration: match candidate ROIs "
                    "between two images, then fit a dense displacement field.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a ground-truth synthetic case pair")
    p.add_argument("--out", default="synth_case")
    p.add_argument("--dims", required=True, help="grid size, e.g. 64,64")
    p.add_argument("--shapes", type=int, default=3)
    p.add_argument("--kinds", default="disc", help="comma list: disc,box,ellipse")
    p.add_argument("--tx", type=float, default=0.0)
    p.add_argument("--ty", type=float, default=0.0)
    p.add_argument("--tz", type=float, default=0.0)
    p.add_argument("--rot-deg", type=float, default=0.0)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--channels", type=int, default=None)
    p.add_argument("--stride", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spacing", default=None)
    p.add_argument("--size-frac", default="0.14,0.20",
                   help="shape size bounds as fractions of the smallest axis")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("match", help="match candidate ROIs between two cases")
    p.add_argument("moving_dir")
    p.add_argument("fixed_dir")
    p.add_argument("--out", default="match_out")
    _add_filter_flags(p)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("fit-ddf", help="fit a displacement field to a pairing")
    p.add_argument("pairing_dir")
    p.add_argument("--out", default="ddf_out")
    p.add_argument("--top-k", type=int, default=None,
                   help="keep only the k most similar pairs")
    _add_fit_flags(p)
    p.set_defaults(func=cmd_fit_ddf)

    p = sub.add_parser("warp", help="warp a case image, mask, or raw grid")
    p.add_argument("ddf_dir")
    p.add_argument("input", help="case directory or raw float32 file")
    p.add_argument("--mask-index", type=int, default=None)
    p.add_argument("--dims", default=None, help="required for raw file input")
    p.add_argument("--out", default="warp_out")
    p.set_defaults(func=cmd_warp)

    p = sub.add_parser("eval", help="score a pairing, optionally through a field")
    p.add_argument("pairing_dir")
    p.add_argument("--ddf", default=None)
    p.add_argument("--spacing", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("roundtrip",
                       help="sample a field to mask pairs and rebuild it")
    p.add_argument("ddf_dir")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_roundtrip)

    p = sub.add_parser("ablate", help="sweep pair count or threshold settings")
    p.add_argument("moving_dir")
    p.add_argument("fixed_dir")
    p.add_argument("--sweep", choices=("k", "epsilon"), required=True)
    p.add_argument("--values", required=True,
                   help="comma list; k sweep accepts integers or 'all'")
    p.add_argument("--out", default="ablate_out")
    _add_filter_flags(p)
    _add_fit_flags(p)
    p.set_defaults(func=cmd_ablate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except RoiRegError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
