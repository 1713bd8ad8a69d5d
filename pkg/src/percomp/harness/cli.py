"""Command-line entry points.

Subcommands: gen, score, grade, filter, fit, eval, dpo-demo, guide, serve.
Exit codes: 0 success, 2 config error, 3 data error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import sys
from pathlib import Path

import numpy as np

from .. import flowdpo, metrics, pipeline, scenegen, trajgen
from ..config import PipelineConfig
from ..errors import ConfigError, PercompError
from ..frame import Frame
from ..geometry import (
    CameraIntrinsics,
    CameraPose,
    Quad,
    apply_homography,
    homography_pure_rotation,
    warp_image,
)
from ..preference import (
    BTTConfig,
    Dimension,
    RewardParams,
    fit_rewards,
    load_judgments_jsonl,
    predict_accuracy,
)
from .store import AnnotationStore, build_pairs

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3


def _load_config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out_dir"] = args.out
    return cfg.replace(**overrides) if overrides else cfg


def cmd_gen(args) -> int:
    cfg = _load_config(args)
    manifest = pipeline.build_dataset(cfg)
    kept = sum(r.kept for r in manifest.records)
    print(f"wrote {len(manifest.records)} records ({kept} kept) to {cfg.out_dir}")
    return EXIT_OK


def cmd_score(args) -> int:
    cfg = _load_config(args)
    root = Path(args.manifest).parent
    manifest = pipeline.Manifest.read(args.manifest)
    K = cfg.intrinsics()
    rescored = []
    for rec in manifest.records:
        frames = pipeline.load_frames(root, rec)
        traj = pipeline.load_poses(root, rec)
        poses = [
            trajgen.interpolate(traj, k / (len(frames) - 1)) for k in range(len(frames))
        ]
        scene = scenegen.Scene.from_json(
            (root / rec.frame_dir / "scene.json").read_text(encoding="utf-8")
        )
        obs = pipeline.collect_observations(scene, K, poses)
        budget = trajgen.AngleBudget(max(trajgen.max_rotation(traj), 1e-6))
        scores = pipeline.score_sequence(frames, poses, obs, budget, cfg)
        final_raw = pipeline.aggregate_score(scores, cfg.weights)
        grade, std = pipeline.score_to_grade(final_raw)
        rescored.append(
            dataclasses.replace(
                rec, scores=scores, final_raw=final_raw, grade=grade, standardized=std
            )
        )
    out = pipeline.Manifest(rescored)
    out.write(args.manifest)
    print(f"rescored {len(rescored)} records")
    return EXIT_OK


def cmd_grade(args) -> int:
    manifest = pipeline.Manifest.read(args.manifest)
    rewards = None
    if args.rewards:
        rewards = RewardParams.from_json(Path(args.rewards).read_text(encoding="utf-8"))
    graded = []
    for rec in manifest.records:
        raw = rec.final_raw
        if rewards is not None:
            raw = float(np.mean([rewards.get(rec.id, d) for d in Dimension]))
        grade, std = pipeline.score_to_grade(raw)
        graded.append(
            dataclasses.replace(rec, final_raw=raw, grade=grade, standardized=std)
        )
    pipeline.Manifest(graded).write(args.manifest)
    print(f"graded {len(graded)} records")
    return EXIT_OK


def cmd_filter(args) -> int:
    manifest = pipeline.Manifest.read(args.manifest)
    kept = pipeline.filter_manifest(manifest, args.threshold, strict=not args.allow_equal)
    kept.write(args.out_manifest)
    print(f"kept {len(kept.records)} of {len(manifest.records)} records")
    return EXIT_OK


def cmd_fit(args) -> int:
    cfg = _load_config(args)
    judgments = load_judgments_jsonl(args.judgments)
    btt = BTTConfig(theta=cfg.theta, l2=cfg.l2)
    rewards = fit_rewards(judgments, btt)
    Path(args.out_rewards).write_text(rewards.to_json(), encoding="utf-8")
    acc = predict_accuracy(judgments, rewards, cfg.theta, cfg.tie_margin)
    for dim, a in sorted(acc.items(), key=lambda kv: kv[0].value):
        print(f"{dim.value}: training-set accuracy {a:.4f}")
    print(f"wrote rewards for {len(rewards.rewards)} items to {args.out_rewards}")
    return EXIT_OK


def cmd_eval(args) -> int:
    root_p = Path(args.manifest).parent
    root_g = Path(args.reference).parent
    pred = pipeline.Manifest.read(args.manifest)
    gt = pipeline.Manifest.read(args.reference)
    gt_by_id = {r.id: r for r in gt.records}
    reports = []
    for rec in pred.records:
        ref = gt_by_id.get(rec.id)
        if ref is None:
            continue
        pf = pipeline.load_frames(root_p, rec)
        gf = pipeline.load_frames(root_g, ref)
        pt = pipeline.load_poses(root_p, rec)
        gtj = pipeline.load_poses(root_g, ref)
        n = min(len(pf), len(gf))
        if n < 2:
            continue
        pp = [trajgen.interpolate(pt, k / (n - 1)) for k in range(n)]
        gp = [trajgen.interpolate(gtj, k / (n - 1)) for k in range(n)]
        reports.append(metrics.compare_sequences(pf[:n], gf[:n], pp, gp))
    if not reports:
        raise PercompError("no overlapping sequence ids between manifests")
    summary = metrics.MetricReport(
        psnr=float(np.mean([r.psnr for r in reports])),
        ssim=float(np.mean([r.ssim for r in reports])),
        cmm=float(np.mean([r.cmm for r in reports])),
        psnr_exact=all(r.psnr_exact for r in reports),
    )
    out = Path(args.report)
    out.write_text(summary.to_json(), encoding="utf-8")
    print(f"{'metric':<8}{'value':>12}")
    for name, val in (("psnr", summary.psnr), ("ssim", summary.ssim), ("cmm", summary.cmm)):
        print(f"{name:<8}{val:>12.4f}")
    print(f"report written to {out}")
    return EXIT_OK


def cmd_dpo_demo(args) -> int:
    cfg = _load_config(args)
    rng = np.random.default_rng(cfg.seed)
    train = flowdpo.make_synthetic_pairs(
        args.pairs, args.dim, rng, t_low=cfg.dpo_t_low, t_high=cfg.dpo_t_high
    )
    model = flowdpo.LinearVelocityModel.zeros(args.dim)
    dpo = flowdpo.DPOConfig(beta=cfg.dpo_beta)
    fitted, trace = flowdpo.toy_dpo_optimize(train, model, dpo, args.steps)
    out = Path(args.trace)
    with open(out, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["step", "loss"])
        for i, loss in enumerate(trace):
            writer.writerow([i, f"{loss:.10f}"])
    margins = flowdpo.preference_margins(flowdpo.batch_from_model(train, fitted), dpo)
    print(f"loss {trace[0]:.6f} -> {trace[-1]:.6f} over {args.steps} steps")
    print(f"positive preference margins: {float(np.mean(margins > 0)):.1%}")
    print(f"trace written to {out}")
    return EXIT_OK


def cmd_guide(args) -> int:
    cfg = _load_config(args)
    img = Frame.load_png(args.image)
    K = CameraIntrinsics(
        fx=cfg.fx, fy=cfg.fy, cx=img.width / 2.0, cy=img.height / 2.0,
        width=img.width, height=img.height,
    )
    rng = np.random.default_rng(cfg.seed)
    traj = trajgen.sample_away_trajectory(
        CameraPose.identity(), cfg.angle_budget, cfg.steps, rng
    )
    rect = Quad.from_rect(
        img.width * 0.25, img.height * 0.25, img.width * 0.75, img.height * 0.75
    )
    out_dir = Path(args.out or "guide-out")
    out_dir.mkdir(parents=True, exist_ok=True)
    n = args.frames
    for k in range(n):
        pose = trajgen.interpolate(traj, k / (n - 1))
        H = homography_pure_rotation(K, pose.rotation)
        view = warp_image(img, H, (img.width, img.height), scenegen.BACKGROUND_COLOR)
        box = apply_homography(H, rect)
        _draw_quad(view, box)
        view.save_png(out_dir / f"{k:04d}.png")
    print(f"wrote {n} guided frames to {out_dir}")
    return EXIT_OK


def _draw_quad(frame: Frame, quad: Quad, color=(255, 40, 40)) -> None:
    from PIL import Image, ImageDraw

    im = Image.fromarray(frame.pixels, mode="RGB")
    draw = ImageDraw.Draw(im)
    pts = [tuple(p) for p in quad.corners]
    draw.polygon(pts, outline=color, width=2)
    frame.pixels = np.asarray(im, dtype=np.uint8)


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    root = Path(args.manifest).parent
    manifest = pipeline.Manifest.read(args.manifest)
    pairs = build_pairs(manifest, root)
    if not pairs:
        raise PercompError(
            "no pairable sequences (pairs require identical first frames; "
            "generate with variants > 1)"
        )
    store = AnnotationStore(args.store, pairs)
    app = create_app(store, root, ui_dir=args.ui)
    print(f"serving {len(pairs)} pairs on http://{args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="percomp", description="perspective-composition toolkit"
    )
    p.add_argument("--config", help="JSON config file", default=None)
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--out", default=None, help="override output directory")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("gen", help="generate, score, and filter a dataset")

    sp = sub.add_parser("score", help="re-score an existing manifest")
    sp.add_argument("manifest")

    sp = sub.add_parser("grade", help="re-grade a manifest (optionally on fitted rewards)")
    sp.add_argument("manifest")
    sp.add_argument("--rewards", default=None, help="rewards JSON from `fit`")

    sp = sub.add_parser("filter", help="filter a manifest by standardized score")
    sp.add_argument("manifest")
    sp.add_argument("out_manifest")
    sp.add_argument("--threshold", type=int, default=70)
    sp.add_argument("--allow-equal", action="store_true", help="keep >= instead of >")

    sp = sub.add_parser("fit", help="fit pairwise-preference rewards")
    sp.add_argument("judgments", help="judgments JSONL")
    sp.add_argument("out_rewards", help="output rewards JSON")

    sp = sub.add_parser("eval", help="metrics against a reference manifest")
    sp.add_argument("manifest")
    sp.add_argument("reference")
    sp.add_argument("--report", default="report.json")

    sp = sub.add_parser("dpo-demo", help="toy preference optimization demo")
    sp.add_argument("--pairs", type=int, default=256)
    sp.add_argument("--dim", type=int, default=8)
    sp.add_argument("--steps", type=int, default=60)
    sp.add_argument("--trace", default="dpo_trace.csv")

    sp = sub.add_parser("guide", help="guidance-box overlay sequence for an image")
    sp.add_argument("image", help="source PNG")
    sp.add_argument("--frames", type=int, default=12)

    sp = sub.add_parser("serve", help="run the annotation backend")
    sp.add_argument("manifest")
    sp.add_argument("--store", default="judgments.jsonl")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8000)
    sp.add_argument("--ui", default=None, help="built frontend directory to serve")

    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "gen": cmd_gen,
        "score": cmd_score,
        "grade": cmd_grade,
        "filter": cmd_filter,
        "fit": cmd_fit,
        "eval": cmd_eval,
        "dpo-demo": cmd_dpo_demo,
        "guide": cmd_guide,
        "serve": cmd_serve,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except PercompError as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except OSError as e:
        print(f"io error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
