"""Pipeline command line: prepare -> features -> split -> train -> predict ->
evaluate -> analyze -> serve.

Every command is deterministic given (inputs, config, seed) and drops a
run_manifest.json describing exactly what produced its outputs. Exit codes:
2 config, 3 data, 4 convergence, 5 external tool.
"""

import argparse
import concurrent.futures
import hashlib
import json
import os
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, alignment, dataset, elementary, features, fusion, kernels
from .dataset import EncoderError, ManifestError
from .frameio import VideoFormatError, read_raw_yuv, read_y4m
from .fusion import ConvergenceError
from .stats import mos as mos_mod
from .stats import report as report_mod
from .stats.inference import cronbach_alpha

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_CONVERGENCE = 4
EXIT_EXTERNAL = 5


class ConfigError(ValueError):
    pass


def _atomic_write(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path, doc) -> None:
    _atomic_write(path, (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode())


def _hash_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _run_manifest(out_dir, command: str, args: argparse.Namespace, inputs: dict) -> None:
    doc = {
        "command": command,
        "args": {k: v for k, v in vars(args).items() if k != "func"},
        "seed": getattr(args, "seed", None),
        "inputs": inputs,
        "config_hash": hashlib.sha256(
            json.dumps(inputs, sort_keys=True).encode()
        ).hexdigest(),
        "versions": {
            "tovqa": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "kernel_backend": kernels.backend_name(),
        },
    }
    _write_json(Path(out_dir) / "run_manifest.json", doc)


def _load_clip(path, scene=None):
    path = Path(path)
    data = path.read_bytes()
    if path.suffix == ".y4m":
        return read_y4m(data)
    if path.suffix in (".yuv", ".raw"):
        if scene is None or scene.width is None or scene.height is None:
            raise ConfigError(
                f"{path}: raw YUV needs declared width/height in the scene metadata"
            )
        fps = Fraction(scene.fps).limit_denominator(1001) if scene.fps else Fraction(10)
        return read_raw_yuv(data, scene.width, scene.height, fps)
    raise ConfigError(
        f"{path}: unsupported extension {path.suffix!r}; convert to .y4m or .yuv "
        "with your encoder first"
    )


# ---------------------------------------------------------------- prepare


def cmd_prepare(args) -> int:
    manifest = dataset.load_manifest(args.manifest)
    template = args.encoder_template
    for placeholder in ("{input}", "{output}", "{crf}"):
        if placeholder not in template:
            raise ConfigError(f"encoder template is missing {placeholder}")
    crf_list = [int(c) for c in args.crf.split(",") if c]
    existing = {(a.content_id, a.crf) for a in manifest.assets}
    jobs = []
    for scene in manifest.scenes:
        missing = [c for c in crf_list if (scene.content_id, c) not in existing]
        if missing:
            jobs.append((scene, missing))
    failures = []
    new_assets = []
    with concurrent.futures.ThreadPoolExecutor(max_workers=args.jobs) as pool:
        futs = {
            pool.submit(
                dataset.encode_variants, scene, missing, template, args.media_out
            ): scene
            for scene, missing in jobs
        }
        for fut in concurrent.futures.as_completed(futs):
            scene = futs[fut]
            try:
                new_assets.extend(fut.result())
            except (EncoderError, ManifestError) as exc:
                failures.append(f"{scene.content_id}: {exc}")
    manifest.assets.extend(sorted(new_assets, key=lambda a: a.asset_id))
    if not manifest.encoder_version:
        manifest.encoder_version = dataset.probe_encoder_version(template)
    manifest.validate()
    dataset.save_manifest(manifest, args.manifest)
    out_dir = Path(args.media_out)
    _run_manifest(out_dir, "prepare", args, {"manifest": str(args.manifest)})
    print(f"encoded {len(new_assets)} new asset(s), {len(failures)} failure(s)")
    for f in failures:
        print(f"  FAILED {f}", file=sys.stderr)
    return EXIT_EXTERNAL if failures else EXIT_OK


# ---------------------------------------------------------------- features


def _feature_one(manifest, asset, out_dir, config, do_elementary):
    scene = manifest.scene(asset.content_id)
    ref_bytes = Path(scene.reference_path).read_bytes()
    dist_bytes = Path(asset.path).read_bytes()
    src_hash = features.content_hash(ref_bytes, dist_bytes, config)
    csv_path = Path(out_dir) / f"{asset.asset_id}.features.csv"
    sidecar = csv_path.with_suffix(csv_path.suffix + ".json")
    if csv_path.exists() and sidecar.exists():
        try:
            if json.loads(sidecar.read_text()).get("source_hash") == src_hash:
                return "skipped"
        except json.JSONDecodeError:
            pass
    ref_clip = _load_clip(scene.reference_path, scene)
    dist_clip = _load_clip(asset.path, scene)
    cf = features.extract_clip_features(ref_clip, dist_clip, config)
    features.write_feature_csv(
        csv_path, cf, config,
        ref_id=scene.content_id, dist_id=asset.asset_id, source_hash=src_hash,
    )
    if do_elementary:
        _write_elementary(Path(out_dir) / f"{asset.asset_id}.elementary.csv",
                          ref_clip, dist_clip)
    return "computed"


def _write_elementary(path, ref_clip, dist_clip):
    import csv as _csv

    rows = []
    for rf, df in zip(ref_clip.frames, dist_clip.frames):
        ry = np.asarray(rf.y, dtype=np.float64)
        dy = np.asarray(df.y, dtype=np.float64)
        p = elementary.psnr_for_table(elementary.psnr(ry, dy))
        s = elementary.ssim(ry, dy)
        try:
            ms = elementary.ms_ssim(ry, dy)
        except ValueError:
            ms = ""
        rows.append((p, s, ms))
    buf = []
    buf.append(("frame_idx", "psnr", "ssim", "ms_ssim"))
    for i, (p, s, ms) in enumerate(rows):
        buf.append((i, p, s, ms))
    pooled_ms = [r[2] for r in rows if r[2] != ""]
    buf.append((
        "pooled",
        float(np.mean([r[0] for r in rows])),
        float(np.mean([r[1] for r in rows])),
        float(np.mean(pooled_ms)) if pooled_ms else "",
    ))
    with open(path, "w", newline="") as fh:
        _csv.writer(fh).writerows(buf)


def cmd_features(args) -> int:
    manifest = dataset.load_manifest(args.manifest)
    config = features.DEFAULT_CONFIG
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    assets = manifest.distorted_assets()
    if args.assets:
        wanted = set(args.assets.split(","))
        assets = [a for a in assets if a.asset_id in wanted]
    errors = []
    counts = {"computed": 0, "skipped": 0}
    with concurrent.futures.ThreadPoolExecutor(max_workers=args.jobs) as pool:
        futs = {
            pool.submit(
                _feature_one, manifest, a, out_dir, config, args.elementary
            ): a
            for a in assets
        }
        for fut in concurrent.futures.as_completed(futs):
            a = futs[fut]
            try:
                counts[fut.result()] += 1
            except (ValueError, VideoFormatError, OSError) as exc:
                errors.append(f"{a.asset_id}: {exc}")
    _run_manifest(out_dir, "features", args, {
        "manifest": str(args.manifest),
        "feature_config": config.version,
    })
    print(
        f"features: {counts['computed']} computed, {counts['skipped']} up to date, "
        f"{len(errors)} error(s)"
    )
    for e in sorted(errors):
        print(f"  FAILED {e}", file=sys.stderr)
    return EXIT_DATA if errors else EXIT_OK


# ---------------------------------------------------------------- split


def cmd_split(args) -> int:
    manifest = dataset.load_manifest(args.manifest)
    result = dataset.split_by_scene(manifest, args.fraction, args.seed)
    out = Path(args.out)
    _write_json(out, {"seed": args.seed, "fraction": args.fraction, **result.to_dict()})
    _run_manifest(out.parent, "split", args, {"manifest": str(args.manifest)})
    print(f"split: {len(result.train)} train / {len(result.val)} validation scenes")
    return EXIT_OK


# ---------------------------------------------------------------- training


def _pooled_features(features_dir, asset_id):
    path = Path(features_dir) / f"{asset_id}.features.csv"
    if not path.exists():
        raise ManifestError(f"no feature file for asset {asset_id!r} at {path}")
    cf, sidecar = features.read_feature_csv(path)
    return cf.pooled, sidecar


def _labels_for(manifest, args):
    if args.ratings:
        records = mos_mod.read_rating_csv(args.ratings)
        if args.object_checks:
            checks = _read_checks(args.object_checks)
            records, excluded = mos_mod.screen_participants(records, checks)
            if excluded:
                print(f"screened out {len(excluded)} participant(s)")
        rows = dataset.join_labels(
            manifest, records, min_raters=args.min_raters, dmos=args.dmos
        )
        labels = {r.asset_id: r.label.mos_vmaf for r in rows if not r.flagged}
        flagged = {r.asset_id: r.reason for r in rows if r.flagged}
        return labels, flagged
    if manifest.labels:
        return dict(manifest.labels), {}
    raise ConfigError("no labels: pass --ratings or put labels into the manifest")


def _read_checks(path):
    import csv as _csv

    out = []
    with open(path, newline="") as fh:
        reader = _csv.reader(fh)
        header = next(reader)
        if header != ["participant_id", "asset_id", "passed"]:
            raise ConfigError(f"unexpected object-check header {header}")
        for pid, aid, passed in reader:
            out.append((pid, aid, passed == "1"))
    return out


def _build_training_rows(manifest, labels, features_dir, content_ids):
    rows = []
    version = None
    for asset in dataset.assets_for(manifest, content_ids):
        if asset.asset_id not in labels:
            continue
        pooled, sidecar = _pooled_features(features_dir, asset.asset_id)
        version = sidecar["feature_config"]["version"]
        rows.append(
            fusion.TrainingRow(
                clip_id=asset.asset_id,
                features=pooled,
                label=labels[asset.asset_id],
            )
        )
    return rows, version


def cmd_train(args) -> int:
    manifest = dataset.load_manifest(args.manifest)
    labels, flagged = _labels_for(manifest, args)
    split_doc = json.loads(Path(args.split).read_text())
    train_rows, version = _build_training_rows(
        manifest, labels, args.features_dir, split_doc["train"]
    )
    val_rows, _ = _build_training_rows(
        manifest, labels, args.features_dir, split_doc["val"]
    )
    if len(train_rows) < 4:
        raise ManifestError(f"only {len(train_rows)} labeled training rows")
    ts = fusion.TrainingSet.from_rows(train_rows)
    if args.grid_search:
        folds = dataset.make_scene_folds(
            dataset.DatasetManifest(
                scenes=[s for s in manifest.scenes if s.content_id in set(split_doc["train"])],
                assets=[a for a in manifest.assets if a.content_id in set(split_doc["train"])],
            ),
            k=args.folds,
            seed=args.seed,
        )
        hp = fusion.grid_search(ts, folds)
        print(f"grid search picked C={hp.c} gamma={hp.gamma} epsilon={hp.epsilon}")
    else:
        hp = fusion.SvrHyperparams(c=args.c, gamma=args.gamma, epsilon=args.epsilon)
    model = fusion.train(ts, hp, feature_config_version=version)
    out = Path(args.out)
    _atomic_write(out, fusion.save_model(model))
    report = None
    if val_rows:
        preds = {r.clip_id: fusion.predict(model, r.features) for r in val_rows}
        truth = {r.clip_id: r.label for r in val_rows}
        if len(preds) >= 3:
            report = alignment.evaluate(preds, truth).to_dict()
            _write_json(out.with_suffix(".validation.json"), report)
            print(
                f"validation: rmse={report['rmse']:.3f} mad={report['mad']:.3f} "
                f"rho={report['spearman_rho']:.3f} (n={report['n']})"
            )
    _run_manifest(out.parent, "train", args, {
        "manifest": str(args.manifest),
        "split": _hash_file(args.split),
        "n_train": len(train_rows),
        "n_val": len(val_rows),
        "flagged_assets": flagged,
    })
    print(f"model written to {out}")
    return EXIT_OK


def cmd_predict(args) -> int:
    manifest = dataset.load_manifest(args.manifest)
    model = (
        fusion.load_default_model()
        if args.model == "default"
        else fusion.load_model(Path(args.model).read_bytes())
    )
    assets = manifest.distorted_assets()
    if args.assets:
        wanted = set(args.assets.split(","))
        assets = [a for a in assets if a.asset_id in wanted]
    preds = {}
    for asset in assets:
        pooled, sidecar = _pooled_features(args.features_dir, asset.asset_id)
        preds[asset.asset_id] = fusion.predict(
            model, pooled, feature_config_version=sidecar["feature_config"]["version"]
        )
    out = Path(args.out)
    _write_json(out, {"model": str(args.model), "predictions": preds})
    _run_manifest(out.parent, "predict", args, {"manifest": str(args.manifest)})
    print(f"predicted {len(preds)} asset(s) -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------- evaluate


def cmd_evaluate(args) -> int:
    preds_doc = json.loads(Path(args.predictions).read_text())
    preds = preds_doc.get("predictions", preds_doc)
    labels = json.loads(Path(args.labels).read_text())
    labels = labels.get("labels", labels)
    try:
        report = alignment.evaluate(
            {k: float(v) for k, v in preds.items()},
            {k: float(v) for k, v in labels.items()},
        )
    except KeyError as exc:
        raise ManifestError(f"prediction/label key mismatch: {exc}") from exc
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "alignment_report.json", report.to_dict())
    manifest = dataset.load_manifest(args.manifest) if args.manifest else None
    lines = ["asset_id,mos,prediction,residual,category,crf"]
    for asset_id in sorted(report.residuals):
        category = crf = ""
        if manifest is not None:
            try:
                a = manifest.asset(asset_id)
                category = manifest.scene(a.content_id).category
                crf = a.crf
            except KeyError:
                pass
        lines.append(
            f"{asset_id},{labels[asset_id]!r},{preds[asset_id]!r},"
            f"{report.residuals[asset_id]!r},{category},{crf}"
        )
    _atomic_write(out_dir / "residuals.csv", ("\n".join(lines) + "\n").encode())
    outliers = alignment.outlier_report(report, min(args.top_outliers, report.n))
    _write_json(out_dir / "outliers.json", [
        {"asset_id": a, "delta_mos_minus_prediction": d} for a, d in outliers
    ])
    if args.compare:
        other = json.loads(Path(args.compare).read_text())
        other_report = alignment.AlignmentReport(
            mad=other["mad"], mse=other["mse"], rmse=other["rmse"],
            pearson_r=other["pearson_r"], spearman_rho=other["spearman_rho"],
            n=other["n"], residuals=other["residuals"],
            correlation_defined=other.get("correlation_defined", True),
        )
        comparison = alignment.compare_models(other_report, report)
        _write_json(out_dir / "comparison.json", comparison)
        for metric, entry in comparison.items():
            if "improvement_pct" in entry:
                print(
                    f"{metric}: {entry['old']:.3f} -> {entry['new']:.3f} "
                    f"({entry['improvement_pct']:+.1f}%)"
                )
    _run_manifest(out_dir, "evaluate", args, {
        "predictions": _hash_file(args.predictions),
        "labels": _hash_file(args.labels),
    })
    print(
        f"alignment: rmse={report.rmse:.3f} mad={report.mad:.3f} "
        f"r={report.pearson_r:.3f} rho={report.spearman_rho:.3f} n={report.n}"
    )
    return EXIT_OK


# ---------------------------------------------------------------- analyze


def cmd_analyze(args) -> int:
    manifest = dataset.load_manifest(args.manifest)
    records = mos_mod.read_rating_csv(args.ratings)
    excluded = set()
    if args.object_checks:
        checks = _read_checks(args.object_checks)
        records, excluded = mos_mod.screen_participants(
            records, checks, fail_threshold=args.check_fail_threshold
        )
    if not records:
        raise ManifestError("no rating records after screening")
    rows = dataset.join_labels(manifest, records, min_raters=args.min_raters)

    # participants x items matrix for reliability (cell = mean over scenarios)
    items = sorted({(r.dimension, r.item_id) for r in records})
    participants = sorted({r.participant_id for r in records})
    cells = {}
    for r in records:
        cells.setdefault((r.participant_id, (r.dimension, r.item_id)), []).append(r.value)
    matrix = np.full((len(participants), len(items)), np.nan)
    for i, pid in enumerate(participants):
        for j, item in enumerate(items):
            vals = cells.get((pid, item))
            if vals:
                matrix[i, j] = float(np.mean(vals))
    alpha = cronbach_alpha(matrix)

    by_crf = {}
    by_cat = {}
    for r in rows:
        asset = manifest.asset(r.asset_id)
        by_crf.setdefault(asset.crf, []).append(r.label.mos_vmaf)
        cat = manifest.scene(asset.content_id).category
        by_cat.setdefault(cat, []).append(r.label.mos_vmaf)

    compression = report_mod.compression_effect_report(by_crf, alpha=args.alpha)
    environment = None
    if len(by_cat) >= 2:
        environment = report_mod.environment_effect_report(by_cat, alpha=args.alpha)

    doc = {
        "n_participants": len(participants),
        "excluded_participants": sorted(excluded),
        "cronbach_alpha": alpha.to_dict(),
        "mos": {
            r.asset_id: {
                "mos_raw": r.label.mos_raw, "mos_vmaf": r.label.mos_vmaf,
                "n_raters": r.label.n_raters, "std": r.label.std,
                "ci95_half_width": r.label.ci95_half_width,
                "flagged": r.flagged, "reason": r.reason,
            }
            for r in rows
        },
        "compression_effect": compression,
        "environment_effect": environment,
    }
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "analysis.json", doc)

    lines = [
        f"participants: {len(participants)} (excluded: {len(excluded)})",
        f"cronbach alpha: {alpha.value:.4f}",
        f"compression omnibus [{compression['method']}]: "
        f"{compression['omnibus']['statistic']}="
        f"{compression['omnibus']['value']:.3f} p={compression['omnibus'].get('p_value', 1):.2e}",
    ]
    for pw in compression["pairwise"]:
        lines.append(
            f"  CRF {pw['pair'][0]} vs {pw['pair'][1]}: p={pw['p_adjusted']:.2e} "
            f"delta={pw['cliffs_delta']:+.3f}"
            + (" *" if pw["significant"] else "")
        )
    _atomic_write(out_dir / "analysis.txt", ("\n".join(lines) + "\n").encode())
    _run_manifest(out_dir, "analyze", args, {"ratings": _hash_file(args.ratings)})
    print("\n".join(lines))
    return EXIT_OK


# ---------------------------------------------------------------- serve


def cmd_serve(args) -> int:
    import uvicorn

    from .study import StudyConfig, build_app_from_config

    manifest = dataset.load_manifest(args.manifest)
    overrides = {}
    if args.study_config:
        overrides = json.loads(Path(args.study_config).read_text())
    cfg = StudyConfig(
        manifest=manifest,
        media_root=args.media_root,
        server_secret=os.environ.get("TOVQA_SECRET", overrides.get("server_secret", "change-me")),
        operator_token=os.environ.get(
            "TOVQA_OPERATOR_TOKEN", overrides.get("operator_token", "change-me-too")
        ),
        **{
            k: v
            for k, v in overrides.items()
            if k not in ("server_secret", "operator_token")
        },
    )
    app = build_app_from_config(cfg, log_path=args.log, frontend_dir=args.frontend)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tovqa", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="encode missing CRF variants")
    p.add_argument("--manifest", required=True)
    p.add_argument("--media-out", required=True)
    p.add_argument("--encoder-template", default=dataset.DEFAULT_ENCODER_TEMPLATE)
    p.add_argument("--crf", default=",".join(map(str, dataset.CRF_LEVELS)))
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("features", help="extract fusion features per pair")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--assets", default="")
    p.add_argument("--elementary", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("split", help="scene-disjoint stratified split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--fraction", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="retrain the fusion model")
    p.add_argument("--manifest", required=True)
    p.add_argument("--features-dir", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--ratings", default="")
    p.add_argument("--object-checks", default="")
    p.add_argument("--dmos", action="store_true")
    p.add_argument("--min-raters", type=int, default=dataset.DEFAULT_MIN_RATERS)
    p.add_argument("--grid-search", action="store_true")
    p.add_argument("--folds", type=int, default=3)
    p.add_argument("--c", type=float, default=4.0)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score assets with a model")
    p.add_argument("--manifest", required=True)
    p.add_argument("--features-dir", required=True)
    p.add_argument("--model", required=True, help="model path or 'default'")
    p.add_argument("--assets", default="")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="model-human alignment report")
    p.add_argument("--predictions", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--manifest", default="")
    p.add_argument("--compare", default="", help="baseline alignment_report.json")
    p.add_argument("--top-outliers", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("analyze", help="statistical validation battery")
    p.add_argument("--manifest", required=True)
    p.add_argument("--ratings", required=True)
    p.add_argument("--object-checks", default="")
    p.add_argument("--check-fail-threshold", type=float, default=0.5)
    p.add_argument("--min-raters", type=int, default=dataset.DEFAULT_MIN_RATERS)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("serve", help="run the subjective-study service")
    p.add_argument("--manifest", required=True)
    p.add_argument("--media-root", default=".")
    p.add_argument("--study-config", default="")
    p.add_argument("--frontend", default="")
    p.add_argument("--log", default="study_log.jsonl")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8123)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_serve)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except EncoderError as exc:
        print(f"external tool failed: {exc}", file=sys.stderr)
        return EXIT_EXTERNAL
    except (ManifestError, VideoFormatError, ValueError, KeyError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
