"""Command-line interface: ``classify``, ``features`` and ``gen``.

Exit codes: 0 success, 1 no usable frames, 2 input/format/config error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import fields
from pathlib import Path

from . import __version__
from .geometry import FrameUnusable, joint_angle_deg, rel_distance, slope_deg, standard_distance
from .ingest import (
    RoiGate, StreamSmoother, document_from_frames, iter_jsonl, read_csv, read_input, roi_filter,
    smooth, write_csv, write_jsonl,
)
from .rules import PoseCategory, RuleConfig, classify_sequence
from .skeleton import NUM_KEYPOINTS, ConfigError, FormatError, frame_from_matrix, valid
from .stream import StreamClassifier, classify_frames, per_frame_record, summarize
from . import synth

EXIT_OK = 0
EXIT_NO_USABLE = 1
EXIT_FORMAT = 2


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_FORMAT):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# argument helpers

def _index_list(text: str, n: int) -> tuple[int, ...]:
    try:
        parts = tuple(int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated keypoint indices, got {text!r}")
    if len(parts) != n:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated keypoint indices, got {text!r}")
    for p in parts:
        if not 0 <= p < NUM_KEYPOINTS:
            raise argparse.ArgumentTypeError(f"keypoint index {p} outside 0..{NUM_KEYPOINTS - 1}")
    if len(set(parts)) != n:
        raise argparse.ArgumentTypeError(f"keypoint indices must be distinct, got {text!r}")
    return parts


def _roi(text: str) -> tuple[float, float, float, float]:
    try:
        vals = tuple(float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"--roi expects x0,y0,x1,y1, got {text!r}")
    if len(vals) != 4:
        raise argparse.ArgumentTypeError(f"--roi expects x0,y0,x1,y1, got {text!r}")
    return vals


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _add_input_args(p: argparse.ArgumentParser, smooth_default: int) -> None:
    p.add_argument("inputs", nargs="*", default=["-"],
                   help="OpenPose JSON directory/file, JSON-lines or CSV file; '-' for stdin")
    p.add_argument("--format", choices=("auto", "json", "jsonl", "csv"), default="auto")
    p.add_argument("--fps", type=_positive, default=30.0)
    p.add_argument("--smooth-radius", type=int, default=smooth_default,
                   help=f"temporal smoothing radius in frames (default {smooth_default}, 0 = off)")
    p.add_argument("--roi", type=_roi, metavar="x0,y0,x1,y1",
                   help="only keep skeletons inside this rectangle")
    p.add_argument("--roi-mode", choices=("require_neck_inside", "require_all_valid_inside"),
                   default="require_neck_inside")


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="JSON object of RuleConfig fields")
    for f in fields(RuleConfig):
        kind = int if f.type in (int, "int") else float
        p.add_argument("--" + f.name.replace("_", "-"), dest=f.name, type=kind, default=None,
                       help=f"default {f.default}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="thermopose",
                                     description="Thermal-comfort pose recognition from keypoints.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", help="detect pose episodes and emit JSON-lines records")
    _add_input_args(c, smooth_default=1)
    _add_config_args(c)
    c.add_argument("--per-frame", action="store_true", help="one record per frame with the raw label")
    c.add_argument("--follow", action="store_true",
                   help="process input incrementally and print records as episodes end")
    c.add_argument("--summary", default="stderr", metavar="DEST",
                   help="where the final summary JSON goes: stderr (default), stdout, none or a path")
    c.add_argument("--stream-id", help="stream id used in records (default: the input path)")

    f = sub.add_parser("features", help="per-frame feature CSV")
    _add_input_args(f, smooth_default=0)
    f.add_argument("--epsilon", type=float, default=0.5)
    f.add_argument("--pair", type=lambda s: _index_list(s, 2), action="append", default=[],
                   metavar="a,b", help="relative distance L_s / |a - b|")
    f.add_argument("--slope", type=lambda s: _index_list(s, 2), action="append", default=[],
                   metavar="a,b", help="slope of a->b in degrees")
    f.add_argument("--angle", type=lambda s: _index_list(s, 3), action="append", default=[],
                   metavar="a,v,c", help="joint angle at v in degrees")
    f.add_argument("--speed", type=lambda s: _index_list(s, 1)[0], action="append", default=[],
                   metavar="i", help="speed of keypoint i (px/s and forearms/s)")

    g = sub.add_parser("gen", help="write a synthetic clip (or the whole corpus)")
    g.add_argument("category", help="category name or slug, 'neutral', or 'corpus'")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--fps", type=_positive)
    g.add_argument("--scale", type=_positive, help="forearm length in pixels")
    g.add_argument("--duration", type=_positive, help="seconds")
    g.add_argument("--jitter", type=float)
    g.add_argument("--side", choices=("left", "right"))
    g.add_argument("--posture", choices=("standing", "seated"))
    g.add_argument("--variant")
    g.add_argument("--format", choices=("json", "csv"), default="json")
    g.add_argument("--out", help="output path (directory for json); stdout when omitted")
    return parser


def config_from_args(args) -> RuleConfig:
    cfg = RuleConfig()
    if getattr(args, "config", None):
        try:
            cfg = RuleConfig.load(args.config)
        except OSError as e:
            raise CliError(f"cannot read config {args.config}: {e.strerror}")
    overrides = {f.name: getattr(args, f.name) for f in fields(RuleConfig)
                 if getattr(args, f.name, None) is not None}
    if overrides:
        cfg = RuleConfig.from_dict({**cfg.to_dict(), **overrides})
    return cfg


# ---------------------------------------------------------------------------
# input

def _read(path: str, args, stdin) -> dict:
    try:
        return read_input(path, args.fps, args.format, stream=stdin)
    except OSError as e:
        raise CliError(f"{path}: {e.strerror or e}")
    except UnicodeDecodeError as e:
        raise CliError(f"{path}: not valid UTF-8 ({e.reason})")
    except FormatError:
        raise
    except ValueError as e:
        raise CliError(f"{path}: {e}")


def _prepare(frames, args, epsilon: float) -> list:
    if args.roi is not None:
        gate = RoiGate(*args.roi, mode=args.roi_mode)
        frames = [f for f in frames if roi_filter(f, gate, epsilon)]
    if args.smooth_radius < 0:
        raise CliError("--smooth-radius must be >= 0")
    return smooth(frames, args.smooth_radius, epsilon)


# ---------------------------------------------------------------------------
# classify

def cmd_classify(args, stdout, stderr, stdin) -> int:
    config = config_from_args(args)
    if args.stream_id and len(args.inputs) > 1:
        raise CliError("--stream-id needs a single input")
    all_records = []
    usable = 0
    for path in args.inputs:
        stream_id = args.stream_id or path
        if args.follow:
            recs, n = _follow(path, args, config, stream_id, stdout, stdin)
        else:
            recs, n = _batch(path, args, config, stream_id, stdout, stdin)
        all_records.extend(recs)
        usable += n
    if not args.per_frame:
        summary = summarize(all_records)
    else:
        summary = summarize(r for r in all_records if r.score is not None)
        summary["frames"] = len(all_records)
    summary["usable_frames"] = usable
    _emit_summary(summary, args.summary, stdout, stderr)
    return EXIT_OK if usable else EXIT_NO_USABLE


def _write_records(records, stdout) -> None:
    for r in records:
        stdout.write(r.to_json() + "\n")
    stdout.flush()


def _batch(path, args, config, stream_id, stdout, stdin):
    sequences = _read(path, args, stdin)
    records, usable = [], 0
    for pid in sorted(sequences):
        frames = _prepare(sequences[pid], args, config.epsilon)
        if not frames:
            continue
        if args.per_frame:
            labels = classify_sequence(frames, args.fps, config)
            for i, f in enumerate(frames):
                det = labels.detection(i) if labels.category(i) is not None else None
                usable += det is not None
                records.append(per_frame_record(f, det, stream_id))
        else:
            res = classify_frames(frames, args.fps, config, stream=stream_id)
            usable += res.usable_frames
            records.extend(res.records)
    records.sort(key=lambda r: (r.onset_frame, r.person_id))
    _write_records(records, stdout)
    return records, usable


def _follow(path, args, config, stream_id, stdout, stdin):
    """Incremental path: identical output to the batch path, emitted as it happens."""
    fmt = args.format
    src = stdin if path == "-" else None
    if src is None:
        try:
            src = open(path, encoding="utf-8", newline="")
        except OSError as e:
            raise CliError(f"{path}: {e.strerror}")
    gate = RoiGate(*args.roi, mode=args.roi_mode) if args.roi is not None else None
    if args.smooth_radius < 0:
        raise CliError("--smooth-radius must be >= 0")
    people: dict[int, tuple[StreamSmoother, StreamClassifier]] = {}
    records: list = []

    def person(pid):
        if pid not in people:
            people[pid] = (StreamSmoother(args.smooth_radius, config.epsilon),
                           StreamClassifier(args.fps, config, stream_id, pid))
        return people[pid]

    def feed(frame):
        if gate is not None and not roi_filter(frame, gate, config.epsilon):
            return
        smoother, clf = person(frame.person_id)
        for sf in smoother.push(frame):
            _step(clf, sf)

    def _step(clf, sf):
        if args.per_frame:
            det = clf.classify_frame(sf)
            if det is not None:
                clf.usable_frames += 1
            out = [per_frame_record(sf, det, stream_id)]
        else:
            out = clf.push(sf)
        records.extend(out)
        _write_records(out, stdout)

    try:
        if fmt == "csv" or (fmt == "auto" and str(path).endswith(".csv")):
            for pid, frames in sorted(read_csv(src, args.fps).items()):
                for f in frames:
                    feed(f)
        else:
            for frame_index, doc in enumerate(iter_jsonl(src)):
                for pid, rec in enumerate(doc.people):
                    feed(frame_from_matrix(rec.matrix(), frame_index, args.fps, person_id=pid))
        for pid in sorted(people):
            smoother, clf = people[pid]
            for sf in smoother.flush():
                _step(clf, sf)
            if not args.per_frame:
                out = clf.flush()
                records.extend(out)
                _write_records(out, stdout)
    finally:
        if src is not stdin:
            src.close()
    usable = sum(clf.usable_frames for _, clf in people.values())
    return records, usable


def _emit_summary(summary: dict, dest: str, stdout, stderr) -> None:
    text = json.dumps(summary, sort_keys=True) + "\n"
    if dest == "none":
        return
    if dest == "stderr":
        stderr.write(text)
    elif dest in ("stdout", "-"):
        stdout.write(text)
    else:
        try:
            Path(dest).write_text(text, encoding="utf-8")
        except OSError as e:
            raise CliError(f"cannot write summary to {dest}: {e.strerror}")


# ---------------------------------------------------------------------------
# features

def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "NA"
    return repr(float(v))


def cmd_features(args, stdout, stderr, stdin) -> int:
    eps = args.epsilon
    if not 0.0 <= eps <= 1.0:
        raise CliError(f"--epsilon must lie in [0, 1], got {eps}")
    header = ["frame_index", "person_id", "L_s", "L_s_source"]
    header += [f"lr_{a}_{b}" for a, b in args.pair]
    header += [f"slope_{a}_{b}" for a, b in args.slope]
    header += [f"angle_{a}_{v}_{c}" for a, v, c in args.angle]
    for i in args.speed:
        header += [f"speed_{i}_px", f"speed_{i}_ls"]
    stdout.write(",".join(header) + "\n")
    any_usable = False
    for path in args.inputs:
        sequences = _read(path, args, stdin)
        for pid in sorted(sequences):
            frames = _prepare(sequences[pid], args, eps)
            prev = {}
            for f in frames:
                row = [str(f.frame_index), str(pid)]
                try:
                    ctx = standard_distance(f, eps)
                    any_usable = True
                    row += [_fmt(ctx.standard_distance), ctx.source]
                except FrameUnusable:
                    ctx = None
                    row += ["NA", "NA"]
                for a, b in args.pair:
                    ok = ctx is not None and valid(f, a, eps) and valid(f, b, eps)
                    row.append(_fmt(rel_distance(ctx, a, b)) if ok else "NA")
                for a, b in args.slope:
                    row.append(_guard(lambda: slope_deg(f, a, b, eps)))
                for a, v, c in args.angle:
                    row.append(_guard(lambda: joint_angle_deg(f, a, v, c, eps)))
                for i in args.speed:
                    px = ls = None
                    if valid(f, i, eps):
                        if i in prev:
                            p = prev[i]
                            dt = f.timestamp - p.timestamp
                            px = math.hypot(f.matrix[i, 0] - p.matrix[i, 0],
                                            f.matrix[i, 1] - p.matrix[i, 1]) / dt
                            ls = px / ctx.standard_distance if ctx is not None else None
                        prev[i] = f
                    row += [_fmt(px), _fmt(ls)]
                stdout.write(",".join(row) + "\n")
    return EXIT_OK if any_usable else EXIT_NO_USABLE


def _guard(fn) -> str:
    try:
        return _fmt(fn())
    except ValueError:
        return "NA"


# ---------------------------------------------------------------------------
# gen

def _script_for(args, category, seed):
    over = {k: getattr(args, k) for k in ("fps", "scale", "duration", "jitter", "side", "posture", "variant")
            if getattr(args, k) is not None}
    try:
        return synth.random_script(category, seed, **over)
    except ValueError as e:
        raise CliError(str(e))


def _write_clip(frames, out, fmt, stdout) -> None:
    try:
        if out is None:
            if fmt == "csv":
                write_csv({0: list(frames)}, stdout)
            else:
                write_jsonl([document_from_frames([f]) for f in frames], stdout)
        else:
            synth.write_clip(frames, out, fmt)
    except BrokenPipeError:
        raise
    except OSError as e:
        raise CliError(f"cannot write {out}: {e.strerror}")


def cmd_gen(args, stdout, stderr, stdin) -> int:
    info_stream = stderr if args.out is None else stdout
    if args.category.lower() == "corpus":
        if args.out is None:
            raise CliError("gen corpus needs --out DIR")
        base = Path(args.out)
        try:
            base.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise CliError(f"cannot create {base}: {e.strerror}")
        labels = {}
        for clip in synth.corpus(args.seed):
            name = clip.name + (".csv" if args.format == "csv" else "")
            _write_clip(clip.frames, base / name, args.format, stdout)
            labels[name] = {"expected": clip.expected.value, "confuser": clip.confuser,
                            "script": clip.script.describe()}
        try:
            (base / "labels.json").write_text(json.dumps(labels, indent=2, sort_keys=True) + "\n",
                                              encoding="utf-8")
        except OSError as e:
            raise CliError(f"cannot write labels: {e.strerror}")
        info_stream.write(json.dumps({n: v["expected"] for n, v in labels.items()}, sort_keys=True) + "\n")
        return EXIT_OK
    try:
        category = synth.category_from_name(args.category)
    except ValueError as e:
        raise CliError(str(e))
    if category is PoseCategory.None_:
        category = synth.NEUTRAL
    script = _script_for(args, category, args.seed)
    frames = synth.generate(script)
    _write_clip(frames, args.out, args.format, stdout)
    info = {"label": synth.expected_category(script).value, "frames": len(frames), **script.describe()}
    info_stream.write(json.dumps(info, sort_keys=True) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------

COMMANDS = {"classify": cmd_classify, "features": cmd_features, "gen": cmd_gen}


def main(argv=None, stdout=None, stderr=None, stdin=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    stdin = stdin or sys.stdin
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        code = COMMANDS[args.command](args, stdout, stderr, stdin)
        stdout.flush()
        return code
    except CliError as e:
        stderr.write(f"thermopose: error: {e}\n")
        return e.code
    except (FormatError, ConfigError) as e:
        stderr.write(f"thermopose: error: {e}\n")
        return EXIT_FORMAT
    except BrokenPipeError:
        # reader went away (e.g. `| head`): keep the interpreter's final flush quiet
        if stdout is sys.stdout:
            try:
                os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
            except (OSError, ValueError):
                pass
        return EXIT_OK
