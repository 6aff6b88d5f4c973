"""Command-line entry point: generate, analyze, blowup, selftest."""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import BlowupConfig, ClassifyConfig, VerdictConfig, classify_points, inductive_blowup
from .grassmann import Plane
from .jets import JetPolynomial, OrderSpec
from .sets import (GraphSet, Modulus, PointCloud, SetOracle, convex_boundary, fat_cantor, hesitating_function,
                   plane_with_holes)

EXIT_OK, EXIT_BAD_INPUT, EXIT_SELFTEST = 0, 2, 3
CLOUD_RESOLUTION_FACTOR = 8


class InputError(Exception):
    """Bad user input; reported as one line with exit code 2."""


# JSON helpers

def clean_json(obj):
    """Plain JSON types with non-finite floats mapped to null."""
    if isinstance(obj, dict):
        return {str(k): clean_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean_json(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean_json(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(clean_json(obj), indent=2, sort_keys=True) + "\n")


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read JSON {path}: {exc}") from exc


def timestamp() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


# generators

@dataclass
class Generated:
    oracle: SetOracle
    points: np.ndarray
    manifest: dict


def _plane(cfg: dict) -> Plane:
    n = int(cfg.get("n", 2))
    axes = cfg.get("axes", list(range(int(cfg.get("m", 1)))))
    if not axes or max(axes) >= n or len(set(axes)) != len(axes):
        raise InputError(f"invalid axes {axes} for n = {n}")
    return Plane.coordinate(n, axes)


def parse_terms(plane: Plane, terms: dict) -> JetPolynomial:
    """{"2": 1.0} or {"1,1": [0.5]} keyed by comma-separated multi-indices."""
    parsed = {}
    for key, val in terms.items():
        idx = tuple(int(t) for t in str(key).split(","))
        if len(idx) != plane.dim or min(idx) < 0:
            raise InputError(f"multi-index {key} does not match plane dimension {plane.dim}")
        parsed[idx] = val
    degree = max((sum(t) for t in parsed), default=0)
    return JetPolynomial.from_terms(plane, max(degree, 1), parsed)


def _ball(rng, m, count):
    x = rng.normal(size=(count, m))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return x * rng.uniform(0, 1, size=(count, 1)) ** (1.0 / m)


def _ground_truth(jet: JetPolynomial) -> dict:
    origin = np.zeros(jet.m)
    tensors = [jet.derivative_tensor(origin, i).tolist() for i in range(jet.degree + 1)]
    return {"jet": jet.to_json(), "derivatives": tensors}


def _modulus(spec) -> Modulus:
    try:
        return Modulus.from_config(spec if spec is not None else "log")
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"invalid modulus {spec!r}: {exc}") from exc


def generate(cfg: dict, seed: int) -> Generated:
    kind = cfg.get("kind")
    count = int(cfg.get("samples", 10_000))
    if count < 0:
        raise InputError("samples must be nonnegative")
    rng = np.random.default_rng(seed)
    info: dict = {}
    if kind in ("graph", "line"):
        S = _plane(cfg)
        if S.codim == 0:
            raise InputError("graphs need m < n")
        radius = float(cfg.get("radius", 1.0))
        if "power" in cfg:
            if S.codim != 1:
                raise InputError("power graphs need codimension one")
            p = float(cfg["power"])
            oracle = GraphSet(S, lambda c, p=p: np.linalg.norm(c, axis=-1, keepdims=True) ** p, None, radius)
        else:
            jet = parse_terms(S, cfg.get("terms", {}))
            oracle = GraphSet(S, jet, None, radius)
            info["ground_truth"] = _ground_truth(jet)
        chi = radius * _ball(rng, S.dim, count)
        pts = oracle.lift(chi)
    elif kind == "convex_boundary":
        params = {k: v for k, v in cfg.items() if k not in ("kind", "samples", "body", "seed")}
        try:
            oracle = convex_boundary(cfg.get("body", "ellipse"), **params)
        except (TypeError, KeyError, ValueError) as exc:
            raise InputError(f"invalid convex body: {exc}") from exc
        pts = oracle.uniform_boundary(count, seed)
    elif kind == "plane_with_holes":
        S = _plane(cfg)
        holes = [(np.asarray(c, dtype=float), float(r)) for c, r in cfg.get("holes", [])]
        if cfg.get("pattern") == "dyadic":
            ratio = float(cfg.get("ratio", 0.25))
            e1 = np.eye(S.dim)[0]
            holes += [(2.0 ** -j * e1, ratio * 4.0 ** -j) for j in range(1, int(cfg.get("count", 20)) + 1)]
        oracle = plane_with_holes(S, holes)
        pts = oracle.sample_ball(np.zeros(S.ambient_dim), float(cfg.get("radius", 1.0)), count, seed)
        info["holes"] = len(holes)
    elif kind == "fat_cantor":
        oracle = fat_cantor(int(cfg.get("m", 1)), _modulus(cfg.get("omega")), int(cfg.get("depth", 12)), seed)
        pts = oracle.sample_points(count, seed)
        info.update(measure=oracle.measure, gap_count=oracle.gap_count)
    elif kind == "hesitating":
        omega = _modulus(cfg.get("omega"))
        cantor = fat_cantor(1, omega, int(cfg.get("depth", 16)), seed)
        f = hesitating_function(cantor, omega, int(cfg.get("k", 2)))
        oracle = GraphSet(Plane.coordinate(2, [0]), f.graph_function())
        x = np.sort(rng.uniform(0.0, 1.0, count))
        pts = np.stack([x, f.value(x[:, None])], axis=1) if count else np.zeros((0, 2))
        info.update(measure=cantor.measure, gap_count=cantor.gap_count, gamma_hat=f.gamma_hat)
    else:
        raise InputError(f"unknown generator kind {kind!r}")
    manifest = {"kind": kind, "parameters": cfg, "seed": seed, "count": int(len(pts)),
                "n": int(oracle.ambient_dim), **info}
    return Generated(oracle, np.asarray(pts, dtype=float).reshape(-1, oracle.ambient_dim), manifest)


# set and point inputs

def read_points(path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise InputError(f"no such file: {path}")
    if path.suffix == ".json":
        data = read_json(path)
        data = data.get("points", data) if isinstance(data, dict) else data
        arr = np.asarray(data, dtype=float)
        return arr.reshape(len(arr), -1) if arr.size else np.zeros((0, 0))
    try:
        with path.open() as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if rows and not _numeric(rows[0]):
        rows = rows[1:]
    try:
        arr = np.array([[float(v) for v in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise InputError(f"non-numeric entry in {path}: {exc}") from exc
    return arr if arr.size else np.zeros((0, 0))


def _numeric(row) -> bool:
    try:
        [float(v) for v in row]
        return True
    except ValueError:
        return False


def load_set(path, seed: int) -> tuple[SetOracle, np.ndarray, dict]:
    """Generator config (exact oracle), manifest (its cloud) or CSV/binary cloud."""
    path = Path(path)
    if path.suffix == ".json":
        cfg = read_json(path)
        if "kind" in cfg and "files" not in cfg:
            gen = generate(cfg, int(cfg.get("seed", seed)))
            sample = gen.points if len(gen.points) else gen.oracle.sample_ball(
                np.zeros(gen.oracle.ambient_dim), 1.0, 4096, seed)
            return gen.oracle, sample, {"source": "generator", "manifest": gen.manifest}
        if "files" in cfg:
            return load_set(path.parent / cfg["files"]["csv"], seed)
        raise InputError(f"{path} is neither a generator config nor a manifest")
    if path.suffix == ".bin":
        manifest = path.with_name("manifest.json")
        if not manifest.exists():
            raise InputError("binary clouds need manifest.json alongside")
        n = int(read_json(manifest)["n"])
        pts = np.fromfile(path, dtype="<f8").reshape(-1, n)
    else:
        pts = read_points(path)
    if len(pts) == 0:
        raise InputError(f"empty point cloud {path}")
    cloud = PointCloud(pts)
    return cloud, pts, {"source": "cloud", "path": str(path), "count": len(pts), "resolution": cloud.resolution}


def check_bbox(points: np.ndarray, sample: np.ndarray) -> None:
    if len(points) == 0:
        return
    if points.shape[1] != sample.shape[1]:
        raise InputError(f"points have dimension {points.shape[1]}, set has {sample.shape[1]}")
    lo, hi = sample.min(axis=0), sample.max(axis=0)
    pad = 0.1 * np.maximum(hi - lo, 1e-12)
    bad = np.any((points < lo - pad) | (points > hi + pad), axis=1)
    if bad.any():
        raise InputError(f"point {int(np.argmax(bad))} lies outside the set's bounding box inflated by 10%")


def cloud_levels(oracle: SetOracle, r0: float, levels: int) -> int:
    """Keep the finest radius well above a cloud's sample spacing."""
    if not oracle.resolution:
        return levels
    floor = CLOUD_RESOLUTION_FACTOR * oracle.resolution
    fit = int(math.floor(math.log2(r0 / floor))) + 1 if r0 > floor else 0
    return max(5, min(levels, fit))


# config layering

DEFAULTS = {"seed": 0, "budget": 512, "levels": 8, "order": "2,0", "r0": 0.25, "workers": 1,
            "verdict": VerdictConfig().to_json()}


def effective_config(args, extra: dict | None = None) -> dict:
    cfg = dict(DEFAULTS)
    cfg.update(extra or {})
    if getattr(args, "config", None):
        cfg.update(read_json(args.config))
    for key in ("seed", "budget", "levels", "order", "r0", "workers"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    try:
        cfg["order"] = str(OrderSpec.parse(str(cfg["order"])))
        cfg["verdict"] = VerdictConfig.from_json(cfg.get("verdict")).to_json()
    except (ValueError, TypeError) as exc:
        raise InputError(f"malformed config: {exc}") from exc
    if int(cfg["levels"]) < 5:
        raise InputError("levels must be at least 5")
    return cfg


def out_dir(args) -> Path:
    path = Path(args.out or ".")
    path.mkdir(parents=True, exist_ok=True)
    return path


# commands

def cmd_generate(args) -> int:
    if not args.config:
        raise InputError("generate needs --config with a generator description")
    cfg = read_json(args.config)
    seed = int(args.seed if args.seed is not None else cfg.get("seed", 0))
    if args.budget is not None:
        cfg["samples"] = args.budget
    gen = generate(cfg, seed)
    out = out_dir(args)
    header = [f"x{i}" for i in range(gen.oracle.ambient_dim)]
    with (out / "set.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows([[repr(float(v)) for v in row] for row in gen.points])
    gen.points.astype("<f8").tofile(out / "set.bin")
    manifest = dict(gen.manifest, files={"csv": "set.csv", "bin": "set.bin"}, dtype="<f8", timestamp=timestamp())
    dump_json(manifest, out / "manifest.json")
    print(f"wrote {len(gen.points)} points to {out}")
    return EXIT_OK


def decay_rows(point_id: int, reports: dict) -> list:
    rows = []
    for stage, rep in sorted(reports.items()):
        for r, v, e, nv in zip(rep.radii, rep.values, rep.errors, rep.normalized):
            rows.append([point_id, stage, repr(float(r)), repr(float(v)), repr(float(e)), repr(float(nv))])
    return rows


def write_decay_csv(path: Path, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["point_id", "stage", "r", "value", "error", "normalized"])
        w.writerows(rows)


def cmd_analyze(args) -> int:
    cfg = effective_config(args)
    set_path = args.set or cfg.get("set")
    points_path = args.points or cfg.get("points")
    if not set_path or not points_path:
        raise InputError("analyze needs --set and --points")
    oracle, sample, source = load_set(set_path, int(cfg["seed"]))
    points = read_points(points_path)
    check_bbox(points, sample)
    levels = cloud_levels(oracle, float(cfg["r0"]), int(cfg["levels"]))
    cfg["levels_effective"] = levels
    ccfg = ClassifyConfig(float(cfg["r0"]), levels, int(cfg["budget"]), int(cfg["seed"]),
                          verdict=VerdictConfig.from_json(cfg["verdict"]))
    spec = OrderSpec.parse(cfg["order"])
    results = classify_points(oracle, points, spec, ccfg, int(cfg["workers"])) if len(points) else []
    out = out_dir(args)
    report = {"config": cfg, "input": source, "timestamp": timestamp(),
              "results": [dict(c.to_json(), point_id=i) for i, c in enumerate(results)]}
    dump_json(report, out / "classification.json")
    rows = [row for i, c in enumerate(results) for row in decay_rows(i, c.reports)]
    write_decay_csv(out / "decay.csv", rows)
    for i, c in enumerate(results):
        print(f"point {i}: m={c.tangent_dim} pointwise={c.pointwise} strong={c.strong} ({c.status})")
    return EXIT_OK


def cmd_blowup(args) -> int:
    cfg = effective_config(args, {"steps": 8, "s0": 0.1})
    set_path = args.set or cfg.get("set")
    if not set_path:
        raise InputError("blowup needs --set")
    oracle, sample, source = load_set(set_path, int(cfg["seed"]))
    try:
        point = np.array([float(v) for v in str(args.point or cfg.get("point", "")).split(",")])
    except ValueError as exc:
        raise InputError(f"malformed --point: {exc}") from exc
    check_bbox(point[None], sample)
    k = OrderSpec.parse(cfg["order"]).k
    bcfg = BlowupConfig(s0=float(cfg["s0"]), steps=int(cfg["steps"]), budget=int(cfg["budget"]),
                        seed=int(cfg["seed"]), tangent_r0=float(cfg["r0"]), tangent_levels=int(cfg["levels"]),
                        verdict=VerdictConfig.from_json(cfg["verdict"]))
    res = inductive_blowup(oracle, point, k, config=bcfg)
    out = out_dir(args)
    dump_json({"config": cfg, "input": source, "timestamp": timestamp(), "result": res.to_json()},
              out / "blowup.json")
    n = oracle.ambient_dim
    with (out / "fields.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["stage", "s", "grid_index"] + [f"x{i}" for i in range(n)] + ["dist_set", "dist_graph"])
        from .analysis.blowup import probe_grid
        grid = probe_grid(n, bcfg.grid_per_axis)
        for st in res.stages:
            for stage, s, g, d1, d2 in st.field_rows:
                w.writerow([stage, repr(s), g] + [repr(float(v)) for v in grid[g]] + [repr(d1), repr(d2)])
    rows = []
    for st in res.stages:
        rows += decay_rows(0, {f"stage{st.order}_convergence": st.convergence,
                               f"stage{st.order}_residual": st.residual})
    write_decay_csv(out / "decay.csv", rows)
    for st in res.stages:
        print(f"stage {st.order}: {st.verdict} P = {st.jet.homogeneous_component(st.order).terms()}")
    print(res.status)
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .selftest import FULL, REDUCED, run_suite, summary
    from dataclasses import replace

    base = FULL if args.full else REDUCED
    st = replace(base, seed=args.seed if args.seed is not None else base.seed,
                 budget=args.budget if args.budget is not None else base.budget)
    only = None
    if args.only:
        try:
            only = {int(v) for v in args.only.split(",")}
        except ValueError as exc:
            raise InputError(f"malformed --only: {exc}") from exc

    def log(line, seconds):
        print(f"{line}  ({seconds:.1f} s)", file=sys.stderr, flush=True)

    results = run_suite(st, only, log if args.verbose else None)
    text = summary(results)
    sys.stdout.write(text)
    if args.out:
        out = out_dir(args)
        (out / "selftest.txt").write_text(text)
        dump_json({"settings": st.to_json(), "timestamp": timestamp(),
                   "results": [{"criterion": r.number, "name": r.name, "passed": r.passed, "detail": r.detail}
                               for r in results]}, out / "selftest.json")
    return EXIT_OK if all(r.passed for r in results) else EXIT_SELFTEST


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ptdiff", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config; flags override its entries")
        p.add_argument("--seed", type=int)
        p.add_argument("--budget", type=int, help="samples per ball (generate: number of points)")
        p.add_argument("--levels", type=int, help="dyadic levels per scan")
        p.add_argument("--order", help="k or k,alpha")
        p.add_argument("--out", help="output directory")

    p = sub.add_parser("generate", help="write a generator's point cloud and manifest")
    common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("analyze", help="classify points of a set")
    common(p)
    p.add_argument("--set", help="generator config, manifest, CSV or binary cloud")
    p.add_argument("--points", help="CSV or JSON list of points")
    p.add_argument("--r0", type=float, help="coarsest radius")
    p.add_argument("--workers", type=int, help="threads for per-point analysis")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("blowup", help="run the inductive blow-up at one point")
    common(p)
    p.add_argument("--set", help="generator config, manifest, CSV or binary cloud")
    p.add_argument("--point", help="comma-separated coordinates")
    p.add_argument("--r0", type=float, help="coarsest radius for the tangent precondition")
    p.set_defaults(func=cmd_blowup)

    p = sub.add_parser("selftest", help="run the acceptance checks")
    common(p)
    p.add_argument("--full", action="store_true", help="full sizes instead of the reduced suite")
    p.add_argument("--only", help="comma-separated criterion numbers")
    p.add_argument("--verbose", action="store_true", help="progress and timings on stderr")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}".replace("\n", " "), file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
