"""Command-line entry point.

Exit status: 0 on success, 1 on validation or hypothesis errors, 2 on
numerical failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import theorems
from .domain import make_grid
from .errors import PlapError
from .experiment import classify_initial, compute_constants, load_config, run_experiment


def _config(args):
    if args.config is None:
        raise PlapError("--config is required", module="cli-io")
    return load_config(args.config).with_overrides(args.grid_cells, args.seed)


def _out(args, default=None):
    out = Path(args.out) if args.out else default
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_constants(args):
    cfg = _config(args)
    wc = compute_constants(cfg)
    sys.stdout.write(wc.to_text())
    out = _out(args)
    if out is not None:
        (out / "constants.json").write_text(wc.to_json())
        (out / "constants.txt").write_text(wc.to_text())


def cmd_classify(args):
    cfg = _config(args)
    verdict, d = classify_initial(cfg)
    doc = dict(verdict.as_dict(), d_est=d)
    text = json.dumps(doc, indent=2)
    print(text)
    out = _out(args)
    if out is not None:
        (out / "classification.json").write_text(text + "\n")


def cmd_run(args):
    cfg = _config(args)
    report = run_experiment(cfg, _out(args, Path(".")))
    sys.stdout.write(report.to_text())


def _sweep_one(job):
    path, out, grid_cells, seed = job
    try:
        cfg = load_config(path).with_overrides(grid_cells, seed)
        rep = run_experiment(cfg, out)
        return path, 0, rep.trajectory.verdict
    except PlapError as exc:
        return path, exc.exit_code, f"[{exc.module}] {exc}"


def cmd_sweep(args):
    src = Path(args.config) if args.config else None
    if src is None or not src.is_dir():
        raise PlapError("sweep needs --config <directory of .toml files>", module="cli-io")
    out = _out(args, Path("sweep_out"))
    jobs = [(str(p), str(out / p.stem), args.grid_cells, args.seed)
            for p in sorted(src.glob("*.toml"))]
    with ProcessPoolExecutor(max_workers=args.workers) as pool:
        results = list(pool.map(_sweep_one, jobs))
    code = 0
    for path, rc, msg in results:
        print(f"{path}: {msg}")
        code = max(code, rc)
    return code


def cmd_verify_lemmas(args):
    seed = 0 if args.seed is None else args.seed
    logs = theorems.verify_log_inequalities(args.samples, seed)
    conc = []
    for th in (0.5, 1.0, 2.0):
        t2, obs = theorems.concavity_blowup_oracle(th, 1.0, 1.0)
        conc.append({"theta": th, "t2": t2, "observed": obs, "ok": obs <= t2 * (1 + 1e-3)})
    doc = {"log_inequalities": logs, "concavity": conc}
    if args.config is not None:
        cfg = _config(args)
        grid = make_grid(cfg.params, cfg.grid_cells)
        doc["hardy_sobolev"] = theorems.verify_hardy_sobolev(cfg.params, grid,
                                                             cfg.family_size, seed)
    text = json.dumps(doc, indent=2)
    print(text)
    out = _out(args)
    if out is not None:
        (out / "lemmas.json").write_text(text + "\n")
    ok = all(c["ok"] for c in conc) and doc.get("hardy_sobolev", {}).get("bounded", True)
    return 0 if ok else 2


COMMANDS = {"constants": cmd_constants, "classify": cmd_classify, "run": cmd_run,
            "sweep": cmd_sweep, "verify-lemmas": cmd_verify_lemmas}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="plaplog",
                                 description="p-Laplacian flow with logarithmic source")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML config file (directory for sweep)")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", help="output directory")
    common.add_argument("--grid-cells", type=int, default=None, dest="grid_cells")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("constants", parents=[common], help="estimate the well constants")
    sub.add_parser("classify", parents=[common], help="place u0 in W, V or neither")
    sub.add_parser("run", parents=[common], help="full experiment")
    sp = sub.add_parser("sweep", parents=[common], help="run every config in a directory")
    sp.add_argument("--workers", type=int, default=None)
    vp = sub.add_parser("verify-lemmas", parents=[common], help="lemma verification suites")
    vp.add_argument("--samples", type=int, default=1_000_000)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rc = COMMANDS[args.command](args)
    except PlapError as exc:
        print(f"error [{exc.module}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error [cli-io]: {exc}", file=sys.stderr)
        return 1
    return rc or 0


if __name__ == "__main__":
    sys.exit(main())
