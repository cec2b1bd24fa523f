"""Command-line interface.

Subcommands: ``generate`` (draw a target matrix to a COO file), ``approx``
(search projection redraws for a passing attention matrix), ``sweep`` /
``qsweep`` (grid experiments streamed to CSV), ``render`` (pooled PGM
attention maps), and ``jlt-bench`` (projection tail benchmark).

Exit codes: 0 success / verification passed, 1 verification failed,
2 usage or validation error.  Thread count for sweeps comes from the
``SPARSEATTN_THREADS`` environment variable (default: machine parallelism).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import attention, concentration, sweep as sweep_mod
from ._seeds import derive_seed
from .construct import assemble, build_log_gap, compress, sample_stiefel, svd_factor
from .matrices import (
    ApproxParams,
    CooFormatError,
    GenerationError,
    MatrixError,
    generate,
    read_coo,
    write_coo,
)
from .render import RenderSpec, render_pgm
from .verify import check_conditions

CONFIG_KEYS = {
    "k": int,
    "gamma": float,
    "eps1": float,
    "eps2": float,
    "causal": None,  # parsed as 0/1/true/false
    "L_grid": None,  # comma-separated ints
    "d_lower": int,
    "d_upper": int,
    "d_points": int,
    "q": float,
    "trials_per_L": int,
    "master_seed": int,
    "q_values": None,  # comma-separated floats; used by qsweep only
}


class UsageError(ValueError):
    pass


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes"):
        return True
    if low in ("0", "false", "no"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def load_sweep_config(path) -> tuple[sweep_mod.SweepConfig, list[float]]:
    """Parse the flat ``key = value`` config into a SweepConfig.

    Returns the config and the optional ``q_values`` list (empty when the
    key is absent).  Every malformed or unknown key is reported in a single
    error message.
    """
    values: dict[str, object] = {}
    problems: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for n, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                problems.append(f"line {n}: expected 'key = value', got {raw.strip()!r}")
                continue
            key, _, text = line.partition("=")
            key, text = key.strip(), text.strip()
            if key not in CONFIG_KEYS:
                problems.append(f"line {n}: unknown key {key!r}")
                continue
            try:
                if key == "causal":
                    values[key] = _parse_bool(text)
                elif key == "L_grid":
                    values[key] = _int_list(text)
                elif key == "q_values":
                    values[key] = _float_list(text)
                else:
                    values[key] = CONFIG_KEYS[key](text)
            except ValueError:
                problems.append(f"line {n}: bad value for {key!r}: {text!r}")
    required = {"k", "gamma", "eps1", "eps2", "L_grid"}
    missing = sorted(required - values.keys())
    for key in missing:
        problems.append(f"missing required key {key!r}")
    if problems:
        raise UsageError("config errors:\n  " + "\n  ".join(problems))

    l_grid = values["L_grid"]
    if not l_grid:
        raise UsageError("L_grid must not be empty")
    params = ApproxParams(
        L=max(l_grid),
        k=values["k"],
        gamma=values["gamma"],
        eps1=values["eps1"],
        eps2=values["eps2"],
        causal=values.get("causal", False),
    )
    cfg = sweep_mod.SweepConfig(
        params=params,
        L_grid=l_grid,
        d_lower=values.get("d_lower", 200),
        d_upper=values.get("d_upper", 600),
        d_points=values.get("d_points", 30),
        q=values.get("q", 1.0),
        trials_per_L=values.get("trials_per_L", 5),
        master_seed=values.get("master_seed", 0),
    )
    return cfg, values.get("q_values", [])


def write_dense_dump(matrix: np.ndarray, path) -> None:
    """Dense text dump: ``rows cols`` header, then one row per line."""
    matrix = np.asarray(matrix, dtype=np.float64)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{matrix.shape[0]} {matrix.shape[1]}\n")
        for row in matrix:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def read_dense_dump(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        head = fh.readline().split()
        if len(head) != 2:
            raise UsageError(f"{path}: expected 'rows cols' header")
        rows, cols = int(head[0]), int(head[1])
        data = np.loadtxt(fh, dtype=np.float64, ndmin=2)
    if data.shape != (rows, cols):
        raise UsageError(f"{path}: expected shape {(rows, cols)}, got {data.shape}")
    return data


def cmd_generate(args) -> int:
    params = ApproxParams(
        L=args.L, k=args.k, gamma=args.gamma, eps1=0.5, eps2=0.5, causal=args.causal
    )
    A = generate(params, args.seed)
    write_coo(A, args.out)
    print(f"wrote {A.nnz} entries to {args.out}")
    return 0


def cmd_approx(args) -> int:
    if args.d % 2 != 0 or args.d <= 0:
        raise UsageError(f"--d must be a positive even integer, got {args.d}")
    A = read_coo(args.input)
    d_hid = args.dhid if args.dhid is not None else args.d
    if not args.d <= d_hid <= 2 * A.L:
        raise UsageError(f"need d <= dhid <= 2L, got d={args.d}, dhid={d_hid}, L={A.L}")
    if args.q <= 0:
        raise UsageError(f"--q must be positive, got {args.q}")

    gap = build_log_gap(A, args.eps1, args.eps2)
    factors = svd_factor(gap)
    n_redraws = int(round(args.q * A.L))
    passing = None
    redraws_used = 0
    report = None
    z = None
    for t in range(n_redraws):
        y = sample_stiefel(A.L, args.d // 2, derive_seed(args.seed, 1, args.d, t))
        inputs = assemble(compress(factors, y, args.d), d_hid)
        z = attention.logits(inputs)
        redraws_used += 1
        report = check_conditions(z, A, args.eps1, args.eps2, causal=A.causal)
        if report.passed:
            passing = t
            break

    payload = {
        "passed": bool(report is not None and report.passed),
        "d": args.d,
        "d_hid": d_hid,
        "q": args.q,
        "redraws_used": redraws_used,
        "passing_redraw": passing,
        "seed": args.seed,
        "eps1": args.eps1,
        "eps2": args.eps2,
        "causal": A.causal,
        "report": json.loads(report.to_json()) if report is not None else None,
    }
    text = json.dumps(payload, indent=2)
    if args.report is not None:
        with open(args.report, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text + "\n")
    print(text)

    if z is not None:
        if args.dump_logits is not None:
            write_dense_dump(z, args.dump_logits)
        if args.dump_m is not None:
            m = attention.csam(z) if A.causal else attention.sam(z)
            write_dense_dump(m, args.dump_m)
    return 0 if payload["passed"] else 1


def cmd_sweep(args) -> int:
    cfg, _ = load_sweep_config(args.config)
    records = sweep_mod.run_sweep(cfg, csv_path=args.out)
    found = sum(1 for r in records if r.d_min is not None)
    print(f"{len(records)} records ({found} with a passing width) -> {args.out}")
    return 0


def cmd_qsweep(args) -> int:
    cfg, q_values = load_sweep_config(args.config)
    if not q_values:
        q_values = [0.1, 1.0, 5.0]
    records = sweep_mod.q_sweep(cfg, q_values, csv_path=args.out)
    print(f"{len(records)} records over q={q_values} -> {args.out}")
    return 0


def cmd_render(args) -> int:
    with open(args.input, "r", encoding="utf-8") as fh:
        head = fh.readline().split()
    if len(head) == 4:
        matrix = read_coo(args.input).to_dense()
    elif len(head) == 2:
        matrix = read_dense_dump(args.input)
    else:
        raise UsageError(f"{args.input}: neither a COO file nor a dense dump")
    spec = RenderSpec(pool=args.pool, clip=args.clip, out_path=args.out)
    render_pgm(matrix, spec)
    side = matrix.shape[0] // args.pool
    print(f"wrote {side}x{side} PGM to {args.out}")
    return 0


def cmd_jlt_bench(args) -> int:
    if args.n_samples < 1:
        raise UsageError(f"--n-samples must be >= 1, got {args.n_samples}")
    p_values = _int_list(args.p_values)
    m_values = _int_list(args.m_values)
    eps_values = _float_list(args.eps_values)
    if not p_values or not m_values or not eps_values:
        raise UsageError("p, m, and epsilon grids must not be empty")
    for m in m_values:
        if m > min(p_values):
            raise UsageError(f"m={m} exceeds the smallest ambient dimension {min(p_values)}")
    for eps in eps_values:
        if not 0.0 < eps < 1.0:
            raise UsageError(f"epsilon values must lie in (0, 1), got {eps}")
    rows = concentration.run_bench(
        p_values=p_values,
        m_values=m_values,
        eps_values=eps_values,
        n_samples=args.n_samples,
        sigma=args.sigma,
        seed=args.seed,
    )
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(concentration.BENCH_CSV_HEADER + "\n")
        for row in rows:
            fh.write(row.to_csv_row() + "\n")
    print(f"{len(rows)} rows -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparseattn",
        description="Approximate sparse stochastic matrices with a fixed "
        "self-attention module via orthogonal random projections.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="draw a random target matrix to a COO file")
    p.add_argument("--L", type=int, required=True, help="sequence length (> 1)")
    p.add_argument("--k", type=int, required=True, help="per-row/column nonzero bound")
    p.add_argument("--gamma", type=float, default=1.0, help="within-row variation bound")
    p.add_argument("--causal", action="store_true", help="lower-triangular support")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output COO path")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("approx", help="search projection redraws for a passing match")
    p.add_argument("--input", required=True, help="target matrix COO file")
    p.add_argument("--d", type=int, required=True, help="attention width (even)")
    p.add_argument("--eps1", type=float, default=0.15)
    p.add_argument("--eps2", type=float, default=1.41)
    p.add_argument("--q", type=float, default=1.0, help="redraw budget multiplier")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dhid", type=int, default=None, help="embedding width (default: d)")
    p.add_argument("--report", default=None, help="write the JSON report here too")
    p.add_argument("--dump-logits", default=None, help="dense text dump of the logits")
    p.add_argument("--dump-m", default=None, help="dense text dump of the attention matrix")
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("sweep", help="minimal-width sweep over L (resumable CSV)")
    p.add_argument("config", help="key = value config file")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("qsweep", help="minimal-width sweep over redraw budgets")
    p.add_argument("config", help="key = value config file (q_values optional)")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_qsweep)

    p = sub.add_parser("render", help="render a matrix as a pooled PGM map")
    p.add_argument("--input", required=True, help="COO file or dense text dump")
    p.add_argument("--pool", type=int, default=8, help="max-pool window (divides L)")
    p.add_argument("--clip", type=float, default=0.05)
    p.add_argument("--out", required=True, help="output PGM path")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("jlt-bench", help="projection tail benchmark CSV")
    p.add_argument("--p-values", default="128,256")
    p.add_argument("--m-values", default="8,16,32,64")
    p.add_argument("--eps-values", default="0.1,0.25,0.5")
    p.add_argument("--n-samples", type=int, default=10_000)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_jlt_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, MatrixError, CooFormatError, GenerationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
