"""Command-line driver: seeded, reproducible experiments over the library.

Commands: gen, train, compress, decompress, verify, bench, state.  Every
command echoes its fully resolved configuration (seed included) into its
report JSON; feeding that JSON back through --config reproduces the outputs
byte for byte.  All file writes are atomic (write-temp-then-rename).

Exit codes: 0 success, 1 usage or I/O error, 2 training did not converge to
a compressing message, 3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import autoencoder as ae
from . import database as dbm
from . import groups as gr
from . import plotting
from . import sampling
from . import sim
from . import states as st
from .message import CompressedMessage

__all__ = ["main"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits with code 2
        raise UsageError(message)


def _atomic_write(path, data) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path, payload: dict) -> None:
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_csv(path, header, rows) -> None:
    import io

    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    writer.writerows(rows)
    _atomic_write(path, buf.getvalue())


def _threads_cap() -> int:
    raw = os.environ.get("HSPC_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _resolved(args, keys) -> dict:
    config = {k: getattr(args, k) for k in keys}
    config["threads"] = _threads_cap()
    return config


def _load_sequence(path) -> tuple[np.ndarray, int]:
    """Values and bit width from either an oracle table or a database file."""
    try:
        db, m = dbm.read_database(path)
        return db.values, m
    except ValueError:
        oracle = dbm.read_oracle(path)
        return np.asarray(oracle.table), oracle.m


# --- gen ----------------------------------------------------------------------


def _cmd_gen(args) -> int:
    group = gr.parse_group_descriptor(args.group)
    n = group.n
    s = int(args.s, 2) if args.s is not None else 0
    if not 0 <= s < (1 << n):
        raise UsageError(f"--s must be {n} bits")
    hidden = gr.subgroup_generated(group, s)
    n_cosets = group.size // hidden.order
    m = args.m if args.m is not None else max(1, (n_cosets - 1).bit_length())
    spec = dbm.HspDataSpec(group, hidden, m, args.seed)
    if args.random_values:
        values = dbm.generate_hsp_sequence(spec)
    else:
        if (1 << m) < n_cosets:
            raise UsageError(f"--m {m} too small for {n_cosets} cosets")
        values = dbm.sequence_from_values(group, hidden, range(n_cosets))
    oracle = sim.Oracle(n, m, values)
    dbm.write_oracle(args.out, oracle)
    config = _resolved(args, ["group", "s", "m", "seed", "random_values", "out"])
    config["m"] = m
    _write_json(
        str(args.out) + ".json",
        {
            "config": config,
            "planted": {
                "group": str(group),
                "generator": gr.tau_inv(s, n),
                "subgroup": [gr.tau_inv(h, n) for h in hidden.elements],
                "cosets": n_cosets,
            },
        },
    )
    return 0


# --- train --------------------------------------------------------------------


def _train_config(args) -> ae.TrainConfig:
    return ae.TrainConfig(
        beta=args.beta,
        fd_step=args.fd_step,
        mc_samples=args.mc_samples,
        max_iters=args.max_iters,
        grad_tol=args.grad_tol,
        resample_limit=args.resample_limit,
        seed=args.seed,
        optimize_perm=getattr(args, "optimize_perm", False),
    )


def _cmd_train(args) -> int:
    values, m = _load_sequence(args.infile)
    n = int(values.size - 1).bit_length()
    oracle = sim.Oracle(n, m, values)
    result = ae.train(oracle, _train_config(args))
    _atomic_write(args.out, result.message.to_bytes())
    history_path = args.history or str(args.out) + ".history.csv"
    _write_csv(history_path, ["iteration", "expected_cost", "grad_norm"], result.history)
    if args.plot:
        plotting.plot_history(result.history, str(args.out) + ".png")
    compresses = result.message.subgroup.order > 1
    config = _resolved(
        args,
        [
            "infile", "out", "history", "seed", "beta", "fd_step", "mc_samples",
            "max_iters", "grad_tol", "resample_limit", "optimize_perm", "plot",
        ],
    )
    _write_json(
        str(args.out) + ".json",
        {
            "config": config,
            "message": result.message.to_json_dict(),
            "final_cost": result.final_cost,
            "converged": result.converged,
            "compresses": compresses,
            "iterations": len(result.history) - 1,
        },
    )
    return 0 if result.converged and compresses else 2


# --- compress / decompress / verify -------------------------------------------


def _read_message(path) -> CompressedMessage:
    return CompressedMessage.from_bytes(Path(path).read_bytes())


def _cmd_compress(args) -> int:
    values, m = _load_sequence(args.infile)
    msg = _read_message(args.msg)
    db = dbm.Database.from_sequence(values)
    try:
        compressed = dbm.compress_database(db, msg)
    except dbm.VerificationError as exc:
        _write_json(str(args.out) + ".json", {"error": str(exc)})
        print(f"compress: {exc}", file=sys.stderr)
        return 3
    dbm.write_database(args.out, compressed, m)
    freed = int(compressed.free_mask.sum())
    config = _resolved(args, ["infile", "msg", "out"])
    _write_json(
        str(args.out) + ".json",
        {"config": config, "freed_slots": freed, "total_slots": int(db.size)},
    )
    return 0


def _cmd_decompress(args) -> int:
    msg = _read_message(args.msg)
    values = ae.decode(msg)
    dbm.write_database(args.out, dbm.Database.from_sequence(values), msg.m)
    config = _resolved(args, ["msg", "out"])
    _write_json(str(args.out) + ".json", {"config": config, "length": int(values.size)})
    return 0


def _cmd_verify(args) -> int:
    values, m = _load_sequence(args.infile)
    report_path = args.out or str(args.infile) + ".verify.json"
    config = _resolved(args, ["infile", "msg", "seed", "out"])
    try:
        msg = _read_message(args.msg)
    except Exception as exc:  # malformed file: report the diagnostic
        _write_json(report_path, {"config": config, "pass": False, "error": str(exc)})
        print(f"verify: bad message: {exc}", file=sys.stderr)
        return 3
    db = dbm.Database.from_sequence(values)
    failures: list[str] = []
    try:
        compressed = dbm.compress_database(db, msg)
    except dbm.VerificationError as exc:
        _write_json(report_path, {"config": config, "pass": False, "error": str(exc)})
        print(f"verify: {exc}", file=sys.stderr)
        return 3
    # Adversarial overwrite: clobber every free slot, then query everything.
    rng = np.random.default_rng(args.seed)
    trashed = compressed.copy()
    free = np.flatnonzero(trashed.free_mask)
    trashed.values[free] = rng.integers(0, 1 << m, size=free.size)
    qt = dbm.query_table(msg)
    recovered = trashed.values[qt]
    if not np.array_equal(recovered, values):
        failures.append("query after overwrite diverged from the original sequence")
    raw = msg.to_bytes()
    bound_bits = msg.n**2 + len(msg.coset_values) * msg.m
    from .message import HEADER_BITS

    if len(raw) * 8 > HEADER_BITS + 8 + bound_bits:
        failures.append("serialized message exceeds the size bound")
    ratio_bound = dbm.compression_ratio(msg.n, msg.m, msg.subgroup.order)
    measured = bound_bits / (db.size * m)
    report = {
        "config": config,
        "pass": not failures,
        "failures": failures,
        "freed_slots": int(compressed.free_mask.sum()),
        "message_bits": len(raw) * 8,
        "payload_bits": msg.payload_bits,
        "ratio_bound": ratio_bound,
        "measured_ratio": measured,
    }
    _write_json(report_path, report)
    if failures:
        print("verify: FAIL: " + "; ".join(failures), file=sys.stderr)
        return 3
    return 0


# --- bench --------------------------------------------------------------------


def _cmd_bench(args) -> int:
    n_values = [int(v) for v in args.n_values.split(",")]
    rows = []
    medians = []
    for n in n_values:
        group = gr.GroupStructure.canonical(*([1] * n))
        classical_counts = []
        rng = np.random.default_rng(args.seed + n)
        for trial in range(args.seeds):
            s = int(rng.integers(1, 1 << n))
            hidden = gr.subgroup_generated(group, s)
            spec = dbm.HspDataSpec(group, hidden, n, int(rng.integers(0, 2**31)))
            values = dbm.generate_hsp_sequence(spec, rng)
            oracle = sim.Oracle(n, n, values)
            gen, counter = sampling.classical_collision_baseline(oracle, group, rng)
            ok = gen != 0 and gen in hidden
            classical_counts.append(counter.count)
            rows.append((n, str(group.group_type), "classical-collision", counter.count, int(ok)))
        quantum_counts = []
        for trial in range(args.quantum_runs):
            s = int(rng.integers(1, 1 << n))
            hidden = gr.subgroup_generated(group, s)
            spec = dbm.HspDataSpec(group, hidden, n, int(rng.integers(0, 2**31)))
            values = dbm.generate_hsp_sequence(spec, rng)
            counter = sim.QueryCounter()
            oracle = sim.Oracle(n, n, values, counter)
            batch = sampling.fourier_sample_batch(oracle, group, 4 * n, rng)
            recovered = sampling.kernel_intersection(group, batch)
            for rep in gr.cosets(group, recovered):
                oracle.value(rep)
            ok = recovered.elements == hidden.elements
            quantum_counts.append(counter.count)
            rows.append((n, str(group.group_type), "quantum-hsp", counter.count, int(ok)))
        medians.append(
            {
                "n": n,
                "method": "classical-collision",
                "median_queries": float(np.median(classical_counts)),
            }
        )
        medians.append(
            {
                "n": n,
                "method": "quantum-hsp",
                "median_queries": float(np.median(quantum_counts)) if quantum_counts else 0.0,
            }
        )
    prefix = str(args.out)
    _write_csv(prefix + ".rows.csv", ["n", "group_type", "method", "queries", "success"], rows)
    _write_csv(
        prefix + ".medians.csv",
        ["n", "method", "median_queries"],
        [(r["n"], r["method"], r["median_queries"]) for r in medians],
    )
    if args.plot:
        plotting.plot_bench(medians, prefix + ".png")
    config = _resolved(args, ["n_values", "seeds", "quantum_runs", "seed", "out", "plot"])
    _write_json(prefix + ".json", {"config": config, "medians": medians})
    return 0


# --- state --------------------------------------------------------------------


def _state_source_from_args(args, n):
    if args.infile:
        data = json.loads(Path(args.infile).read_text())
        n_file = int(data["n"])
        pool = [
            np.array([complex(re, im) for re, im in state], dtype=complex)
            for state in data["states"]
        ]
        for psi in pool:
            if psi.size != 1 << n_file:
                raise UsageError("state length does not match n in fixture")

        def source(rng):
            return pool[int(rng.integers(0, len(pool)))]

        return source, n_file
    group = gr.parse_group_descriptor(args.group) if args.group else gr.GroupStructure.canonical(args.n)
    if args.h0 is None:
        raise UsageError("--h0 required unless --in fixture is given")
    hidden = gr.subgroup_generated(group, args.h0)
    return st.invariant_state_source(group, hidden, args.seed), group.n


def _cmd_state(args) -> int:
    source, n = _state_source_from_args(args, args.n)
    prefix = str(args.out)
    config = _resolved(
        args,
        [
            "n", "group", "h0", "infile", "copies", "learn_shots", "learn_only",
            "seed", "beta", "fd_step", "mc_samples", "max_iters", "grad_tol",
            "resample_limit", "out", "plot",
        ],
    )
    if args.learn_only:
        rng = np.random.default_rng(args.seed)
        h0 = st.learn_h0_zn(source, n, args.learn_shots, rng)
        _write_json(prefix + ".json", {"config": config, "learned_h0": h0})
        return 0
    result = st.variational_state_train(
        source, n, _train_config(args), state_copies=args.copies
    )
    _write_csv(
        prefix + ".history.csv",
        ["iteration", "infidelity", "grad_norm"],
        result.history,
    )
    if args.plot:
        plotting.plot_history(result.history, prefix + ".png", ylabel="infidelity")
    _write_json(
        prefix + ".json",
        {
            "config": config,
            "group": str(result.group),
            "subgroup": [gr.tau_inv(h, n) for h in result.hidden.elements],
            "final_infidelity": result.final_infidelity,
            "converged": result.converged,
        },
    )
    return 0 if result.converged else 2


# --- wiring -------------------------------------------------------------------


def _add_train_flags(p) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--fd-step", type=float, default=0.05, dest="fd_step")
    p.add_argument("--mc-samples", type=int, default=50, dest="mc_samples")
    p.add_argument("--max-iters", type=int, default=500, dest="max_iters")
    p.add_argument("--grad-tol", type=float, default=1e-3, dest="grad_tol")
    p.add_argument("--resample-limit", type=int, default=1000, dest="resample_limit")


def build_parser() -> _Parser:
    parser = _Parser(prog="hspc", description=__doc__)
    parser.add_argument("--config", help="JSON file with a previously echoed config")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a sequence with a planted symmetry")
    p.add_argument("--group", required=True, help="e.g. Z8, Z4xZ2, Z2xZ2xZ2@perm=2,0,1")
    p.add_argument("--s", help="generator bit string (default all zeros: injective)")
    p.add_argument("--m", type=int, help="value bits (default: minimal for the cosets)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--random-values", action="store_true", dest="random_values")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("train", help="learn a compressing message for a sequence")
    p.add_argument("--in", required=True, dest="infile")
    p.add_argument("--out", required=True, help="message output path")
    p.add_argument("--history", help="history CSV path (default <out>.history.csv)")
    _add_train_flags(p)
    p.add_argument("--optimize-perm", action="store_true", dest="optimize_perm")
    p.add_argument("--plot", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("compress", help="mark duplicate slots free using a message")
    p.add_argument("--in", required=True, dest="infile")
    p.add_argument("--msg", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_compress)

    p = sub.add_parser("decompress", help="rebuild the full sequence from a message")
    p.add_argument("--msg", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_decompress)

    p = sub.add_parser("verify", help="adversarial-overwrite round trip plus size audit")
    p.add_argument("--in", required=True, dest="infile")
    p.add_argument("--msg", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="report JSON path (default <in>.verify.json)")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("bench", help="classical vs quantum query counts")
    p.add_argument("--n-values", default="8,10,12", dest="n_values")
    p.add_argument("--seeds", type=int, default=500)
    p.add_argument("--quantum-runs", type=int, default=3, dest="quantum_runs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output path prefix")
    p.add_argument("--plot", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("state", help="compress a translation-invariant state source")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--group", help="group descriptor for the planted source")
    p.add_argument("--h0", type=int, help="planted translation step")
    p.add_argument("--in", dest="infile", help="state fixture JSON")
    p.add_argument("--copies", type=int, default=8)
    p.add_argument("--learn-shots", type=int, default=16, dest="learn_shots")
    p.add_argument("--learn-only", action="store_true", dest="learn_only")
    _add_train_flags(p)
    p.add_argument("--out", required=True, help="output path prefix")
    p.add_argument("--plot", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(func=_cmd_state)

    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            loaded = json.loads(Path(args.config).read_text()).get("config", {})
            loaded.pop("threads", None)
            parser.set_defaults(**loaded)
            args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
