"""Command-line surface: generate, build, query, stats, bench, costmodel.

Exit codes: 0 on success, 1 for usage errors (bad flags, malformed query
syntax, impossible ranges), 2 for data errors (unparsable dataset lines,
width overflows, empty inputs).
"""

from __future__ import annotations

import argparse
import csv
import statistics
import sys
import time
from typing import Sequence

from . import costmodel, dataset, query, trie
from .dataset import DataError, GeneratorConfig
from .keys import CompositeKey, Dimension

USAGE_EXIT = 1
DATA_EXIT = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise UsageError(message)


def _build_index(keys: list[CompositeKey], scheme: str, width: int) -> trie.RcasIndex:
    if scheme == "rcas":
        return trie.bulk_load(keys, value_width=width)
    return trie.build_static(keys, scheme, value_width=width)


def _load_keys(path: str, width: int) -> tuple[list[dataset.DatasetRecord], list[CompositeKey]]:
    records = dataset.load_records(path)
    return records, dataset.records_to_keys(records, width)


def cmd_generate(args) -> int:
    if args.example == "bom":
        records = list(dataset.BOM_EXAMPLE)
    elif args.example is not None:
        raise UsageError(f"unknown example {args.example!r}")
    else:
        config = GeneratorConfig(
            seed=args.seed,
            key_count=args.count,
            label_alphabet_size=args.alphabet,
            max_depth=args.max_depth,
            value_skew=args.skew,
            duplicate_fraction=args.dup_fraction,
        )
        records = dataset.generate(config)
    if args.output:
        dataset.write_records(records, args.output)
    else:
        for rec in records:
            print(rec.to_line())
    return 0


def _print_stats_csv(stats: trie.IndexStats, out) -> None:
    w = csv.writer(out)
    w.writerow(["section", "metric", "value"])
    w.writerow(["summary", "nodes", stats.node_count])
    w.writerow(["summary", "leaves", stats.leaf_count])
    w.writerow(["summary", "keys", stats.key_count])
    w.writerow(["summary", "unique_keys", stats.unique_key_count])
    w.writerow(["summary", "avg_node_depth", f"{stats.avg_node_depth:.4f}"])
    w.writerow(["summary", "avg_leaf_depth", f"{stats.avg_leaf_depth:.4f}"])
    w.writerow(["summary", "size_estimate_bytes", stats.size_estimate])
    for depth, count in stats.depth_histogram.items():
        w.writerow(["depth_histogram", depth, count])
    for (kind, dim), count in stats.kind_dim_counts.items():
        w.writerow(["node_types", f"{kind}/{dim}", count])


def cmd_build(args) -> int:
    records, keys = _load_keys(args.dataset, args.width)
    started = time.perf_counter()
    index = _build_index(keys, args.scheme, args.width)
    elapsed = time.perf_counter() - started
    if args.save:
        trie.save(index, args.save)
    stats = trie.collect_stats(index)
    w = csv.writer(sys.stdout)
    w.writerow(["section", "metric", "value"])
    w.writerow(["build", "scheme", index.scheme])
    w.writerow(["build", "records", len(records)])
    w.writerow(["build", "build_seconds", f"{elapsed:.6f}"])
    w.writerow(["build", "byte_scans", index.build_stats.byte_scans])
    w.writerow(["build", "partition_moves", index.build_stats.moves])
    _print_stats_csv(stats, sys.stdout)
    return 0


def _obtain_index(args) -> trie.RcasIndex:
    if args.load:
        return trie.load(args.load)
    if not args.dataset:
        raise UsageError("either --load or --dataset is required")
    _, keys = _load_keys(args.dataset, args.width)
    return _build_index(keys, args.scheme, args.width)


def cmd_query(args) -> int:
    index = _obtain_index(args)
    qpath = query.parse_query_path(args.path)
    if args.low > args.high:
        raise UsageError(f"impossible range: {args.low} > {args.high}")
    try:
        vrange = query.ValueRange.closed(args.low, args.high, index.value_width)
    except OverflowError as exc:
        raise DataError(str(exc)) from exc
    started = time.perf_counter()
    result = query.run_query(index, qpath, vrange)
    elapsed = time.perf_counter() - started
    print(f"matches: {len(result.refs)}")
    print(f"visited_nodes: {result.visited}")
    print(f"seconds: {elapsed:.6f}")
    for ref in sorted(result.refs):
        print(f"{ref:x}")
    return 0


def cmd_stats(args) -> int:
    index = _obtain_index(args)
    _print_stats_csv(trie.collect_stats(index), sys.stdout)
    return 0


def _parse_query_line(line: str, lineno: int) -> tuple[query.QueryPath, int, int]:
    parts = line.strip().split(";")
    if len(parts) != 3:
        raise DataError(f"query line {lineno}: expected 'path;low;high'")
    qpath = query.parse_query_path(parts[0])
    try:
        low, high = int(parts[1]), int(parts[2])
    except ValueError:
        raise DataError(f"query line {lineno}: bad range bounds") from None
    if low > high:
        raise DataError(f"query line {lineno}: impossible range")
    return qpath, low, high


def cmd_bench(args) -> int:
    records, keys = _load_keys(args.dataset, args.width)
    queries = []
    try:
        with open(args.queries, "r", encoding="ascii") as fh:
            for lineno, line in enumerate(fh, start=1):
                if line.strip():
                    queries.append(_parse_query_line(line, lineno))
    except UnicodeDecodeError as exc:
        raise DataError(f"query file {args.queries!r} is not ASCII: {exc}") from exc

    indexes = {scheme: _build_index(keys, scheme, args.width) for scheme in trie.SCHEMES}

    w = csv.writer(sys.stdout)
    w.writerow(
        ["query", "scheme", "runtime_ms", "visited_nodes", "result_size", "sigma", "sigma_p", "sigma_v"]
    )
    runtimes: dict[str, list[float]] = {scheme: [] for scheme in trie.SCHEMES}
    n = len(keys)
    full = query.ValueRange.closed(0, (1 << (8 * args.width)) - 1, args.width)
    for qpath, low, high in queries:
        vrange = query.ValueRange.closed(low, high, args.width)
        oracle = sorted(query.scan(keys, qpath, vrange))
        sel = costmodel.QuerySelectivities(
            total=len(oracle) / n,
            path=len(query.scan(keys, qpath, full)) / n,
            value=sum(1 for k in keys if vrange.low <= k.value <= vrange.high) / n,
        )
        for scheme in trie.SCHEMES:
            index = indexes[scheme]
            best: list[int] = []
            elapsed = 0.0
            for _ in range(args.repeat):
                started = time.perf_counter()
                result = query.run_query(index, qpath, vrange)
                elapsed += time.perf_counter() - started
                best = result.refs
            if sorted(best) != oracle:
                raise AssertionError(
                    f"scheme {scheme} disagrees with the scan oracle on {qpath.text}"
                )
            ms = 1000.0 * elapsed / args.repeat
            runtimes[scheme].append(ms)
            w.writerow(
                [
                    qpath.text,
                    scheme,
                    f"{ms:.4f}",
                    result.visited,
                    len(best),
                    f"{sel.total:.6f}",
                    f"{sel.path:.6f}",
                    f"{sel.value:.6f}",
                ]
            )
    for scheme in trie.SCHEMES:
        times = runtimes[scheme]
        if not times:
            continue
        avg = statistics.fmean(times)
        sd = statistics.stdev(times) if len(times) > 1 else 0.0
        w.writerow(["summary", scheme, f"{avg:.4f}", "", "", "", "", f"stddev={sd:.4f}"])
    return 0


_NAMED_VECTORS: dict[str, tuple[str, ...]] = {
    "dy": (),
    "pv": (),
    "vp": (),
    "i1": ("V", "V", "V", "V", "P", "V", "P", "V", "P", "P", "P", "P"),
    "i2": ("V", "V", "V", "P", "P", "V", "P", "V", "V", "P", "P", "P"),
}


def _vector_for(name: str, height: int) -> tuple[Dimension, ...] | None:
    if name == "dy":
        return costmodel.alternating_dims(height)
    if name == "pv":
        half = height // 2
        return tuple([Dimension.P] * (height - half) + [Dimension.V] * half)
    if name == "vp":
        half = height // 2
        return tuple([Dimension.V] * (height - half) + [Dimension.P] * half)
    fixed = _NAMED_VECTORS[name]
    if len(fixed) != height:
        return None
    return tuple(Dimension.P if c == "P" else Dimension.V for c in fixed)


def cmd_costmodel(args) -> int:
    w = csv.writer(sys.stdout)
    w.writerow(["vector", "cost_q", "cost_q_complementary", "avg", "stddev"])
    for name in ("dy", "pv", "vp", "i1", "i2"):
        dims = _vector_for(name, args.height)
        if dims is None:
            continue
        params = costmodel.CostModelParams(
            fanout=args.fanout,
            height=args.height,
            dims=dims,
            sel_path=args.sel_path,
            sel_value=args.sel_value,
        )
        c1 = costmodel.estimate_cost(params, include_root=args.include_root)
        swapped = costmodel.CostModelParams(
            fanout=args.fanout,
            height=args.height,
            dims=dims,
            sel_path=args.sel_value,
            sel_value=args.sel_path,
        )
        c2 = costmodel.estimate_cost(swapped, include_root=args.include_root)
        avg, sd = costmodel.robustness(params, include_root=args.include_root)
        w.writerow([name, f"{c1:.2f}", f"{c2:.2f}", f"{avg:.2f}", f"{sd:.2f}"])
    return 0


def _make_parser() -> _Parser:
    parser = _Parser(prog="rcas", description="Content-and-structure index toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="produce a synthetic dataset")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--alphabet", type=int, default=8)
    p.add_argument("--max-depth", type=int, default=5)
    p.add_argument("--skew", type=float, default=1.1)
    p.add_argument("--dup-fraction", type=float, default=0.1)
    p.add_argument("--example", choices=["bom"], default=None)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_generate)

    def add_index_args(p, with_save=False, with_load=False):
        p.add_argument("--scheme", choices=trie.SCHEMES, default="rcas")
        p.add_argument("--width", type=int, choices=[4, 8], default=4)
        if with_save:
            p.add_argument("--save", default=None)
        if with_load:
            p.add_argument("--load", default=None)

    p = sub.add_parser("build", help="build an index and report statistics")
    p.add_argument("dataset")
    add_index_args(p, with_save=True)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("query", help="answer one path+range query")
    p.add_argument("path", help="query path, e.g. /bom/item//battery")
    p.add_argument("low", type=int)
    p.add_argument("high", type=int)
    p.add_argument("--dataset", default=None)
    add_index_args(p, with_load=True)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("stats", help="print structural statistics")
    p.add_argument("--dataset", default=None)
    add_index_args(p, with_load=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("bench", help="compare all schemes on a query file")
    p.add_argument("dataset")
    p.add_argument("queries")
    p.add_argument("--width", type=int, choices=[4, 8], default=4)
    p.add_argument("--repeat", type=int, default=10)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("costmodel", help="tabulate the analytic cost model")
    p.add_argument("--fanout", type=float, default=10.0)
    p.add_argument("--height", type=int, default=12)
    p.add_argument("--sel-path", type=float, default=0.5)
    p.add_argument("--sel-value", type=float, default=0.1)
    p.add_argument("--include-root", action="store_true")
    p.set_defaults(func=cmd_costmodel)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _make_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except query.QuerySyntaxError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return DATA_EXIT
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
