"""Round trip from index statistics through the cost model to true costs."""

import random

from rcas.costmodel import calibrate, error_factor, estimate_cost
from rcas.dataset import GeneratorConfig, generate, records_to_keys
from rcas.query import (
    Axis,
    QueryPath,
    Trailing,
    ValueRange,
    parse_query_path,
    path_matches,
    run_query,
)
from rcas.trie import bulk_load, collect_stats


def truncated_sigma_p(qpath: QueryPath, keys) -> float:
    """Path selectivity of the predicate cut at the first descendant axis or
    wildcard; a predicate that starts with one keeps selectivity 1."""
    steps = []
    cut = False
    for s in qpath.steps:
        if s.axis is Axis.DESCENDANT or s.label is None:
            cut = True
            break
        steps.append(s)
    if cut or qpath.trailing is Trailing.DESCENDANT:
        trunc = QueryPath(tuple(steps), Trailing.DESCENDANT, "<truncated>")
    else:
        trunc = qpath
    if not trunc.steps and trunc.trailing is Trailing.DESCENDANT:
        return 1.0
    return sum(1 for k in keys if path_matches(trunc, k.path_text)) / len(keys)


def test_estimates_track_true_costs_within_an_order_of_magnitude():
    rng = random.Random(314)
    cfg = GeneratorConfig(
        seed=17,
        key_count=8000,
        label_alphabet_size=4,
        max_depth=8,
        value_skew=1.0,
        duplicate_fraction=0.15,
        value_max=1 << 31,
    )
    keys = records_to_keys(generate(cfg))
    index = bulk_load(keys)
    stats = collect_stats(index)

    paths = [k.path_text for k in keys]
    values = sorted(k.value_int for k in keys)
    n = len(keys)

    within = 0
    total = 0
    while total < 100:
        labels = rng.choice(paths).split("/")[1:]
        cut = rng.randint(1, min(2, len(labels)))
        head = labels[:cut]
        r = rng.random()
        if r < 0.25:
            text = "/" + "/".join(head) + "//" + rng.choice(labels)
        elif r < 0.45 and cut >= 2:
            head[rng.randrange(cut)] = "*"
            text = "/" + "/".join(head) + "//"
        else:
            text = "/" + "/".join(head) + "//"
        qpath = parse_query_path(text)
        # ranges spanning at least a few percent of the keys, echoing the
        # selectivities of the reference workload
        i = rng.randrange(0, n - n // 30)
        j = min(n - 1, i + max(n // 30, rng.randrange(n // 30, n)))
        vrange = ValueRange.closed(values[i], values[j])
        sigma_v = sum(1 for k in keys if vrange.low <= k.value <= vrange.high) / n
        sigma_p = truncated_sigma_p(qpath, keys)
        if sigma_p <= 0 or sigma_v <= 0:
            continue
        total += 1
        params = calibrate(stats.unique_key_count, stats.avg_node_depth, sigma_p, sigma_v)
        estimated = estimate_cost(params)
        true_cost = run_query(index, qpath, vrange).visited
        if error_factor(estimated, true_cost) <= 10.0:
            within += 1
    assert within >= 0.9 * total, f"only {within}/{total} estimates within a factor of 10"
