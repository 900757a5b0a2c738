import random

import pytest

from rcas.dataset import BOM_EXAMPLE, records_to_keys
from rcas.keys import CompositeKey
from rcas.trie import bulk_load

# Named handles into the running example.  k3 occurs twice (refs 0x3, 0x8).
BOM_BY_NAME = {
    "k1": ("/bom/item/canoe", 69200),
    "k2": ("/bom/item/carabiner", 241),
    "k3": ("/bom/item/car/battery", 250714),
    "k4": ("/bom/item/car/battery", 250800),
    "k5": ("/bom/item/car/belt", 2890),
    "k6": ("/bom/item/car/brake", 3266),
    "k7": ("/bom/item/car/bumper", 2700),
}


@pytest.fixture(scope="session")
def bom_records():
    return list(BOM_EXAMPLE)


@pytest.fixture(scope="session")
def bom_keys(bom_records):
    return records_to_keys(bom_records)


@pytest.fixture(scope="session")
def bom_named(bom_keys) -> dict[str, CompositeKey]:
    out = {}
    for name, (path, value) in BOM_BY_NAME.items():
        for k in bom_keys:
            if k.path_text == path and k.value_int == value:
                out[name] = k
                break
    return out


@pytest.fixture(scope="session")
def bom_index(bom_keys):
    return bulk_load(bom_keys)


def subset(bom_named, *names):
    """Key subsets in the canonical order of the running example."""
    order = ["k1", "k2", "k3", "k4", "k5", "k6", "k7"]
    return [bom_named[n] for n in order if n in names]


def random_keys(rng: random.Random, n: int | None = None, width: int = 4) -> list[CompositeKey]:
    """Small random key sets with shared prefixes and occasional duplicates."""
    if n is None:
        n = rng.randint(1, 30)
    labels = ["a", "b", "ab", "ba", "x1", "long-label"]
    keys = []
    for i in range(n):
        if keys and rng.random() < 0.15:
            src = rng.choice(keys)
            keys.append(CompositeKey(src.path, src.value, 1000 + i))
            continue
        depth = rng.randint(1, 4)
        path = "/" + "/".join(rng.choice(labels) for _ in range(depth))
        value = rng.choice([0, 1, 2, 255, 256, rng.randint(0, 2**20), rng.randint(0, 2**32 - 1)])
        keys.append(CompositeKey.make(path, value, i, width))
    return keys


def random_query_text(rng: random.Random, paths: list[str]) -> str:
    """Query paths derived from dataset paths, with wildcards and axes mixed in."""
    labels = rng.choice(paths).split("/")[1:]
    n = rng.randint(1, len(labels))
    steps = labels[:n]
    for i in range(len(steps)):
        if rng.random() < 0.2:
            steps[i] = "*"
    text = "/" + "/".join(steps)
    if rng.random() < 0.35:
        cut = rng.randrange(len(steps))
        head = "/".join(steps[:cut])
        tail = "/".join(steps[cut:])
        text = ("/" + head if head else "") + "//" + tail
    if rng.random() < 0.25:
        text = text.rstrip("/") + "//"
    if text == "//" and rng.random() < 0.5:
        text = "//" + rng.choice(labels)
    return text
