"""Dataset records, the line file format, and the synthetic generator.

A dataset file holds one record per line, three ';'-separated fields:
textual path, decimal unsigned value, and hexadecimal 64-bit reference.
The generator produces reproducible hierarchies with Zipf-skewed values and
a configurable fraction of duplicate (path, value) pairs, standing in for
file-system style data whose sizes are heavily skewed towards small values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .keys import CompositeKey, encode_path, encode_value


class DataError(ValueError):
    """Raised for malformed dataset files or records."""


@dataclass(frozen=True)
class DatasetRecord:
    path: str
    value: int
    ref: int

    def to_line(self) -> str:
        return f"{self.path};{self.value};{self.ref:x}"

    def to_key(self, width: int = 4) -> CompositeKey:
        return CompositeKey(encode_path(self.path), encode_value(self.value, width), self.ref)


# The running example: a bill of materials with seven distinct keys, one of
# which (the cheapest battery) occurs on two physical nodes.
BOM_EXAMPLE: tuple[DatasetRecord, ...] = (
    DatasetRecord("/bom/item/canoe", 69200, 0x1),
    DatasetRecord("/bom/item/carabiner", 241, 0x2),
    DatasetRecord("/bom/item/car/battery", 250714, 0x3),
    DatasetRecord("/bom/item/car/battery", 250714, 0x8),
    DatasetRecord("/bom/item/car/battery", 250800, 0x4),
    DatasetRecord("/bom/item/car/belt", 2890, 0x5),
    DatasetRecord("/bom/item/car/brake", 3266, 0x6),
    DatasetRecord("/bom/item/car/bumper", 2700, 0x7),
)


def parse_line(line: str, lineno: int = 0) -> DatasetRecord:
    parts = line.rstrip("\n").split(";")
    if len(parts) != 3:
        raise DataError(f"line {lineno}: expected 3 ';'-separated fields, got {len(parts)}")
    path, value_s, ref_s = parts
    if not path.isascii():
        raise DataError(f"line {lineno}: non-ASCII path")
    try:
        value = int(value_s, 10)
        if value < 0:
            raise ValueError
    except ValueError:
        raise DataError(f"line {lineno}: bad value field {value_s!r}") from None
    try:
        ref = int(ref_s, 16)
        if not 0 <= ref < 1 << 64:
            raise ValueError
    except ValueError:
        raise DataError(f"line {lineno}: bad reference field {ref_s!r}") from None
    return DatasetRecord(path=path, value=value, ref=ref)


def load_records(path: str) -> list[DatasetRecord]:
    records = []
    try:
        with open(path, "r", encoding="ascii") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                records.append(parse_line(line, lineno))
    except UnicodeDecodeError as exc:
        raise DataError(f"dataset {path!r} is not ASCII: {exc}") from exc
    if not records:
        raise DataError(f"dataset {path!r} is empty")
    return records


def write_records(records: Iterable[DatasetRecord], path: str) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for rec in records:
            fh.write(rec.to_line())
            fh.write("\n")


def records_to_keys(records: Sequence[DatasetRecord], width: int = 4) -> list[CompositeKey]:
    path_cache: dict[str, bytes] = {}
    keys = []
    for rec in records:
        encoded = path_cache.get(rec.path)
        if encoded is None:
            try:
                encoded = encode_path(rec.path)
            except ValueError as exc:
                raise DataError(str(exc)) from exc
            path_cache[rec.path] = encoded
        try:
            value = encode_value(rec.value, width)
        except OverflowError as exc:
            raise DataError(f"value {rec.value} does not fit width {width}") from exc
        keys.append(CompositeKey(encoded, value, rec.ref))
    return keys


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 0
    key_count: int = 1000
    label_alphabet_size: int = 8
    max_depth: int = 5
    value_skew: float = 1.1
    duplicate_fraction: float = 0.1
    value_max: int = 1 << 20

    def __post_init__(self):
        if self.key_count < 1:
            raise DataError("key_count must be positive")
        if self.label_alphabet_size < 1:
            raise DataError("label_alphabet_size must be positive")
        if self.max_depth < 1:
            raise DataError("max_depth must be positive")
        if not 0.0 <= self.duplicate_fraction < 1.0:
            raise DataError("duplicate_fraction must lie in [0, 1)")
        if self.value_skew < 0.0:
            raise DataError("value_skew must be non-negative")


def _zipf_values(rng: np.random.Generator, n: int, skew: float, value_max: int) -> np.ndarray:
    """Zipf-distributed values: skewed ranks spread over [0, value_max)."""
    n_ranks = int(min(value_max, 1 << 16))
    ranks = np.arange(1, n_ranks + 1, dtype=np.float64)
    weights = ranks ** (-skew) if skew > 0 else np.ones(n_ranks)
    cum = np.cumsum(weights)
    cum /= cum[-1]
    draws = rng.random(n)
    values = np.searchsorted(cum, draws, side="left").astype(np.uint64)
    # an odd multiplier keeps low-order bytes varied while preserving both
    # the ordering and the skew towards small values
    multiplier = value_max // n_ranks
    if multiplier > 1:
        values *= multiplier | 1
    return values


def generate(config: GeneratorConfig) -> list[DatasetRecord]:
    """Deterministically generate a dataset; same config, same records."""
    rng = np.random.default_rng(np.random.PCG64(config.seed))
    n = config.key_count
    labels = [f"n{i:02d}" for i in range(config.label_alphabet_size)]

    depths = rng.integers(1, config.max_depth + 1, size=n)
    picks = rng.integers(0, config.label_alphabet_size, size=(n, config.max_depth))
    values = _zipf_values(rng, n, config.value_skew, config.value_max)

    paths: list[str] = []
    for i in range(n):
        d = depths[i]
        row = picks[i]
        paths.append("/" + "/".join(labels[row[j]] for j in range(d)))

    if config.duplicate_fraction > 0 and n > 1:
        dup_mask = rng.random(n) < config.duplicate_fraction
        dup_mask[0] = False
        src = (rng.random(n) * np.arange(n)).astype(np.int64)
        for i in np.nonzero(dup_mask)[0]:
            j = src[i]
            paths[i] = paths[j]
            values[i] = values[j]

    return [
        DatasetRecord(path=paths[i], value=int(values[i]), ref=i + 1) for i in range(n)
    ]
