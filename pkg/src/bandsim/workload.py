"""Request sources and per-second scheduling.

A request names one item of content.  Uniform requests are single chunks;
trace and Zipf requests name a file, which expands into one chunk address
per 4 kB.  Requests are dealt round-robin to originators in source order,
and each originator then consumes its own queue at a fixed number of
chunks per second.
"""

from __future__ import annotations

import csv
import hashlib
import itertools
import logging
from collections import Counter
from collections.abc import Iterable, Iterator
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

CHUNK_SIZE = 4096
WORKLOAD_KINDS = ("uniform", "zipf", "trace")


@dataclass(frozen=True)
class TraceRow:
    cid: str
    bytes_returned: int

    def __post_init__(self):
        if self.bytes_returned < 0:
            raise ValueError("bytes_returned must be non-negative")


def uniform_requests(rng: np.random.Generator, count: int, bits: int) -> np.ndarray:
    """``count`` chunk addresses drawn uniformly from the ``bits``-bit space."""
    return rng.integers(0, 1 << bits, size=count, dtype=np.uint64, endpoint=False) if count else \
        np.empty(0, dtype=np.uint64)


def chunks_from_cid(cid: str, bytes_returned: int, chunk_size: int = CHUNK_SIZE, bits: int = 16) -> np.ndarray:
    """Deterministic chunk addresses of a file: one per started chunk, at least one.

    Address ``i`` is the top ``bits`` bits of a 64-bit BLAKE2b digest of
    ``cid`` and ``i``, so the same file always maps to the same chunks.
    """
    if chunk_size <= 0:
        raise ValueError("chunk_size must be positive")
    n = max(1, -(-bytes_returned // chunk_size))
    out = np.empty(n, dtype=np.uint64)
    for i in range(n):
        digest = hashlib.blake2b(f"{cid}\x00{i}".encode(), digest_size=8).digest()
        out[i] = int.from_bytes(digest, "big") >> (64 - bits)
    return out


def _column(header: list[str] | None, spec: str | int, default_index: int) -> int:
    if isinstance(spec, int):
        return spec
    if spec.isdigit():
        return int(spec)
    if header is None:
        return default_index
    try:
        return [h.strip().lower() for h in header].index(spec.lower())
    except ValueError:
        raise ValueError(f"trace has no column named {spec!r}; columns are {header}") from None


def ingest_trace(path, cid_column: str | int = "cid", bytes_column: str | int = "bytes") -> list[TraceRow]:
    """Read a cid,bytes CSV with or without a header row.

    Malformed rows are logged with their line number and skipped.
    """
    rows: list[TraceRow] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None:
            raise ValueError(f"{path}: no valid rows")
        header = None
        if len(first) >= 2 and not first[-1].strip().isdigit() and not first[1].strip().isdigit():
            header = first
        ci = _column(header, cid_column, 0)
        bi = _column(header, bytes_column, 1)
        lines = reader if header is not None else itertools.chain([first], reader)
        start = 2 if header is not None else 1
        for lineno, rec in enumerate(lines, start=start):
            try:
                cid = rec[ci].strip()
                nbytes = int(rec[bi])
                if not cid:
                    raise ValueError("empty cid")
                rows.append(TraceRow(cid, nbytes))
            except (IndexError, ValueError) as exc:
                log.warning("%s:%d: skipping malformed row %r (%s)", path, lineno, rec, exc)
    if not rows:
        raise ValueError(f"{path}: no valid rows")
    return rows


def zipf_ranks(rng: np.random.Generator, catalog_size: int, exponent: float, count: int) -> np.ndarray:
    """Ranks in ``[1, catalog_size]`` drawn with probability proportional to rank**-exponent."""
    if exponent <= 0:
        raise ValueError("exponent must be positive")
    if catalog_size < 1:
        raise ValueError("catalog_size must be positive")
    weights = np.arange(1, catalog_size + 1, dtype=np.float64) ** -exponent
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    idx = np.searchsorted(cdf, rng.random(count), side="right")
    return np.minimum(idx, catalog_size - 1) + 1


def zipf_catalog(rng: np.random.Generator, catalog_size: int, mean_chunks: float = 4.0,
                 chunk_size: int = CHUNK_SIZE) -> np.ndarray:
    """Byte size of each synthetic catalog item (geometric number of chunks)."""
    chunks = rng.geometric(1.0 / mean_chunks, size=catalog_size)
    return chunks.astype(np.int64) * chunk_size


def zipf_rows(rng: np.random.Generator, catalog_size: int, exponent: float, count: int,
              mean_chunks: float = 4.0, chunk_size: int = CHUNK_SIZE) -> list[TraceRow]:
    sizes = zipf_catalog(rng, catalog_size, mean_chunks, chunk_size)
    ranks = zipf_ranks(rng, catalog_size, exponent, count)
    return [TraceRow(f"item-{r}", int(sizes[r - 1])) for r in ranks.tolist()]


def zipf_requests(rng: np.random.Generator, catalog_size: int, exponent: float, count: int, bits: int = 16,
                  mean_chunks: float = 4.0, chunk_size: int = CHUNK_SIZE) -> np.ndarray:
    """Chunk addresses of ``count`` Zipf-distributed file requests, concatenated."""
    rows = zipf_rows(rng, catalog_size, exponent, count, mean_chunks, chunk_size)
    expanded = _Expander(bits, chunk_size)
    parts = [expanded(row) for row in rows]
    return np.concatenate(parts) if parts else np.empty(0, dtype=np.uint64)


class _Expander:
    """Memoised ``chunks_from_cid``; popular files repeat a lot."""

    def __init__(self, bits: int, chunk_size: int = CHUNK_SIZE):
        self.bits = bits
        self.chunk_size = chunk_size
        self._memo: dict[tuple[str, int], np.ndarray] = {}

    def __call__(self, row: TraceRow) -> np.ndarray:
        key = (row.cid, row.bytes_returned)
        out = self._memo.get(key)
        if out is None:
            out = chunks_from_cid(row.cid, row.bytes_returned, self.chunk_size, self.bits)
            self._memo[key] = out
        return out


def rank_frequency(cids: Iterable[str]) -> list[tuple[int, str, int]]:
    """(rank, cid, count) rows, most requested first, ties broken by cid."""
    counts = Counter(cids)
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [(i + 1, cid, n) for i, (cid, n) in enumerate(ordered)]


def fit_rank_exponent(counts, min_count: int = 5) -> float:
    """Slope of log(count) against log(rank), over ranks seen at least ``min_count`` times."""
    c = np.sort(np.asarray(counts, dtype=np.float64))[::-1]
    c = c[c >= min_count]
    if len(c) < 3:
        raise ValueError("too few ranks to fit")
    ranks = np.arange(1, len(c) + 1, dtype=np.float64)
    slope, _ = np.polyfit(np.log(ranks), np.log(c), 1)
    return float(slope)


@dataclass
class RequestSchedule:
    """Per-originator chunk queues consumed at ``rate`` chunks per second.

    ``queues[i]`` is the ordered chunk list of the ``i``-th originator; in
    second ``t`` at most ``rate * (t + 1)`` of it may have been issued.
    """

    originators: np.ndarray
    queues: list[np.ndarray]
    rate: int
    duration: int

    @property
    def total(self) -> int:
        return int(sum(len(q) for q in self.queues))

    def issued_by(self, second: int) -> int:
        """Queue prefix length released up to and including ``second``."""
        return self.rate * (second + 1)

    def second(self, t: int) -> list[np.ndarray]:
        """Chunks each originator is scheduled to request in second ``t``."""
        lo, hi = self.rate * t, self.rate * (t + 1)
        return [q[lo:hi] for q in self.queues]

    def as_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """Queues padded into one array plus their lengths."""
        lengths = np.array([len(q) for q in self.queues], dtype=np.int64)
        width = int(lengths.max()) if len(lengths) else 0
        mat = np.zeros((len(self.queues), width), dtype=np.uint64)
        for i, q in enumerate(self.queues):
            mat[i, :len(q)] = q
        return mat, lengths


def schedule_uniform(rng: np.random.Generator, originators, rate: int, duration: int, bits: int) -> RequestSchedule:
    """Round-robin over a uniform chunk stream; the stream never runs dry."""
    originators = np.asarray(originators, dtype=np.int64)
    if len(originators) == 0:
        raise ValueError("at least one originator is required")
    per = rate * duration
    stream = uniform_requests(rng, per * len(originators), bits)
    mat = stream.reshape(per, len(originators)).T
    return RequestSchedule(originators, [np.ascontiguousarray(row) for row in mat], rate, duration)


def schedule_requests(requests: Iterable[np.ndarray], originators, rate: int, duration: int) -> RequestSchedule:
    """Deal multi-chunk requests round-robin until every queue holds ``rate * duration`` chunks.

    Originators whose queue is already full are skipped.  A source that runs
    dry leaves the queues short and logs a warning.
    """
    originators = np.asarray(originators, dtype=np.int64)
    m = len(originators)
    if m == 0:
        raise ValueError("at least one originator is required")
    per = rate * duration
    parts: list[list[np.ndarray]] = [[] for _ in range(m)]
    filled = np.zeros(m, dtype=np.int64)
    open_count = m if per > 0 else 0
    turn = 0
    it: Iterator[np.ndarray] = iter(requests)
    while open_count:
        try:
            chunks = next(it)
        except StopIteration:
            log.warning("request source exhausted: %d of %d chunks scheduled", int(filled.sum()), per * m)
            break
        while filled[turn] >= per:
            turn = (turn + 1) % m
        take = chunks[: per - filled[turn]]
        parts[turn].append(np.asarray(take, dtype=np.uint64))
        filled[turn] += len(take)
        if filled[turn] >= per:
            open_count -= 1
        turn = (turn + 1) % m
    queues = [np.concatenate(p) if p else np.empty(0, dtype=np.uint64) for p in parts]
    return RequestSchedule(originators, queues, rate, duration)


def trace_requests(rows: Iterable[TraceRow], bits: int, chunk_size: int = CHUNK_SIZE) -> Iterator[np.ndarray]:
    expand = _Expander(bits, chunk_size)
    for row in rows:
        yield expand(row)


def zipf_stream(rng: np.random.Generator, catalog_size: int, exponent: float, bits: int,
                mean_chunks: float = 4.0, batch: int = 65536) -> Iterator[np.ndarray]:
    """Endless Zipf file requests over one fixed synthetic catalog."""
    sizes = zipf_catalog(rng, catalog_size, mean_chunks)
    expand = _Expander(bits)
    while True:
        for r in zipf_ranks(rng, catalog_size, exponent, batch).tolist():
            yield expand(TraceRow(f"item-{r}", int(sizes[r - 1])))
