"""Adaptive net traversal: seed grid, refinement, worklist execution,
certificate emission, checkpointing, and independent certificate replay.

The engine walks the parameter cube level by level.  Every box of the
current level is classified; eliminated boxes become certificate records,
unresolved boxes are refined by a factor of ten and re-examined at the
next depth.  The run terminates when a level empties (success) or the
depth cap is reached with survivors (an explicit failure carrying them).

Determinism is structural: levels are generated in lexicographic order,
chunk boundaries are fixed (independent of worker count), classification
is a pure function of (box, constants), and records stream out in level
order — which is already the canonical (depth, a1, a2, a3) order.  Two
runs over the same domain therefore produce byte-identical certificates
no matter how they are scheduled or interrupted.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from . import constants as C
from .constraints import (CASE_FROM_NAME, CASE_NAMES, Case,
                          EliminationOutcome, SearchBox, classify_batch)

#: Boxes per classification chunk.  Fixed so that chunk contents (and
#: hence every worker-count choice) produce identical streams.
CHUNK = 1 << 18

_WINDOW = C.CHILD_WINDOW
_FACTOR = C.REFINE_FACTOR


class VerificationIncomplete(RuntimeError):
    """Depth cap reached with survivors; carries them for reporting."""

    def __init__(self, depth: int, survivors: np.ndarray):
        super().__init__(
            f"depth cap reached at depth {depth} with "
            f"{len(survivors)} surviving boxes")
        self.depth = depth
        self.survivors = survivors


class CertificateError(ValueError):
    """Malformed certificate or checkpoint file."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None
                         else f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class EliminationRecord:
    """One eliminated box with the test that disposed of it."""

    depth: int
    a1: int
    a2: int
    a3: int
    outcome: EliminationOutcome

    @property
    def box(self) -> SearchBox:
        return SearchBox(self.a1, self.a2, self.a3, self.depth)


Domain = tuple[tuple[int, int], tuple[int, int], tuple[int, int]]


def full_domain(base_depth: int = 0) -> Domain:
    n = 10 ** (base_depth + 2)
    return ((0, n), (0, n), (0, n))


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs; a config plus the constants table fully
    determines the certificate bytes."""

    out_path: str | os.PathLike
    base_depth: int = 0
    depth_cap: int = 8
    workers: int = 1
    domain: Domain | None = None  # numerator ranges at base_depth, inclusive
    checkpoint_path: str | os.PathLike | None = None
    checkpoint_seconds: float = 300.0

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ValueError("worker count must be >= 1")
        if self.depth_cap < self.base_depth:
            raise ValueError("depth cap must be >= base depth")
        n = 10 ** (self.base_depth + 2)
        dom = self.domain if self.domain is not None \
            else full_domain(self.base_depth)
        for lo, hi in dom:
            # lo > hi denotes an empty range (an empty run is a success
            # with an empty certificate)
            if not (0 <= lo <= n and 0 <= hi <= n):
                raise ValueError(f"domain range {lo}:{hi} outside [0, {n}]")
        object.__setattr__(self, "domain", dom)


# ---------------------------------------------------------------------------
# Box sets and grid construction
# ---------------------------------------------------------------------------

class BoxSet(Sequence):
    """An ordered, deduplicated set of boxes at one depth, stored as an
    (N, 3) integer array; elements materialize as SearchBox on access."""

    def __init__(self, nums: np.ndarray, depth: int):
        self.nums = np.ascontiguousarray(nums, dtype=np.int64)
        self.depth = depth

    def __len__(self) -> int:
        return len(self.nums)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return BoxSet(self.nums[i], self.depth)
        a1, a2, a3 = self.nums[i]
        return SearchBox(int(a1), int(a2), int(a3), self.depth)

    def __iter__(self) -> Iterator[SearchBox]:
        for a1, a2, a3 in self.nums:
            yield SearchBox(int(a1), int(a2), int(a3), self.depth)


def _domain_nums(domain: Domain) -> np.ndarray:
    axes = [np.arange(lo, hi + 1, dtype=np.int64) for lo, hi in domain]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    return grid.reshape(-1, 3)


def seed_grid(domain: Domain | None = None, base_depth: int = 0) -> BoxSet:
    """The seed net: every grid point of the (restricted) cube at the base
    depth, in lexicographic order."""
    dom = domain if domain is not None else full_domain(base_depth)
    return BoxSet(_domain_nums(dom), base_depth)


def _dedup_sorted_rows(rows: np.ndarray) -> np.ndarray:
    order = np.lexsort((rows[:, 2], rows[:, 1], rows[:, 0]))
    rows = rows[order]
    if len(rows) > 1:
        keep = np.empty(len(rows), bool)
        keep[0] = True
        np.any(np.diff(rows, axis=0) != 0, axis=1, out=keep[1:])
        rows = rows[keep]
    return rows


def _children_nums(survivors: np.ndarray, depth: int) -> np.ndarray:
    """Exact integer refinement: all depth+1 grid points within the closed
    parent boxes, deduplicated and in canonical order."""
    if len(survivors) == 0:
        return np.empty((0, 3), np.int64)
    den_next = 10 ** (depth + 3)
    offs = np.arange(-_WINDOW, _WINDOW + 1, dtype=np.int64)
    w = len(offs)
    pieces = []
    block = max(1, (4 << 20) // (w ** 3 * 3 * 8))  # ~4M rows per block
    for i in range(0, len(survivors), block):
        part = survivors[i:i + block]
        n = len(part)
        grid = np.empty((n, w, w, w, 3), np.int64)
        base = part * _FACTOR
        grid[..., 0] = (base[:, 0, None] + offs)[:, :, None, None]
        grid[..., 1] = (base[:, 1, None] + offs)[:, None, :, None]
        grid[..., 2] = (base[:, 2, None] + offs)[:, None, None, :]
        rows = grid.reshape(-1, 3)
        ok = ((rows >= 0) & (rows <= den_next)).all(axis=1)
        pieces.append(_dedup_sorted_rows(rows[ok]))
    return _dedup_sorted_rows(np.concatenate(pieces))


def refine(survivors: BoxSet | Iterable[SearchBox]) -> BoxSet:
    """Children of the surviving boxes at the next depth: the finer grid
    points lying within the closed parent boxes, each child appearing once
    regardless of how many parents share it."""
    if isinstance(survivors, BoxSet):
        nums, depth = survivors.nums, survivors.depth
    else:
        boxes = list(survivors)
        if not boxes:
            raise ValueError("cannot infer depth from an empty iterable")
        depth = boxes[0].depth
        if any(b.depth != depth for b in boxes):
            raise ValueError("survivors must share one depth")
        nums = np.array([b.numerators() for b in boxes], np.int64)
    return BoxSet(_children_nums(nums, depth), depth + 1)


# ---------------------------------------------------------------------------
# Certificate files
# ---------------------------------------------------------------------------

_CASE_STR = {int(Case.I): "I", int(Case.II): "II",
             int(Case.III): "III", int(Case.IV): "IV"}


def _header_lines(domain: Domain, base_depth: int) -> list[str]:
    d = " ".join(f"{lo} {hi}" for lo, hi in domain)
    return [f"#constants-hash {C.table_hash()}",
            f"#domain {d} {base_depth}"]


def _format_records(depth: int, nums: np.ndarray, case: np.ndarray,
                    detail: np.ndarray) -> str:
    rows = []
    for (a1, a2, a3), cs, dt in zip(nums.tolist(), case.tolist(),
                                    detail.tolist()):
        rows.append(f"{depth} {a1} {a2} {a3} {_CASE_STR[cs]} {dt}")
    return "\n".join(rows)


@dataclass
class Certificate:
    """A parsed certificate: header metadata plus streaming access to the
    records file (records are not held in memory)."""

    path: Path
    constants_hash: str
    domain: Domain
    base_depth: int
    max_depth: int
    n_records: int

    @classmethod
    def load(cls, path: str | os.PathLike) -> "Certificate":
        path = Path(path)
        constants_hash = None
        domain = None
        base_depth = None
        max_depth = -1
        n_records = 0
        with open(path, "r", encoding="utf-8", newline="\n") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                if line.startswith("#constants-hash "):
                    constants_hash = line.split(" ", 1)[1].strip()
                elif line.startswith("#domain "):
                    parts = line.split()[1:]
                    if len(parts) != 7:
                        raise CertificateError("malformed #domain", lineno)
                    v = [int(x) for x in parts]
                    domain = ((v[0], v[1]), (v[2], v[3]), (v[4], v[5]))
                    base_depth = v[6]
                elif line.startswith("#max-depth "):
                    max_depth = int(line.split()[1])
                elif line.startswith("#"):
                    continue
                else:
                    n_records += 1
        if constants_hash is None or domain is None or base_depth is None:
            raise CertificateError("missing header lines")
        return cls(path, constants_hash, domain, base_depth, max_depth,
                   n_records)

    def iter_depth_chunks(self, chunk: int = CHUNK):
        """Yield (depth, nums, case, detail, first_record_index) chunks in
        file order, never crossing a depth boundary."""
        buf_depth = None
        buf: list[tuple[int, int, int, int, int]] = []
        first_index = 0
        count = 0

        def flush():
            nonlocal buf, first_index
            arr = np.array([r[:3] for r in buf], np.int64).reshape(-1, 3)
            case = np.array([r[3] for r in buf], np.uint8)
            det = np.array([r[4] for r in buf], np.int16)
            out = (buf_depth, arr, case, det, first_index)
            first_index += len(buf)
            buf = []
            return out

        with open(self.path, "r", encoding="utf-8", newline="\n") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                parts = line.split()
                if len(parts) != 6:
                    raise CertificateError("malformed record", lineno)
                try:
                    d = int(parts[0])
                    a1, a2, a3 = int(parts[1]), int(parts[2]), int(parts[3])
                    cs = int(CASE_FROM_NAME[parts[4]])
                    dt = int(parts[5])
                except (ValueError, KeyError) as exc:
                    raise CertificateError(f"malformed record ({exc})",
                                           lineno) from None
                if buf and (d != buf_depth or len(buf) >= chunk):
                    yield flush()
                buf_depth = d
                buf.append((a1, a2, a3, cs, dt))
                count += 1
            if buf:
                yield flush()
        if count != self.n_records:
            raise CertificateError("record count changed between reads")

    def records(self) -> Iterator[EliminationRecord]:
        for depth, nums, case, det, _ in self.iter_depth_chunks():
            for (a1, a2, a3), cs, dt in zip(nums.tolist(), case.tolist(),
                                            det.tolist()):
                yield EliminationRecord(
                    depth, a1, a2, a3,
                    EliminationOutcome(Case(cs), dt))


# ---------------------------------------------------------------------------
# Worklist execution
# ---------------------------------------------------------------------------

def _classify_chunk(args):
    nums, depth = args
    return classify_batch(nums, depth)


@dataclass
class _Progress:
    depth: int = 0
    level_total: int = 0
    level_done: int = 0
    records: int = 0
    histogram: dict = field(default_factory=lambda: {
        "I": 0, "II": 0, "III": 0, "IV": 0})
    started: float = field(default_factory=time.monotonic)


class _Runner:
    def __init__(self, config: RunConfig,
                 progress: Callable[[_Progress], None] | None = None):
        self.config = config
        self.progress = progress
        self.stats = _Progress()
        self._last_checkpoint = time.monotonic()
        self._last_progress = time.monotonic()
        self.records_path = Path(config.out_path).with_suffix(".part")
        self._n_records = 0
        self._max_depth = -1

    # -- record stream ----------------------------------------------------

    def _open_stream(self, resume_records: Iterable[str] | None = None):
        self._fh = open(self.records_path, "w", encoding="utf-8",
                        newline="\n")
        for line in _header_lines(self.config.domain,
                                  self.config.base_depth):
            self._fh.write(line + "\n")
        if resume_records:
            for line in resume_records:
                self._fh.write(line + "\n")
                self._n_records += 1
                d = int(line.split(" ", 1)[0])
                self._max_depth = max(self._max_depth, d)
                cs = line.split()[4]
                self.stats.histogram[cs] += 1
        self.stats.records = self._n_records

    def _write_records(self, depth: int, nums, case, detail) -> None:
        elim = case != 0
        if not elim.any():
            return
        text = _format_records(depth, nums[elim], case[elim], detail[elim])
        self._fh.write(text + "\n")
        self._n_records += int(elim.sum())
        self._max_depth = max(self._max_depth, depth)
        bc = np.bincount(case[elim], minlength=5)
        for cs in (Case.I, Case.II, Case.III, Case.IV):
            self.stats.histogram[CASE_NAMES[cs]] += int(bc[cs])
        self.stats.records = self._n_records

    def _finish(self) -> Certificate:
        self._fh.write(f"#max-depth {self._max_depth}\n")
        self._fh.close()
        out = Path(self.config.out_path)
        os.replace(self.records_path, out)
        self._write_checkpoint(depth=None, pending=None)
        return Certificate(out, C.table_hash(), self.config.domain,
                           self.config.base_depth, self._max_depth,
                           self._n_records)

    # -- checkpointing ------------------------------------------------------

    def _write_checkpoint(self, depth: int | None,
                          pending: np.ndarray | None) -> None:
        cp = self.config.checkpoint_path
        if cp is None:
            return
        cp = Path(cp)
        tmp = cp.with_suffix(cp.suffix + ".tmp")
        if not self._fh.closed:
            self._fh.flush()
        with open(tmp, "w", encoding="utf-8", newline="\n") as out:
            out.write("#checkpoint\n")
            for line in _header_lines(self.config.domain,
                                      self.config.base_depth):
                out.write(line + "\n")
            if depth is None:
                out.write("#complete\n")
            else:
                out.write(f"#depth {depth}\n")
            src = self.records_path if self.records_path.exists() \
                else Path(self.config.out_path)
            with open(src, "r", encoding="utf-8", newline="\n") as rec:
                for line in rec:
                    if not line.startswith("#"):
                        out.write(line)
            out.write("#survivors\n")
            if pending is not None and len(pending):
                for a1, a2, a3 in pending.tolist():
                    out.write(f"{depth} {a1} {a2} {a3}\n")
        os.replace(tmp, cp)
        self._last_checkpoint = time.monotonic()

    def _maybe_report(self) -> None:
        if self.progress is None:
            return
        now = time.monotonic()
        if now - self._last_progress >= 10.0:
            self._last_progress = now
            self.progress(self.stats)

    # -- level loop ---------------------------------------------------------

    def _classify_level(self, nums: np.ndarray, depth: int) -> np.ndarray:
        """Classify one level chunk by chunk; returns survivor numerators.
        Streams records in chunk order, checkpoints on the configured
        cadence, and reports progress."""
        self.stats.depth = depth
        self.stats.level_total = len(nums)
        self.stats.level_done = 0
        survivors = []
        chunks = [(nums[i:i + CHUNK], depth)
                  for i in range(0, len(nums), CHUNK)]
        workers = min(self.config.workers, max(1, len(chunks)))
        if workers == 1:
            results = map(_classify_chunk, chunks)
            self._drain(chunks, results, survivors, depth, nums)
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = pool.map(_classify_chunk, chunks)
                self._drain(chunks, results, survivors, depth, nums)
        if survivors:
            return np.concatenate(survivors)
        return np.empty((0, 3), np.int64)

    def _drain(self, chunks, results, survivors, depth, level_nums):
        done_rows = 0
        for (chunk_nums, _), (case, detail) in zip(chunks, results):
            self._write_records(depth, chunk_nums, case, detail)
            alive = case == 0
            if alive.any():
                survivors.append(chunk_nums[alive])
            done_rows += len(chunk_nums)
            self.stats.level_done = done_rows
            if (time.monotonic() - self._last_checkpoint
                    >= self.config.checkpoint_seconds):
                pending = level_nums[done_rows:]
                done_survivors = (np.concatenate(survivors)
                                  if survivors else
                                  np.empty((0, 3), np.int64))
                # unfinished boxes of this level resume as pending work;
                # survivors found so far re-enter through their parents,
                # so they are appended to the pending section as well
                self._write_checkpoint(
                    depth, np.concatenate([done_survivors, pending]))
            self._maybe_report()

    def run(self, level: np.ndarray, depth: int) -> Certificate:
        while len(level):
            level = self._classify_level(level, depth)
            if len(level) and depth >= self.config.depth_cap:
                # survivors re-enter as pending work if resumed with a
                # higher cap; the partial record stream lives on in the
                # checkpoint, so the .part file can go
                self._write_checkpoint(depth, level)
                self._fh.close()
                self.records_path.unlink(missing_ok=True)
                raise VerificationIncomplete(depth, level)
            if len(level):
                level = _children_nums(level, depth)
                depth += 1
                self._write_checkpoint(depth, level)
        return self._finish()


def run(config: RunConfig,
        progress: Callable[[_Progress], None] | None = None) -> Certificate:
    """Execute a full or restricted verification run.

    Returns the certificate on complete elimination; raises
    :class:`VerificationIncomplete` when the depth cap is hit with
    survivors.  The certificate bytes depend only on (domain, base depth,
    constants table) — never on worker count, chunk scheduling, or
    checkpoint interruptions.
    """
    runner = _Runner(config, progress)
    runner._open_stream()
    level = _domain_nums(config.domain)
    return runner.run(level, config.base_depth)


# ---------------------------------------------------------------------------
# Resume
# ---------------------------------------------------------------------------

def peek_checkpoint(path: str | os.PathLike
                    ) -> tuple[str, Domain, int]:
    """Read just the checkpoint header: (constants hash, domain,
    base depth)."""
    chash = domain = base_depth = None
    with open(path, "r", encoding="utf-8", newline="\n") as fh:
        first = fh.readline().rstrip("\n")
        if first != "#checkpoint":
            raise CertificateError("not a checkpoint file", 1)
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#constants-hash "):
                chash = line.split(" ", 1)[1].strip()
            elif line.startswith("#domain "):
                v = [int(x) for x in line.split()[1:]]
                domain = ((v[0], v[1]), (v[2], v[3]), (v[4], v[5]))
                base_depth = v[6]
            if chash is not None and domain is not None:
                break
    if chash is None or domain is None:
        raise CertificateError("missing checkpoint header")
    return chash, domain, base_depth


def _parse_checkpoint(path: str | os.PathLike):
    records: list[str] = []
    pending: list[tuple[int, int, int]] = []
    depth = None
    domain = None
    base_depth = None
    chash = None
    complete = False
    section = "records"
    with open(path, "r", encoding="utf-8", newline="\n") as fh:
        first = fh.readline().rstrip("\n")
        if first != "#checkpoint":
            raise CertificateError("not a checkpoint file", 1)
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#constants-hash "):
                chash = line.split(" ", 1)[1].strip()
            elif line.startswith("#domain "):
                v = [int(x) for x in line.split()[1:]]
                if len(v) != 7:
                    raise CertificateError("malformed #domain", lineno)
                domain = ((v[0], v[1]), (v[2], v[3]), (v[4], v[5]))
                base_depth = v[6]
            elif line.startswith("#depth "):
                depth = int(line.split()[1])
            elif line == "#complete":
                complete = True
            elif line == "#survivors":
                section = "survivors"
            elif line.startswith("#"):
                continue
            elif section == "records":
                records.append(line)
            else:
                parts = line.split()
                if len(parts) != 4:
                    raise CertificateError("malformed survivor", lineno)
                pending.append((int(parts[1]), int(parts[2]),
                                int(parts[3])))
    if chash is None or domain is None:
        raise CertificateError("missing checkpoint header")
    return (chash, domain, base_depth, depth, complete, records,
            np.array(pending, np.int64).reshape(-1, 3))


def resume(checkpoint_path: str | os.PathLike, config: RunConfig,
           progress: Callable[[_Progress], None] | None = None
           ) -> Certificate:
    """Continue an interrupted run from a checkpoint; the final
    certificate is byte-identical to an uninterrupted run's.

    Refuses checkpoints whose constants hash differs from this build's
    table, and checkpoints for a different domain than the config's.
    """
    (chash, domain, base_depth, depth, complete, records,
     pending) = _parse_checkpoint(checkpoint_path)
    if chash != C.table_hash():
        raise CertificateError(
            "checkpoint constants hash does not match this verifier")
    if domain != config.domain or base_depth != config.base_depth:
        raise CertificateError(
            "checkpoint domain differs from the configured domain")
    runner = _Runner(config, progress)
    runner._open_stream(resume_records=records)
    if complete or depth is None:
        # finished run: emit the certificate directly
        return runner._finish()
    # deduplicate pending: mid-level checkpoints append survivors twice if
    # interrupted repeatedly
    pending = _dedup_sorted_rows(pending) if len(pending) else pending
    return runner.run(pending, depth)


# ---------------------------------------------------------------------------
# Independent verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VerifyResult:
    ok: bool
    reason: str | None = None
    record_index: int | None = None
    #: failure class: "parse", "constants", "replay", "order", "coverage"
    kind: str | None = None


def _pack_or_none(nums: np.ndarray, depth: int):
    k = 10 ** (depth + 2) + 1
    if k ** 3 < 2 ** 63:
        return (nums[:, 0] * k + nums[:, 1]) * k + nums[:, 2]
    return None


def _rows_setdiff(a: np.ndarray, b: np.ndarray, depth: int) -> np.ndarray:
    """Rows of sorted ``a`` not present in sorted ``b`` (exact integers)."""
    if len(b) == 0:
        return a
    packed = _pack_or_none(a, depth)
    if packed is not None:
        return a[~np.isin(packed, _pack_or_none(b, depth),
                          assume_unique=False)]
    bset = {tuple(r) for r in b.tolist()}
    keep = np.array([tuple(r) not in bset for r in a.tolist()], bool)
    return a[keep]


def _rows_subset_violation(a: np.ndarray, b: np.ndarray, depth: int):
    """Index of the first row of ``a`` missing from ``b``, or None."""
    if len(a) == 0:
        return None
    packed = _pack_or_none(a, depth)
    if packed is not None and len(b):
        mask = ~np.isin(packed, _pack_or_none(b, depth))
    elif len(b) == 0:
        mask = np.ones(len(a), bool)
    else:
        bset = {tuple(r) for r in b.tolist()}
        mask = np.array([tuple(r) not in bset for r in a.tolist()], bool)
    idx = np.flatnonzero(mask)
    return int(idx[0]) if len(idx) else None


def verify_certificate(cert: Certificate | str | os.PathLike,
                       progress: Callable[[str], None] | None = None
                       ) -> VerifyResult:
    """Independently verify a certificate.

    Three checks, in order: (a) the constants hash matches this build's
    table; (b) every record replays — classifying the recorded box
    reproduces the recorded case and detail; (c) the recorded boxes cover
    the claimed domain exactly, by integer arithmetic alone: every box of
    a level is either recorded at its depth or all of its children are
    accounted for one level down.
    """
    if not isinstance(cert, Certificate):
        try:
            cert = Certificate.load(cert)
        except CertificateError as exc:
            return VerifyResult(False, f"parse error: {exc}", kind="parse")
    if cert.constants_hash != C.table_hash():
        return VerifyResult(False, "constants-hash mismatch",
                            kind="constants")

    # replay + collect per-depth record sets
    per_depth: dict[int, list[np.ndarray]] = {}
    prev = None
    try:
        for depth, nums, case, detail, base_idx in cert.iter_depth_chunks():
            got_case, got_detail = classify_batch(nums, depth)
            bad = (got_case != case) | (got_detail != detail)
            if bad.any():
                i = int(np.flatnonzero(bad)[0])
                return VerifyResult(
                    False,
                    f"record {base_idx + i}: recorded "
                    f"{CASE_NAMES.get(Case(int(case[i])), '?')}/"
                    f"{int(detail[i])} but replay gives "
                    f"{CASE_NAMES.get(Case(int(got_case[i])), '?')}/"
                    f"{int(got_detail[i])}",
                    base_idx + i, kind="replay")
            # canonical order check (within and across chunks)
            first = (depth, int(nums[0, 0]), int(nums[0, 1]),
                     int(nums[0, 2]))
            if prev is not None and first <= prev:
                return VerifyResult(False,
                                    f"records out of canonical order near "
                                    f"record {base_idx}", base_idx,
                                    kind="order")
            if len(nums) > 1:
                diffs = np.diff(nums, axis=0)
                g0 = diffs[:, 0] > 0
                e0 = diffs[:, 0] == 0
                g1 = diffs[:, 1] > 0
                e1 = diffs[:, 1] == 0
                g2 = diffs[:, 2] > 0
                lex_ok = g0 | (e0 & (g1 | (e1 & g2)))
                if not lex_ok.all():
                    i = int(np.flatnonzero(~lex_ok)[0])
                    return VerifyResult(
                        False, "records out of canonical order at record "
                        f"{base_idx + i + 1}", base_idx + i + 1,
                        kind="order")
            prev = (depth, int(nums[-1, 0]), int(nums[-1, 1]),
                    int(nums[-1, 2]))
            per_depth.setdefault(depth, []).append(nums)
            if progress is not None:
                progress(f"replayed through record {base_idx + len(nums)}")
    except CertificateError as exc:
        return VerifyResult(False, f"parse error: {exc}", kind="parse")

    # exact integer coverage
    depths = sorted(per_depth)
    if not depths:
        required = _domain_nums(cert.domain)
        if len(required) == 0:
            return VerifyResult(True)
        a = required[0]
        return VerifyResult(
            False, f"coverage gap: cell {cert.base_depth} "
            f"{a[0]} {a[1]} {a[2]} never eliminated", kind="coverage")
    if depths[0] != cert.base_depth:
        return VerifyResult(False,
                            "no records at the base depth; coverage gap",
                            kind="coverage")
    required = _domain_nums(cert.domain)
    depth = cert.base_depth
    last = max(depths)
    while True:
        recs = np.concatenate(per_depth.get(depth, [np.empty((0, 3),
                                                             np.int64)]))
        stray = _rows_subset_violation(recs, required, depth)
        if stray is not None:
            a = recs[stray]
            return VerifyResult(
                False, f"extraneous record at depth {depth}: box "
                f"{a[0]} {a[1]} {a[2]} is not part of the net",
                kind="coverage")
        survivors = _rows_setdiff(required, recs, depth)
        if len(survivors) == 0:
            break
        if depth >= last:
            a = survivors[0]
            return VerifyResult(
                False, f"coverage gap: cell {depth} {a[0]} {a[1]} {a[2]} "
                "never eliminated", kind="coverage")
        required = _children_nums(survivors, depth)
        depth += 1
        if progress is not None:
            progress(f"coverage descent to depth {depth}: "
                     f"{len(required)} cells")
    if cert.max_depth >= 0 and cert.max_depth != last:
        return VerifyResult(
            False, f"trailer max-depth {cert.max_depth} does not match "
            f"records (max depth {last})", kind="coverage")
    return VerifyResult(True)
