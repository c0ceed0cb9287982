"""CSV readers for call, SMS and bank records.

Every reader returns a :class:`ParseResult` holding the valid records in
file order plus the number of data lines that were rejected. A missing file
raises ``FileNotFoundError``; a wrong header raises :class:`SchemaError`.
Bad data lines are never fatal.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Generic, Iterable, NamedTuple, TypeVar

log = logging.getLogger(__name__)

CALLS_HEADER = ("origin", "dest", "timestamp", "duration_s")
SMS_HEADER = ("origin", "dest", "timestamp")
BANK_HEADER = ("user", "month", "income")


class SchemaError(ValueError):
    """Raised when an input file does not carry the expected header."""


class CallRecord(NamedTuple):
    origin: str
    dest: str
    timestamp: int
    duration: int


class SmsRecord(NamedTuple):
    origin: str
    dest: str
    timestamp: int


class BankRecord(NamedTuple):
    user: str
    month: int
    income: float


R = TypeVar("R")


@dataclass
class ParseResult(Generic[R]):
    records: list[R] = field(default_factory=list)
    skipped: int = 0

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


def _open_checked(path: str | Path, header: tuple[str, ...]):
    fh = open(path, newline="", encoding="utf-8")
    reader = csv.reader(fh)
    first = next(reader, None)
    if first is None or tuple(c.strip() for c in first) != header:
        fh.close()
        raise SchemaError(f"{path}: expected header {','.join(header)!r}, got {first!r}")
    return fh, reader


def parse_calls(path: str | Path) -> ParseResult[CallRecord]:
    fh, reader = _open_checked(path, CALLS_HEADER)
    out: list[CallRecord] = []
    skipped = 0
    with fh:
        for row in reader:
            if len(row) != 4:
                skipped += 1
                continue
            origin, dest, ts, dur = row
            if not origin or not dest or origin == dest:
                skipped += 1
                continue
            try:
                ts_i = int(ts)
                dur_i = int(dur)
            except ValueError:
                skipped += 1
                continue
            if dur_i < 0:
                skipped += 1
                continue
            out.append(CallRecord(origin, dest, ts_i, dur_i))
    if skipped:
        log.info("%s: skipped %d malformed call lines", path, skipped)
    return ParseResult(out, skipped)


def parse_sms(path: str | Path) -> ParseResult[SmsRecord]:
    fh, reader = _open_checked(path, SMS_HEADER)
    out: list[SmsRecord] = []
    skipped = 0
    with fh:
        for row in reader:
            if len(row) != 3:
                skipped += 1
                continue
            origin, dest, ts = row
            if not origin or not dest or origin == dest:
                skipped += 1
                continue
            try:
                ts_i = int(ts)
            except ValueError:
                skipped += 1
                continue
            out.append(SmsRecord(origin, dest, ts_i))
    if skipped:
        log.info("%s: skipped %d malformed sms lines", path, skipped)
    return ParseResult(out, skipped)


def parse_bank(path: str | Path) -> ParseResult[BankRecord]:
    """Read monthly incomes. A repeated ``(user, month)`` keeps the first line."""
    fh, reader = _open_checked(path, BANK_HEADER)
    out: list[BankRecord] = []
    seen: set[tuple[str, int]] = set()
    skipped = 0
    with fh:
        for row in reader:
            if len(row) != 3 or not row[0]:
                skipped += 1
                continue
            user = row[0]
            try:
                month = int(row[1])
                income = float(row[2])
            except ValueError:
                skipped += 1
                continue
            # float() accepts nan/inf; neither is an income
            if not (0.0 <= income < float("inf")) or month < 0:
                skipped += 1
                continue
            key = (user, month)
            if key in seen:
                skipped += 1
                continue
            seen.add(key)
            out.append(BankRecord(user, month, income))
    if skipped:
        log.info("%s: skipped %d malformed bank lines", path, skipped)
    return ParseResult(out, skipped)


def _write(path: str | Path, header: tuple[str, ...], rows: Iterable[tuple]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_calls(path: str | Path, records: Iterable[CallRecord]) -> None:
    _write(path, CALLS_HEADER, records)


def write_sms(path: str | Path, records: Iterable[SmsRecord]) -> None:
    _write(path, SMS_HEADER, records)


def write_bank(path: str | Path, records: Iterable[BankRecord]) -> None:
    _write(path, BANK_HEADER, ((r.user, r.month, repr(r.income)) for r in records))
