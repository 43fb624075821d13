"""CSV dataset formats and report serialization."""

from __future__ import annotations

import csv
import io as _io
import json
import math
import sys
from pathlib import Path
from typing import Any, TextIO

import numpy as np

from .core import AOMError, Alphabet, ChoiceRule, Menu, UnknownLabel
from .models import Dataset

__all__ = [
    "DataError",
    "ParseError",
    "ChoiceNotInMenu",
    "EmptyFile",
    "load_dataset",
    "read_dataset",
    "write_dataset",
    "parse_menu",
    "canonical_report",
    "emit_report",
    "format_table",
]

SIG_DIGITS = 12


class DataError(AOMError, ValueError):
    pass


class ParseError(DataError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ChoiceNotInMenu(DataError):
    def __init__(self, line: int, choice: str, menu: str):
        super().__init__(f"line {line}: choice {choice!r} is not in menu {menu!r}")
        self.line = line


class EmptyFile(DataError):
    pass


HEADERS = {"long": ["menu", "choice"], "counts": ["menu", "alternative", "count"]}


def parse_menu(text: str) -> list[str]:
    """Labels of a ``;``-joined menu cell, duplicates removed, order kept."""
    labels = [x.strip() for x in text.split(";")]
    if any(not x for x in labels):
        raise ValueError(f"empty label in menu {text!r}")
    return list(dict.fromkeys(labels))


def read_dataset(handle: TextIO, fmt: str = "long", alphabet: Alphabet | None = None) -> Dataset:
    if fmt not in HEADERS:
        raise ValueError(f"unknown format {fmt!r}")
    reader = csv.reader(handle)
    header = next(reader, None)
    if header is None:
        raise EmptyFile("file is empty")
    if [h.strip() for h in header] != HEADERS[fmt]:
        raise ParseError(1, f"expected header {','.join(HEADERS[fmt])}")
    rows = []
    for line, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(HEADERS[fmt]):
            raise ParseError(line, f"expected {len(HEADERS[fmt])} fields, got {len(row)}")
        try:
            labels = parse_menu(row[0])
        except ValueError as err:
            raise ParseError(line, str(err)) from None
        choice = row[1].strip()
        if choice not in labels:
            raise ChoiceNotInMenu(line, choice, row[0])
        count = 1
        if fmt == "counts":
            try:
                count = int(row[2])
            except ValueError:
                raise ParseError(line, f"count {row[2]!r} is not an integer") from None
            if count < 0:
                raise ParseError(line, "negative count")
        rows.append((line, labels, choice, count))
    if not rows:
        raise EmptyFile("no observations")
    if alphabet is None:
        seen: dict[str, None] = {}
        for _line, labels, _c, _k in rows:
            seen.update(dict.fromkeys(labels))
        alphabet = Alphabet(list(seen))
    menus, choices = [], []
    for line, labels, choice, count in rows:
        try:
            bits = Menu.of(alphabet.index(x) for x in labels).bits
        except UnknownLabel as err:
            raise ParseError(line, str(err)) from None
        menus.extend([bits] * count)
        choices.extend([alphabet.index(choice)] * count)
    return Dataset(alphabet, menus, choices)


def load_dataset(path, fmt: str = "long", alphabet: Alphabet | None = None) -> Dataset:
    """Read a dataset from a CSV file.

    ``long``: header ``menu,choice``, one observation per row.
    ``counts``: header ``menu,alternative,count``, aggregated rows.
    Menus are ``;``-joined labels. Without ``alphabet``, labels are
    registered in order of first appearance.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        return read_dataset(fh, fmt, alphabet)


def write_dataset(data: Dataset, target, fmt: str = "long") -> None:
    """Write ``data`` as CSV to a path or an open text handle."""
    if fmt not in HEADERS:
        raise ValueError(f"unknown format {fmt!r}")
    if isinstance(target, (str, Path)):
        with open(target, "w", newline="", encoding="utf-8") as fh:
            write_dataset(data, fh, fmt)
        return
    w = csv.writer(target, lineterminator="\n")
    w.writerow(HEADERS[fmt])
    al = data.alphabet
    if fmt == "long":
        for bits, c in zip(data.menus, data.choices):
            w.writerow([Menu(int(bits)).format(al), al.label(int(c))])
    else:
        for menu, counts in data.counts().items():
            for a in menu:
                w.writerow([menu.format(al), al.label(a), int(counts[a])])


def counts_from_rule(pi: ChoiceRule, scale: int) -> Dataset:
    """Integer dataset whose frequencies are ``pi`` scaled by ``scale``."""
    counts = {}
    for m in pi.menus:
        counts[m] = np.rint(pi.vector(m) * scale).astype(int)
    return Dataset.from_counts(pi.alphabet, counts)


def canonical_report(obj: Any) -> Any:
    """JSON-ready copy: floats rounded to 12 significant digits, arrays as
    lists, non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): canonical_report(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical_report(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [canonical_report(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
        return float(f"{x:.{SIG_DIGITS}g}")
    return obj


def _num(x, digits=3) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    return f"{x:.{digits}f}"


def format_table(report: dict) -> str:
    """Human-readable rendering. Reproduction reports use the rejection
    table layout; anything else is flattened to ``key: value`` lines."""
    cmd = report.get("command")
    if cmd == "reproduce-table1":
        return _table1(report)
    if cmd == "reproduce-figure1":
        return _figure1(report)
    lines = []

    def walk(prefix, obj):
        if isinstance(obj, dict):
            for k, v in obj.items():
                walk(f"{prefix}.{k}" if prefix else k, v)
        elif isinstance(obj, list) and obj and isinstance(obj[0], (dict, list)):
            for i, v in enumerate(obj):
                walk(f"{prefix}[{i}]", v)
        else:
            lines.append(f"{prefix}: {obj}")

    walk("", canonical_report(report))
    return "\n".join(lines) + "\n"


def _table1(report: dict) -> str:
    res = report["results"]
    cols = list(res["restrictions"])
    mc = {r["preference"]: r["rejection_rate"] for r in res.get("monte_carlo", {}).get("rows", [])}
    width = max(16, max(len(c) for c in cols) + 2)
    out = _io.StringIO()
    out.write(f"{'':<22}" + "".join(f"{c:>{width}}" for c in cols) + "\n")
    out.write(f"{'# restrictions':<22}" + "".join(f"{res['restrictions'][c]:>{width}}" for c in cols) + "\n")
    for row in res["population"]:
        out.write(row["preference"] + "\n")
        out.write(f"{'  # violations':<22}" + "".join(f"{row['violations'][c]:>{width}}" for c in cols) + "\n")
        out.write(
            f"{'  max inequality':<22}"
            + "".join(f"{_num(row['max_inequality'][c]):>{width}}" for c in cols)
            + "\n"
        )
        if row["preference"] in mc:
            rates = mc[row["preference"]]
            out.write(f"{'  rej prob':<22}" + "".join(f"{_num(rates[c]):>{width}}" for c in cols) + "\n")
    return out.getvalue()


def _figure1(report: dict) -> str:
    rows = report["results"]["bounds"]
    keys = ["alternative", "menu", "true", "lower", "upper", "lower_p95", "upper_p05"]
    keys = [k for k in keys if any(k in r for r in rows)]
    out = _io.StringIO()
    out.write("\t".join(keys) + "\n")
    for r in rows:
        out.write("\t".join(_num(r.get(k)) if k not in ("alternative", "menu") else r[k] for k in keys) + "\n")
    return out.getvalue()


def emit_report(report: dict, fmt: str = "json", out=None) -> str:
    """Serialize ``report`` deterministically; write it to ``out`` (a path
    or handle) or stdout when ``out`` is ``None``. Returns the text."""
    if fmt == "json":
        text = json.dumps(canonical_report(report), indent=2) + "\n"
    elif fmt == "table":
        text = format_table(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if out is None:
        sys.stdout.write(text)
    elif isinstance(out, (str, Path)):
        Path(out).write_text(text, encoding="utf-8")
    else:
        out.write(text)
    return text
