"""Chain files in, CSV and text reports out."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .chain import DEFAULT_TOL, RateMatrix, validate_rate_matrix
from .errors import ParseError

TOOL_NAME = "chainlimit"


def _line_of(text: str, pos: int) -> int:
    return text.count("\n", 0, pos) + 1


def parse_chain_text(text: str, source: str = "<string>", tol: float = DEFAULT_TOL) -> RateMatrix:
    """Parse ``{"labels": [...], "rates": [[...], ...]}`` and validate it."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ParseError(f"{source}: top level must be an object with 'labels' and 'rates'")
    for key in ("labels", "rates"):
        if key not in doc:
            raise ParseError(f"{source}: missing field '{key}'")
    labels, rates = doc["labels"], doc["rates"]
    if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
        raise ParseError(f"{source}: 'labels' must be a list of strings")
    if not isinstance(rates, list) or not rates:
        raise ParseError(f"{source}: 'rates' must be a nonempty list of rows")
    n = len(labels)
    if len(rates) != n:
        raise ParseError(f"{source}: 'rates' has {len(rates)} rows but there are {n} labels")
    for i, row in enumerate(rates):
        where = f"{source}: line {_line_of(text, _row_offset(text, i))}: rates row {i}"
        if not isinstance(row, list):
            raise ParseError(f"{where} is not a list")
        if len(row) != n:
            raise ParseError(f"{where} has {len(row)} entries, expected {n}")
        for j, v in enumerate(row):
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ParseError(f"{where} entry {j} is not a finite number: {v!r}")
    return validate_rate_matrix(rates, tol=tol, labels=labels)


def _row_offset(text: str, row: int) -> int:
    # best-effort position of the row-th inner list after "rates"
    start = text.find('"rates"')
    if start < 0:
        return 0
    pos = text.find("[", start)
    for _ in range(row + 1):
        nxt = text.find("[", pos + 1)
        if nxt < 0:
            return pos
        pos = nxt
    return pos


def parse_chain_file(path, tol: float = DEFAULT_TOL) -> RateMatrix:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"{p}: cannot read chain file ({exc})") from None
    return parse_chain_text(text, str(p), tol)


def chain_to_json(rate: RateMatrix) -> str:
    doc = {"labels": list(rate.labels), "rates": [[float(v) for v in row] for row in rate.entries]}
    return json.dumps(doc, indent=1) + "\n"


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if hasattr(v, "item"):  # numpy scalar
        return _fmt(v.item())
    if isinstance(v, float):
        return repr(v)
    return str(v)


def metadata_lines(version: str, subcommand: str, params: Mapping, seed) -> list[str]:
    lines = [f"# tool: {TOOL_NAME} {version}", f"# subcommand: {subcommand}", f"# seed: {seed}"]
    for key in sorted(params):
        lines.append(f"# param {key}: {_fmt(params[key]) if not isinstance(params[key], (list, tuple)) else ','.join(map(_fmt, params[key]))}")
    return lines


def render_csv(header: Sequence[str], rows: Iterable[Sequence], meta: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for line in meta:
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def atomic_write(path, text: str) -> None:
    """Write via a temp file in the target directory, then rename over ``path``."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        os.chmod(tmp, 0o644)
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def read_csv(path) -> tuple[list[str], list[dict[str, str]]]:
    """(metadata lines, rows as dicts) for a CSV written by ``render_csv``."""
    meta, body = [], []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        (meta if line.startswith("#") else body).append(line)
    return meta, list(csv.DictReader(body))
