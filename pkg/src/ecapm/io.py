"""Edge-list and marginals files, JSON and TSV reports.

Edge list (UTF-8, comma separated, header required)::

    holder,issuer,weight
    h0,i2,1.5

Marginals (one ``links`` row; holders and issuers in any order)::

    kind,label,value
    holder,h0,1.5
    issuer,i0,2.5
    links,,3

Labels are opaque and may not contain commas. Floats are written with
``repr`` so that reading back is exact.
"""
from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import IO, Iterable, Optional, Sequence, Union

import numpy as np

from .core import BipartiteNetwork, NetworkError, StrengthSequences, build_network

EDGE_HEADER = "holder,issuer,weight"
MARGINALS_HEADER = "kind,label,value"
MARGINALS_RTOL = 1e-6

PathLike = Union[str, Path]


class FormatError(ValueError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message: str, path: Optional[PathLike] = None, line: Optional[int] = None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = None if path is None else str(path)
        self.line = line


def _parse_float(text: str, path, line) -> float:
    try:
        x = float(text)
    except ValueError:
        raise FormatError(f"not a decimal number: {text!r}", path, line) from None
    if not math.isfinite(x):
        raise FormatError(f"non-finite number: {text!r}", path, line)
    return x


def _lines(path: PathLike) -> Iterable[tuple[int, str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        for n, raw in enumerate(fh, start=1):
            yield n, raw.rstrip("\r\n")


def read_edge_list(
    path: PathLike,
    holder_labels: Optional[Sequence[str]] = None,
    issuer_labels: Optional[Sequence[str]] = None,
) -> BipartiteNetwork:
    """Read an edge list.

    Without label universes, labels get indices in order of first
    appearance. With them, indices follow the given order, nodes without
    edges are kept, and an unknown label is an error.
    """
    fixed_h = holder_labels is not None
    fixed_i = issuer_labels is not None
    h_index = {lab: k for k, lab in enumerate(holder_labels or [])}
    i_index = {lab: k for k, lab in enumerate(issuer_labels or [])}
    rows, cols, weights = [], [], []
    seen: dict[tuple[int, int], int] = {}
    it = iter(_lines(path))
    try:
        n, header = next(it)
    except StopIteration:
        raise FormatError("empty file, expected header " + EDGE_HEADER, path) from None
    if header.lstrip("\ufeff") != EDGE_HEADER:
        raise FormatError(f"expected header {EDGE_HEADER!r}, got {header!r}", path, n)
    for n, line in it:
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise FormatError(f"expected 3 fields, got {len(parts)}", path, n)
        h, i, w = parts
        if not h or not i:
            raise FormatError("empty label", path, n)
        w = _parse_float(w, path, n)
        if w <= 0:
            raise FormatError(f"non-positive weight {w!r}", path, n)
        for lab, index, fixed, what in ((h, h_index, fixed_h, "holder"), (i, i_index, fixed_i, "issuer")):
            if lab not in index:
                if fixed:
                    raise FormatError(f"unknown {what} label {lab!r}", path, n)
                index[lab] = len(index)
        key = (h_index[h], i_index[i])
        if key in seen:
            raise FormatError(f"duplicate pair ({h}, {i}), first on line {seen[key]}", path, n)
        seen[key] = n
        rows.append(key[0])
        cols.append(key[1])
        weights.append(w)
    return build_network(
        len(h_index), len(i_index),
        rows=rows, cols=cols, weights=weights,
        holder_labels=list(h_index), issuer_labels=list(i_index),
    )


def _check_label(label: str) -> str:
    if "," in label or "\n" in label or "\r" in label or not label:
        raise NetworkError(f"label {label!r} cannot be written (empty, comma or newline)")
    return label


def write_edge_list(net: BipartiteNetwork, path_or_file: Union[PathLike, IO[str]]) -> None:
    """Write edges in canonical holder-major order."""
    def _write(fh):
        fh.write(EDGE_HEADER + "\n")
        hl, il = net.holder_labels, net.issuer_labels
        for r, c, w in zip(net.rows.tolist(), net.cols.tolist(), net.weights.tolist()):
            fh.write(f"{_check_label(hl[r])},{_check_label(il[c])},{w!r}\n")

    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with open(path_or_file, "w", encoding="utf-8", newline="\n") as fh:
            _write(fh)


def read_marginals(path: PathLike, rtol: float = MARGINALS_RTOL) -> tuple[StrengthSequences, int]:
    """Strength sequences and total link count from a marginals file.

    Holder and issuer totals must agree within relative ``rtol``; ``W`` is
    taken as the holder total.
    """
    holders: dict[str, float] = {}
    issuers: dict[str, float] = {}
    links: Optional[int] = None
    it = iter(_lines(path))
    try:
        n, header = next(it)
    except StopIteration:
        raise FormatError("empty file, expected header " + MARGINALS_HEADER, path) from None
    if header.lstrip("\ufeff") != MARGINALS_HEADER:
        raise FormatError(f"expected header {MARGINALS_HEADER!r}, got {header!r}", path, n)
    for n, line in it:
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise FormatError(f"expected 3 fields, got {len(parts)}", path, n)
        kind, label, value = parts
        if kind == "links":
            if links is not None:
                raise FormatError("more than one links row", path, n)
            try:
                links = int(value)
            except ValueError:
                raise FormatError(f"link count must be an integer, got {value!r}", path, n) from None
            if links < 0:
                raise FormatError("negative link count", path, n)
            continue
        if kind not in ("holder", "issuer"):
            raise FormatError(f"unknown row kind {kind!r}", path, n)
        if not label:
            raise FormatError("empty label", path, n)
        x = _parse_float(value, path, n)
        if x < 0:
            raise FormatError(f"negative strength {x!r}", path, n)
        table = holders if kind == "holder" else issuers
        if label in table:
            raise FormatError(f"duplicate {kind} label {label!r}", path, n)
        table[label] = x
    if links is None:
        raise FormatError("missing links row", path)
    V = list(holders.values())
    C = list(issuers.values())
    sv, sc = math.fsum(V), math.fsum(C)
    if abs(sv - sc) > rtol * max(abs(sv), abs(sc)):
        raise FormatError(
            f"holder total {sv!r} and issuer total {sc!r} differ beyond relative {rtol:g}", path
        )
    s = StrengthSequences.from_arrays(
        V, C, W=sv, rtol=rtol, holder_labels=list(holders), issuer_labels=list(issuers)
    )
    return s, links


def write_marginals(s: StrengthSequences, L: int, path: PathLike) -> None:
    hl = s.holder_labels or tuple(f"h{k}" for k in range(s.n_holders))
    il = s.issuer_labels or tuple(f"i{k}" for k in range(s.n_issuers))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(MARGINALS_HEADER + "\n")
        for lab, v in zip(hl, s.V.tolist()):
            fh.write(f"holder,{_check_label(lab)},{float(v)!r}\n")
        for lab, v in zip(il, s.C.tolist()):
            fh.write(f"issuer,{_check_label(lab)},{float(v)!r}\n")
        fh.write(f"links,,{int(L)}\n")


def file_digest(path: PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def to_jsonable(obj):
    """Convert numpy scalars/arrays to JSON types; masked entries become None."""
    if isinstance(obj, np.ma.MaskedArray):
        return [None if m else float(v) for v, m in zip(obj.data.tolist(), np.ma.getmaskarray(obj).tolist())]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def dump_json(obj, fh: Optional[IO[str]] = None) -> str:
    text = json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n"
    if fh is not None:
        fh.write(text)
    return text


def write_json(obj, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        dump_json(obj, fh)


def write_tsv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Stream rows to a TSV file; None is written as an empty cell."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join("" if v is None else (repr(v) if isinstance(v, float) else str(v)) for v in row) + "\n")
