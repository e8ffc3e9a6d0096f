"""Artifact writers: JSON, JSON-lines, CSV and SVG polylines.

Every artifact carries the hash of the canonical run configuration and the
package version. Floats are written with `repr`, non-finite values as the
strings "inf", "-inf" and "nan", so identical runs give identical bytes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, fields, is_dataclass
from enum import Enum
import hashlib
import json
import math
from pathlib import Path
from typing import Any, Iterable
from xml.sax.saxutils import escape

import numpy as np

from .logging import logger

log = logger()


def to_data(x: Any) -> Any:
    """Plain JSON data from reports, numpy values, enums and paths."""
    match x:
        case bool() | str() | None:
            return x
        case int():
            return x
        case float():
            if math.isfinite(x):
                return x
            return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
        case complex():
            return [to_data(x.real), to_data(x.imag)]
        case np.generic():
            return to_data(x.item())
        case np.ndarray():
            return [to_data(v) for v in x.tolist()]
        case Enum():
            return str(x)
        case Path():
            return x.as_posix()
        case dict():
            return {str(to_data(k)) if not isinstance(k, str) else k: to_data(v) for k, v in x.items()}
        case list() | tuple():
            return [to_data(v) for v in x]
    if hasattr(x, "to_dict"):
        return to_data(x.to_dict())
    if is_dataclass(x) and not isinstance(x, type):
        return {f.name: to_data(getattr(x, f.name)) for f in fields(x) if not f.name.startswith("_")}
    raise TypeError(f"Cannot serialize {type(x).__name__}")


def canonical_json(data: Any) -> str:
    return json.dumps(to_data(data), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def config_hash(config: Any) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


@dataclass(frozen=True)
class Provenance:
    config_hash: str
    version: str

    def header(self) -> dict[str, str]:
        return {"config_hash": self.config_hash, "version": self.version}

    def comment(self) -> str:
        return f"# config_hash={self.config_hash} version={self.version}\n"


@dataclass
class Series:
    name: str
    points: list[tuple[float, float]]
    dots: bool = False


def _cell(v: Any) -> Any:
    v = to_data(v)
    return json.dumps(v) if isinstance(v, (list, dict)) else v


@dataclass
class ArtifactWriter:
    """Writes into `out`; calls happen on the event loop only."""

    out: Path
    provenance: Provenance
    written: list[Path] = field(default_factory=list)

    def _path(self, name: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / name
        self.written.append(path)
        log.debug(f"writing `{path}`")
        return path

    def json(self, name: str, data: Any) -> Path:
        path = self._path(name)
        path.write_text(canonical_json({**self.provenance.header(), "data": data}), encoding="utf-8")
        return path

    def jsonl(self, name: str, rows: Iterable[Any]) -> Path:
        path = self._path(name)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(self.provenance.comment())
            for row in rows:
                f.write(json.dumps(to_data(row), sort_keys=True, ensure_ascii=False) + "\n")
        return path

    def csv(self, name: str, rows: list[dict[str, Any]], columns: list[str] | None = None) -> Path:
        path = self._path(name)
        columns = columns or (list(rows[0]) if rows else [])
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(self.provenance.comment())
            writer = csv.DictWriter(f, fieldnames=columns, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({k: _cell(row.get(k)) for k in columns})
        return path

    def svg(self, name: str, series: list[Series], *, title: str = "", xlabel: str = "", ylabel: str = "") -> Path:
        path = self._path(name)
        path.write_text(render_svg(series, self.provenance, title, xlabel, ylabel), encoding="utf-8")
        return path


COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def render_svg(series: list[Series], provenance: Provenance, title: str, xlabel: str, ylabel: str,
               width: int = 640, height: int = 420, margin: int = 48) -> str:
    finite = [(x, y) for s in series for x, y in s.points if math.isfinite(x) and math.isfinite(y)]
    xs = [p[0] for p in finite] or [0.0, 1.0]
    ys = [p[1] for p in finite] or [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    x1, y1 = (x1 if x1 > x0 else x0 + 1), (y1 if y1 > y0 else y0 + 1)

    def px(x, y):
        return (margin + (x - x0) / (x1 - x0) * (width - 2 * margin),
                height - margin - (y - y0) / (y1 - y0) * (height - 2 * margin))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f"<metadata>{escape(json.dumps(provenance.header(), sort_keys=True))}</metadata>",
        f'<text x="{width / 2:.1f}" y="{margin / 2:.1f}" text-anchor="middle">{escape(title)}</text>',
        f'<rect x="{margin}" y="{margin}" width="{width - 2 * margin}" height="{height - 2 * margin}" fill="none" stroke="#999"/>',
        f'<text x="{width / 2:.1f}" y="{height - 8}" text-anchor="middle">{escape(xlabel)} [{x0:.4g}, {x1:.4g}]</text>',
        f'<text x="12" y="{height / 2:.1f}" transform="rotate(-90 12 {height / 2:.1f})" text-anchor="middle">'
        f"{escape(ylabel)} [{y0:.4g}, {y1:.4g}]</text>",
    ]
    for i, s in enumerate(series):
        color = COLORS[i % len(COLORS)]
        pts = [px(x, y) for x, y in s.points if math.isfinite(x) and math.isfinite(y)]
        out.append(f'<g id="{escape(s.name)}">')
        if s.dots:
            out.extend(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="2" fill="{color}"/>' for a, b in pts)
        elif pts:
            coords = " ".join(f"{a:.2f},{b:.2f}" for a, b in pts)
            out.append(f'<polyline points="{coords}" fill="none" stroke="{color}"/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
