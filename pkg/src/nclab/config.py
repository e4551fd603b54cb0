"""Config-file driven runs.

Format: `[section]` headers followed by `key = value` lines; `#`
starts a comment; blank lines ignored.  Parsing is strict: unknown
sections, unknown keys, duplicate keys and missing mandatory keys are
all fatal, with line numbers.  Silent typos are worse than friction in
numeric experiments.

Sections and keys (* = mandatory):

    [symbol]   n*, main*, order*, main_im, rho, delta, cutoff,
               term_0, term_1, ...   (each `degree ; angular-expression`)
    [lattice]  M*
    [quadrature]  Q, sphere_order, residue_q
    [fit]      f0, f1, discard, symmetrize
    [output]   dir, matrix_format (csv|binary|both)
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from . import dsl
from .errors import ConfigError

_TERM_KEY = re.compile(r"^term_(\d+)$")

_KNOWN_KEYS = {
    "symbol": {"n", "main", "main_im", "order", "rho", "delta", "cutoff"},
    "lattice": {"M"},
    "quadrature": {"Q", "sphere_order", "residue_q"},
    "fit": {"f0", "f1", "discard", "symmetrize"},
    "output": {"dir", "matrix_format"},
}


@dataclass
class SymbolConfig:
    n: int
    main: str
    order: float
    main_im: Optional[str] = None
    rho: float = 1.0
    delta: float = 0.0
    cutoff: float = 1.0
    terms: list[tuple[float, str]] = field(default_factory=list)


@dataclass
class RunConfig:
    symbol: SymbolConfig
    M: int
    Q: Optional[int] = None
    sphere_order: Optional[int] = None
    residue_q: int = 128
    f0: float = 0.2
    f1: float = 1.0
    discard: Optional[float] = None
    symmetrize: Optional[bool] = None
    out_dir: Optional[str] = None
    matrix_format: str = "both"


def _parse_lines(text: str) -> dict[str, dict[str, tuple[str, int]]]:
    sections: dict[str, dict[str, tuple[str, int]]] = {}
    current: Optional[str] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current not in _KNOWN_KEYS:
                raise ConfigError(f"unknown section [{current}]", lineno)
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ConfigError(f"expected `key = value`, got {line!r}", lineno)
        if current is None:
            raise ConfigError("key outside any [section]", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if not _is_known_key(current, key):
            raise ConfigError(f"unknown key {key!r} in [{current}]", lineno)
        if key in sections[current]:
            raise ConfigError(f"duplicate key {key!r} in [{current}]", lineno)
        sections[current][key] = (value, lineno)
    return sections


def _is_known_key(section: str, key: str) -> bool:
    if key in _KNOWN_KEYS[section]:
        return True
    return section == "symbol" and _TERM_KEY.match(key) is not None


_REQUIRED = object()


def _get(sections, section, key, conv, default=_REQUIRED):
    entry = sections.get(section, {}).get(key)
    if entry is None:
        if default is _REQUIRED:
            raise ConfigError(f"missing mandatory key {key!r} in [{section}]")
        return default
    value, lineno = entry
    try:
        return conv(value)
    except (ValueError, TypeError):
        raise ConfigError(f"bad value for {key!r}: {value!r}", lineno) from None


def _to_bool(value: str) -> bool:
    v = value.lower()
    if v in ("true", "on", "yes", "1"):
        return True
    if v in ("false", "off", "no", "0"):
        return False
    raise ValueError(value)


def load_config(path) -> RunConfig:
    """Read, validate and default-fill a run configuration."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    sections = _parse_lines(text)

    n = _get(sections, "symbol", "n", int)
    if n < 1:
        raise ConfigError(f"dimension must be >= 1, got {n}")
    sym = SymbolConfig(
        n=n,
        main=_get(sections, "symbol", "main", str),
        order=_get(sections, "symbol", "order", float),
        main_im=_get(sections, "symbol", "main_im", str, None),
        rho=_get(sections, "symbol", "rho", float, 1.0),
        delta=_get(sections, "symbol", "delta", float, 0.0),
        cutoff=_get(sections, "symbol", "cutoff", float, 1.0),
    )
    term_entries = {
        int(_TERM_KEY.match(key).group(1)): (value, lineno)
        for key, (value, lineno) in sections.get("symbol", {}).items()
        if _TERM_KEY.match(key)
    }
    for j in range(len(term_entries)):
        if j not in term_entries:
            raise ConfigError(f"classical terms must be contiguous: term_{j} is missing")
        value, lineno = term_entries[j]
        if ";" not in value:
            raise ConfigError("classical term must be `degree ; expression`", lineno)
        deg_text, expr = (part.strip() for part in value.split(";", 1))
        try:
            degree = float(deg_text)
        except ValueError:
            raise ConfigError(f"bad degree {deg_text!r} in term_{j}", lineno) from None
        sym.terms.append((degree, expr))

    cfg = RunConfig(
        symbol=sym,
        M=_get(sections, "lattice", "M", int),
        Q=_get(sections, "quadrature", "Q", int, None),
        sphere_order=_get(sections, "quadrature", "sphere_order", int, None),
        residue_q=_get(sections, "quadrature", "residue_q", int, 128),
        f0=_get(sections, "fit", "f0", float, 0.2),
        f1=_get(sections, "fit", "f1", float, 1.0),
        discard=_get(sections, "fit", "discard", float, None),
        symmetrize=_get(sections, "fit", "symmetrize", _to_bool, None),
        out_dir=_get(sections, "output", "dir", str, None),
        matrix_format=_get(sections, "output", "matrix_format", str, "both"),
    )
    if cfg.M < 0:
        raise ConfigError(f"lattice half-width M must be >= 0, got {cfg.M}")
    if cfg.matrix_format not in ("csv", "binary", "both"):
        raise ConfigError(f"matrix_format must be csv|binary|both, got {cfg.matrix_format!r}")
    return cfg


def build_symbol(cfg: RunConfig):
    """Parse the configured expressions into a discrete-side Symbol;
    expression or ladder problems surface as usage/parse errors."""
    sym = cfg.symbol
    return dsl.to_symbol(
        sym.main,
        n=sym.n,
        order=sym.order,
        rho=sym.rho,
        delta=sym.delta,
        main_im=sym.main_im,
        classical_terms=sym.terms or None,
        cutoff_radius=sym.cutoff,
        side="discrete",
    )
