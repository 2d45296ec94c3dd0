"""Experiment configuration: a flat ``key = value`` file with one ``[experiment]`` section.

Example::

    [experiment]
    schema_version = 1
    operator = V:0,0.3
    p = 2
    alpha = 0.5, 1
    m = 1
    probes = orbit, gelfand
    nmax = 100

List-valued keys take comma-separated values; ``p`` accepts ``inf``.
"""

from __future__ import annotations

import configparser
import itertools
import math
from dataclasses import dataclass, replace
from pathlib import Path

from .operators import OperatorSpec
from .space import SpaceParams

SCHEMA_VERSION = 1
PROBES = ("orbit", "gelfand", "cesaro", "ritt", "hypercyclicity", "kbound", "crosscheck")

KEYS = {
    "schema_version",
    "operator",
    "p",
    "alpha",
    "m",
    "probes",
    "nmax",
    "norms_nmax",
    "truncation",
    "tol",
    "seed",
    "samples",
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    p: tuple[float, ...]
    alpha: tuple[float, ...]
    m: tuple[float, ...]
    operator: str = "D"
    probes: tuple[str, ...] = ("orbit",)
    nmax: int = 50
    norms_nmax: int = 60
    truncation: int = 0  # 0 picks the column count automatically
    tol: float = 1e-8
    seed: int = 0
    samples: int = 20  # random polynomials for the kbound probe
    schema_version: int = SCHEMA_VERSION

    def grid(self) -> list[SpaceParams]:
        """Cells in deterministic order: p outermost, then alpha, then m."""
        cells = []
        for p, a, m in itertools.product(self.p, self.alpha, self.m):
            try:
                cells.append(SpaceParams(p, a, m))
            except ValueError as exc:
                raise ConfigError(f"invalid cell p={p}, alpha={a}, m={m}: {exc}") from None
        if not cells:
            raise ConfigError("empty parameter grid")
        return cells

    def operator_spec(self) -> OperatorSpec:
        try:
            return OperatorSpec.parse(self.operator)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def with_overrides(self, nmax: int | None = None, tol: float | None = None) -> "ExperimentConfig":
        out = self
        if nmax is not None:
            if nmax < 1:
                raise ConfigError("--nmax must be positive")
            out = replace(out, nmax=nmax, norms_nmax=nmax)
        if tol is not None:
            if not tol > 0:
                raise ConfigError("--tol must be positive")
            out = replace(out, tol=tol)
        return out

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "operator": self.operator,
            "p": [_fmt_p(p) for p in self.p],
            "alpha": list(self.alpha),
            "m": list(self.m),
            "probes": list(self.probes),
            "nmax": self.nmax,
            "norms_nmax": self.norms_nmax,
            "truncation": self.truncation,
            "tol": self.tol,
            "seed": self.seed,
            "samples": self.samples,
        }


def _fmt_p(p: float) -> str | float:
    return "inf" if math.isinf(p) else p


def _floats(key: str, raw: str) -> tuple[float, ...]:
    out = []
    for item in raw.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            out.append(float(item))
        except ValueError:
            raise ConfigError(f"{key}: cannot parse {item!r} as a number") from None
    return tuple(out)


def _int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    if not parser.has_section("experiment"):
        raise ConfigError("missing [experiment] section")
    sec = parser["experiment"]
    unknown = set(sec) - KEYS
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(sorted(unknown))}")
    version = _int("schema_version", sec.get("schema_version", "0"))
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version} (expected {SCHEMA_VERSION})")
    for key in ("p", "alpha", "m"):
        if key not in sec:
            raise ConfigError(f"missing key {key!r}")
    probes = tuple(x.strip() for x in sec.get("probes", "orbit").split(",") if x.strip())
    bad = [x for x in probes if x not in PROBES]
    if bad:
        raise ConfigError(f"unknown probes: {', '.join(bad)} (choose from {', '.join(PROBES)})")
    try:
        tol = float(sec.get("tol", "1e-8"))
    except ValueError:
        raise ConfigError("tol: expected a number") from None
    cfg = ExperimentConfig(
        p=_floats("p", sec["p"]),
        alpha=_floats("alpha", sec["alpha"]),
        m=_floats("m", sec["m"]),
        operator=sec.get("operator", "D").strip(),
        probes=probes,
        nmax=_int("nmax", sec.get("nmax", "50")),
        norms_nmax=_int("norms_nmax", sec.get("norms_nmax", "60")),
        truncation=_int("truncation", sec.get("truncation", "0")),
        tol=tol,
        seed=_int("seed", sec.get("seed", "0")),
        samples=_int("samples", sec.get("samples", "20")),
        schema_version=version,
    )
    if cfg.nmax < 1 or cfg.norms_nmax < 0 or cfg.truncation < 0 or cfg.samples < 1:
        raise ConfigError("nmax must be positive; norms_nmax, truncation nonnegative; samples positive")
    if not cfg.tol > 0:
        raise ConfigError("tol must be positive")
    cfg.grid()
    cfg.operator_spec()
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)
