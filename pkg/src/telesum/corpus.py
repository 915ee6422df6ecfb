"""Regression corpus of closed-form identities and its verifier.

The corpus ships as JSON lines (``data/corpus.jsonl``).  The first line is a
header carrying the format version; every further line is one entry.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .algebra import RatFunc
from .expr import Expr, as_ratfunc, parse, subs_params
from .oracle import CheckReport, check_identity

FORMAT = "telesum-corpus"
VERSION = 1


@dataclass(frozen=True)
class CorpusEntry:
    id: str
    lhs: str
    rhs: str
    anchor: str = ""
    provisos: tuple[str, ...] = ()
    domain: str = "square"
    solutions: Mapping[str, str] = field(default_factory=dict)
    constants: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.domain not in ("square", "triangle"):
            raise ValueError(f"{self.id}: unknown domain {self.domain!r}")
        # fail early on unparseable text
        self.expressions()

    @classmethod
    def from_json(cls, data: Mapping) -> "CorpusEntry":
        return cls(id=data["id"], lhs=data["lhs"], rhs=data["rhs"], anchor=data.get("anchor", ""),
                   provisos=tuple(data.get("provisos", ())), domain=data.get("domain", "square"),
                   solutions=dict(data.get("solutions", {})), constants=dict(data.get("constants", {})))

    def to_json(self) -> dict:
        out = {"id": self.id, "lhs": self.lhs, "rhs": self.rhs, "provisos": list(self.provisos),
               "domain": self.domain, "anchor": self.anchor}
        if self.solutions:
            out["solutions"] = dict(self.solutions)
        if self.constants:
            out["constants"] = dict(self.constants)
        return out

    def all_provisos(self) -> tuple[str, ...]:
        extra = ("a<=n",) if self.domain == "triangle" else ()
        return extra + tuple(self.provisos)

    def expressions(self) -> tuple[Expr, Expr]:
        """Parsed sides with plugged-in constants."""
        lhs, rhs = parse(self.lhs), parse(self.rhs)
        if self.constants:
            values: dict[str, RatFunc] = {}
            for name, text in self.constants.items():
                value = as_ratfunc(parse(text))
                if value is None:
                    raise ValueError(f"{self.id}: constant {name} is not rational")
                values[name] = value
            lhs, rhs = subs_params(lhs, values), subs_params(rhs, values)
        return lhs, rhs

    def verify(self, grid: tuple[int, int] = (12, 12), seed: int | None = None) -> CheckReport:
        lhs, rhs = self.expressions()
        sols = {s: parse(t) for s, t in self.solutions.items()}
        ranges = {"a": range(grid[0] + 1), "n": range(grid[1] + 1)}
        return check_identity(lhs, rhs, ranges, provisos=self.all_provisos(), constraint_solutions=sols,
                              seed=seed)


def _read_lines(lines: Iterable[str]) -> list[CorpusEntry]:
    entries = []
    header = None
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line:
            continue
        data = json.loads(line)
        if header is None:
            header = data
            if header.get("format") != FORMAT or header.get("version") != VERSION:
                raise ValueError(f"unsupported corpus header {header!r}")
            continue
        entries.append(CorpusEntry.from_json(data))
    ids = [e.id for e in entries]
    if len(ids) != len(set(ids)):
        raise ValueError("duplicate corpus ids")
    return entries


def load_corpus(path: str | Path | None = None) -> list[CorpusEntry]:
    if path is None:
        text = resources.files("telesum").joinpath("data/corpus.jsonl").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return _read_lines(text.splitlines())


def get_entry(entry_id: str, entries: list[CorpusEntry] | None = None) -> CorpusEntry:
    for e in entries if entries is not None else load_corpus():
        if e.id == entry_id:
            return e
    raise KeyError(entry_id)


def run_corpus(entries: Iterable[CorpusEntry] | None = None, grid: tuple[int, int] = (12, 12),
               seed: int | None = None, pattern: str | None = None):
    """Yield ``(entry, report, seconds)`` for every selected entry."""
    for e in entries if entries is not None else load_corpus():
        if pattern and pattern not in e.id:
            continue
        t0 = time.perf_counter()
        report = e.verify(grid, seed)
        yield e, report, time.perf_counter() - t0
