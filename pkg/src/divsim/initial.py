"""Initial opinion assignments: spec strings and the opinion-file format.

Spec strings:

``uniform:K``
    i.i.d. uniform on [1..K], drawn from the trial's own generator (so each
    trial of an experiment gets a fresh configuration).
``uniform:K:SEED``
    one fixed configuration drawn from ``SEED``; identical in every trial.
``blocks:AxC1,BxC2,...``
    the first A vertices hold C1, the next B hold C2, and so on (``×`` or
    ``*`` are accepted for ``x``); the block sizes must add up to n.
``values:X0,X1,...``
    explicit per-vertex opinions.
``file:PATH``
    one integer per line, line i holding vertex i's opinion.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np


class InitSpecError(ValueError):
    pass


@dataclass(frozen=True)
class InitSpec:
    text: str
    per_trial: bool
    k: int | None
    fixed: np.ndarray | None = None

    def draw(self, n: int, rng: np.random.Generator | None = None) -> np.ndarray:
        if self.fixed is not None:
            if len(self.fixed) != n:
                raise InitSpecError(f"{self.text!r} gives {len(self.fixed)} opinions for {n} vertices")
            return self.fixed.copy()
        if rng is None:
            raise InitSpecError(f"{self.text!r} needs a random generator")
        return rng.integers(1, self.k + 1, size=n, dtype=np.int64)


def read_opinion_file(path) -> np.ndarray:
    with open(path) as fh:
        return parse_opinion_lines(fh.read())


def parse_opinion_lines(text: str) -> np.ndarray:
    vals = []
    for lineno, ln in enumerate(text.splitlines(), start=1):
        ln = ln.strip()
        if not ln:
            continue
        try:
            vals.append(int(ln))
        except ValueError as exc:
            raise InitSpecError(f"opinion file line {lineno}: {ln!r} is not an integer") from exc
    if not vals:
        raise InitSpecError("opinion file is empty")
    return _validated(np.asarray(vals, dtype=np.int64))


def write_opinion_file(path, x) -> None:
    with open(path, "w") as fh:
        fh.write("".join(f"{int(v)}\n" for v in x))


def _validated(x: np.ndarray) -> np.ndarray:
    if x.min() < 1:
        raise InitSpecError("opinions must be integers >= 1")
    return x


def parse_init(text: str, n: int | None = None) -> InitSpec:
    """Parse an initial-condition spec; with ``n`` a fixed vector must have length n."""
    spec = _parse(text, n)
    if n is not None and spec.fixed is not None and len(spec.fixed) != n:
        raise InitSpecError(f"{text!r} gives {len(spec.fixed)} opinions for {n} vertices")
    return spec


def _parse(text: str, n: int | None) -> InitSpec:
    kind, _, arg = text.partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "uniform":
            parts = arg.split(":")
            k = int(parts[0])
            if k < 1:
                raise InitSpecError("uniform:K needs K >= 1")
            if len(parts) == 1:
                return InitSpec(text, True, k)
            if n is None:
                raise InitSpecError(f"{text!r} needs the vertex count")
            rng = np.random.default_rng(int(parts[1]))
            return InitSpec(text, False, k, rng.integers(1, k + 1, size=n, dtype=np.int64))
        if kind == "blocks":
            vals = []
            for block in arg.split(","):
                m = re.fullmatch(r"\s*(\d+)\s*[x×*]\s*(-?\d+)\s*", block)
                if not m:
                    raise InitSpecError(f"bad block {block!r} in {text!r}")
                vals.extend([int(m.group(2))] * int(m.group(1)))
            x = _validated(np.asarray(vals, dtype=np.int64))
            return InitSpec(text, False, int(x.max()), x)
        if kind == "values":
            x = _validated(np.asarray([int(t) for t in arg.split(",")], dtype=np.int64))
            return InitSpec(text, False, int(x.max()), x)
        if kind == "file":
            x = read_opinion_file(arg)
            return InitSpec(text, False, int(x.max()), x)
    except (ValueError, OSError) as exc:
        if isinstance(exc, InitSpecError):
            raise
        raise InitSpecError(f"malformed initial-condition spec {text!r}: {exc}") from exc
    raise InitSpecError(f"unknown initial-condition spec {text!r}")
