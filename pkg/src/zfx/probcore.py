"""Sources, finite distributions, pushforward, statistical distance, entropy.

Outcomes of every distribution are the integers ``0 .. size-1``; a string
space is indexed lexicographically (first symbol most significant), so the
integer order is the string order. Distributions are stored sparsely
because bit-string spaces are large while source supports are small.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Iterable, Sequence

from . import guards
from .errors import InvalidArgumentError

TOL = 1e-12


# -- string <-> index helpers -------------------------------------------------

def bits_to_index(bits: Sequence[int]) -> int:
    idx = 0
    for b in bits:
        idx = (idx << 1) | (1 if b else 0)
    return idx


def index_to_bits(idx: int, n: int) -> tuple:
    return tuple((idx >> (n - 1 - i)) & 1 for i in range(n))


def subset_to_index(subset: Iterable[int], n: int) -> int:
    """Characteristic vector of ``subset`` of [n] as a string index."""
    idx = 0
    for x in subset:
        if not 1 <= x <= n:
            raise InvalidArgumentError(f"element {x} outside [1, {n}]")
        idx |= 1 << (n - x)
    return idx


def index_to_subset(idx: int, n: int) -> tuple:
    return tuple(i for i in range(1, n + 1) if (idx >> (n - i)) & 1)


def symbols_to_index(symbols: Sequence[int], d: int) -> int:
    idx = 0
    for s in symbols:
        if not 1 <= s <= d:
            raise InvalidArgumentError(f"symbol {s} outside [1, {d}]")
        idx = idx * d + (s - 1)
    return idx


def index_to_symbols(idx: int, d: int, p: int) -> tuple:
    out = [0] * p
    for i in range(p - 1, -1, -1):
        idx, r = divmod(idx, d)
        out[i] = r + 1
    return tuple(out)


def bits_label(n):
    return f"bits:{n}"


def symbols_label(d, p):
    return f"symbols:{d}^{p}"


def range_label(size):
    return f"range:{size}"


# -- distributions ------------------------------------------------------------

@dataclass(frozen=True)
class Distribution:
    """Probability vector over the outcomes ``0 .. size-1`` of a labelled space."""

    size: int
    probs: dict
    label: str = ""

    def __post_init__(self):
        if self.size < 1:
            raise InvalidArgumentError("outcome space must be nonempty")
        total = 0.0
        for x in sorted(self.probs):
            p = self.probs[x]
            if not 0 <= x < self.size:
                raise InvalidArgumentError(f"outcome {x} outside space of size {self.size}")
            if p < -TOL:
                raise InvalidArgumentError(f"negative probability {p} at {x}")
            total += p
        if abs(total - 1.0) > TOL:
            raise InvalidArgumentError(f"probabilities sum to {total!r}, not 1")

    def __getitem__(self, x):
        return self.probs.get(x, 0.0)

    def support(self):
        return sorted(x for x, p in self.probs.items() if p > 0)

    def dense(self):
        guards.check("subset_enumeration", self.size, "dense distribution size")
        return [self.probs.get(x, 0.0) for x in range(self.size)]

    def to_json(self):
        return {
            "label": self.label,
            "size": self.size,
            "support": [[x, self.probs[x]] for x in sorted(self.probs) if self.probs[x] > 0],
        }

    @classmethod
    def from_json(cls, obj):
        return cls(int(obj["size"]), {int(x): float(p) for x, p in obj["support"]}, obj.get("label", ""))


def uniform_distribution(range_size: int, label: str | None = None) -> Distribution:
    if range_size < 1:
        raise InvalidArgumentError("range_size must be at least 1")
    p = 1.0 / range_size
    return Distribution(range_size, {x: p for x in range(range_size)},
                        range_label(range_size) if label is None else label)


def point_mass(size, x, label=""):
    return Distribution(size, {x: 1.0}, label)


# -- sources ------------------------------------------------------------------

@dataclass(frozen=True)
class ZeroFixingSource:
    """Uniform over all subsets of ``V`` inside [N] (as characteristic strings)."""

    N: int
    V: frozenset

    def __post_init__(self):
        object.__setattr__(self, "V", frozenset(self.V))
        if self.N < 1 or not self.V:
            raise InvalidArgumentError("zero-fixing source needs N >= 1 and nonempty V")
        if min(self.V) < 1 or max(self.V) > self.N:
            raise InvalidArgumentError(f"support {sorted(self.V)} not inside [1, {self.N}]")

    @property
    def k(self):
        return len(self.V)

    def template(self):
        return "".join("*" if i in self.V else "0" for i in range(1, self.N + 1))

    def to_json(self):
        return {"type": "zero_fixing", "N": self.N, "V": sorted(self.V)}


@dataclass(frozen=True)
class BitFixingSource:
    """Uniform over the total extensions of a template in {0,1,*}^n."""

    template: str

    def __post_init__(self):
        if not self.template or set(self.template) - set("01*"):
            raise InvalidArgumentError(f"bad bit-fixing template {self.template!r}")

    @property
    def n(self):
        return len(self.template)

    @property
    def k(self):
        return self.template.count("*")

    def to_json(self):
        return {"type": "bit_fixing", "template": self.template}


@dataclass(frozen=True)
class SpecialSymbolFixingSource:
    """Strings over [d] where each entry is fixed or ranges over a pair of symbols."""

    d: int
    template: tuple

    def __post_init__(self):
        entries = []
        for e in self.template:
            if isinstance(e, int):
                if not 1 <= e <= self.d:
                    raise InvalidArgumentError(f"symbol {e} outside [1, {self.d}]")
                entries.append(e)
            else:
                a, b = sorted(e)
                if a == b or a < 1 or b > self.d:
                    raise InvalidArgumentError(f"bad symbol pair {e!r} for d={self.d}")
                entries.append((a, b))
        if not entries:
            raise InvalidArgumentError("empty symbol template")
        object.__setattr__(self, "template", tuple(entries))

    @property
    def p(self):
        return len(self.template)

    @property
    def t(self):
        return sum(1 for e in self.template if not isinstance(e, int))

    def to_json(self):
        return {"type": "special_symbol_fixing", "d": self.d,
                "template": [e if isinstance(e, int) else list(e) for e in self.template]}


def source_from_json(obj):
    kind = obj.get("type")
    if kind == "zero_fixing":
        return ZeroFixingSource(int(obj["N"]), frozenset(obj["V"]))
    if kind == "bit_fixing":
        return BitFixingSource(obj["template"])
    if kind == "special_symbol_fixing":
        return SpecialSymbolFixingSource(int(obj["d"]), tuple(
            e if isinstance(e, int) else tuple(e) for e in obj["template"]))
    raise InvalidArgumentError(f"unknown source type {kind!r}")


def source_space(source):
    """(size, label) of the string space a source lives in."""
    if isinstance(source, ZeroFixingSource):
        return 2**source.N, bits_label(source.N)
    if isinstance(source, BitFixingSource):
        return 2**source.n, bits_label(source.n)
    if isinstance(source, SpecialSymbolFixingSource):
        return source.d**source.p, symbols_label(source.d, source.p)
    raise InvalidArgumentError(f"not a source: {source!r}")


def source_outcomes(source) -> list:
    """Indices of all strings consistent with ``source``, each drawn with prob 2^-free."""
    if isinstance(source, ZeroFixingSource):
        guards.check("source_free_positions", source.k, "free positions")
        weights = [1 << (source.N - v) for v in sorted(source.V)]
        return _cube(0, weights)
    if isinstance(source, BitFixingSource):
        guards.check("source_free_positions", source.k, "free positions")
        n = source.n
        base = bits_to_index(1 if c == "1" else 0 for c in source.template)
        weights = [1 << (n - 1 - i) for i, c in enumerate(source.template) if c == "*"]
        return _cube(base, weights)
    if isinstance(source, SpecialSymbolFixingSource):
        guards.check("source_free_positions", source.t, "free positions")
        choices = [(e,) if isinstance(e, int) else e for e in source.template]
        return sorted(symbols_to_index(s, source.d) for s in product(*choices))
    raise InvalidArgumentError(f"not a source: {source!r}")


def _cube(base, weights):
    out = [base]
    for w in weights:
        out = out + [x + w for x in out]
    out.sort()
    return out


def source_distribution(source) -> Distribution:
    size, label = source_space(source)
    outs = source_outcomes(source)
    p = 1.0 / len(outs)
    return Distribution(size, {x: p for x in outs}, label)


# -- operations ---------------------------------------------------------------

def pushforward(F: Callable[[int], int], dist: Distribution, size: int, label: str = "") -> Distribution:
    """Distribution of F(X) for X ~ dist, with F mapping outcome indices into range(size)."""
    out = {}
    for x in sorted(dist.probs):
        p = dist.probs[x]
        if p == 0:
            continue
        try:
            y = F(x)
        except (KeyError, IndexError) as exc:
            raise InvalidArgumentError(f"map undefined on support element {x}") from exc
        if y is None or not 0 <= y < size:
            raise InvalidArgumentError(f"map sends {x} to {y!r}, outside range({size})")
        out[y] = out.get(y, 0.0) + p
    return Distribution(size, out, label)


def _check_same_space(d1, d2):
    # an empty label means "some space of this size" and matches any label
    if d1.size != d2.size or (d1.label and d2.label and d1.label != d2.label):
        raise InvalidArgumentError(
            f"outcome sets differ: {d1.label or '?'}[{d1.size}] vs {d2.label or '?'}[{d2.size}]")


def stat_distance(d1: Distribution, d2: Distribution) -> float:
    _check_same_space(d1, d2)
    keys = sorted(set(d1.probs) | set(d2.probs))
    return 0.5 * sum(abs(d1.probs.get(x, 0.0) - d2.probs.get(x, 0.0)) for x in keys)


def distance_to_uniform(dist: Distribution) -> float:
    """stat_distance(dist, uniform) without materializing the uniform vector."""
    u = 1.0 / dist.size
    support = [x for x in sorted(dist.probs) if dist.probs[x] > 0]
    s = sum(abs(dist.probs[x] - u) for x in support)
    s += (dist.size - len(support)) * u
    return 0.5 * s


def entropy(dist: Distribution) -> float:
    h = 0.0
    for x in sorted(dist.probs):
        p = dist.probs[x]
        if p > 0:
            h -= p * math.log2(p)
    return max(h, 0.0)


@dataclass(frozen=True)
class ConvexCombination:
    """Weighted sources plus a residual of total weight ``residual_weight``.

    ``residual_parts`` optionally lists the sources making up the residual
    (absolute weights summing to ``residual_weight``).
    """

    parts: tuple
    residual_weight: float = 0.0
    residual_description: str = ""
    residual_parts: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        object.__setattr__(self, "residual_parts", tuple(self.residual_parts))
        for w, _ in self.parts + self.residual_parts:
            if not -TOL <= w <= 1 + TOL:
                raise InvalidArgumentError(f"weight {w} outside [0, 1]")
        if not -TOL <= self.residual_weight <= 1 + TOL:
            raise InvalidArgumentError(f"residual weight {self.residual_weight} outside [0, 1]")
        total = math.fsum(w for w, _ in self.parts) + self.residual_weight
        if abs(total - 1.0) > TOL:
            raise InvalidArgumentError(f"weights sum to {total!r}, not 1")
        if self.residual_parts:
            rw = math.fsum(w for w, _ in self.residual_parts)
            if abs(rw - self.residual_weight) > TOL:
                raise InvalidArgumentError("residual parts do not add up to the residual weight")

    @property
    def good_weight(self):
        return math.fsum(w for w, _ in self.parts)


def _weighted_sum(items):
    size = label = None
    acc = {}
    for w, dist in items:
        if size is None:
            size, label = dist.size, dist.label
        elif (dist.size, dist.label) != (size, label):
            raise InvalidArgumentError("parts of a mixture must share one outcome space")
        for x in sorted(dist.probs):
            acc[x] = acc.get(x, 0.0) + w * dist.probs[x]
    return size, label, acc


def residual_distribution(comb: ConvexCombination) -> Distribution | None:
    """Normalized mixture of the residual parts, or None if none are recorded."""
    if not comb.residual_parts or comb.residual_weight <= 0:
        return None
    rw = comb.residual_weight
    size, label, acc = _weighted_sum((w / rw, source_distribution(s)) for w, s in comb.residual_parts)
    return Distribution(size, acc, label)


def mix(comb: ConvexCombination, residual: Distribution | None = None) -> Distribution:
    items = [(w, source_distribution(s)) for w, s in comb.parts]
    if comb.residual_weight > TOL:
        if residual is None:
            raise InvalidArgumentError("nonzero residual weight needs a residual distribution")
        items.append((comb.residual_weight, residual))
    if not items:
        raise InvalidArgumentError("empty convex combination")
    size, label, acc = _weighted_sum(items)
    return Distribution(size, acc, label)


def extractor_error(F: Callable[[int], int], sources, out_size: int) -> float:
    """Worst distance from uniform of F over the given sources."""
    label = range_label(out_size)
    worst = 0.0
    for src in sources:
        dist = source_distribution(src)
        worst = max(worst, distance_to_uniform(pushforward(F, dist, out_size, label)))
    return worst
