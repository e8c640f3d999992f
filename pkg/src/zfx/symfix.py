"""Shift-graph extractor, special symbol-fixing sources, and the loss-less disperser.

F1 cuts a sorted set X into consecutive l-blocks and writes down the color
of each block under a proper coloring psi of S(N, l), padded with 1s to
length p = (k-1)//l. The image of a zero-fixing source splits into special
symbol-fixing sources: the support V is cut into blocks of sizes l+1, l-1,
l+1, ... and an odd block contributes a two-valued entry whenever X meets it
in the block minus its max or minus its min, with the right count of
elements before it.

That decomposition does not depend on V except through psi, so it is built
once per (k, l) over bit masks of positions in V (``part_structure``) and
then instantiated per V.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import numpy as np

from . import guards, shiftlab
from .combi import combinations_chunks, row_distance_to_uniform, sample_subsets
from .errors import InvalidArgumentError, SearchFailure, VerificationFailure
from .probcore import (TOL, ConvexCombination, SpecialSymbolFixingSource, ZeroFixingSource,
                       index_to_bits, index_to_subset, mix, pushforward, residual_distribution,
                       source_distribution, stat_distance, symbols_label, symbols_to_index)


# -- parameters and F1 --------------------------------------------------------

@dataclass(frozen=True)
class ShiftParams:
    N: int
    k: int
    l: int
    p: int
    d: int
    psi: shiftlab.Coloring = field(repr=False, compare=False)

    @property
    def k_prime_raw(self):
        return 2.0 ** (-2 * self.l - 3) * self.p

    @property
    def k_prime(self):
        return max(1, math.floor(self.k_prime_raw))


def build_shift_params(N: int, k: int, l: int, psi: shiftlab.Coloring | None = None) -> ShiftParams:
    if l < 2:
        raise InvalidArgumentError("l must be at least 2")
    if k < l + 1:
        raise InvalidArgumentError(f"need k >= l+1 so that p >= 1, got k={k}, l={l}")
    if N < k or N <= l:
        raise InvalidArgumentError(f"N={N} too small for k={k}, l={l}")
    if psi is None:
        psi = shiftlab.color_tower(N, l)
    if (psi.n, psi.l) != (N, l):
        raise InvalidArgumentError(f"coloring is for S({psi.n},{psi.l}), not S({N},{l})")
    return ShiftParams(N, k, l, (k - 1) // l, psi.color_count, psi)


def shift_blocks(X, l: int, p: int) -> list:
    """The first min(j, p) consecutive l-blocks of sorted X; the remainder is dropped."""
    xs = sorted(X)
    j = min(len(xs) // l, p)
    return [tuple(xs[i * l:(i + 1) * l]) for i in range(j)]


def shift_f1(X, params: ShiftParams) -> tuple:
    """Colors of the l-blocks of X, padded with 1 to length p. The empty set maps to all 1s."""
    X = set(X)
    if len(X) > params.k:
        raise InvalidArgumentError(f"|X|={len(X)} exceeds k={params.k}")
    out = [params.psi(b) for b in shift_blocks(X, params.l, params.p)]
    return tuple(out + [1] * (params.p - len(out)))


def shift_f1_index(params: ShiftParams):
    def F(idx):
        return symbols_to_index(shift_f1(index_to_subset(idx, params.N), params), params.d)
    return F


def block_partition(V, l: int) -> tuple:
    """Consecutive blocks of sorted V with sizes l+1, l-1, l+1, ...; the last may be short."""
    xs = sorted(set(V))
    if l < 2:
        raise InvalidArgumentError("l must be at least 2")
    if len(xs) <= l:
        raise InvalidArgumentError(f"|V|={len(xs)} must exceed l={l}")
    out, i, odd = [], 0, True
    while i < len(xs):
        size = l + 1 if odd else l - 1
        out.append(tuple(xs[i:i + size]))
        i += size
        odd = not odd
    return tuple(out)


# -- decomposition ------------------------------------------------------------

@dataclass(frozen=True)
class SymbolDecompositionPart:
    """One (J, {Y_i}) class, expressed in positions 0..k-1 of sorted V.

    ``entries`` has one item per output coordinate: ("fixed", positions),
    ("pad",) or ("pair", positions_without_max, positions_without_min).
    """

    J: tuple
    Y: tuple  # ((block index, positions), ...) for blocks outside J
    weight: float
    entries: tuple
    members: tuple  # bit masks (bit i = position i) of the subsets in this class

    @property
    def t(self):
        return len(self.J)


def _initial_segment(sub, block):
    return tuple(sub) == tuple(block[:len(sub)])


@lru_cache(maxsize=64)
def part_structure(k: int, l: int) -> tuple:
    """All decomposition classes for |V| = k, over position masks."""
    guards.check("subset_enumeration", 2**k, "subsets of V")
    p = (k - 1) // l
    blocks = block_partition(range(k), l)
    full_odd = [i for i in range(1, len(blocks) + 1, 2) if len(blocks[i - 1]) == l + 1]
    groups = {}
    for mask in range(2**k):
        xs = [i for i in range(k) if mask >> i & 1]
        inter = [tuple(x for x in b if mask >> x & 1) for b in blocks]
        J = []
        for i in full_odd:
            block = blocks[i - 1]
            before = sum(len(inter[j]) for j in range(i - 1))
            c1 = before % l == 0
            c2 = i == 1 or _initial_segment(inter[i - 2], blocks[i - 2])
            c3 = inter[i - 1] in (block[:-1], block[1:])
            if c1 and c2 and c3:
                J.append(i)
        key = (tuple(J), tuple((i, inter[i - 1]) for i in range(1, len(blocks) + 1) if i not in J))
        groups.setdefault(key, []).append((mask, xs))
    parts = []
    for (J, Y), members in sorted(groups.items()):
        if len(members) != 2 ** len(J):
            raise AssertionError(f"class {J} has {len(members)} members")
        _, xs0 = members[0]
        base = shift_blocks(xs0, l, p)
        entries = [("fixed", b) for b in base] + [("pad",)] * (p - len(base))
        for i in J:
            block = blocks[i - 1]
            before = sum(1 for x in xs0 if x < block[0])
            entries[before // l] = ("pair", block[:-1], block[1:])
        for _, xs in members:  # every member must realise the same template
            got = shift_blocks(xs, l, p)
            got = got + [None] * (p - len(got))
            for e, g in zip(entries, got):
                ok = (e[0] == "pad" and g is None) or (e[0] == "fixed" and g == e[1]) or \
                     (e[0] == "pair" and g in e[1:])
                if not ok:
                    raise AssertionError(f"member {xs} of class {J} breaks the template")
        parts.append(SymbolDecompositionPart(J, Y, len(members) / 2**k, tuple(entries),
                                             tuple(m for m, _ in members)))
    return tuple(parts)


def part_template(part: SymbolDecompositionPart, V, psi) -> tuple:
    xs = sorted(V)
    out = []
    for e in part.entries:
        if e[0] == "pad":
            out.append(1)
        elif e[0] == "fixed":
            out.append(psi(tuple(xs[i] for i in e[1])))
        else:
            a, b = psi(tuple(xs[i] for i in e[1])), psi(tuple(xs[i] for i in e[2]))
            if a == b:
                raise InvalidArgumentError("coloring is not proper: a shift edge is monochromatic")
            out.append((a, b))
    return tuple(out)


def decompose_shift_source(V, params: ShiftParams, k_req: int | None = None) -> ConvexCombination:
    V = sorted(set(V))
    if len(V) != params.k:
        raise InvalidArgumentError(f"|V|={len(V)} but k={params.k}")
    if V[0] < 1 or V[-1] > params.N:
        raise InvalidArgumentError(f"V not inside [1, {params.N}]")
    k_req = params.k_prime if k_req is None else k_req
    good, bad = [], []
    for part in part_structure(params.k, params.l):
        src = SpecialSymbolFixingSource(params.d, part_template(part, V, params.psi))
        (good if part.t >= k_req else bad).append((part.weight, src))
    rw = math.fsum(w for w, _ in bad)
    return ConvexCombination(tuple(good), rw, f"classes with fewer than {k_req} pairs", tuple(bad))


def residual_weight(k: int, l: int, k_req: int) -> float:
    return math.fsum(part.weight for part in part_structure(k, l) if part.t < k_req)


def check_shift_decomposition(V, params: ShiftParams) -> float:
    """Distance between the mixed decomposition and the true image of ZeroFixing(V)."""
    comb = decompose_shift_source(V, params)
    mixed = mix(comb, residual_distribution(comb))
    src = ZeroFixingSource(params.N, frozenset(V))
    img = pushforward(shift_f1_index(params), source_distribution(src), params.d**params.p,
                      symbols_label(params.d, params.p))
    return stat_distance(mixed, img)


# -- batched evaluation over many supports ------------------------------------

def _position_colors(rows: np.ndarray, psi, l: int) -> dict:
    k = rows.shape[1]
    return {pos: psi.color_many(rows[:, list(pos)]) for pos in combinations(range(k), l)}


@lru_cache(maxsize=64)
def _mask_blocks(k: int, l: int, p: int) -> tuple:
    return tuple(tuple(shift_blocks([i for i in range(k) if m >> i & 1], l, p)) for m in range(2**k))


def _codes_for_blocks(blocks, colors, d, p, M):
    code = np.zeros(M, dtype=np.int64)
    for e in range(p):
        w = d ** (p - 1 - e)
        if e < len(blocks):
            code += (colors[blocks[e]] - 1) * w
    return code


def image_codes(rows: np.ndarray, params: ShiftParams) -> np.ndarray:
    """(M, 2^k) array: symbol-string index of F1 on every subset of every support row."""
    M, k = rows.shape
    colors = _position_colors(rows, params.psi, params.l)
    masks = _mask_blocks(k, params.l, params.p)
    out = np.empty((M, len(masks)), dtype=np.int64)
    for mask, blocks in enumerate(masks):
        out[:, mask] = _codes_for_blocks(blocks, colors, params.d, params.p, M)
    return out


def batch_decomposition_distance(rows: np.ndarray, params: ShiftParams) -> np.ndarray:
    """Per-row distance between the mixed decomposition and the image distribution."""
    M, k = rows.shape
    size = params.d**params.p
    guards.check("symbol_table", size, "symbol strings")
    d, p = params.d, params.p
    colors = _position_colors(rows, params.psi, params.l)
    ar = np.arange(M)
    image = np.zeros((M, size))
    codes = image_codes(rows, params)
    for mask in range(2**k):
        image[ar, codes[:, mask]] += 2.0**-k
    mixed = np.zeros((M, size))
    for part in part_structure(k, params.l):
        pair_idx = [e for e, ent in enumerate(part.entries) if ent[0] == "pair"]
        for choice in range(2**part.t):
            code = np.zeros(M, dtype=np.int64)
            for e, ent in enumerate(part.entries):
                w = d ** (p - 1 - e)
                if ent[0] == "fixed":
                    code += (colors[ent[1]] - 1) * w
                elif ent[0] == "pair":
                    bit = choice >> (part.t - 1 - pair_idx.index(e)) & 1
                    a, b = colors[ent[1]], colors[ent[2]]
                    if np.any(a == b):
                        raise InvalidArgumentError("coloring is not proper on a shift edge")
                    code += ((b if bit else a) - 1) * w
            mixed[ar, code] += part.weight / 2**part.t
    return 0.5 * np.abs(mixed - image).sum(axis=1)


def verify_shift_decomposition(N: int, k: int, l: int, mode: str = "auto", samples: int = 10**4,
                               seed: int = 0, cross_check: int = 20, chunk: int = 20000,
                               exhaustive_limit: int = 10**6) -> dict:
    params = build_shift_params(N, k, l)
    total = math.comb(N, k)
    if mode == "auto":
        mode = "exhaustive" if total <= exhaustive_limit else "sampled"
    if mode == "exhaustive":
        guards.check("stepup_sources", total, "zero-fixing sources")
        batches = combinations_chunks(N, k, chunk)
    elif mode == "sampled":
        rows = sample_subsets(N, k, samples, seed)
        batches = [rows[i:i + chunk] for i in range(0, len(rows), chunk)]
    else:
        raise InvalidArgumentError(f"unknown mode {mode!r}")
    worst, count, first = 0.0, 0, None
    for rows in batches:
        dist = batch_decomposition_distance(rows, params)
        worst = max(worst, float(dist.max()))
        count += len(rows)
        if first is None:
            first = rows[:cross_check]
    # the scalar path goes through probcore and the real F1 on actual subsets
    scalar = [check_shift_decomposition(V, params) for V in first.tolist()]
    batch = batch_decomposition_distance(first, params).tolist()
    parts = part_structure(k, l)
    return {"N": N, "k": k, "l": l, "p": params.p, "d": params.d, "mode": mode,
            "seed": seed if mode == "sampled" else None, "sources": count, "max_distance": worst,
            "scalar_max_distance": max(scalar), "scalar_agrees": all(abs(a - b) <= TOL for a, b in zip(scalar, batch)),
            "parts": len(parts), "weight_total": math.fsum(pt.weight for pt in parts),
            "k_prime": params.k_prime, "k_prime_raw": params.k_prime_raw,
            "residual_weight": residual_weight(k, l, params.k_prime)}


# -- extractors for special symbol-fixing sources -----------------------------

@dataclass
class SymbolTable:
    """F2: [d]^p -> {0,1}^m as a dense table indexed by the mixed-radix string index."""

    p: int
    d: int
    m: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.int64)
        if self.values.shape != (self.d**self.p,):
            raise InvalidArgumentError(f"table needs {self.d**self.p} entries")
        if self.values.size and (self.values.min() < 0 or self.values.max() >= 2**self.m):
            raise InvalidArgumentError("table values must lie in [0, 2^m)")

    def __call__(self, symbols) -> tuple:
        if len(symbols) != self.p:
            raise InvalidArgumentError(f"expected {self.p} symbols")
        return index_to_bits(int(self.values[symbols_to_index(symbols, self.d)]), self.m)

    def to_json(self):
        return {"p": self.p, "d": self.d, "m": self.m, "table": self.values.tolist()}

    @classmethod
    def from_json(cls, obj):
        return cls(int(obj["p"]), int(obj["d"]), int(obj["m"]), obj["table"])


def symbol_source_count(p, d, k_req):
    pairs = math.comb(d, 2)
    return sum(math.comb(p, t) * d ** (p - t) * pairs**t for t in range(k_req, p + 1))


def _source_outcome_indices(p, d, S):
    """(sources, 2^t) array of string indices, one row per special source with pairs at positions S."""
    t = len(S)
    pairs = np.array(list(combinations(range(d), 2)), dtype=np.int64).reshape(-1, 2)
    sel = np.arange(2**t)
    acc = np.zeros((1, 2**t), dtype=np.int64)
    for pos in range(p):
        w = d ** (p - 1 - pos)
        if pos in S:
            bit = sel >> (t - 1 - S.index(pos)) & 1
            opts = np.where(bit[None, :] == 1, pairs[:, 1:2], pairs[:, 0:1])
        else:
            opts = np.repeat(np.arange(d, dtype=np.int64)[:, None], 2**t, axis=1)
        acc = (acc[:, None, :] + w * opts[None, :, :]).reshape(-1, 2**t)
    return acc


def verify_symbol_extractor(F: SymbolTable, p: int, k_req: int, d: int) -> dict:
    """Exact worst error over every special (p, t, d) source with t >= k_req."""
    if (F.p, F.d) != (p, d):
        raise InvalidArgumentError("table shape does not match (p, d)")
    if not 0 <= k_req <= p:
        raise InvalidArgumentError(f"k_req must lie in [0, {p}]")
    guards.check("symbol_sources", symbol_source_count(p, d, k_req), "special symbol-fixing sources")
    worst, where = -1.0, None
    for t in range(k_req, p + 1):
        for S in combinations(range(p), t):
            idx = _source_outcome_indices(p, d, S)
            eps = row_distance_to_uniform(F.values[idx], 2**F.m)
            j = int(np.argmax(eps))
            if eps[j] > worst + 1e-15:
                worst, where = float(eps[j]), (S, idx[j].tolist())
    return {"eps": worst, "k_req": k_req, "sources": symbol_source_count(p, d, k_req),
            "worst_pair_positions": list(where[0]) if where else None,
            "worst_outcomes": where[1] if where else None}


def lemma_bound(p: int, k: int, d: int, m: int, eps: float) -> dict:
    """Whether (p, k, d, m, eps) meets the counting-argument condition for a random table."""
    exponent = (math.log2(math.e) / 3 * eps**2 * 2**k - 2**m - 1) / (2 * p)
    return {"exponent": exponent, "d_max": 2.0**exponent, "range_ok": 1 < m <= k <= p,
            "satisfied": d <= 2.0**exponent and 1 < m <= k <= p}


@dataclass(frozen=True)
class SearchConfig:
    seed: int = 0
    max_candidates: int = 1000
    target_eps: float = 0.1
    m_out: int = 1

    def __post_init__(self):
        if self.max_candidates < 1:
            raise InvalidArgumentError("max_candidates must be at least 1")


def search_f2(p: int, k_req: int, d: int, m: int, config: SearchConfig) -> dict:
    """Random tables from a seeded generator until one verifies at the target error."""
    guards.check("symbol_table", d**p, "symbol table size")
    rng = np.random.default_rng(config.seed)
    bound = lemma_bound(p, k_req, d, m, config.target_eps)
    best_eps, best = math.inf, None
    for cand in range(1, config.max_candidates + 1):
        F = SymbolTable(p, d, m, rng.integers(0, 2**m, size=d**p))
        eps = verify_symbol_extractor(F, p, k_req, d)["eps"]
        if eps < best_eps:
            best_eps, best = eps, F
        if eps <= config.target_eps + 1e-15:
            return {"table": F, "eps": eps, "candidates": cand, "seed": config.seed,
                    "target_eps": config.target_eps, "lemma": bound}
    raise SearchFailure(f"no table with eps <= {config.target_eps} among {config.max_candidates} "
                        f"candidates (best {best_eps})", best_eps=best_eps,
                        candidates=config.max_candidates, best_table=best.to_json())


def shift_extract(X, params: ShiftParams, F2: SymbolTable) -> tuple:
    if (F2.p, F2.d) != (params.p, params.d):
        raise InvalidArgumentError(f"F2 is for [{F2.d}]^{F2.p}, F1 produces [{params.d}]^{params.p}")
    return F2(shift_f1(X, params))


def measure_shift(N: int, k: int, l: int, F2: SymbolTable, mode: str = "exhaustive",
                  samples: int = 10**4, seed: int = 0, k_req: int | None = None,
                  chunk: int = 20000) -> dict:
    """Worst and mean error of F2 o F1 over zero-fixing sources, against eps(F2) + residual."""
    params = build_shift_params(N, k, l)
    if (F2.p, F2.d) != (params.p, params.d):
        raise InvalidArgumentError(f"F2 is for [{F2.d}]^{F2.p}, F1 produces [{params.d}]^{params.p}")
    k_req = params.k_prime if k_req is None else k_req
    f2_eps = verify_symbol_extractor(F2, params.p, k_req, params.d)["eps"]
    resid = residual_weight(k, l, k_req)
    if mode == "exhaustive":
        guards.check("stepup_sources", math.comb(N, k), "zero-fixing sources")
        batches = combinations_chunks(N, k, chunk)
    elif mode == "sampled":
        rows = sample_subsets(N, k, samples, seed)
        batches = [rows[i:i + chunk] for i in range(0, len(rows), chunk)]
    else:
        raise InvalidArgumentError(f"unknown mode {mode!r}")
    worst, worst_V, sums, count = -1.0, None, [], 0
    for rows in batches:
        out = F2.values[image_codes(rows, params)]
        eps = row_distance_to_uniform(out, 2**F2.m)
        j = int(np.argmax(eps))
        if eps[j] > worst:
            worst, worst_V = float(eps[j]), rows[j].tolist()
        sums.append(math.fsum(eps.tolist()))
        count += len(rows)
    bound = f2_eps + resid
    report = {"N": N, "k": k, "l": l, "p": params.p, "d": params.d, "m": F2.m, "mode": mode,
              "seed": seed if mode == "sampled" else None, "sources": count, "k_req": k_req,
              "eps_f2": f2_eps, "residual_max": resid, "worst_eps": worst,
              "mean_eps": math.fsum(sums) / count, "worst_V": worst_V, "bound_eps": bound,
              "bound_holds": worst <= bound + TOL}
    if not report["bound_holds"]:
        raise VerificationFailure(f"measured eps {worst} exceeds mixture bound {bound}")
    return report


# -- loss-less disperser ------------------------------------------------------

def three_coloring_for(n: int, l: int) -> shiftlab.Coloring:
    """A proper coloring of S(n, l) with at most 3 colors, or invalid-argument if none is reachable."""
    if not 1 <= l < n:
        raise InvalidArgumentError(f"need 1 <= l < n, got l={l}, n={n}")
    try:
        level, c = shiftlab.three_coloring(n)
    except InvalidArgumentError:
        level, c = n, None
    if c is not None and level <= l:
        while c.l < l:
            c = shiftlab.step_coloring(c, 3)
        return c
    if math.comb(n, l) <= guards.limit("chromatic_vertices"):
        found = shiftlab.find_coloring(n, l, 3)
        if found is not None:
            return found
        raise InvalidArgumentError(f"S({n},{l}) has no proper 3-coloring")
    raise InvalidArgumentError(f"no 3-coloring of S({n},{l}) is reachable "
                               f"(constructive from l={level}, brute force over the vertex guard)")


class LosslessDisperser:
    """k-subsets of [n] -> [3^(k//l)] via the 3-colors of consecutive l-blocks (base 3, 0-based)."""

    def __init__(self, n, k, l, gamma=None):
        if l < 1 or k < l:
            raise InvalidArgumentError(f"need 1 <= l <= k, got k={k}, l={l}")
        self.n, self.l = n, l
        self.blocks = k // l
        self.k = self.blocks * l  # reduced so that l divides k
        self.gamma = gamma if gamma is not None else three_coloring_for(n, l)
        if self.gamma.color_count > 3 or (self.gamma.n, self.gamma.l) != (n, l):
            raise InvalidArgumentError("gamma must be a coloring of S(n, l) with at most 3 colors")
        self.out_size = 3**self.blocks

    def __call__(self, X) -> int:
        xs = sorted(set(X))
        if len(xs) != self.k:
            raise InvalidArgumentError(f"expected a {self.k}-subset")
        out = 0
        for i in range(self.blocks):
            out = out * 3 + self.gamma(tuple(xs[i * self.l:(i + 1) * self.l])) - 1
        return out

    def image_codes(self, rows: np.ndarray) -> np.ndarray:
        """(M, C(s, k)) codes of every k-subset of every row."""
        s = rows.shape[1]
        colors = _position_colors(rows, self.gamma, self.l)
        subs = list(combinations(range(s), self.k))
        out = np.zeros((rows.shape[0], len(subs)), dtype=np.int64)
        for j, X in enumerate(subs):
            for i in range(self.blocks):
                out[:, j] = out[:, j] * 3 + colors[X[i * self.l:(i + 1) * self.l]] - 1
        return out


def lossless_disperser(n: int, k: int, l: int, gamma=None) -> LosslessDisperser:
    return LosslessDisperser(n, k, l, gamma)


def verify_disperser(n: int, k: int, l: int, mode: str = "exhaustive", samples: int = 10**4,
                     seed: int = 0, shrink: int = 0, gamma=None, chunk: int = 4096) -> dict:
    """Count supports V of size 2k + k//l (minus ``shrink``) whose image misses a value."""
    F = lossless_disperser(n, k, l, gamma)
    s = 2 * F.k + F.blocks - shrink
    if s < F.k or s > n:
        raise InvalidArgumentError(f"support size {s} outside [{F.k}, {n}]")
    if mode == "exhaustive":
        guards.check("disperser_sets", math.comb(n, s) * math.comb(s, F.k), "disperser evaluations")
        batches = combinations_chunks(n, s, chunk)
    elif mode == "sampled":
        rows = sample_subsets(n, s, samples, seed)
        batches = [rows[i:i + chunk] for i in range(0, len(rows), chunk)]
    else:
        raise InvalidArgumentError(f"unknown mode {mode!r}")
    failures, checked, rows_out = 0, 0, []
    for rows in batches:
        codes = F.image_codes(rows)
        hit = np.zeros((len(rows), F.out_size), dtype=bool)
        hit[np.arange(len(rows))[:, None], codes] = True
        missing = F.out_size - hit.sum(axis=1)
        for r in np.flatnonzero(missing):
            rows_out.append((rows[r].tolist(), int(missing[r])))
        failures += int(np.count_nonzero(missing))
        checked += len(rows)
    return {"n": n, "k": F.k, "l": l, "support_size": s, "out_size": F.out_size, "mode": mode,
            "seed": seed if mode == "sampled" else None, "checked": checked,
            "failures": failures, "failing": rows_out[:100],
            "coloring": getattr(F.gamma, "provenance", "custom")}


# -- balanced colorings of k-slices -------------------------------------------

def balanced_restriction_check(F, N: int, k: int, M: int, mode: str = "exhaustive",
                               samples: int = 100, seed: int = 0, cube: bool = True) -> dict:
    """Imbalance of F on C(V, k) for |V| = 2k, with the cube-to-slice comparison.

    ``F`` maps a sorted tuple to a color in range(M). Imbalance is the L1
    distance of the color law on the slice from uniform; the cube value is
    the same quantity over all subsets of V (when F is defined there).
    """
    if mode == "exhaustive":
        guards.check("disperser_sets", math.comb(N, 2 * k) * 4**k, "balanced-check evaluations")
        supports = [list(V) for V in combinations(range(1, N + 1), 2 * k)]
    elif mode == "sampled":
        supports = sample_subsets(N, 2 * k, samples, seed).tolist()
    else:
        raise InvalidArgumentError(f"unknown mode {mode!r}")
    slice_size = math.comb(2 * k, k)
    c_stated = 2**k / slice_size
    c_exact = 4**k / slice_size
    rows, worst, cube_ok = [], 0.0, True
    for V in supports:
        counts = np.zeros(M)
        for X in combinations(V, k):
            counts[F(X)] += 1
        imb = float(np.abs(counts / slice_size - 1.0 / M).sum())
        cube_l1 = None
        if cube:
            cc = np.zeros(M)
            for r in range(2 * k + 1):
                for X in combinations(V, r):
                    cc[F(X)] += 1
            cube_l1 = float(np.abs(cc / 4**k - 1.0 / M).sum())
            cube_ok &= imb <= c_exact * cube_l1 + 1e-12
        rows.append({"V": V, "imbalance": imb, "cube_l1": cube_l1})
        worst = max(worst, imb)
    return {"N": N, "k": k, "M": M, "mode": mode, "supports": len(rows), "max_imbalance": worst,
            "c_stated": c_stated, "c_exact": c_exact,
            "max_cube_l1": max((r["cube_l1"] for r in rows), default=None) if cube else None,
            "slice_bound_holds": cube_ok if cube else None, "rows": rows}


def shift_coloring_map(params: ShiftParams, F2: SymbolTable):
    """shift_extract as a map from subsets to range(2^m)."""
    def F(X):
        return int(F2.values[symbols_to_index(shift_f1(X, params), params.d)])
    return F
