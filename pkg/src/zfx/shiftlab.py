"""Shift graphs S(n, l) and explicit proper colorings of them.

Vertices are sorted l-subsets of [n]; {x1..xl} is adjacent to {x2..x(l+1)}
whenever x1 < ... < x(l+1). Edges therefore correspond to (l+1)-subsets,
which is how the verifiers enumerate them. Colorings are lazy: a coloring
of S(n, l+1) evaluates the coloring of S(n, l) below it on demand, and
``color_many`` does the same for a whole numpy batch of vertices.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np

from . import guards
from .combi import bit_length, combinations_chunks, sample_subsets
from .errors import InvalidArgumentError


def blog(x: int) -> int:
    """x for x <= 4, else the m with C(m-1, (m-1)//2) <= x < C(m, m//2)."""
    if x < 1:
        raise InvalidArgumentError("blog needs x >= 1")
    if x <= 4:
        return x
    m = 4
    while math.comb(m, m // 2) <= x:
        m += 1
    return m


def iterated_blog(x: int, times: int) -> int:
    for _ in range(times):
        x = blog(x)
    return x


def shift_edge(a, b) -> bool:
    a, b = tuple(a), tuple(b)
    if len(a) != len(b) or not a:
        raise InvalidArgumentError("shift_edge needs two sets of the same positive size")
    if list(a) != sorted(set(a)) or list(b) != sorted(set(b)):
        raise InvalidArgumentError("vertices must be sorted sets")
    return (a[1:] == b[:-1] and a[0] < b[-1]) or (b[1:] == a[:-1] and b[0] < a[-1])


def edge_count(n: int, l: int) -> int:
    return math.comb(n, l + 1)


def _check_vertex(c, x):
    x = tuple(x)
    if len(x) != c.l or any(b <= a for a, b in zip(x, x[1:])) or x[0] < 1 or x[-1] > c.n:
        raise InvalidArgumentError(f"{x!r} is not a sorted {c.l}-subset of [1, {c.n}]")
    return x


# -- colorings ----------------------------------------------------------------

class Coloring:
    """A map from sorted l-subsets of [n] to colors 1..color_count."""

    provenance = "abstract"

    def __init__(self, n, l, color_count):
        self.n, self.l, self.color_count = n, l, color_count

    def __call__(self, x) -> int:
        return int(self.color_many(np.asarray([_check_vertex(self, x)], dtype=np.int64))[0])

    def color_many(self, rows: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n}, l={self.l}, colors={self.color_count})"


class BaseColoring(Coloring):
    """S(n, 1) colored by the element itself."""

    provenance = "base"

    def __init__(self, n):
        if n < 2:
            raise InvalidArgumentError("base coloring needs n >= 2")
        super().__init__(n, 1, n)

    def color_many(self, rows):
        return np.asarray(rows, dtype=np.int64)[:, 0]


def colex_unrank(rank: int, size: int) -> int:
    """Bitmask of the size-subset of {0, 1, ...} with the given co-lexicographic rank."""
    mask = 0
    for i in range(size, 0, -1):
        c = i - 1
        while math.comb(c + 1, i) <= rank:
            c += 1
        rank -= math.comb(c, i)
        mask |= 1 << c
    return mask


def colex_rank(mask: int) -> int:
    elems = [i for i in range(mask.bit_length()) if mask >> i & 1]
    return sum(math.comb(c, i + 1) for i, c in enumerate(elems))


class StepColoring(Coloring):
    """Coloring of S(n, l+1) with m colors built from a proper coloring psi of S(n, l).

    Color c of psi is encoded as the co-lex (c-1)-th (m//2)-subset E(c) of [m];
    a vertex x1..x(l+1) gets min(E(psi(x1..xl)) minus E(psi(x2..x(l+1)))).
    """

    provenance = "fact1-step"

    def __init__(self, psi: Coloring, m: int):
        budget = math.comb(m, m // 2)
        if psi.color_count > budget:
            raise InvalidArgumentError(f"{psi.color_count} colors do not fit into C({m},{m // 2})={budget}")
        super().__init__(psi.n, psi.l + 1, m)
        self.psi = psi
        self.masks = np.array([0] + [colex_unrank(c, m // 2) for c in range(psi.color_count)],
                              dtype=np.int64)

    def color_many(self, rows):
        rows = np.asarray(rows, dtype=np.int64)
        a = self.psi.color_many(rows[:, :-1])
        b = self.psi.color_many(rows[:, 1:])
        diff = self.masks[a] & ~self.masks[b]
        if (diff == 0).any():
            raise InvalidArgumentError("underlying coloring is not proper on a shift edge")
        return bit_length(diff & -diff)


class ThreeStepColoring(Coloring):
    """3-coloring of S(n, l+1) from a proper coloring psi of S(n, l-1) with at most 4 colors."""

    provenance = "fact2-step"

    def __init__(self, psi: Coloring):
        if psi.color_count > 4:
            raise InvalidArgumentError("three-step coloring needs at most 4 colors")
        super().__init__(psi.n, psi.l + 2, 3)
        self.psi = psi

    def color_many(self, rows):
        rows = np.asarray(rows, dtype=np.int64)
        a = self.psi.color_many(rows[:, :-2])
        b = self.psi.color_many(rows[:, 1:-1])
        c = self.psi.color_many(rows[:, 2:])
        free = np.full(len(b), 0, dtype=np.int64)
        for j in (3, 2, 1):  # smallest color outside {a, b, c} wins
            free = np.where((a != j) & (b != j) & (c != j), j, free)
        return np.where(b != 4, b, free)


class TableColoring(Coloring):
    provenance = "table"

    def __init__(self, n, l, table: dict, color_count=None):
        super().__init__(n, l, color_count or max(table.values()))
        self.table = {tuple(k): int(v) for k, v in table.items()}
        if len(self.table) != math.comb(n, l):
            raise InvalidArgumentError("table coloring must color every vertex")

    def color_many(self, rows):
        rows = np.asarray(rows, dtype=np.int64)
        return np.fromiter((self.table[tuple(r)] for r in rows.tolist()), dtype=np.int64,
                           count=len(rows))


class ConstantColoring(Coloring):
    provenance = "constant"

    def __init__(self, n, l, color=1):
        super().__init__(n, l, color)
        self.color = color

    def color_many(self, rows):
        return np.full(len(rows), self.color, dtype=np.int64)


def base_coloring(n: int) -> BaseColoring:
    return BaseColoring(n)


def step_coloring(psi: Coloring, m: int) -> StepColoring:
    return StepColoring(psi, m)


def three_step_coloring(psi: Coloring) -> ThreeStepColoring:
    return ThreeStepColoring(psi)


def color_tower(n: int, l: int) -> Coloring:
    """Iterate the one-step construction from the base coloring; level j uses blog of the previous count."""
    if l < 1 or l >= n:
        raise InvalidArgumentError(f"need 1 <= l < n, got l={l}, n={n}")
    c = base_coloring(n)
    while c.l < l:
        c = step_coloring(c, blog(c.color_count))
    return c


def tower_levels(c: Coloring) -> list:
    """Color counts from the base upwards."""
    out = []
    while c is not None:
        out.append(c.color_count)
        c = getattr(c, "psi", None)
    return out[::-1]


def three_coloring(n: int):
    """The constructive 3-coloring: tower down to 4 colors, then one three-step. Returns (l, coloring)."""
    if n < 2:
        raise InvalidArgumentError("need n >= 2")
    c = base_coloring(n)
    while True:
        if c.color_count <= 3:
            return c.l, c
        if c.color_count <= 4:
            if c.l + 2 >= n:
                raise InvalidArgumentError(f"no constructive 3-coloring of a shift graph on [{n}]")
            t = three_step_coloring(c)
            return t.l, t
        if c.l + 1 >= n:
            raise InvalidArgumentError(f"no constructive 3-coloring of a shift graph on [{n}]")
        c = step_coloring(c, blog(c.color_count))


def lambda_upper(n: int) -> int:
    """Least l at which the constructive pipeline reaches 3 colors."""
    if n < 5:
        raise InvalidArgumentError("lambda_upper needs n >= 5")
    return three_coloring(n)[0]


# -- odd cycles and exact chromatic numbers -----------------------------------

def odd_cycle(n: int, l: int) -> list:
    if l < 1 or n < 2 * l + 1:
        raise InvalidArgumentError(f"odd cycle needs n >= 2l+1, got n={n}, l={l}")
    out = [tuple(range(s, s + l)) for s in range(1, l + 3)]
    for j in range(1, l):
        out.append(tuple(range(l - j + 1, l + 1)) + tuple(range(l + 2, 2 * l - j + 2)))
    return out


def is_cycle(vertices) -> bool:
    vs = [tuple(v) for v in vertices]
    if len(vs) < 3 or len(set(vs)) != len(vs):
        return False
    return all(shift_edge(vs[i], vs[(i + 1) % len(vs)]) for i in range(len(vs)))


def shift_graph(n: int, l: int):
    """(vertices, adjacency lists by vertex index)."""
    verts = list(combinations(range(1, n + 1), l))
    index = {v: i for i, v in enumerate(verts)}
    adj = [[] for _ in verts]
    for e in combinations(range(1, n + 1), l + 1):
        a, b = index[e[:-1]], index[e[1:]]
        adj[a].append(b)
        adj[b].append(a)
    return verts, adj


def _colorable(adj, q, order_hint=None):
    """DSATUR backtracking; returns a color list (1-based) or None."""
    nv = len(adj)
    colors = [0] * nv
    nbr_colors = [dict() for _ in range(nv)]  # color -> multiplicity among colored neighbours

    def pick():
        best, key = -1, None
        for v in range(nv):
            if colors[v]:
                continue
            kv = (len(nbr_colors[v]), len(adj[v]), -v)
            if key is None or kv > key:
                best, key = v, kv
        return best

    def assign(v, c, sign):
        for u in adj[v]:
            d = nbr_colors[u]
            d[c] = d.get(c, 0) + sign
            if d[c] == 0:
                del d[c]

    def solve(done, used):
        if done == nv:
            return True
        v = pick()
        # symmetry breaking: try at most one fresh color
        for c in range(1, min(q, used + 1) + 1):
            if c in nbr_colors[v]:
                continue
            colors[v] = c
            assign(v, c, 1)
            if solve(done + 1, max(used, c)):
                return True
            assign(v, c, -1)
            colors[v] = 0
        return False

    return list(colors) if solve(0, 0) else None


def find_coloring(n: int, l: int, q: int):
    """A proper q-coloring of S(n, l) as a TableColoring, or None if none exists."""
    guards.check("chromatic_vertices", math.comb(n, l), "shift graph vertices")
    verts, adj = shift_graph(n, l)
    cols = _colorable(adj, q)
    if cols is None:
        return None
    return TableColoring(n, l, dict(zip(verts, cols)), color_count=q)


def chromatic_bruteforce(n: int, l: int) -> int:
    if l < 1 or l > n:
        raise InvalidArgumentError(f"need 1 <= l <= n, got l={l}, n={n}")
    guards.check("chromatic_vertices", math.comb(n, l), "shift graph vertices")
    verts, adj = shift_graph(n, l)
    if not any(adj):
        return 1
    # start from 2 rather than any known lower bound, so the search itself certifies it
    q = 2
    while _colorable(adj, q) is None:
        q += 1
    return q


def lambda_bruteforce(n: int) -> int:
    """Exact least l with chi(S(n, l)) <= 3, within the vertex guard."""
    for l in range(1, n):
        if chromatic_bruteforce(n, l) <= 3:
            return l
    return n


# -- verification and export --------------------------------------------------

def verify_coloring(c: Coloring, mode: str = "exhaustive", samples: int = 10**6, seed: int = 0,
                    chunk: int = 1 << 18) -> int:
    """Number of monochromatic shift edges (exhaustive) or among sampled edges."""
    n, l = c.n, c.l
    if l + 1 > n:
        return 0
    if mode == "exhaustive":
        guards.check("coloring_edges", edge_count(n, l), "shift graph edges")
        batches = combinations_chunks(n, l + 1, chunk)
    elif mode == "sampled":
        rows = sample_subsets(n, l + 1, samples, seed)
        batches = [rows[i:i + chunk] for i in range(0, len(rows), chunk)]
    else:
        raise InvalidArgumentError(f"unknown mode {mode!r}")
    bad = 0
    for rows in batches:
        bad += int(np.count_nonzero(c.color_many(rows[:, :-1]) == c.color_many(rows[:, 1:])))
    return bad


def export_coloring(c: Coloring, fh):
    """Stream ``x1,...,xl -> color`` lines for every vertex."""
    guards.check("coloring_edges", math.comb(c.n, c.l), "shift graph vertices")
    for rows in combinations_chunks(c.n, c.l):
        for r, col in zip(rows.tolist(), c.color_many(rows).tolist()):
            fh.write(",".join(map(str, r)) + f" -> {col}\n")
