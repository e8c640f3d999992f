"""Upper bounds on extractable entropy: the greedy derivative procedure and tower arithmetic.

``derivative_step`` finds V inside a ground set such that a coloring of
small subsets, restricted to V, only sees X minus its maximum.
``iterated_derivative`` applies it i times, after which the color of a
subset of V depends on its size (small sets) or on all but its i largest
elements (large sets), so a k-set V carries at most 2^(k-i) + i colors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from mpmath import iv

from . import guards
from .errors import GuaranteeFailure, InvalidArgumentError, ResourceLimitError

MASK64 = (1 << 64) - 1


# -- coloring oracles ---------------------------------------------------------

def _splitmix(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def _splitmix_np(x: np.ndarray) -> np.ndarray:
    z = x + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def _fold(seed: int, elems) -> int:
    h = _splitmix(seed & MASK64)
    for x in elems:
        h = _splitmix(h ^ int(x))
    return h


class ColoringOracle:
    """phi: subsets of [N] of size <= k_max -> [m]."""

    provenance = "abstract"

    def __init__(self, N, k_max, m):
        if m < 1 or N < 1 or k_max < 0:
            raise InvalidArgumentError("oracle needs N >= 1, k_max >= 0, m >= 1")
        self.N, self.k_max, self.m = N, k_max, m
        self._memo = {}

    def evaluate(self, X) -> int:
        X = tuple(sorted(X))
        if len(X) > self.k_max:
            raise InvalidArgumentError(f"|X|={len(X)} exceeds k_max={self.k_max}")
        c = self._memo.get(X)
        if c is None:
            c = self._memo[X] = self._evaluate(X)
        return c

    def __call__(self, X):
        return self.evaluate(X)

    def _evaluate(self, X) -> int:
        raise NotImplementedError

    def evaluate_inserted(self, prefix, us: np.ndarray, suffix=()) -> np.ndarray:
        """Colors of prefix + (u,) + suffix for each u, where prefix < u < suffix elementwise."""
        return np.fromiter((self.evaluate(tuple(prefix) + (int(u),) + tuple(suffix)) for u in us),
                           dtype=np.int64, count=len(us))

    def evaluate_extensions(self, X, us: np.ndarray) -> np.ndarray:
        return self.evaluate_inserted(tuple(X), us, ())


class RandomOracle(ColoringOracle):
    """Seeded hash coloring: splitmix64 folded over the sorted elements."""

    provenance = "seeded-random"

    def __init__(self, N, k_max, m, seed=0):
        super().__init__(N, k_max, m)
        self.seed = seed

    def _evaluate(self, X):
        return _fold(self.seed, X) % self.m + 1

    def evaluate_inserted(self, prefix, us, suffix=()):
        if len(prefix) + 1 + len(suffix) > self.k_max:
            raise InvalidArgumentError("set size exceeds k_max")
        h = np.uint64(_fold(self.seed, prefix)) ^ np.asarray(us, dtype=np.uint64)
        h = _splitmix_np(h)
        for s in suffix:
            h = _splitmix_np(h ^ np.uint64(s))
        return (h % np.uint64(self.m)).astype(np.int64) + 1


class AdversarialOracle(ColoringOracle):
    """(max X + hash(X minus max)) mod m + 1: the color always moves with the maximum."""

    provenance = "adversarial-generator"

    def __init__(self, N, k_max, m, seed=0):
        super().__init__(N, k_max, m)
        self.seed = seed

    def _evaluate(self, X):
        if not X:
            return 1
        return (X[-1] + _fold(self.seed, X[:-1])) % self.m + 1

    def evaluate_inserted(self, prefix, us, suffix=()):
        if suffix:
            return super().evaluate_inserted(prefix, us, suffix)
        us = np.asarray(us, dtype=np.int64)
        return (us + _fold(self.seed, prefix) % self.m) % self.m + 1


class FileOracle(ColoringOracle):
    """Colors read from lines ``x1,...,xj : color``; unlisted sets take ``default``."""

    provenance = "file"

    def __init__(self, N, k_max, m, table: dict, default=None):
        super().__init__(N, k_max, m)
        self.table = {tuple(sorted(k)): int(v) for k, v in table.items()}
        self.default = default
        for X, c in self.table.items():
            if not 1 <= c <= m or len(X) > k_max or (X and (X[0] < 1 or X[-1] > N)):
                raise InvalidArgumentError(f"bad oracle entry {X} : {c}")

    @classmethod
    def parse(cls, text: str, N, k_max, m, default=None):
        table = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                lhs, rhs = line.split(":")
                X = tuple(int(x) for x in lhs.split(",") if x.strip())
                table[X] = int(rhs)
            except ValueError:
                raise InvalidArgumentError(f"oracle file line {lineno}: {line!r}") from None
        return cls(N, k_max, m, table, default)

    def _evaluate(self, X):
        if X in self.table:
            return self.table[X]
        if self.default is None:
            raise InvalidArgumentError(f"oracle file has no color for {X}")
        return self.default


class DerivedOracle(ColoringOracle):
    """phi'(Y) = phi(Y + {top}) on subsets of the elements below ``top``."""

    def __init__(self, base: ColoringOracle, top: int):
        super().__init__(base.N, base.k_max - 1, base.m)
        self.base, self.top = base, top
        self.provenance = f"derived({base.provenance})"

    def _evaluate(self, X):
        if X and X[-1] >= self.top:
            raise InvalidArgumentError(f"derived oracle only sees elements below {self.top}")
        return self.base.evaluate(X + (self.top,))

    def evaluate_inserted(self, prefix, us, suffix=()):
        return self.base.evaluate_inserted(prefix, us, tuple(suffix) + (self.top,))


# -- the derivative step ------------------------------------------------------

def sum_binom_le(n: int, k: int) -> int:
    return sum(math.comb(n, i) for i in range(0, k + 1))


def min_N_derivative(n: int, k: int, m: int) -> int:
    """n * m^(sum_{i<=k-1} C(n-1, i))."""
    if not 1 <= k <= n or m < 2:
        raise InvalidArgumentError(f"need 1 <= k <= n and m >= 2, got n={n}, k={k}, m={m}")
    return n * m ** sum_binom_le(n - 1, k - 1)


@dataclass
class DerivativeResult:
    V: tuple
    reduced: ColoringOracle
    k: int
    transcript: dict = field(default_factory=dict)


def _majority(cols: np.ndarray, m: int) -> int:
    return int(np.argmax(np.bincount(cols, minlength=m + 1)))  # ties: smallest color


def derivative_step(phi: ColoringOracle, n, k: int, m: int, ground=None) -> DerivativeResult:
    """The greedy filtering procedure; ``n=None`` keeps going until the candidates run out.

    Inner loop: every X inside V with max X = max V and 1 <= |X| <= k-1, so
    that X + {u} stays inside the oracle's domain.
    """
    if k < 1 or k > phi.k_max:
        raise InvalidArgumentError(f"k={k} outside [1, {phi.k_max}]")
    U = np.arange(1, phi.N + 1, dtype=np.int64) if ground is None else np.array(sorted(ground), dtype=np.int64)
    if not len(U):
        raise GuaranteeFailure("empty ground set", partial=())
    traj, divisions = [len(U)], 1
    cols = phi.evaluate_extensions((), U)
    U = U[cols == _majority(cols, m)]
    traj.append(len(U))
    V = [int(U[0])]
    U = U[1:]
    traj.append(len(U))
    subtractions = 0  # one per element of V below max V, so the final pick is not counted
    rounds = []
    while (n is None or len(V) < n) and len(U):
        top = V[-1]
        filters = 0
        for size in range(0, min(k - 1, len(V))):
            for rest in combinations(V[:-1], size):
                X = rest + (top,)
                cols = phi.evaluate_extensions(X, U)
                U = U[cols == _majority(cols, m)]
                traj.append(len(U))
                filters += 1
        divisions += filters
        V.append(int(U[0]))
        U = U[1:]
        traj.append(len(U))
        subtractions += 1
        rounds.append({"added": V[-1], "filters": filters, "U": len(U)})
    transcript = {"V": list(V), "rounds": rounds, "U_trajectory": traj, "divisions": divisions,
                  "subtractions": subtractions, "ground": int(traj[0]), "k": k, "m": m,
                  "target_n": n}
    if n is not None and len(V) < n:
        raise GuaranteeFailure(f"candidates exhausted with |V|={len(V)} < n={n}", partial=V)
    return DerivativeResult(tuple(V), DerivedOracle(phi, V[-1]), k, transcript)


def verify_derivative(phi: ColoringOracle, V, k: int):
    """Check phi(X) depends only on X minus max X over nonempty X inside V, |X| <= k."""
    V = sorted(V)
    guards.check("subset_enumeration", sum_binom_le(len(V), k), "subsets of V up to size k")
    seen = {}
    for size in range(1, min(k, len(V)) + 1):
        for X in combinations(V, size):
            key = X[:-1]
            c = phi.evaluate(X)
            if key in seen and seen[key][0] != c:
                return False, (seen[key][1], X)
            seen.setdefault(key, (c, X))
    return True, None


# -- iterating ----------------------------------------------------------------

def derivative_plan(k: int, m: int, i: int) -> list:
    """Sizes n_1..n_i of the successive V's that make every stage guaranteed."""
    sizes = [k]
    for j in range(i - 1, 0, -1):
        sizes.append(min_N_derivative(sizes[-1], k - j, m) + 1)
    return sizes[::-1]


def guaranteed_N(k: int, m: int, i: int) -> int:
    """Ground size that makes every stage of the plan succeed."""
    sizes = derivative_plan(k, m, i)
    return min_N_derivative(sizes[0], k, m)


@dataclass
class IteratedResult:
    V: tuple
    i: int
    k: int
    m: int
    mode: str
    stages: list
    final: ColoringOracle  # phi^(i) on subsets of the first k-i elements of V


def iterated_derivative(phi: ColoringOracle, k: int, m: int, i: int, mode: str = "guaranteed") -> IteratedResult:
    """Apply the derivative step i times, each time on the previous V minus its maximum.

    ``guaranteed`` uses the planned sizes; ``greedy`` grows every
    intermediate V as far as the candidates allow (the reduced-N mode).
    """
    if not 0 <= i <= k or k > phi.k_max:
        raise InvalidArgumentError(f"need 0 <= i <= k <= k_max, got i={i}, k={k}")
    if phi.N < k:
        raise InvalidArgumentError("ground set smaller than k")
    if i == 0:
        V = tuple(range(1, k + 1))
        return IteratedResult(V, 0, k, m, mode, [], phi)
    if mode == "guaranteed":
        sizes = derivative_plan(k, m, i)
    elif mode == "greedy":
        sizes = [None] * (i - 1) + [k]
    else:
        raise InvalidArgumentError(f"unknown mode {mode!r}")
    cur, ground, stages = phi, None, []
    for j in range(1, i + 1):
        try:
            res = derivative_step(cur, sizes[j - 1], k - j + 1, m, ground)
        except GuaranteeFailure as exc:
            raise GuaranteeFailure(f"stage {j}: {exc}", partial=exc.partial, stage=j) from None
        stages.append(res.transcript)
        if j < i:
            if len(res.V) < 2:
                raise GuaranteeFailure(f"stage {j}: V too small to continue", partial=res.V, stage=j)
            ground = res.V[:-1]
            cur = res.reduced
    return IteratedResult(res.V, i, k, m, mode, stages, res.reduced)


def verify_partial_dependence(phi: ColoringOracle, V, k: int, i: int):
    """Sizes <= i: color is a function of |X|. Sizes >= i: a function of X minus its i largest elements."""
    V = sorted(V)
    guards.check("subset_enumeration", sum_binom_le(len(V), k), "subsets of V up to size k")
    by_size, by_core = {}, {}
    for size in range(0, min(k, len(V)) + 1):
        for X in combinations(V, size):
            c = phi.evaluate(X)
            if size <= i:
                if size in by_size and by_size[size][0] != c:
                    return False, {"property": 1, "sets": [list(by_size[size][1]), list(X)]}
                by_size.setdefault(size, (c, X))
            if size >= i:
                core = X[:size - i]
                if core in by_core and by_core[core][0] != c:
                    return False, {"property": 2, "sets": [list(by_core[core][1]), list(X)]}
                by_core.setdefault(core, (c, X))
    return True, None


def color_ceiling_check(phi: ColoringOracle, V, k: int, i: int) -> dict:
    V = sorted(V)
    if len(V) != k:
        raise InvalidArgumentError(f"|V|={len(V)} but k={k}")
    guards.check("subset_enumeration", 2**k, "subsets of V")
    counts = {}
    for size in range(0, k + 1):
        for X in combinations(V, size):
            c = phi.evaluate(X)
            counts[c] = counts.get(c, 0) + 1
    bound = 2 ** (k - i) + i
    total = 2**k
    ent = -math.fsum(c / total * math.log2(c / total) for c in counts.values())
    return {"colors": len(counts), "bound": bound, "passes": len(counts) <= bound,
            "entropy": max(ent, 0.0), "entropy_bound": math.log2(bound)}


# -- tower arithmetic ---------------------------------------------------------

def _digits_of_power(base: int, exponent: int) -> float:
    if base <= 1:
        return 1.0
    if exponent.bit_length() > 1000:
        return math.inf
    return exponent * math.log10(base)


def tower(i: int, r: int, x: int) -> int:
    """exp^i_r(x) = r^(r^(...^x)) with i exponentiations, exactly."""
    if i < 0 or r < 1 or x < 0:
        raise InvalidArgumentError("tower needs i >= 0, r >= 1, x >= 0")
    v = x
    lim = guards.limit("tower_digits")
    for _ in range(i):
        digits = _digits_of_power(r, v)
        if digits > lim:
            raise ResourceLimitError("tower digits", digits, lim)
        v = r**v
    return v


def _lg(x):
    return iv.log(x) / iv.log(2)


def _tower2_interval(j: int, y, cap_bits: float = 1e6):
    """exp^j_2(y) as an interval, or None once it would exceed 2^cap_bits."""
    v = y
    for _ in range(j):
        if v.b > cap_bits:
            return None
        v = iv.mpf(2) ** v
    return v


def _interval_leq_tower2(v, levels: int, y):
    """Decide v <= exp^levels_2(y) for intervals v, y; None if undecided."""
    for j in range(levels + 1):
        R = _tower2_interval(levels - j, y)
        if R is not None:
            if v.b <= R.a:
                return True
            if v.a > R.b:
                return False
            return None
        if v.b <= 1:
            return True  # v tiny while the right side is astronomically large
        v = _lg(v)
    return None


def tower_leq_tower2(L: int, i: int, y, prec: int = 256) -> bool | None:
    """Decide L <= exp^i_2(y) for an exact integer L >= 1 and a real interval y.

    Returns None when interval arithmetic cannot decide at this precision.
    """
    old = iv.prec
    iv.prec = prec
    try:
        return _interval_leq_tower2(iv.mpf(L), i, y)
    finally:
        iv.prec = old


def _power_leq_tower2(base: int, E: int, i: int, y, prec: int) -> bool | None:
    """Decide base^E <= exp^i_2(y) through lg(base^E) = E lg base."""
    old = iv.prec
    iv.prec = prec
    try:
        return _interval_leq_tower2(iv.mpf(E) * _lg(iv.mpf(base)), i - 1, y)
    finally:
        iv.prec = old


def check_exp_inequality(i: int, r: int, x: int) -> bool:
    """exp^i_r(x) <= exp^i_2(x lg r + lg lg r + 1), decided with exact integers and intervals.

    When the left side is too long to write down, the comparison is made one
    logarithm lower, where lg exp^i_r(x) = exp^(i-1)_r(x) lg r.
    """
    if i < 0 or r < 2 or x < 1:
        raise InvalidArgumentError("need i >= 0, r >= 2, x >= 1")
    if i == 0:
        return True
    try:
        L, E = tower(i, r, x), None
    except ResourceLimitError:
        L, E = None, tower(i - 1, r, x)
    for prec in (256, 1024, 4096):
        old = iv.prec
        iv.prec = prec
        try:
            lr = _lg(iv.mpf(r))
            y = x * lr + _lg(lr) + 1
        finally:
            iv.prec = old
        ans = tower_leq_tower2(L, i, y, prec) if L is not None else _power_leq_tower2(r, E, i, y, prec)
        if ans is not None:
            return ans
    raise ArithmeticError(f"could not decide the tower inequality at i={i}, r={r}, x={x}")


def lemma_x_bound(k: int, m: int, i: int) -> int:
    """m^(exp^(i-1)_(m^k)(2^(k-i+1))), exactly when representable."""
    if not 1 <= i <= k:
        raise InvalidArgumentError("need 1 <= i <= k")
    E = tower(i - 1, m**k, 2 ** (k - i + 1))
    return tower(1, m, E)


def theorem_chain(k: int, i: int, m: int) -> dict:
    """The four steps from the guaranteed ground-size bound to exp^(i+1)_2(k + 2 lg k + 2).

    (a) m^E <= (m^k)^E, (b) the tower inequality with r = m^k, (c) the
    argument bound using m <= 2^k, (d) absorbing the argument into one more
    exponential. Each step is decided exactly or by interval arithmetic;
    steps whose numbers are not representable are reported as skipped, and
    the end-to-end comparison is made directly when the left side fits.
    """
    if not (2 <= k and 1 <= i <= k and 2 <= m <= 2**k):
        raise InvalidArgumentError("need k >= 2, 1 <= i <= k, 2 <= m <= 2^k")
    out = {"k": k, "i": i, "m": m}
    x = 2 ** (k - i + 1)
    r = m**k
    out["a"] = m <= r
    try:
        out["b"] = check_exp_inequality(i, r, x)
    except ResourceLimitError:
        out["b"] = None
    # t + lg t is increasing, so (c) reduces to lg r <= k^2, i.e. r <= 2^(k^2)
    out["c"] = r <= 2 ** (k * k)
    iv.prec = 256
    lgk = _lg(iv.mpf(k))
    rhs_c = x * (k * k + 2 * lgk + 1)
    z = k + 2 * lgk + 2
    rhs_d = iv.mpf(2) ** z
    out["d"] = bool(rhs_c.b <= rhs_d.a) if (rhs_c.b <= rhs_d.a or rhs_c.a > rhs_d.b) else None
    try:
        E = tower(i - 1, r, x)
        out["direct"] = _power_leq_tower2(m, E, i + 1, z, 256)
    except ResourceLimitError:
        out["direct"] = None
    decided = [out[s] for s in ("a", "b", "c", "d", "direct") if out[s] is not None]
    out["skipped"] = [s for s in ("a", "b", "c", "d", "direct") if out[s] is None]
    out["holds"] = all(decided)
    return out
