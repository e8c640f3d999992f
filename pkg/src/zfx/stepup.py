"""Stepping-up extractor for zero-fixing sources.

A subset s of [N] (N = 2^depth) is read as a set of leaves of the complete
tree of that depth. ``project_f1`` sends it to a short bit string by writing
down the levels of the lone parents of the generated subtree, each group of
lone parents (the chain above the skeleton root, then each inner edge of
the skeleton) into its own block of positions. A zero-fixing source is
pushed through F1 and split, via the skeleton-fixing procedure, into a
convex combination of bit-fixing sources plus a small residual. Any
verified bit-fixing extractor F2 then finishes the job.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from . import guards, treekit
from .combi import (bit_length, combinations_chunks, parallel_map, row_distance_to_uniform,
                    sample_subsets)
from .errors import InvalidArgumentError, VerificationFailure
from .probcore import (TOL, BitFixingSource, ConvexCombination, Distribution, ZeroFixingSource,
                       bits_label, bits_to_index, distance_to_uniform, index_to_bits,
                       index_to_subset, mix, pushforward, range_label, residual_distribution,
                       source_distribution, stat_distance)

DEFAULT_DELTA_HAT = 1 / 160


# -- parameters ---------------------------------------------------------------

@dataclass(frozen=True)
class StepUpParams:
    N: int
    k: int
    depth: int  # depth of the complete tree, N = 2^depth
    n: int  # output length, (k-1) * block
    block: int  # size of each D_i; lone parents have rank 0 .. depth-2

    def blocks(self):
        B = self.block
        return [tuple(range(i * B + 1, (i + 1) * B + 1)) for i in range(self.k - 1)]

    def position(self, block_index, rank):
        """1-based position in [n] of a node of the given rank projected into D_block_index."""
        if not 0 <= rank < self.block or not 0 <= block_index < self.k - 1:
            raise InvalidArgumentError(f"no position for rank {rank} in block {block_index}")
        return block_index * self.block + rank + 1


def build_params(N: int, k: int) -> StepUpParams:
    if k < 3:
        raise InvalidArgumentError("k must be at least 3")
    if N < 2 or N & (N - 1):
        raise InvalidArgumentError(f"N={N} is not a power of two (pad the ground set)")
    if N < 2**k:
        raise InvalidArgumentError(f"N={N} is below 2^k={2**k}")
    depth = N.bit_length() - 1
    guards.check("tree_depth", depth, "tree depth")
    block = depth - 1
    return StepUpParams(N, k, depth, (k - 1) * block, block)


# -- projection F1 ------------------------------------------------------------

def lone_parent_positions(T: treekit.OrderedBinaryTree, params: StepUpParams):
    """(position in [n], lone leaf label) for every lone parent of a subtree of the complete tree."""
    if len(T) < 2:
        return []
    dec = treekit.skeleton_decomposition(T)
    out = [(params.position(0, att.ident[0]), att.leaf) for att in dec.root_chain]
    for i, atts in sorted(dec.edge_attachments.items()):
        out.extend((params.position(i, att.ident[0]), att.leaf) for att in atts)
    return out


def project_f1(s, params: StepUpParams) -> tuple:
    """F1 on a subset of [N] of size at most k; sets of size 0 or 1 go to the zero vector."""
    s = sorted(set(s))
    if len(s) > params.k:
        raise InvalidArgumentError(f"|s|={len(s)} exceeds k={params.k}")
    out = [0] * params.n
    if len(s) < 2:
        return tuple(out)
    T = treekit.complete_subtree(params.depth, s)
    for pos, _ in lone_parent_positions(T, params):
        out[pos - 1] = 1
    return tuple(out)


def f1_index(params: StepUpParams):
    """F1 as a map between string indices (characteristic vector of [N] -> {0,1}^n)."""
    def F(idx):
        return bits_to_index(project_f1(index_to_subset(idx, params.N), params))
    return F


def shape_key(V, depth: int) -> tuple:
    """Ranks of least common ancestors of consecutive elements of sorted V.

    Two supports with the same key generate the same rank-labelled tree up to
    leaf names, so everything F1 does to them is identical.
    """
    xs = sorted(V)
    return tuple(depth - ((a - 1) ^ (b - 1)).bit_length() for a, b in zip(xs, xs[1:]))


# -- skeleton fixing ----------------------------------------------------------

@dataclass(frozen=True)
class FixingOutcome:
    labels: tuple  # leaves of T_V, left to right
    restriction: tuple  # '0' / '1' / '*' per label
    weight: float
    fixed: int
    free_lone_count: int
    good: bool

    def rho(self):
        return dict(zip(self.labels, self.restriction))

    def live(self):
        return [lab for lab, c in zip(self.labels, self.restriction) if c != "0"]

    def to_json(self):
        return {"restriction": "".join(self.restriction), "weight": self.weight,
                "free_lone": self.free_lone_count, "good": self.good}


POLICIES = ("lemma", "leftmost")


def priority_twins(T: treekit.OrderedBinaryTree, policy: str = "lemma") -> frozenset:
    """Twins of T that the fixing policy queries before anything else."""
    if policy not in POLICIES:
        raise InvalidArgumentError(f"unknown fixing policy {policy!r}")
    k = len(T)
    cls = treekit.classify_leaves(T)
    if policy == "leftmost" or 10 * len(cls.lone_leaves) >= k:
        return frozenset()
    # T' = skeleton minus its leaves; its leaves are the twin parents of T.
    sk = treekit.skeleton(T)
    parent_of = sk.parents()
    pairs = {}
    for v in sk.nodes():
        if not v.is_leaf and v.left.is_leaf:
            pairs[v.ident] = (v.left.label, v.right.label)
    lone_in_t1, twin_in_t1 = [], []
    for ident, pair in pairs.items():
        if ident not in parent_of:
            continue  # T' is a single node
        up, side = parent_of[ident]
        sib = up.right if side == 0 else up.left
        (twin_in_t1 if sib.ident in pairs else lone_in_t1).append(pair)
    chosen = lone_in_t1 if 10 * len(lone_in_t1) >= 3 * k else twin_in_t1
    return frozenset(lab for pair in chosen for lab in pair)


def _next_query(T, rho, prio):
    live = [lab for lab in T.leaf_labels() if rho[lab] != "0"]
    if len(live) < 2:
        return None
    Tr = treekit.leaf_generated_subtree(T, live)
    twins = treekit.classify_leaves(Tr).twins
    cands = [lab for lab in Tr.leaf_labels() if lab in twins and rho[lab] == "*"]
    if not cands:
        return None
    for lab in cands:
        if lab in prio:
            return lab
    return cands[0]


def _outcome(T, rho, fixed, k, delta_hat):
    labels = T.leaf_labels()
    live = [lab for lab in labels if rho[lab] != "0"]
    free = 0
    if len(live) >= 2:
        Tr = treekit.leaf_generated_subtree(T, live)
        free = sum(1 for lab in treekit.classify_leaves(Tr).lone_leaves if rho[lab] == "*")
    good = free >= required_stars(k, delta_hat)
    return FixingOutcome(labels, tuple(rho[lab] for lab in labels), 2.0**-fixed, fixed, free, good)


def skeleton_fixing(T_V: treekit.OrderedBinaryTree, policy: str = "lemma", coins=(),
                    delta_hat: float = DEFAULT_DELTA_HAT) -> FixingOutcome:
    """Run the fixing procedure once, reading fair bits from ``coins``."""
    if len(T_V) < 2:
        raise InvalidArgumentError("skeleton fixing needs at least two leaves")
    prio = priority_twins(T_V, policy)
    rho = {lab: "*" for lab in T_V.leaf_labels()}
    coins = iter(coins)
    fixed = 0
    while (lab := _next_query(T_V, rho, prio)) is not None:
        try:
            c = next(coins)
        except StopIteration:
            raise InvalidArgumentError("coin sequence exhausted") from None
        rho[lab] = "1" if c else "0"
        fixed += 1
    return _outcome(T_V, rho, fixed, len(T_V), delta_hat)


def enumerate_fixings(T_V: treekit.OrderedBinaryTree, policy: str = "lemma",
                      delta_hat: float = DEFAULT_DELTA_HAT) -> list:
    """Every leaf of the procedure's decision tree, in coin order (0 before 1)."""
    k = len(T_V)
    if k < 2:
        raise InvalidArgumentError("skeleton fixing needs at least two leaves")
    guards.check("fixing_leaves", k, "leaves of the fixing tree")
    prio = priority_twins(T_V, policy)
    out = []

    def walk(rho, fixed):
        lab = _next_query(T_V, rho, prio)
        if lab is None:
            out.append(_outcome(T_V, rho, fixed, k, delta_hat))
            return
        for c in "01":
            rho[lab] = c
            walk(rho, fixed + 1)
        rho[lab] = "*"

    walk({lab: "*" for lab in T_V.leaf_labels()}, 0)
    return out


def compatible(a: FixingOutcome, b: FixingOutcome) -> bool:
    ra, rb = a.rho(), b.rho()
    return not any({ra[x], rb[x]} == {"0", "1"} for x in ra)


# -- decomposition ------------------------------------------------------------

def image_template(outcome: FixingOutcome, params: StepUpParams) -> str:
    """Bit-fixing template that F1 maps the extensions of ``outcome`` onto."""
    rho = outcome.rho()
    live = outcome.live()
    out = ["0"] * params.n
    if len(live) < 2:
        return "".join(out)
    Tr = treekit.complete_subtree(params.depth, live)
    for pos, leaf in lone_parent_positions(Tr, params):
        out[pos - 1] = "*" if rho[leaf] == "*" else "1"
    return "".join(out)


def decompose_source(V, params: StepUpParams, delta_hat: float = DEFAULT_DELTA_HAT,
                     policy: str = "lemma") -> ConvexCombination:
    V = sorted(set(V))
    if len(V) != params.k:
        raise InvalidArgumentError(f"|V|={len(V)} but k={params.k}")
    if V[0] < 1 or V[-1] > params.N:
        raise InvalidArgumentError(f"V not inside [1, {params.N}]")
    T_V = treekit.complete_subtree(params.depth, V)
    good, bad = [], []
    for oc in enumerate_fixings(T_V, policy, delta_hat):
        part = (oc.weight, BitFixingSource(image_template(oc, params)))
        (good if oc.good else bad).append(part)
    rw = math.fsum(w for w, _ in bad)
    desc = f"fixings with fewer than {delta_hat:g}*k free lone leaves"
    return ConvexCombination(tuple(good), rw, desc, tuple(bad))


def zero_fixing_image(V, params: StepUpParams) -> Distribution:
    """pushforward(F1, ZeroFixing(V)) computed straight from the definition."""
    src = ZeroFixingSource(params.N, frozenset(V))
    return pushforward(f1_index(params), source_distribution(src), 2**params.n, bits_label(params.n))


def check_decomposition(V, params: StepUpParams, delta_hat: float = DEFAULT_DELTA_HAT,
                        policy: str = "lemma") -> dict:
    """Distance between the mixed decomposition and the true image, plus weight bookkeeping."""
    comb = decompose_source(V, params, delta_hat, policy)
    mixed = mix(comb, residual_distribution(comb))
    dist = stat_distance(mixed, zero_fixing_image(V, params))
    total = Fraction(0)
    for w, _ in comb.parts + comb.residual_parts:
        total += Fraction(w)
    return {"V": sorted(V), "distance": dist, "weight_total_exact": total == 1,
            "residual_weight": comb.residual_weight, "parts": len(comb.parts),
            "residual_parts": len(comb.residual_parts)}


def _key_codes(rows: np.ndarray, depth: int) -> np.ndarray:
    ranks = depth - bit_length((rows[:, 1:] - 1) ^ (rows[:, :-1] - 1))
    weights = depth ** np.arange(rows.shape[1] - 1, dtype=np.int64)
    return ranks @ weights


def support_classes(N: int, k: int, depth: int, chunk: int = 1 << 20) -> dict:
    """Group all k-subsets of [N] by shape key: code -> [count, first V]."""
    classes = {}
    for rows in combinations_chunks(N, k, chunk):
        codes = _key_codes(rows, depth)
        uniq, first, counts = np.unique(codes, return_index=True, return_counts=True)
        for code, i, c in zip(uniq.tolist(), first.tolist(), counts.tolist()):
            if code in classes:
                classes[code][0] += c
            else:
                classes[code] = [c, tuple(rows[i].tolist())]
    return classes


def verify_decomposition_exhaustive(N: int, k: int, delta_hat: float = DEFAULT_DELTA_HAT,
                                    policy: str = "lemma", spot_checks: int = 20, seed: int = 0,
                                    workers: int = 1) -> dict:
    """Decomposition exactness for every support V of size k in [N].

    Supports are grouped by shape key; one representative per class is checked
    from scratch, and ``spot_checks`` random supports are checked directly as
    well to exercise the grouping.
    """
    params = build_params(N, k)
    guards.check("stepup_sources", math.comb(N, k), "zero-fixing sources")
    classes = support_classes(N, k, params.depth)
    reps = [classes[c][1] for c in sorted(classes)]
    results = parallel_map(_check_task, [(V, N, k, delta_hat, policy) for V in reps], workers)
    spots = sample_subsets(N, k, spot_checks, seed).tolist() if spot_checks else []
    spot_results = [check_decomposition(V, params, delta_hat, policy) for V in spots]
    worst = max(r["distance"] for r in results + spot_results)
    return {"N": N, "k": k, "sources": sum(c[0] for c in classes.values()),
            "classes": len(classes), "spot_checks": len(spot_results), "max_distance": worst,
            "weights_exact": all(r["weight_total_exact"] for r in results + spot_results),
            "residual_max": max(r["residual_weight"] for r in results)}


def _check_task(args):
    V, N, k, delta_hat, policy = args
    return check_decomposition(V, build_params(N, k), delta_hat, policy)


# -- bit-fixing extractors (the F2 seam) --------------------------------------

class BitFixingExtractorHandle:
    """A map {0,1}^n -> {0,1}^m, addressed by string index."""

    name = "custom"

    def __init__(self, n_in: int, m_out: int, k_min: int = 1):
        if n_in < 1 or m_out < 1:
            raise InvalidArgumentError("extractor needs n_in >= 1 and m_out >= 1")
        self.n_in, self.m_out, self.k_min = n_in, m_out, k_min

    def eval_index(self, idx: int) -> int:
        raise NotImplementedError

    def __call__(self, bits) -> tuple:
        if len(bits) != self.n_in:
            raise InvalidArgumentError(f"input length {len(bits)} != {self.n_in}")
        return index_to_bits(self.eval_index(bits_to_index(bits)), self.m_out)

    def table(self) -> np.ndarray:
        guards.check("bitfixing_evaluations", 2**self.n_in, "extractor table size")
        return np.fromiter((self.eval_index(i) for i in range(2**self.n_in)), dtype=np.int64,
                           count=2**self.n_in)

    def to_json(self):
        return {"name": self.name, "n": self.n_in, "m": self.m_out}


class ParityExtractor(BitFixingExtractorHandle):
    """Output bit j is the XOR of positions i with i = j+1 (mod m)."""

    name = "parity"

    def __init__(self, n_in, m_out=1, k_min=1):
        super().__init__(n_in, m_out, k_min)
        self.masks = []
        for j in range(m_out):
            mask = 0
            for pos in range(j + 1, n_in + 1, m_out):
                mask |= 1 << (n_in - pos)
            self.masks.append(mask)

    def eval_index(self, idx):
        out = 0
        for mask in self.masks:
            out = (out << 1) | (bin(idx & mask).count("1") & 1)
        return out

    def table(self):
        guards.check("bitfixing_evaluations", 2**self.n_in, "extractor table size")
        idx = np.arange(2**self.n_in, dtype=np.int64)
        out = np.zeros_like(idx)
        for mask in self.masks:
            v = idx & mask
            par = np.zeros_like(idx)
            while v.any():
                par ^= v & 1
                v >>= 1
            out = (out << 1) | par
        return out


class ConstantExtractor(BitFixingExtractorHandle):
    name = "constant"

    def __init__(self, n_in, m_out=1, value=0):
        super().__init__(n_in, m_out, 0)
        self.value = value

    def eval_index(self, idx):
        return self.value

    def table(self):
        return np.full(2**self.n_in, self.value, dtype=np.int64)


class PrefixExtractor(BitFixingExtractorHandle):
    """The first m input bits."""

    name = "prefix"

    def eval_index(self, idx):
        return idx >> (self.n_in - self.m_out)

    def table(self):
        return np.arange(2**self.n_in, dtype=np.int64) >> (self.n_in - self.m_out)


class TableExtractor(BitFixingExtractorHandle):
    name = "table"

    def __init__(self, n_in, m_out, values, k_min=1):
        super().__init__(n_in, m_out, k_min)
        values = np.asarray(values, dtype=np.int64)
        if values.shape != (2**n_in,) or values.min() < 0 or values.max() >= 2**m_out:
            raise InvalidArgumentError("table must list one output in [0, 2^m) per input")
        self.values = values

    def eval_index(self, idx):
        return int(self.values[idx])

    def table(self):
        return self.values

    def to_json(self):
        return {"name": self.name, "n": self.n_in, "m": self.m_out, "table": self.values.tolist()}


def verify_bitfixing_extractor(F2: BitFixingExtractorHandle, k: int) -> dict:
    """Exact worst error of F2 over all (n, k)-bit-fixing sources.

    More stars can only lower the error, so only templates with exactly
    k stars are enumerated.
    """
    n, m = F2.n_in, F2.m_out
    if not 0 <= k <= n:
        raise InvalidArgumentError(f"star count {k} outside [0, {n}]")
    guards.check("bitfixing_evaluations", math.comb(n, k) * 2**n, "bit-fixing evaluations")
    cube = F2.table().reshape([2] * n)
    worst, worst_tpl = -1.0, None
    for stars in combinations(range(n), k):
        rest = [i for i in range(n) if i not in stars]
        block = np.moveaxis(cube, list(stars), list(range(n - k, n))).reshape(2 ** (n - k), 2**k)
        eps = row_distance_to_uniform(block, 2**m)
        j = int(np.argmax(eps))
        if eps[j] > worst + 1e-15:
            worst = float(eps[j])
            fixed = index_to_bits(j, n - k)
            tpl = ["*"] * n
            for pos, b in zip(rest, fixed):
                tpl[pos] = str(b)
            worst_tpl = "".join(tpl)
    return {"eps": worst, "k": k, "worst_template": worst_tpl}


def search_bitfixing_table(n: int, m: int, k: int, target_eps: float, seed: int,
                           max_candidates: int = 100) -> tuple:
    """Draw random tables until one has error at most ``target_eps`` on (n, k)-bit-fixing sources."""
    from .errors import SearchFailure

    if n > 16:
        raise InvalidArgumentError("table search is limited to n <= 16")
    rng = np.random.default_rng(seed)
    best = (math.inf, None)
    for cand in range(1, max_candidates + 1):
        F = TableExtractor(n, m, rng.integers(0, 2**m, size=2**n), k_min=k)
        eps = verify_bitfixing_extractor(F, k)["eps"]
        if eps < best[0]:
            best = (eps, F)
        if eps <= target_eps + 1e-15:
            return F, eps, cand
    raise SearchFailure(f"no table with eps <= {target_eps} among {max_candidates} candidates",
                        best_eps=best[0], candidates=max_candidates,
                        best_table=None if best[1] is None else best[1].values.tolist())


# -- composition and measurement ----------------------------------------------

def stepup_extract(s, params: StepUpParams, F2: BitFixingExtractorHandle) -> tuple:
    if F2.n_in != params.n:
        raise InvalidArgumentError(f"F2 expects {F2.n_in} bits but F1 produces {params.n}")
    return F2(project_f1(s, params))


def required_stars(k: int, delta_hat: float) -> int:
    return max(1, math.ceil(delta_hat * k - 1e-12))


def _source_eval(V, params, F2, delta_hat, policy):
    """(eps of F2 o F1 on ZeroFixing(V), residual weight of its decomposition)."""
    img = zero_fixing_image(V, params)
    out = pushforward(F2.eval_index, img, 2**F2.m_out, range_label(2**F2.m_out))
    comb = decompose_source(V, params, delta_hat, policy)
    return distance_to_uniform(out), comb.residual_weight


def _measure_task(args):
    V, N, k, F2, delta_hat, policy = args
    return _source_eval(V, build_params(N, k), F2, delta_hat, policy)


def measure_stepup(N: int, k: int, F2: BitFixingExtractorHandle, mode: str = "exhaustive",
                   samples: int = 1000, seed: int = 0, delta_hat: float = DEFAULT_DELTA_HAT,
                   policy: str = "lemma", workers: int = 1) -> dict:
    """Worst and mean error of F2 o F1 over zero-fixing sources, against the mixture bound.

    Supports with equal shape keys give identical images, so each class is
    evaluated once and weighted by its size.
    """
    params = build_params(N, k)
    if F2.n_in != params.n:
        raise InvalidArgumentError(f"F2 expects {F2.n_in} bits but F1 produces {params.n}")
    kf = required_stars(k, delta_hat)
    f2_check = verify_bitfixing_extractor(F2, kf)
    if mode == "exhaustive":
        guards.check("stepup_sources", math.comb(N, k), "zero-fixing sources")
        classes = support_classes(N, k, params.depth)
        order = sorted(classes)
        weighted = [(classes[c][0], classes[c][1]) for c in order]
    elif mode == "sampled":
        rows = sample_subsets(N, k, samples, seed)
        keyed = {}
        for V in rows.tolist():
            key = shape_key(V, params.depth)
            if key in keyed:
                keyed[key][0] += 1
            else:
                keyed[key] = [1, tuple(V)]
        weighted = [tuple(keyed[c]) for c in sorted(keyed)]
    else:
        raise InvalidArgumentError(f"unknown mode {mode!r}")
    tasks = [(V, N, k, F2, delta_hat, policy) for _, V in weighted]
    results = parallel_map(_measure_task, tasks, workers, chunksize=16)
    total = sum(c for c, _ in weighted)
    worst, worst_V, res_max, acc = -1.0, None, 0.0, []
    violations = 0
    for (count, V), (eps, res) in zip(weighted, results):
        acc.append(count * eps)
        res_max = max(res_max, res)
        if eps > f2_check["eps"] + res + TOL:
            violations += 1
        if eps > worst:
            worst, worst_V = eps, list(V)
    bound = f2_check["eps"] + res_max
    report = {"N": N, "k": k, "n": params.n, "m": F2.m_out, "f2": F2.name, "mode": mode,
              "seed": seed if mode == "sampled" else None,
              "samples": samples if mode == "sampled" else None,
              "sources": total, "classes": len(weighted), "delta_hat": delta_hat,
              "policy": policy, "f2_stars": kf, "eps_f2": f2_check["eps"],
              "worst_eps": worst, "mean_eps": math.fsum(acc) / total, "worst_V": worst_V,
              "residual_max": res_max, "bound_eps": bound, "bound_violations": violations,
              "bound_holds": violations == 0 and worst <= bound + TOL}
    if not report["bound_holds"]:
        raise VerificationFailure(f"measured eps {worst} exceeds mixture bound {bound}")
    return report
