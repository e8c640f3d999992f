import math
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zfx import probcore as pc
from zfx.errors import InvalidArgumentError, ResourceLimitError


def strings(dist, n):
    return {"".join(map(str, pc.index_to_bits(x, n))): p for x, p in dist.probs.items() if p > 0}


def test_uniform_distribution():
    assert pc.uniform_distribution(2).dense() == [0.5, 0.5]
    assert pc.uniform_distribution(1).dense() == [1.0]
    assert pc.uniform_distribution(8).dense() == [0.125] * 8
    with pytest.raises(InvalidArgumentError):
        pc.uniform_distribution(0)


def test_zero_fixing_distribution():
    d = pc.source_distribution(pc.ZeroFixingSource(3, {1, 3}))
    assert strings(d, 3) == {"000": 0.25, "001": 0.25, "100": 0.25, "101": 0.25}


def test_bit_fixing_distribution():
    d = pc.source_distribution(pc.BitFixingSource("1*0"))
    assert strings(d, 3) == {"100": 0.5, "110": 0.5}


def test_symbol_fixing_distribution():
    src = pc.SpecialSymbolFixingSource(3, (1, (1, 2), (2, 3)))
    d = pc.source_distribution(src)
    got = {"".join(map(str, pc.index_to_symbols(x, 3, 3))): p for x, p in d.probs.items()}
    assert got == {"112": 0.25, "113": 0.25, "122": 0.25, "123": 0.25}
    assert src.t == 2


def test_bad_sources_rejected():
    with pytest.raises(InvalidArgumentError):
        pc.BitFixingSource("1*2")
    with pytest.raises(InvalidArgumentError):
        pc.ZeroFixingSource(3, {4})
    with pytest.raises(InvalidArgumentError):
        pc.SpecialSymbolFixingSource(3, ((2, 2),))


def test_free_position_guard():
    with pytest.raises(ResourceLimitError):
        pc.source_outcomes(pc.BitFixingSource("*" * 31))


def test_source_json_roundtrip():
    for src in (pc.ZeroFixingSource(5, {2, 4}), pc.BitFixingSource("0*1*"),
                pc.SpecialSymbolFixingSource(4, (1, (2, 4), 3))):
        assert pc.source_from_json(src.to_json()) == src


def test_pushforward_examples():
    u4 = pc.uniform_distribution(4, pc.bits_label(2))
    same = pc.pushforward(lambda x: x, u4, 4, pc.bits_label(2))
    assert pc.stat_distance(same, u4) == 0
    const = pc.pushforward(lambda x: 3, u4, 4)
    assert const.dense() == [0, 0, 0, 1.0]
    xor = pc.pushforward(lambda x: (x >> 1) ^ (x & 1), u4, 2)
    assert xor.dense() == [0.5, 0.5]


def test_pushforward_undefined_map():
    u = pc.uniform_distribution(3)
    with pytest.raises(InvalidArgumentError):
        pc.pushforward({0: 0, 1: 1}.__getitem__, u, 2)


def test_stat_distance_examples():
    u2 = pc.uniform_distribution(2)
    assert pc.stat_distance(pc.point_mass(2, 0), u2) == 0.5
    half = pc.Distribution(4, {0: 0.5, 1: 0.5})
    assert pc.stat_distance(half, pc.uniform_distribution(4)) == 0.5
    with pytest.raises(InvalidArgumentError):
        pc.stat_distance(u2, pc.uniform_distribution(4))


def test_entropy_examples():
    assert pc.entropy(pc.uniform_distribution(16)) == pytest.approx(4, abs=1e-9)
    assert pc.entropy(pc.point_mass(5, 2)) == 0
    d = pc.Distribution(2, {0: 0.25, 1: 0.75})
    assert pc.entropy(d) == pytest.approx(2 - 0.75 * math.log2(3), abs=1e-12)


def test_mix_examples():
    a = pc.BitFixingSource("0*")
    b = pc.BitFixingSource("1*")
    m = pc.mix(pc.ConvexCombination(((0.5, a), (0.5, b))))
    assert m.dense() == [0.25] * 4
    single = pc.mix(pc.ConvexCombination(((1.0, a),)))
    assert pc.stat_distance(single, pc.source_distribution(a)) == 0
    pa, pb = pc.BitFixingSource("00"), pc.BitFixingSource("11")
    m = pc.mix(pc.ConvexCombination(((0.75, pa), (0.25, pb))))
    assert m.dense() == [0.75, 0, 0, 0.25]


def test_mix_needs_residual():
    comb = pc.ConvexCombination(((0.5, pc.BitFixingSource("0*")),), residual_weight=0.5)
    with pytest.raises(InvalidArgumentError):
        pc.mix(comb)
    with pytest.raises(InvalidArgumentError):
        pc.ConvexCombination(((0.5, pc.BitFixingSource("0*")),), residual_weight=0.25)


def parity(x):
    return bin(x).count("1") % 2


def test_extractor_error_examples():
    sources = [pc.ZeroFixingSource(4, set(V)) for V in
               [(a, b) for a in range(1, 5) for b in range(a + 1, 5)]]
    assert pc.extractor_error(parity, sources, 2) == 0
    assert pc.extractor_error(lambda x: 0, [pc.BitFixingSource("**")], 2) == 0.5
    assert pc.extractor_error(lambda x: x, [pc.ZeroFixingSource(2, {1, 2})], 4) == 0


def random_dist(draw, size):
    raw = draw(st.lists(st.integers(0, 20), min_size=size, max_size=size).filter(lambda v: sum(v) > 0))
    total = sum(raw)
    return pc.Distribution(size, {i: r / total for i, r in enumerate(raw) if r})


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_pushforward_contracts(data):
    size = data.draw(st.integers(2, 8))
    a, b = random_dist(data.draw, size), random_dist(data.draw, size)
    table = data.draw(st.lists(st.integers(0, 2), min_size=size, max_size=size))
    F = table.__getitem__
    assert pc.stat_distance(pc.pushforward(F, a, 3), pc.pushforward(F, b, 3)) <= pc.stat_distance(a, b) + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_mixture_error_at_most_worst_part(data):
    n = 4
    templates = data.draw(st.lists(st.text("01*", min_size=n, max_size=n), min_size=1, max_size=4))
    raw = data.draw(st.lists(st.integers(1, 8), min_size=len(templates), max_size=len(templates)))
    weights = [r / sum(raw) for r in raw]
    weights[-1] = 1 - math.fsum(weights[:-1])
    srcs = [pc.BitFixingSource(t) for t in templates]
    table = data.draw(st.lists(st.integers(0, 1), min_size=2**n, max_size=2**n))
    F = table.__getitem__
    mixed = pc.mix(pc.ConvexCombination(tuple(zip(weights, srcs))))
    err_mix = pc.distance_to_uniform(pc.pushforward(F, mixed, 2, pc.range_label(2)))
    assert err_mix <= pc.extractor_error(F, srcs, 2) + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_eps_plus_delta(data):
    n = 3
    good = [pc.BitFixingSource(t) for t in ("*0*", "1**", "0*1")]
    F = parity
    eps = pc.extractor_error(F, good, 2)
    delta = data.draw(st.sampled_from([0.0, 0.125, 0.25, 0.5]))
    w = (1 - delta) / len(good)
    comb = pc.ConvexCombination(tuple((w, s) for s in good), residual_weight=delta)
    residual = random_dist(data.draw, 2**n)
    residual = pc.Distribution(2**n, residual.probs, pc.bits_label(n))
    got = pc.distance_to_uniform(pc.pushforward(F, pc.mix(comb, residual), 2))
    assert got <= eps + delta + 1e-12


def test_k_monotonicity():
    # brute-force an extractor for (6, 2) bit-fixing sources, then check k' = 3, 4
    n = 6

    def templates(k):
        for stars in __import__("itertools").combinations(range(n), k):
            rest = [i for i in range(n) if i not in stars]
            for bits in product("01", repeat=len(rest)):
                t = ["*"] * n
                for i, b in zip(rest, bits):
                    t[i] = b
                yield pc.BitFixingSource("".join(t))

    F = parity
    eps2 = pc.extractor_error(F, templates(2), 2)
    for kp in (3, 4):
        assert pc.extractor_error(F, templates(kp), 2) <= eps2 + 1e-12


def test_distribution_json_roundtrip():
    d = pc.source_distribution(pc.BitFixingSource("*1*"))
    back = pc.Distribution.from_json(d.to_json())
    assert pc.stat_distance(d, back) == 0


def test_index_helpers():
    assert pc.bits_to_index((1, 0, 1)) == 5
    assert pc.index_to_bits(5, 3) == (1, 0, 1)
    assert pc.subset_to_index({1, 3}, 3) == 5
    assert pc.index_to_subset(5, 3) == (1, 3)
    assert pc.index_to_symbols(pc.symbols_to_index((1, 2, 3), 3), 3, 3) == (1, 2, 3)
