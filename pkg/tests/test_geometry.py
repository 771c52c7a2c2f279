import itertools
import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lrrfim.exact import configs_from_codes
from lrrfim.exceptions import DomainError, EnumerationSizeError, InvalidFamilyError
from lrrfim.geometry.contours import (
    Contour,
    decompose_contours,
    independence_holds,
    min_separation_constant,
    separation_series,
    verify_contours,
)
from lrrfim.geometry.entropy import contour_weight, entropy_sum, enumerate_contours
from lrrfim.geometry.peierls import ZETA_ALPHA_MAX, erase_energy, mass_cost, peierls_check, zeta
from lrrfim.geometry.runs import runs
from lrrfim.geometry.triangles import (
    Triangle,
    TriangleFamily,
    check_disjoint_or_nested,
    compatible,
    is_valid_family,
    spins_from_triangles,
    triangle_distance,
    triangles_from_spins,
)
from lrrfim.model import CouplingTable, SpinWindow, Window

K1_ALPHA0 = 10.0 + math.pi**2 / 6 - 1.0
GOLDEN = Path(__file__).parent / "golden" / "entropy_counts.json"

sign_lists = st.lists(st.sampled_from([-1, 1]), min_size=1, max_size=24)


def plus_window_with_minus(lo, hi, minus):
    s = np.ones(hi - lo + 1, dtype=np.int8)
    for i in minus:
        s[i - lo] = -1
    return SpinWindow(lo, hi, s)


# runs -----------------------------------------------------------------------

def test_constant_configuration_is_one_run():
    dec = runs(SpinWindow.constant(Window(-5, 5)))
    assert (dec.b_V, dec.e_V) == (1, 1)
    assert dec.origin_run.length == 11


def test_run_decomposition_example():
    dec = runs(SpinWindow.from_string("++--+++", lo=-3))
    assert (dec.b_V, dec.e_V) == (0, 2)
    assert (dec.run(1).start, dec.run(1).end, dec.run(1).sign) == (-1, 0, -1)
    assert (dec.run(2).start, dec.run(2).end, dec.run(2).sign) == (1, 3, 1)
    assert (dec.run(0).start, dec.run(0).end, dec.run(0).sign) == (-3, -2, 1)
    with pytest.raises(DomainError):
        dec.run(3)


def test_runs_need_origin():
    with pytest.raises(DomainError):
        runs(SpinWindow.from_string("+-+", lo=1))


@given(sign_lists, st.data())
def test_runs_negation_symmetry(values, data):
    lo = data.draw(st.integers(-len(values) + 1, 0))
    s = SpinWindow(lo, lo + len(values) - 1, np.array(values))
    a, b = runs(s), runs(s.negated())
    assert (a.b_V, a.e_V) == (b.b_V, b.e_V)
    assert [(r.start, r.end, r.sign) for r in a.runs] == [(r.start, r.end, -r.sign) for r in b.runs]
    assert sum(r.length for r in a.runs) == len(values)


# triangles ------------------------------------------------------------------

def test_single_collision():
    fam = triangles_from_spins(SpinWindow.from_string("++--+"))
    assert [t.support for t in fam] == [(2, 3)]
    assert fam.masses == [2]


def test_nested_pair():
    s = plus_window_with_minus(-2, 12, [0, 1, 2, 3, 6, 7, 8, 9])
    fam = triangles_from_spins(s)
    assert sorted((t.support, t.mass) for t in fam) == [((0, 9), 10), ((4, 5), 2)]
    back = spins_from_triangles(fam)
    np.testing.assert_array_equal(back.spins, s.spins)


def test_all_plus_has_no_triangles():
    fam = triangles_from_spins(SpinWindow.constant(Window(-4, 4)))
    assert len(fam) == 0
    assert np.all(spins_from_triangles(fam, Window(-4, 4)).spins == 1)


def test_minus_boundary_rejected():
    with pytest.raises(DomainError):
        triangles_from_spins(SpinWindow.from_string("+-", boundary=-1))


def test_crossing_supports_rejected():
    with pytest.raises(InvalidFamilyError):
        check_disjoint_or_nested([Triangle(0, 3), Triangle(2, 5)])
    assert not is_valid_family(TriangleFamily((Triangle(0, 3), Triangle(2, 5))))


def test_compatibility_examples():
    assert compatible([Triangle(0, 1), Triangle(3, 3)])
    assert not compatible([Triangle(0, 2), Triangle(4, 6)])
    assert triangle_distance(Triangle(0, 2), Triangle(4, 6)) == 2
    # nested: inner support to the outer complement
    assert triangle_distance(Triangle(4, 5), Triangle(0, 9)) == 5


def test_exhaustive_roundtrip_and_compatibility():
    n = 14
    configs = configs_from_codes(np.arange(1 << n, dtype=np.int64), n)
    for row in configs:
        s = SpinWindow(-7, 6, row)
        fam = triangles_from_spins(s)
        assert compatible(fam)
        np.testing.assert_array_equal(spins_from_triangles(fam).spins, row)


@given(sign_lists)
def test_triangle_count_matches_interfaces(values):
    s = SpinWindow(0, len(values) - 1, np.array(values))
    padded = np.concatenate([[1], values, [1]])
    assert 2 * len(triangles_from_spins(s)) == int(np.sum(padded[1:] != padded[:-1]))


# erase energies and Peierls margins -----------------------------------------

def test_erase_single_triangle():
    table = CouplingTable(0.0, 10.0)
    fam = TriangleFamily((Triangle(0, 0),))
    assert erase_energy(fam.triangles, fam, table) == pytest.approx(4 * K1_ALPHA0, rel=1e-12)
    assert erase_energy([], fam, table) == 0.0
    with pytest.raises(DomainError):
        erase_energy([Triangle(5, 5)], fam, table)


@given(st.lists(st.sampled_from([-1, 1]), min_size=4, max_size=20), st.integers(0, 2**31),
       st.sampled_from([0.0, 0.25, 0.5]))
def test_erase_energy_telescopes(values, seed, alpha):
    fam = triangles_from_spins(SpinWindow(0, len(values) - 1, np.array(values)))
    tris = list(fam.triangles)
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 3, size=len(tris))
    s1 = [t for t, l in zip(tris, labels) if l == 1]
    s2 = [t for t, l in zip(tris, labels) if l == 2]
    table = CouplingTable(alpha, 10.0)
    joint = erase_energy(s1 + s2, fam, table)
    split = erase_energy(s1, fam, table) + erase_energy(s2, fam.without(s1), table)
    assert joint == pytest.approx(split, rel=1e-10, abs=1e-9)


def test_zeta_values():
    assert zeta(0.0) == 1.0
    assert zeta(0.5) == pytest.approx(3 - 2 * math.sqrt(2), rel=1e-14)
    assert zeta(ZETA_ALPHA_MAX - 1e-12) == pytest.approx(0.0, abs=1e-11)
    with pytest.raises(DomainError):
        zeta(ZETA_ALPHA_MAX)


def test_single_triangle_margin():
    rep = peierls_check(TriangleFamily((Triangle(0, 0),)), CouplingTable(0.0, 10.0))
    assert rep.smallest_margin == pytest.approx(4 * K1_ALPHA0 - 4.0, rel=1e-12)
    assert rep.smallest_margin == pytest.approx(38.58, abs=5e-3)
    assert rep.ok


def test_nested_pair_margins():
    fam = TriangleFamily((Triangle(0, 9), Triangle(4, 5)))
    rep = peierls_check(fam, CouplingTable(0.25, 10.0))
    assert len(rep.margins) == 2 + len(decompose_contours(fam))
    assert rep.ok and rep.min_margin > 0


@given(sign_lists, st.sampled_from([0.0, 0.25, 0.5]))
def test_peierls_margins_nonnegative(values, alpha):
    fam = triangles_from_spins(SpinWindow(0, len(values) - 1, np.array(values)))
    assert peierls_check(fam, CouplingTable(alpha, 10.0)).ok


# contours -------------------------------------------------------------------

def test_separation_constant():
    lo, hi = separation_series(3)
    assert lo <= 4 / 27 * math.pi**2 / 6 <= hi
    assert hi == pytest.approx(0.243694, abs=1e-6)
    lo2, _ = separation_series(2)
    assert lo2 == pytest.approx(0.822467, abs=1e-6)
    assert min_separation_constant() == 3


def test_contour_examples():
    one = decompose_contours([Triangle(0, 2)])
    assert one == [Contour((Triangle(0, 2),))]
    far = decompose_contours([Triangle(0, 0), Triangle(10, 10)])
    assert len(far) == 2
    near = decompose_contours([Triangle(0, 0), Triangle(2, 2)])
    assert len(near) == 1 and near[0].mass == 2
    assert decompose_contours([]) == []
    assert verify_contours([]).ok


def _random_family(rng, n):
    s = SpinWindow(0, n - 1, rng.choice([-1, 1], size=n, p=[0.3, 0.7]))
    return triangles_from_spins(s)


def test_random_decompositions_verify(rng):
    for _ in range(200):
        fam = _random_family(rng, int(rng.integers(5, 60)))
        cs = decompose_contours(fam)
        rep = verify_contours(cs, family=fam)
        assert rep.ok, rep.failures


@given(st.integers(0, 2**31))
def test_decomposition_ignores_merge_order(seed):
    rng = np.random.default_rng(seed)
    fam = _random_family(rng, 40)
    assert decompose_contours(fam, rng=rng) == decompose_contours(fam)


def test_independence_of_far_families(rng):
    for _ in range(50):
        a = list(_random_family(rng, 20))
        b = list(_random_family(rng, 20))
        if not a or not b:
            continue
        mass = sum(t.mass for t in a + b)
        off = 20 + 3 * mass**3 + 1
        shifted = [Triangle(t.start + off, t.end + off) for t in b]
        assert independence_holds(a, shifted)


def test_independence_requires_separation():
    with pytest.raises(ValueError):
        independence_holds([Triangle(0, 0)], [Triangle(2, 2)])


def test_contour_serialization():
    g = Contour((Triangle(4, 5), Triangle(0, 1)))
    d = json.loads(g.to_json())
    assert d == {"triangles": [{"support": [0, 1], "mass": 2}, {"support": [4, 5], "mass": 2}],
                 "mass": 4, "span": [0, 5]}


# contour weights and entropy ------------------------------------------------

def test_contour_weight_examples():
    assert contour_weight([Triangle(0, 0), Triangle(3, 4)], 3.0, 0.5) == pytest.approx(
        math.exp(-3 * (1 + math.sqrt(2))), rel=1e-14)
    assert contour_weight([Triangle(0, 0), Triangle(3, 4)], 3.0, 0.5) == pytest.approx(7.157e-4, rel=1e-3)
    assert contour_weight([Triangle(0, 0)], 1.0, 0.0) == pytest.approx(0.018316, rel=1e-4)
    assert contour_weight([Triangle(0, 6)], 0.0, 0.3) == 1.0
    with pytest.raises(ValueError):
        contour_weight([], 1.0, 0.3)


def _oracle_contours(m, origin):
    """Single contours through 0 found by scanning spin configurations."""
    lo, hi = -9, 9
    found = set()
    sites = range(lo, hi + 1)
    for k in range(1, m + 1):
        for minus in itertools.combinations(sites, k):
            fam = triangles_from_spins(plus_window_with_minus(lo, hi, minus))
            if sum(fam.masses) != m:
                continue
            if len(decompose_contours(fam)) != 1:
                continue
            tris = fam.triangles
            if origin == "cover":
                ok = min(t.start for t in tris) <= 0 <= max(t.end for t in tris)
            else:
                ok = any(t.covers(0) for t in tris)
            if ok:
                found.add(tuple(sorted(tris)))
    return found


@pytest.mark.parametrize("origin", ["cover", "member"])
@pytest.mark.parametrize("m", [1, 2, 3])
def test_enumeration_matches_spin_scan(m, origin):
    assert set(enumerate_contours(m, 3, origin)) == _oracle_contours(m, origin)


def test_entropy_golden_counts():
    golden = json.loads(GOLDEN.read_text())
    assert golden["C"] == 3 and golden["origin"] == "cover"
    for m, rec in golden["counts"].items():
        res = entropy_sum(int(m), 10.0, 0.5)
        assert res.count == rec["count"]
        assert res.counts_by_masses == rec["by_masses"]


def test_entropy_small_masses():
    res = entropy_sum(1, 7.0, 0.5)
    assert res.count == 1 and res.total == pytest.approx(math.exp(-7.0))
    assert res.holds
    res2 = entropy_sum(2, 10.0, 0.5)
    assert res2.total <= 4 * math.exp(-10 * math.sqrt(2))


@pytest.mark.parametrize("alpha", [0.0, 0.25, 0.5])
@pytest.mark.parametrize("m", [1, 2, 3])
def test_entropy_sum_decreases_in_b(m, alpha):
    sums = [entropy_sum(m, b, alpha, c0=math.inf).total for b in (0.5, 1, 2, 5, 10, 20)]
    assert all(y < x for x, y in zip(sums, sums[1:]))


def test_entropy_bound_at_large_b():
    for m in (1, 2, 3):
        for b in (5.0, 10.0):
            for alpha in (0.0, 0.5):
                assert entropy_sum(m, b, alpha).holds


def test_entropy_size_guard():
    with pytest.raises(EnumerationSizeError):
        enumerate_contours(5)
    with pytest.raises(ValueError):
        enumerate_contours(2, 3, "centre")


def test_mass_cost_branches():
    assert mass_cost(1, 0.0) == 4.0
    assert mass_cost(4, 0.5) == 2.0
