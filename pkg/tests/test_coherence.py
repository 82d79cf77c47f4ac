from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from novmorse.chain import check_chain_homotopy, check_chain_map, compose, sign_adjust
from novmorse.coherence import (
    ZERO_CLASS,
    CountSystem,
    HomologyClass,
    IndexData,
    build_maps,
    check_h_claim,
    check_iota_claim,
    check_triangularity,
    index_h,
    index_iota,
    index_pss,
    index_ssp,
    morse_mirror,
    run_pipeline,
)
from novmorse.errors import CountSystemError, HypothesisFailure, UnknownIdentifier
from novmorse.novikov import NovikovMatrix, NovikovScalar, mat_lemma22_check

ZERO = HomologyClass(ZERO_CLASS, 0, F(0))


def data(crit, orbits=(), classes=(), sums=(), dim=2):
    return IndexData(dim, tuple(crit), tuple(orbits), (ZERO,) + tuple(classes), tuple(sums))


# interval complex: p -> q - r
CRIT = (("p", 1), ("q", 0), ("r", 0))
ORBS = (("gp", F(0)), ("gq", F(1)), ("gr", F(1)))
MORSE = {("p", "q"): 1, ("p", "r"): -1}
SIGN = {"p": -1, "q": 1, "r": 1}


def interval_mirror(**overrides):
    counts = dict(
        morse=MORSE,
        z_iota={(x, x, "0"): SIGN[x] for x in SIGN},
        z_plus={(x, "g" + x, "0"): SIGN[x] for x in SIGN},
        z_minus={("g" + x, x, "0"): 1 for x in SIGN},
    )
    counts.update(overrides)
    return CountSystem(data(CRIT, ORBS), **counts)


# -- index formulas --------------------------------------------------------------


def test_index_examples():
    d = data([("p", 1)], [("g", 0)], [HomologyClass("A", 1, F(2))])
    assert index_pss(d, "p", "g", "0") == 0
    assert index_pss(d, "p", "g", "A") == 2
    assert index_iota(d, "p", "p", "0") == 0
    assert index_h(d, "p", "p", "A") == index_iota(d, "p", "p", "A") + 1
    d2 = data([("a", 2), ("b", 1)])
    assert index_iota(d2, "a", "b", "0") == 1
    with pytest.raises(UnknownIdentifier):
        index_pss(d, "x", "g", "0")
    with pytest.raises(UnknownIdentifier):
        index_iota(d, "p", "p", "B")


@st.composite
def index_tuples(draw):
    dim = 2 * draw(st.integers(1, 4))
    pm, pp = draw(st.integers(0, dim)), draw(st.integers(0, dim))
    cz = draw(st.integers(-10, 10))
    c1a, c1b = draw(st.integers(-5, 5)), draw(st.integers(-5, 5))
    classes = [HomologyClass("A", c1a, F(1)), HomologyClass("B", c1b, F(2)), HomologyClass("AB", c1a + c1b, F(3))]
    return data([("pm", pm), ("pp", pp)], [("g", cz)], classes, [("A", "B", "AB")], dim=dim)


@given(index_tuples())
def test_index_additivity(d):
    split = index_pss(d, "pm", "g", "A") + index_ssp(d, "g", "pp", "B")
    assert split == index_iota(d, "pm", "pp", d.add("A", "B"))
    assert index_h(d, "pm", "pp", "AB") == index_iota(d, "pm", "pp", "AB") + 1


# -- validation ------------------------------------------------------------------------


def test_index_data_requires_zero_class():
    with pytest.raises(CountSystemError):
        IndexData(2, (("p", 0),), (), (HomologyClass("A", 0, F(1)),))
    with pytest.raises(CountSystemError):
        IndexData(2, (("p", 0),), (), (HomologyClass("0", 1, F(0)),))


def test_class_sums_must_be_additive():
    a, b = HomologyClass("A", 1, F(1)), HomologyClass("B", 0, F(2))
    with pytest.raises(CountSystemError):
        data([("p", 0)], classes=[a, b], sums=[("A", "A", "B")])
    d = data([("p", 0)], classes=[a, b, HomologyClass("C", 1, F(3))], sums=[("A", "B", "C")])
    assert d.add("B", "A") == "C" and d.add("0", "A") == "A" and d.add("A", "A") is None


def test_loader_rejects_wrong_index_and_names_formula():
    with pytest.raises(CountSystemError, match="index_iota"):
        CountSystem(data(CRIT), z_iota={("p", "q", "0"): 1})
    with pytest.raises(CountSystemError, match="index_pss"):
        CountSystem(data(CRIT, ORBS), z_plus={("p", "gq", "0"): 1})
    with pytest.raises(CountSystemError, match="morse"):
        CountSystem(data(CRIT), morse={("q", "p"): 1})
    with pytest.raises(CountSystemError):
        CountSystem(data(CRIT), morse={("p", "q"): F(1, 2)})


def test_loader_rejects_undeclared_class_sum():
    a = HomologyClass("A", 0, F(1))
    d = data(CRIT, ORBS, [a])
    with pytest.raises(CountSystemError, match="undeclared"):
        CountSystem(d, z_plus={("q", "gq", "A"): 1}, z_minus={("gq", "q", "A"): 1})


def test_json_round_trip_and_zero_entries_dropped():
    s = interval_mirror(z_h={("q", "p", "0"): 0})
    assert s.z_h == {}
    again = CountSystem.loads(s.dumps())
    assert again.dumps() == s.dumps()
    assert again.z_iota == s.z_iota


def test_json_rejects_duplicates_and_missing_fields():
    doc = interval_mirror().to_json()
    doc["z_iota"].append(dict(doc["z_iota"][0]))
    with pytest.raises(CountSystemError, match="duplicate"):
        CountSystem.from_json(doc)
    with pytest.raises(CountSystemError):
        CountSystem.from_json({"crit": []})


# -- boundary identities -------------------------------------------------------------------


def test_all_zero_counts_pass_claims():
    s = CountSystem(data(CRIT), morse=MORSE)
    assert check_iota_claim(s).passed and check_h_claim(s).passed
    assert not check_triangularity(s).passed


def test_mirror_on_interval_passes():
    s = interval_mirror()
    assert check_iota_claim(s).passed
    assert check_h_claim(s).passed
    assert check_triangularity(s).passed


def test_iota_sign_flip_caught_by_iota_claim():
    s = interval_mirror(z_iota={("p", "p", "0"): 1, ("q", "q", "0"): 1, ("r", "r", "0"): 1})
    rep = check_iota_claim(s)
    # residual m(p-,p+) ((-1)^|p+| + (-1)^|p-|) with one sign flipped gives +-2m
    assert {idx: r for idx, r in rep.violations} == {("p", "q", "0"): 2, ("p", "r", "0"): -2}


def test_z_minus_doubled_caught_on_diagonal():
    s = interval_mirror(z_minus={("g" + x, x, "0"): 2 for x in SIGN})
    rep = check_h_claim(s)
    assert {idx for idx, _ in rep.violations} == {(x, x, "0") for x in SIGN}
    assert {abs(r) for _, r in rep.violations} == {1}


def test_triangularity_negative_controls():
    s = interval_mirror(z_iota={("p", "p", "0"): -1, ("q", "q", "0"): 1})
    assert check_triangularity(s).first()[0] == ("r", "r", "0")
    neg = HomologyClass("N", 0, F(-1))
    bad = CountSystem(
        data(CRIT, ORBS, [neg]),
        z_iota={("p", "p", "0"): -1, ("q", "q", "0"): 1, ("r", "r", "0"): 1, ("q", "r", "N"): 1},
    )
    assert check_triangularity(bad).first()[0] == ("q", "r", "N")
    off = CountSystem(data(CRIT), z_iota={("p", "p", "0"): -1, ("q", "q", "0"): 1, ("r", "r", "0"): 1, ("q", "r", "0"): 5})
    assert not check_triangularity(off).passed


# -- maps --------------------------------------------------------------------------------


def test_build_maps_mirror(torus2_complex):
    maps = build_maps(morse_mirror(torus2_complex))
    n = 4
    assert maps.iota.matrix == NovikovMatrix.identity(n)
    assert compose(maps.ssp, maps.pss).matrix == NovikovMatrix.identity(n)
    assert maps.h.matrix.is_zero_upto(None)
    # PSS sends <p_i> to <g_i>
    assert maps.pss.matrix == NovikovMatrix.identity(n)
    assert maps.cf.ids == ("g0", "g1", "g2", "g3") and not maps.cf.is_graded


def test_build_maps_zero_counts_keep_differential():
    maps = build_maps(CountSystem(data(CRIT, ORBS), morse=MORSE))
    for m in (maps.iota, maps.pss, maps.ssp, maps.h):
        assert m.matrix.is_zero_upto(None)
    assert maps.d.matrix[1, 0] == NovikovScalar.one()


def test_build_maps_reads_area():
    a = HomologyClass("A", 0, F(3, 2))
    s = CountSystem(data([("p", 0)], classes=[a]), z_iota={("p", "p", "A"): 1})
    assert build_maps(s).iota_kappa.matrix[0, 0] == NovikovScalar.monomial(1, F(3, 2))


@st.composite
def interval_systems(draw):
    """Random rational counts on the interval; z_iota solved from the h-claim, then maybe perturbed."""
    val = st.integers(-2, 2)
    z_plus = {(x, "g" + x, "0"): draw(val) for x in SIGN}
    z_minus = {("g" + x, x, "0"): draw(val) for x in SIGN}
    # index_h = 0 forces |p+| = |p-| + 1
    z_h = {(x, "p", "0"): draw(val) for x in ("q", "r")}
    m = lambda a, b: MORSE.get((a, b), 0)
    z_iota = {}
    for a in SIGN:
        for b in SIGN:
            if (a == "p") != (b == "p"):
                continue
            split = z_plus[(a, "g" + a, "0")] * z_minus[("g" + a, b, "0")] if a == b else 0
            hd = sum(z_h.get((a, q, "0"), 0) * m(q, b) + m(a, q) * z_h.get((q, b, "0"), 0) for q in SIGN)
            z_iota[(a, b, "0")] = split + SIGN[a] * hd
    perturb = draw(st.sampled_from([None] + sorted(z_iota)))
    if perturb is not None:
        z_iota[perturb] += draw(st.sampled_from([-1, 1]))
    return interval_mirror(z_iota=z_iota, z_plus=z_plus, z_minus=z_minus, z_h=z_h), perturb


@given(interval_systems())
def test_h_claim_matches_matrix_homotopy(sys_perturb):
    s, perturb = sys_perturb
    maps = build_maps(s)
    homotopy = check_chain_homotopy(maps.iota, compose(maps.ssp, maps.pss), maps.h, maps.d).passed
    assert check_h_claim(s).passed == homotopy == (perturb is None)


@given(interval_systems())
def test_iota_claim_matches_chain_map(sys_perturb):
    s, _ = sys_perturb
    maps = build_maps(s)
    assert check_iota_claim(s).passed == check_chain_map(maps.iota, maps.d).passed
    assert check_chain_map(sign_adjust(maps.iota_kappa), maps.d).passed == check_iota_claim(s).passed


# -- mirror and pipeline ---------------------------------------------------------------------


def test_mirror_is_deterministic(torus2_complex):
    a, b = morse_mirror(torus2_complex), morse_mirror(torus2_complex)
    assert a.dumps() == b.dumps()
    assert len(a.index_data.orbits) == 4


def test_mirror_on_nonzero_differential():
    from novmorse.chain import ChainComplex, GradedModule, LinearMap

    mod = GradedModule(("a", "b"), (1, 0))
    cx = ChainComplex(mod, LinearMap(mod, mod, [[0, 0], [1, 0]], -1))
    s = morse_mirror(cx)
    assert s.morse == {("a", "b"): 1}
    assert check_iota_claim(s).passed and check_h_claim(s).passed and check_triangularity(s).passed


def test_pipeline_on_sphere(sphere2_complex):
    v = run_pipeline(morse_mirror(sphere2_complex), (1, 0, 1), 10)
    assert v.bound == 2 and v.passed


def test_pipeline_on_interval():
    # interval homology is one point: bound 1, three orbits
    v = run_pipeline(interval_mirror(), (1, 0), 10)
    assert v.bound == 1 and v.certificate.cf_generators == 3


@pytest.mark.parametrize(
    "override, stage",
    [
        ({"z_iota": {("p", "p", "0"): 1, ("q", "q", "0"): 1, ("r", "r", "0"): 1}}, "iota_claim"),
        ({"z_minus": {("g" + x, x, "0"): 2 for x in SIGN}}, "h_claim"),
        ({"z_plus": {}}, "h_claim"),
    ],
)
def test_pipeline_reports_first_failing_stage(override, stage):
    with pytest.raises(HypothesisFailure) as exc:
        run_pipeline(interval_mirror(**override), (1, 0), 10)
    assert exc.value.stage == stage
    assert exc.value.verdict.failed_stage == stage


def test_pipeline_betti_mismatch():
    with pytest.raises(HypothesisFailure) as exc:
        run_pipeline(interval_mirror(), (1, 1), 10)
    assert exc.value.stage == "arnold_bound"


def test_triangularity_verdict_independent_of_order(torus3_complex):
    maps = build_maps(morse_mirror(torus3_complex))
    n = maps.cm.rank
    for perm in (list(range(n)), list(reversed(range(n))), [3, 1, 4, 0, 7, 5, 2, 6]):
        assert mat_lemma22_check(maps.iota.matrix.submatrix(perm, perm)).holds
