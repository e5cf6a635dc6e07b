import pytest

from sobmult import classify as C
from sobmult.catalog import ENTRIES
from sobmult.funcspace import DifferentiableFunction as DF

SINGULAR = ["sin(1/x)", "1/x", "exp(1/x)"]


@pytest.mark.parametrize("text", SINGULAR)
def test_paper_examples(text):
    phi = DF.from_expr(text, [0])
    assert C.classify_w0(phi).densely_defined == "yes"
    full = C.classify_full(phi)
    assert full.densely_defined == "no" and full.bounded is False


def test_interior_pole_is_not_densely_defined():
    v = C.classify_w0(DF.from_expr("1/(x-1/2)", [0.5]))
    assert v.densely_defined == "no"
    assert v.probes[0].point == 0.5 and v.probes[0].verdict == "divergent"


def test_smooth_symbols():
    for text in ("x^2", "x*(1-x)"):
        phi = DF.from_expr(text)
        assert C.classify_w0(phi).densely_defined == "yes"
        full = C.classify_full(phi)
        assert full.densely_defined == "yes" and full.bounded and full.global_energy is not None


def test_square_root_splits_the_two_spaces():
    phi = DF.from_expr("sqrt(x)")
    assert C.classify_w0(phi).densely_defined == "yes"
    assert C.classify_full(phi).densely_defined == "no"


def test_undeclared_singularity_found_by_scan():
    phi = DF.from_expr("1/(x-1/2)")
    assert 0.5 in C.scan_singularities(phi)
    assert C.classify_w0(phi).densely_defined == "no"


@pytest.mark.parametrize("entry", ENTRIES, ids=lambda e: e.name)
def test_catalog_verdicts_and_consistency(entry):
    phi = entry.function()
    w0 = C.classify_w0(phi)
    full = C.classify_full(phi)
    assert (w0.densely_defined, full.densely_defined) == (entry.w0, entry.full)
    if full.densely_defined == "yes":
        assert w0.densely_defined == "yes"
    assert w0.evidence and full.evidence


@pytest.mark.parametrize("c", [0.5, 2, 10])
@pytest.mark.parametrize("text", ["1/x", "1/(x-1/2)", "x^2"])
def test_scale_invariance(text, c):
    phi = DF.from_expr(text, [0.5] if "1/2" in text else [0])
    assert C.classify_w0(phi.scaled(c)).densely_defined == C.classify_w0(phi).densely_defined


def test_family_intervals():
    fam = C.interval_family(DF.from_expr("1/x", [0]))
    assert [f.k for f in fam] == list(range(2, 21))
    assert fam[0].interval == (0.25, 0.75)
    assert all(f.member for f in fam)
    assert fam[-1].energy > fam[0].energy


def test_semicircle_sup():
    rep = C.boundedness_probe(DF.from_expr("sqrt(1/4-(x-1/2)^2)"))
    assert abs(rep.sup_estimate - 0.5) <= 1e-3
    assert rep.sup_estimate <= 0.5 + 1e-6
    assert rep.endpoints == (0.0, 1.0)
    assert all(s.valid for s in rep.samples)


def test_bubble_ratios_bounded():
    rep = C.boundedness_probe(DF.from_expr("x*(1-x)"))
    assert not rep.unbounded_suspected
    assert max(rep.ratios) <= 2


def test_unbounded_detector_on_growing_sequence():
    assert C._unbounded([1, 2, 3, 4, 5])
    assert not C._unbounded([1, 1.5, 1.75, 1.875, 1.9])
    assert not C._unbounded([5, 4, 3, 2, 1])
    assert not C._unbounded([1, 2, 3])


def test_tent_shape():
    t = C.tent(3)
    assert t.breakpoints == (0.0625, 0.125, 0.25)
    m = C.tent(3, 1.0)
    assert m.breakpoints == (0.75, 0.875, 0.9375)
