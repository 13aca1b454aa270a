import json

import pytest
from conftest import permutations
from hypothesis import given, settings

from schubmap.biratmap import forward_map
from schubmap.verify import (
    PARTS,
    SweepConfig,
    bounds_containment,
    cross_checks,
    default_workers,
    verify_element,
    verify_sweep,
)
from schubmap.weyl import free_variables, longest, parse_permutation


def test_element_passes_everything():
    rep = verify_element(parse_permutation("2,5,4,1,3"), points=5, samples=500)
    assert rep.passed, rep.summary()
    names = {c.name for c in rep.results}
    assert {"ii:superdiagonal", "iv:triangular", "identity:k-determinant", "bounds:containment"} <= names
    assert not rep.failures()


def test_unknown_part_rejected():
    with pytest.raises(ValueError):
        verify_element(longest(3), parts=["vi"])
    with pytest.raises(ValueError):
        SweepConfig(r=3, parts=("ii", "nope"))
    with pytest.raises(ValueError):
        SweepConfig(r=3, sample=0)
    with pytest.raises(ValueError):
        SweepConfig(r=13)


def test_containment_skipped_above_limit():
    rep = verify_element(parse_permutation("2,1,3,5,4"), parts=["bounds"], containment_max_r=4)
    skipped = [c for c in rep.results if c.status == "skipped"]
    assert [c.name for c in skipped] == ["bounds:containment"]
    assert rep.passed


@given(permutations(1, 5))
@settings(max_examples=25)
def test_random_elements_pass(w):
    rep = verify_element(w, points=3, samples=200)
    assert rep.passed, rep.summary()


def test_sweep_r3_and_document_is_reproducible():
    cfg = SweepConfig(r=3, points=5, samples=300)
    a = verify_sweep(cfg, workers=1)
    b = verify_sweep(cfg, workers=1)
    assert a.ok and a.summary() == "6/6 pass"
    assert a.to_document() == b.to_document()
    doc = json.loads(a.to_document())
    assert doc["passed"] == doc["expected"] == 6 and doc["failures"] == []
    assert "elapsed" not in a.to_document()


def test_sweep_parallel_matches_serial():
    cfg = SweepConfig(r=4, parts=("ii", "iii", "iv"))
    assert verify_sweep(cfg, workers=2).to_document() == verify_sweep(cfg, workers=1).to_document()


def test_sampled_sweep_is_seeded():
    cfg = SweepConfig(r=6, parts=("ii",), sample=5, seed=11)
    a = verify_sweep(cfg, workers=1)
    assert a.ok and len(a.reports) == 5
    assert a.to_document() == verify_sweep(cfg, workers=1).to_document()
    assert json.loads(a.to_document())["config"]["mode"] == "sample"


def test_mutations_are_caught():
    w = longest(3)
    fm = forward_map(w)
    for v in free_variables(w):
        for term in range(len(fm.terms[v].pathsum.sorted_terms())):
            rep = verify_element(w, parts=("ii", "iii", "iv"), fm=fm.mutate(v, term, 1))
            assert not rep.passed
            assert rep.failures()[0].witness is not None


def test_bounds_containment_counts():
    for text in ("3,2,1", "2,3,1", "4,3,2,1"):
        bad, wit = bounds_containment(parse_permutation(text), samples=2000, seed=3)
        assert bad == 0 and wit is None
    assert bounds_containment(parse_permutation("1,2,3")) == (0, None)


def test_cross_checks():
    rep = cross_checks(parse_permutation("2,4,1,3"), samples=500)
    assert rep.passed, rep.summary()


def test_default_workers(monkeypatch):
    monkeypatch.setenv("SCHUBMAP_WORKERS", "3")
    assert default_workers() == 3
    monkeypatch.setenv("SCHUBMAP_WORKERS", "junk")
    assert default_workers() == 1


def test_parts_constant():
    assert PARTS[:4] == ("i", "ii", "iii", "iv")
