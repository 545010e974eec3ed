from fractions import Fraction as Q

import numpy as np
import pytest

from mixfid.measures import MeasureId
from mixfid.relations import evaluate_registry, find, load_registry
from mixfid.relations.core import Property

REGISTRY = load_registry()
# entries whose violation is real but small; see the notes on separate concavity
SMALL_MARGIN = {("separate_concavity_qubits", "FGM"), ("separate_concavity_qubits", "FAM")}


def _diag_purity(p):
    return sum(x * x for x in p)


def test_registry_loads_and_names_unique():
    names = [cx.name for cx in REGISTRY]
    assert len(names) == len(set(names))
    assert len(REGISTRY) >= 20


@pytest.mark.parametrize("result", evaluate_registry(REGISTRY), ids=lambda r: r.name)
def test_entry_reproduces(result):
    assert not result.mismatches, result.to_dict()
    assert result.ok


@pytest.mark.parametrize("cx", REGISTRY, ids=lambda c: c.name)
def test_margins_clear(cx):
    for m in cx.measures:
        floor = 1e-4 if (cx.name, m) in SMALL_MARGIN else 1e-3
        assert cx.margin(MeasureId.parse(m)) > floor, (cx.name, m)


def test_hm_min_values_exact():
    # rational oracle with diagonal states: tr(rho sigma) = 3/4, purities 1 and 19/32
    p, q = [Q(1), Q(0), Q(0)], [Q(3, 4), Q(1, 8), Q(1, 8)]
    ov = sum(a * b for a, b in zip(p, q))
    pr, ps = _diag_purity(p), _diag_purity(q)
    hm = ov / (2 * pr * ps / (pr + ps))
    mn = ov / min(pr, ps)
    assert (hm, mn) == (Q(153, 152), Q(24, 19))
    values = find("hm_min_above_one").all_quantities()
    assert Q(values["FHM.value"]).limit_denominator(1000) == hm
    assert Q(values["FMIN.value"]).limit_denominator(1000) == mn
    assert values["FHM.value"] == pytest.approx(float(hm), abs=1e-14)


def test_fam_tensor_values_exact():
    a, m = [Q(1, 5), Q(4, 5)], [Q(1, 2), Q(1, 2)]
    aa = [x * y for x in a for y in a]
    mm = [x * y for x in m for y in m]

    def fam(p, q):
        return sum(x * y for x, y in zip(p, q)) / ((_diag_purity(p) + _diag_purity(q)) / 2)

    tensor, product = fam(aa, mm), fam(a, m) ** 2
    assert (tensor, product) == (Q(1250, 1781), Q(2500, 3481))
    got = find("fam_tensor_square").all_quantities()
    assert abs(got["FAM.tensor"] - 0.702) < 5e-4
    assert abs(got["FAM.product"] - 0.718) < 5e-4


def test_every_table_property_has_an_entry():
    props = {cx.property for cx in REGISTRY}
    for p in ("J1A", "J1B", "J1C", "J3", "SEP_CONCAVE", "JOINT_CONCAVE", "SUPERMULT", "MONO_PTRACE",
              "MONO_PROJECTIVE", "METRIC_M4", "BOUND"):
        assert Property(p) in props


def test_triangle_entries_per_functional():
    fq = find("fq_triangle_qubits").functional_margins("FQ")
    assert set(fq) == {"A", "B", "C"} and min(fq.values()) > 1e-3
    for m in ("F2", "FN", "FGM", "FAM"):
        fm = find("triangle_qutrits").functional_margins(m)
        assert min(fm.values()) > 1e-3, m


def test_searched_entry_is_flagged():
    cx = find("fn_partial_trace_search")
    assert cx.found_by_search
    assert not find("hm_min_above_one").found_by_search
    states = cx.states
    assert all(np.linalg.eigvalsh(s).min() > -1e-12 for s in states)
