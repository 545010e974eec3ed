import json

import numpy as np
import pytest

from mixfid import errors
from mixfid.ensembles import ginibre_batch, stream
from mixfid.linalg import tensor
from mixfid.measures import MeasureId, f1
from mixfid.relations import (
    BOUND_CHAIN,
    Counterexample,
    MetricFunctional,
    Property,
    WitnessStore,
    check_axioms,
    falsify,
    sample_property,
)
from mixfid.relations.checks import (
    bound_slacks,
    check_bounds,
    check_concavity,
    check_monotonicity,
    check_multiplicativity,
    check_triangle,
    metric_value,
)
from mixfid.relations.core import Channel, ChannelKind
from mixfid.relations.tables import (
    AXIOM_TABLE,
    HOLDS,
    OPEN,
    TABLES,
    VIOLATED,
)

HALF = np.eye(2) / 2


def test_axiom_reports_for_f1_all_hold():
    reports = check_axioms("F1", dims=(2, 3), n_samples=300, seed=1)
    assert [r.property for r in reports] == [Property(p) for p in ("J1A", "J1B", "J1C", "J2", "J3", "J4")]
    assert all(r.holds for r in reports), [r.to_dict() for r in reports if not r.holds]


def test_axiom_reports_for_fmin_find_violations():
    reports = {r.property: r for r in check_axioms("FMIN", dims=(3,), n_samples=300, seed=1)}
    for ax in ("J1A", "J1B", "J3"):
        rep = reports[Property(ax)]
        assert not rep.holds
        assert rep.witness is not None and rep.witness.margin(MeasureId("FMIN")) > 1e-9
    assert reports[Property.J2].holds


def test_j1b_witness_has_unit_value():
    reports = {r.property: r for r in check_axioms("FHM", dims=(3,), n_samples=200, seed=2)}
    rho, sigma = reports[Property.J1B].witness.states
    assert float(MeasureId("FHM")(rho, sigma)) == pytest.approx(1.0, abs=1e-9)
    assert np.linalg.norm(rho - sigma) > 1e-3


def test_sample_property_is_reproducible():
    a = sample_property("J4", "FQ", dims=(2, 3), n_samples=200, seed=9)
    b = sample_property("J4", "FQ", dims=(2, 3), n_samples=200, seed=9)
    assert a.margin == b.margin and a.n_checked == 400


def test_separate_concavity_example():
    rhos = [np.diag([0.1, 0.9]), np.diag([0.2, 0.8])]
    rep = check_concavity("F2", [0.5, 0.5], rhos, np.diag([0.6, 0.4]))
    assert not rep.holds
    assert rep.margin == pytest.approx(404 / 697 - 86 / 149, abs=1e-12)
    assert check_concavity("F1", [0.5, 0.5], rhos, np.diag([0.6, 0.4])).holds
    with pytest.raises(errors.OutOfRange):
        check_concavity("F1", [0.5, 0.6], rhos, HALF)


def test_joint_concavity_dimension_check():
    with pytest.raises(errors.DimMismatch):
        check_concavity("F1", [0.5, 0.5], [HALF, HALF], [HALF], joint=True)


def test_multiplicativity_examples():
    a = np.diag([0.2, 0.8])
    assert check_multiplicativity("F1", a, HALF, a, HALF).holds
    rep = check_multiplicativity("FAM", a, HALF, a, HALF, relation="super", setting="power")
    assert not rep.holds
    assert rep.margin == pytest.approx(2500 / 3481 - 1250 / 1781, abs=1e-12)


def test_monotonicity_partial_trace_example():
    rb = np.array([[0.3, 0.3], [0.3, 0.7]])
    sb = np.array([[0.06, 0.2], [0.2, 0.94]])
    rho = tensor(np.diag([0, 1]), rb)
    sigma = tensor(HALF, sb)
    rep = check_monotonicity("F2", "PTRACE", rho, sigma, {"dims": (2, 2), "keep": 0})
    assert not rep.holds
    assert rep.margin == pytest.approx(199 / 380 - 0.5, abs=1e-12)
    assert rep.witness.params["channel"] == "PTRACE"
    assert check_monotonicity("F1", "PTRACE", rho, sigma, {"dims": (2, 2), "keep": 0}).holds


def test_channels_preserve_states():
    rng = stream(4)
    rho = ginibre_batch(4, 3, rng)
    iso = np.linalg.qr(rng.standard_normal((8, 4)) + 1j * rng.standard_normal((8, 4)))[0]
    for ch in (
        Channel(ChannelKind.PTRACE, dims=(2, 2), keep=1),
        Channel(ChannelKind.PROJECTIVE_MEAS),
        Channel(ChannelKind.APPEND_ANCILLA, ancilla=HALF),
        Channel(ChannelKind.RANDOM_CPTP, isometry=iso),
    ):
        out = ch(rho)
        np.testing.assert_allclose(np.trace(out, axis1=-2, axis2=-1), 1.0, atol=1e-12)
        assert np.linalg.eigvalsh(out).min() > -1e-12
        assert Channel.from_params(ch.to_params()).kind is ch.kind


@pytest.mark.parametrize(
    "fn, fid, expected",
    [("A", 0.25, np.pi / 3), ("B", 0.25, np.sqrt(0.5)), ("B2", 0.25, 1.0), ("C", 0.75, 0.5)],
)
def test_metric_functionals(fn, fid, expected):
    assert MetricFunctional.parse(fn)(fid) == pytest.approx(expected)


def test_metric_value_rejects_out_of_range():
    rho, sigma = np.diag([1.0, 0, 0]), np.diag([0.75, 0.125, 0.125])
    assert metric_value("C", "F1", rho, sigma) == pytest.approx(np.sqrt(1 - f1(rho, sigma)))
    with pytest.raises(errors.OutOfRangeMeasure):
        metric_value("C", "FMIN", rho, sigma)


@pytest.mark.parametrize("prop", ["METRIC_M1", "METRIC_M2", "METRIC_M3"])
@pytest.mark.parametrize("measure", ["F1", "F2", "FA"])
def test_metric_identities_hold(prop, measure):
    assert sample_property(prop, measure, dims=(2, 3), n_samples=200, seed=3, functional=MetricFunctional("A")).holds


def test_triangle_witness_and_orderings():
    q1, q2 = np.diag([0.3, 0.7]), np.diag([0.01, 0.99])
    tau = np.diag([0.2, 0.8])
    rep = check_triangle("A", "FQ", q1, q2, tau)
    assert not rep.holds
    assert check_triangle("A", "FQ", q1, q2, tau, all_orderings=True).margin >= rep.margin
    assert check_triangle("A", "F1", q1, q2, tau, all_orderings=True).holds


def test_bound_chain_single_pair():
    rho, sigma = np.diag([0.0, 0.5, 0.5]), np.diag([0.5, 0.0, 0.5])
    names = {r.context: r for r in check_bounds(rho, sigma)}
    assert "F2<=F1" not in names
    assert all(r.holds for r in names.values())
    slack = bound_slacks(HALF, np.diag([0.9, 0.1]))
    assert set(slack) == {b.name for b in BOUND_CHAIN}
    assert min(slack.values()) >= -1e-12


def test_counterexample_json_round_trip(tmp_path):
    rep = check_multiplicativity("FAM", np.diag([0.2, 0.8]), HALF, np.diag([0.2, 0.8]), HALF, relation="super")
    cx = rep.witness
    text = json.dumps(cx.to_json())
    back = Counterexample.from_json(json.loads(text))
    assert back.property is cx.property and back.measures == cx.measures
    assert back.margin(MeasureId("FAM")) == pytest.approx(cx.margin(MeasureId("FAM")), abs=1e-15)
    store = WitnessStore(tmp_path / "w" / "store.jsonl")
    store.append(cx)
    store.append(back)
    assert len(store.load()) == 2


def test_falsify_deterministic_and_workers_independent():
    a = falsify("J1A", "FMIN", dims=(3,), budget=1000, seed=4)
    b = falsify("J1A", "FMIN", dims=(3,), budget=1000, seed=4, workers=2)
    assert a is not None and b is not None
    assert a.margin() == b.margin()
    np.testing.assert_array_equal(a.states[0], b.states[0])


def test_falsify_returns_none_when_property_holds():
    assert falsify("J2", "F1", dims=(2,), budget=500, seed=0) is None


def test_expected_tables_cover_core_measures():
    for m in ("F1", "F2", "FQ", "FN", "FC", "FA", "FGM", "FAM", "FHM", "FMIN"):
        assert m in AXIOM_TABLE
    assert AXIOM_TABLE["FMIN"][Property.J1A] == VIOLATED
    assert AXIOM_TABLE["F1"][Property.J1C] == HOLDS


@pytest.mark.slow
@pytest.mark.parametrize("name", sorted(TABLES))
def test_table_reproduction(name):
    kwargs = {"n_samples": 1000, "seed": 5}
    if name not in ("axioms",):
        kwargs["search_budget"] = 2000
    cells = TABLES[name](**kwargs)
    bad = [c.line() for c in cells if not c.ok]
    assert not bad, "\n".join(bad)
    for c in cells:
        if c.observed == VIOLATED:
            assert c.witness is not None and c.margin > 1e-9
        if c.expected == OPEN:
            assert c.ok
