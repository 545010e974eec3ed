import csv

import numpy as np
import pytest
from scipy.linalg import expm

from mixfid import errors
from mixfid.phasespace import (
    CoherentSpec,
    FockSpec,
    GaussianSpec,
    PosPSampleBatch,
    analytic_overlap,
    coherent_overlap,
    f2_phasespace,
    posp_kernel,
    purity,
    sample_posp,
    sample_posp_canonical,
    sample_posp_glauber,
    sample_wigner,
    sampled_tr_posp,
    sampled_tr_wigner,
    spec_from_json,
    squeezed,
    thermal,
    vacuum,
    wigner_density,
    write_batch_csv,
)

N_FOCK = 70
_a = np.diag(np.sqrt(np.arange(1, N_FOCK)), 1).astype(complex)
_ad = _a.conj().T


def _fock_vacuum():
    v = np.zeros(N_FOCK, dtype=complex)
    v[0] = 1
    return np.outer(v, v)


def _displace(alpha):
    return expm(alpha * _ad - np.conj(alpha) * _a)


def _squeeze(xi):
    return expm(0.5 * (np.conj(xi) * _a @ _a - xi * _ad @ _ad))


def fock_matrix(kind, **kw):
    """Truncated number-basis density matrix: an oracle independent of the Gaussian formulas."""
    if kind == "thermal":
        nb = kw["nbar"]
        p = (nb / (1 + nb)) ** np.arange(N_FOCK) / (1 + nb)
        rho = np.diag(p).astype(complex)
    elif kind == "squeezed":
        s = _squeeze(kw["r"] * np.exp(1j * kw.get("phi", 0.0)))
        rho = s @ _fock_vacuum() @ s.conj().T
    elif kind == "fock":
        rho = np.zeros((N_FOCK, N_FOCK), dtype=complex)
        rho[kw["n"], kw["n"]] = 1
    else:
        rho = _fock_vacuum()
    d = _displace(kw.get("alpha", 0))
    return d @ rho @ d.conj().T


CASES = [
    (CoherentSpec((0.5 + 0.2j,)), ("coherent", dict(alpha=0.5 + 0.2j)),
     CoherentSpec((-0.3 + 0.7j,)), ("coherent", dict(alpha=-0.3 + 0.7j))),
    (thermal(0.7), ("thermal", dict(nbar=0.7)), CoherentSpec((0.6,)), ("coherent", dict(alpha=0.6))),
    (thermal(0.4, [0.3j]), ("thermal", dict(nbar=0.4, alpha=0.3j)), thermal(1.1), ("thermal", dict(nbar=1.1))),
    (squeezed(0.4), ("squeezed", dict(r=0.4)), CoherentSpec((0.5 + 0.3j,)), ("coherent", dict(alpha=0.5 + 0.3j))),
    (squeezed(0.3, 1.1, 0.2), ("squeezed", dict(r=0.3, phi=1.1, alpha=0.2)), thermal(0.5), ("thermal", dict(nbar=0.5))),
    (FockSpec(2), ("fock", dict(n=2)), CoherentSpec((0.8 - 0.4j,)), ("coherent", dict(alpha=0.8 - 0.4j))),
]


@pytest.mark.parametrize("rho, rho_f, sigma, sigma_f", CASES)
def test_analytic_overlap_matches_fock_oracle(rho, rho_f, sigma, sigma_f):
    r, s = fock_matrix(rho_f[0], **rho_f[1]), fock_matrix(sigma_f[0], **sigma_f[1])
    assert analytic_overlap(rho, sigma) == pytest.approx(np.trace(r @ s).real, abs=1e-10)
    assert purity(rho) == pytest.approx(np.trace(r @ r).real, abs=1e-10)


def test_fock_overlaps():
    assert analytic_overlap(FockSpec(1), FockSpec(1)) == 1.0
    assert analytic_overlap(FockSpec(1), FockSpec(2)) == 0.0
    with pytest.raises(errors.UnsupportedState):
        analytic_overlap(FockSpec(1), thermal(0.5))


@pytest.mark.parametrize("spec", [vacuum(), thermal(0.8), squeezed(0.5, 0.7, 0.3 + 0.1j), FockSpec(1), FockSpec(3)])
def test_wigner_normalized(spec):
    x = np.linspace(-6, 6, 241)
    pts = (x[:, None] + 1j * x[None, :])[..., None]
    w = wigner_density(spec, pts)
    assert np.sum(w) * (x[1] - x[0]) ** 2 == pytest.approx(1.0, abs=1e-6)


def test_fock_wigner_negative_at_origin():
    assert float(wigner_density(FockSpec(1), [0j])) == pytest.approx(-2 / np.pi)
    with pytest.raises(errors.NegativeDistribution):
        sample_wigner(FockSpec(1), 10, seed=0)


def test_gaussian_validation():
    with pytest.raises(errors.UnsupportedState):
        GaussianSpec((0j,), np.diag([0.1, 0.1]))
    with pytest.raises(errors.UnsupportedState):
        GaussianSpec((0j,), np.eye(3))
    with pytest.raises(errors.UnsupportedState):
        thermal(-1)
    with pytest.raises(errors.UnsupportedState):
        FockSpec(-1)
    assert purity(vacuum(2)) == pytest.approx(1.0)
    assert purity(thermal([1.0, 0.0])) == pytest.approx(1 / 3)


def test_kernel_closed_form():
    rng = np.random.default_rng(0)
    a, ap, b, bp = (rng.standard_normal(2) + 1j * rng.standard_normal(2) for _ in range(4))
    k = posp_kernel((a, ap), (b, bp))
    assert k == pytest.approx(np.exp(-np.sum((a - b) * (ap - bp))), rel=1e-12)
    # on the classical subspace alpha+ = conj(alpha) it is the coherent overlap
    assert posp_kernel((a, a.conj()), (b, b.conj())) == pytest.approx(abs(coherent_overlap(a, b)) ** 2, rel=1e-12)


def test_wigner_estimator_within_error():
    rho, sigma = thermal(0.5), squeezed(0.3, displacement=0.4)
    est, se = sampled_tr_wigner(rho, sample_wigner(sigma, 20000, seed=3))
    assert abs(est - analytic_overlap(rho, sigma)) < 4 * se


def test_glauber_estimator_within_error():
    rho, sigma = thermal(0.6), thermal(1.2, [0.5])
    est, se = sampled_tr_posp(sample_posp(rho, 2000, 1, key=(0,)), sample_posp(sigma, 2000, 1, key=(1,)))
    assert abs(est - analytic_overlap(rho, sigma)) < 4 * se


def test_posp_unbiased_over_seeds():
    rho, sigma = thermal(1.0), thermal(0.3, [0.4])
    truth = analytic_overlap(rho, sigma)
    z = []
    for seed in range(30):
        est, se = sampled_tr_posp(sample_posp(rho, 300, seed, key=(0,)), sample_posp(sigma, 300, seed, key=(1,)))
        z.append((est - truth) / se)
    assert abs(np.mean(z)) < 4 / np.sqrt(len(z))


def test_posp_workers_and_limits():
    a = sample_posp(thermal(0.5), 1500, 2, key=(0,))
    b = sample_posp(thermal(0.5), 1500, 2, key=(1,))
    assert sampled_tr_posp(a, b) == sampled_tr_posp(a, b, workers=3)
    with pytest.raises(errors.OutOfRange):
        sampled_tr_posp(a, b, max_samples=1000)
    with pytest.raises(errors.OutOfRange):
        sampled_tr_posp(a, sample_posp(vacuum(2), 10))


def test_samplers_reject_nonclassical():
    with pytest.raises(errors.NegativeDistribution):
        sample_posp_glauber(squeezed(0.3), 10)
    with pytest.raises(errors.UnsupportedState):
        sample_posp_glauber(FockSpec(1), 10)
    c = sample_posp_canonical(squeezed(0.3), 100, seed=1)
    assert c.alpha.shape == (100, 1) and not np.allclose(c.alpha_plus, c.alpha.conj())


def test_sampling_deterministic():
    a = sample_wigner(thermal(0.3), 5000, seed=7)
    b = sample_wigner(thermal(0.3), 5000, seed=7)
    np.testing.assert_array_equal(a.points, b.points)
    assert not np.array_equal(a.points, sample_wigner(thermal(0.3), 5000, seed=8).points)


def test_f2_phasespace_and_purity_flag():
    rho, sigma = vacuum(), thermal(0.5)
    truth = analytic_overlap(rho, sigma) / purity(rho)
    for rep in ("wigner", "posp"):
        est, se = f2_phasespace(rho, sigma, 4000, seed=1, representation=rep)
        assert abs(est - truth) < 4 * se + 1e-12
    f2_phasespace(rho, sigma, 100, assume_rho_purer=False)
    with pytest.raises(errors.UnknownPurity):
        f2_phasespace(sigma, rho, 100, assume_rho_purer=False)
    with pytest.raises(errors.UnknownPurity):
        f2_phasespace(rho, sample_wigner(sigma, 100, 0), assume_rho_purer=False)
    with pytest.raises(errors.OutOfRange):
        f2_phasespace(rho, sigma, 100, representation="husimi")


def test_batch_csv(tmp_path):
    path = tmp_path / "b.csv"
    write_batch_csv(sample_posp(thermal([0.2, 0.3]), 3, 0), path)
    rows = list(csv.reader(open(path)))
    assert rows[0][:4] == ["mode_count", "sample_index", "re_alpha_1", "im_alpha_1"]
    assert "re_alphaplus_2" in rows[0] and len(rows) == 4
    write_batch_csv(sample_wigner(vacuum(), 2, 0), path)
    assert len(next(csv.reader(open(path)))) == 4


@pytest.mark.parametrize(
    "obj, cls",
    [
        ({"type": "coherent", "amplitudes": [[0.5, 0.1]]}, CoherentSpec),
        ({"type": "vacuum", "modes": 2}, CoherentSpec),
        ({"type": "thermal", "nbar": 0.5, "displacement": [[0.1, 0.2]]}, GaussianSpec),
        ({"type": "squeezed", "r": 0.2, "phi": 0.5}, GaussianSpec),
        ({"type": "gaussian", "mean": [0], "cov": [[0.25, 0], [0, 0.25]]}, GaussianSpec),
        ({"type": "fock", "n": 2}, FockSpec),
    ],
)
def test_spec_from_json(obj, cls):
    assert isinstance(spec_from_json(obj), cls)


@pytest.mark.parametrize("obj", [{"type": "cat"}, {"type": "thermal"}, {"type": "squeezed", "r": "x"}])
def test_spec_from_json_rejects(obj):
    with pytest.raises(errors.UnsupportedState):
        spec_from_json(obj)


def test_batch_type_fields():
    b = sample_posp(CoherentSpec((1j, 2.0)), 4, 9)
    assert isinstance(b, PosPSampleBatch) and b.modes == 2 and b.seed == 9
    np.testing.assert_array_equal(b.alpha_plus, b.alpha.conj())


@pytest.mark.slow
@pytest.mark.parametrize(
    "rho, sigma, representation, n",
    [
        (thermal(0.5), squeezed(0.3, 0.4, 0.2 + 0.1j), "wigner", 10000),
        (CoherentSpec((0.4j,)), thermal(0.8, [0.3]), "wigner", 10000),
        (thermal(0.7), thermal(0.2, [0.5 - 0.2j]), "posp", 1000),
    ],
)
def test_three_sigma_coverage(rho, sigma, representation, n):
    truth = analytic_overlap(rho, sigma)
    inside = 0
    for seed in range(100):
        if representation == "wigner":
            est, se = sampled_tr_wigner(rho, sample_wigner(sigma, n, seed))
        else:
            est, se = sampled_tr_posp(sample_posp(rho, n, seed, key=(0,)), sample_posp(sigma, n, seed, key=(1,)))
        inside += abs(est - truth) <= 3 * se
    assert inside >= 99
