"""End-to-end smoke tests of the python bindings.

Run after installing the package (pip install . --no-build-isolation):
    pytest tests/python
"""

import json
import math
import pathlib
import subprocess

import numpy as np
import pytest

import driftfit

ROOT = pathlib.Path(__file__).resolve().parents[2]

HOM_NOISE = {"model": "hom", "sigma": np.array([[0.01, 0.002], [0.002, 0.006]])}


def simulate_hom(b=40, n=10, seed=7):
    kappa0 = driftfit.synthetic_kappa(n)
    y = driftfit.simulate(
        B=b,
        N_plus_1=n,
        kappa0=kappa0,
        psi={"type": "constant", "value": 3.0 + 1.0j},
        phi={"type": "random-walk", "start": 1.0 + 0.0j, "phase_step": 0.1},
        noise=HOM_NOISE,
        seed=seed,
    )
    return y, kappa0


def test_simulate_and_fit_recovers_direction():
    y, kappa0 = simulate_hom(b=200, n=12, seed=3)
    fit = driftfit.fit_hom(y)
    assert fit.converged
    assert abs(np.linalg.norm(fit.params.kappa) - 1.0) < 1e-10
    assert abs(np.sum(fit.params.kappa)) < 1e-9
    assert driftfit.proj_distance(fit.params.kappa, kappa0) < 0.1
    # the likelihood trace never decreases
    trace = np.asarray(fit.loglik_trace)
    assert np.all(np.diff(trace) >= -1e-9)


def test_spectrum_extraction_is_phase_invariant():
    rng = np.random.default_rng(5)
    kappa = rng.normal(size=8) + 1j * rng.normal(size=8)
    kappa /= np.linalg.norm(kappa)
    base = driftfit.extract_spectrum(kappa)
    rotated = driftfit.extract_spectrum(np.exp(1.3j) * kappa)
    np.testing.assert_allclose(base.I, rotated.I, atol=1e-12)
    assert abs(np.max(base.I)) > abs(np.min(base.I))
    assert np.linalg.norm(base.I) ** 2 + np.linalg.norm(base.omega) ** 2 == pytest.approx(1.0)


def test_heteroscedastic_fit_runs():
    # The batch means must sweep a decent arc, otherwise the base covariance
    # along their common direction is unidentified and the fit (correctly)
    # reports a boundary solution.
    kappa0 = driftfit.synthetic_kappa(10)
    y = driftfit.simulate(
        B=120,
        N_plus_1=10,
        kappa0=kappa0,
        psi={"type": "random-walk", "start": 12.0 + 5.0j, "phase_step": 0.3},
        phi={"type": "random-walk", "start": 3.0 + 1.0j, "phase_step": 0.1},
        noise={
            "model": "het",
            "sigma0": np.array([[0.05, 0.01], [0.01, 0.03]]),
            "sigma_tilde": 0.03,
        },
        seed=11,
    )
    fit = driftfit.fit_het(y, maxiter=80)
    assert fit.params.sigma_tilde == pytest.approx(0.03, rel=0.4)
    assert not fit.boundary_warning
    sig0 = driftfit.batch_covariance(fit.params, 0)
    assert sig0.shape == (2, 2)
    assert np.linalg.eigvalsh(sig0).min() > 0


def test_bootstrap_bands_bracket_point_estimate():
    y, _ = simulate_hom(b=40, n=10, seed=9)
    fit = driftfit.fit_hom(y)
    bands = driftfit.parametric_bootstrap(y, fit, replicates=50, seed=2)
    assert bands.replicates == 50
    inside = np.sum((bands.i_lower <= bands.i_point) & (bands.i_point <= bands.i_upper))
    assert inside >= 0.9 * len(bands.i_point)


def test_sandwich_covariance_is_psd():
    y, kappa0 = simulate_hom(b=400, n=8, seed=13)
    sigma = HOM_NOISE["sigma"]
    fit = driftfit.fit_hom(y, sigma_known=sigma)
    yc = y - y.mean(axis=1, keepdims=True)
    h = driftfit.helmert_matrix(8)
    yh = yc @ h.T
    khat = driftfit.helmertize(fit.params.kappa)
    cov = driftfit.sandwich_covariance(yh, khat, np.linalg.inv(sigma))
    assert np.linalg.eigvalsh(cov.cov_beta).min() > -1e-12
    assert cov.cov_I.shape == (7, 7)


def test_ks_test_and_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(17)
    ks = driftfit.ks_test(list(rng.normal(size=500)))
    assert 0.0 <= ks.p_value <= 1.0
    with pytest.raises(driftfit.DriftfitError):
        driftfit.ks_test([0.0] * 4)

    y, _ = simulate_hom(b=5, n=6, seed=21)
    path = str(tmp_path / "y.csv")
    driftfit.write_csv(y, np.linspace(1e6, 2e6, 6), path)
    values, freq, batch_ids = driftfit.read_csv(path)
    np.testing.assert_array_equal(values, y)
    assert len(batch_ids) == 5


def test_result_json_matches_schema(tmp_path):
    jsonschema = pytest.importorskip("jsonschema")
    cli = ROOT / "build" / "tools" / "driftfit"
    if not cli.exists():
        pytest.skip("CLI binary not built")
    spec = {
        "B": 30,
        "N_plus_1": 8,
        "seed": 4,
        "kappa0": "synthetic",
        "psi": {"type": "constant", "value": [3.0, 1.0]},
        "phi": {"type": "random-walk", "start": [1.0, 0.0], "phase_step": 0.1},
        "noise": {"model": "hom", "sigma": [[0.01, 0.0], [0.0, 0.01]]},
    }
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec))
    y_path = tmp_path / "y.csv"
    fit_path = tmp_path / "fit.json"
    subprocess.run([str(cli), "simulate", "--spec", str(spec_path), "--out", str(y_path)],
                   check=True)
    subprocess.run([str(cli), "fit-hom", str(y_path), "--out", str(fit_path)], check=True)

    schema = json.loads((ROOT / "schemas" / "result.schema.json").read_text())
    result = json.loads(fit_path.read_text())
    jsonschema.validate(result, schema)
    assert result["model"] == "hom"
    assert result["converged"] is True
    assert math.isfinite(result["loglik_trace"][-1])


def test_het_fit_is_a_local_optimum():
    # Cross-implementation oracle: hand the fitted parameters to a general
    # purpose optimizer over the full parameter vector; it should not be able
    # to improve the likelihood by more than numerical slack.
    scipy_opt = pytest.importorskip("scipy.optimize")
    kappa0 = driftfit.synthetic_kappa(6)
    y = driftfit.simulate(
        B=60,
        N_plus_1=6,
        kappa0=kappa0,
        psi={"type": "random-walk", "start": 12.0 + 5.0j, "phase_step": 0.3},
        phi={"type": "random-walk", "start": 2.0 + 0.5j, "phase_step": 0.1},
        noise={
            "model": "het",
            "sigma0": np.array([[0.04, 0.01], [0.01, 0.03]]),
            "sigma_tilde": 0.05,
        },
        seed=23,
    )
    fit = driftfit.fit_het(y, maxiter=200, min_delta_loglik=1e-7)
    assert fit.params.sigma_tilde > 0.0  # identified regime
    b, n = y.shape

    def unpack(theta):
        psi = theta[0:2 * b:2] + 1j * theta[1:2 * b:2]
        phi = theta[2 * b:4 * b:2] + 1j * theta[2 * b + 1:4 * b:2]
        kb = theta[4 * b:4 * b + 2 * n:2] + 1j * theta[4 * b + 1:4 * b + 2 * n:2]
        st = abs(theta[4 * b + 2 * n])
        l11, l21, l22 = theta[4 * b + 2 * n + 1:]
        sigma0 = np.array([[l11, 0.0], [l21, l22]]) @ np.array([[l11, l21], [0.0, l22]])
        return psi, phi, kb, st, sigma0

    def neg_loglik(theta):
        psi, phi, kb, st, sigma0 = unpack(theta)
        resid = y - psi[:, None] - phi[:, None] * kb[None, :]
        total = 0.0
        for bi in range(b):
            v = np.array([-psi[bi].imag, psi[bi].real])
            sig = sigma0 + st * st * np.outer(v, v)
            det = np.linalg.det(sig)
            if det <= 0:
                return 1e12
            p = np.linalg.inv(sig)
            r = np.stack([resid[bi].real, resid[bi].imag])
            total += np.einsum("iv,ij,jv->", r, p, r)
            total += n * (np.log(det) + 2 * np.log(2 * np.pi))
        return 0.5 * total

    p = fit.params
    kb = p.kappa + p.c
    l = np.linalg.cholesky(p.sigma0)
    theta0 = np.concatenate([
        np.column_stack([p.psi.real, p.psi.imag]).ravel(),
        np.column_stack([p.phi.real, p.phi.imag]).ravel(),
        np.column_stack([kb.real, kb.imag]).ravel(),
        [p.sigma_tilde, l[0, 0], l[1, 0], l[1, 1]],
    ])
    ours = -neg_loglik(theta0)
    assert ours == pytest.approx(fit.loglik, abs=1e-8)

    polished = scipy_opt.minimize(neg_loglik, theta0, method="L-BFGS-B",
                                  options={"maxiter": 200})
    improvement = (-polished.fun) - ours
    assert improvement < 0.05  # nothing materially better in the neighborhood


def test_validate_theory_quick():
    results = driftfit.validate_theory(quick=True)
    assert {r["name"] for r in results} >= {"consistency", "clt-sandwich", "boundary-maxima"}
    failed = [r["name"] for r in results if not r["pass"]]
    assert failed == []
