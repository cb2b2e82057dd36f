import numpy as np
import pytest

from starmec.channels import (FadingParams, Geometry, db_to_linear, drop_users, make_rng,
                              path_loss, rician, synthesize, ula_response)
from starmec.model import ModelError, SystemParams


def test_path_loss_reference_values():
    fp = FadingParams()
    assert path_loss(1.0, 2.0, fp) == pytest.approx(1e-3)
    assert path_loss(1.0, 3.5, fp) == pytest.approx(1e-3)
    assert path_loss(10.0, 2.0, fp) == pytest.approx(1e-5)
    assert path_loss(100.0, 3.5, fp) == pytest.approx(1e-10)
    with pytest.raises(ModelError):
        path_loss(0.0, 2.0, fp)
    with pytest.raises(ModelError):
        path_loss(-3.0, 2.0, fp)


def test_db_conversion():
    assert db_to_linear(30) == pytest.approx(1000.0)
    assert db_to_linear(-90) == pytest.approx(1e-9)


def test_fading_validation():
    with pytest.raises(ModelError):
        FadingParams(alpha_ap_user=1.5)
    with pytest.raises(ModelError):
        FadingParams(kappa_ris_user=-1.0)


def test_ula_unit_modulus():
    a = ula_response(8, np.array([1.0, 2.0, 0.5]))
    np.testing.assert_allclose(np.abs(a), 1.0)
    assert a[0] == 1.0


def _setup(K=(4, 4), seed=3):
    params = SystemParams.default(10, *K)
    users = drop_users(*K, make_rng(seed, 9))
    return params, Geometry(user_positions=users)


def test_same_seed_identical():
    params, geom = _setup()
    a = synthesize(geom, FadingParams(), params, 20, 5)
    b = synthesize(geom, FadingParams(), params, 20, 5)
    for x, y in ((a.direct, b.direct), (a.user_to_ris, b.user_to_ris), (a.ris_to_ap, b.ris_to_ap)):
        assert x.tobytes() == y.tobytes()
    c = synthesize(geom, FadingParams(), params, 20, 6)
    assert not np.allclose(a.ris_to_ap, c.ris_to_ap)


def test_nested_in_elements_and_antennas():
    params, geom = _setup()
    fp = FadingParams()
    small = synthesize(geom, fp, params, 10, 5)
    big = synthesize(geom, fp, params, 30, 5)
    np.testing.assert_array_equal(small.user_to_ris, big.user_to_ris[:10])
    np.testing.assert_array_equal(small.ris_to_ap, big.ris_to_ap[:10])
    np.testing.assert_array_equal(small.direct, big.direct)
    p6 = SystemParams.default(6, 4, 4)
    six = synthesize(geom, fp, p6, 10, 5)
    np.testing.assert_array_equal(six.direct, small.direct[:6])
    np.testing.assert_array_equal(six.ris_to_ap, small.ris_to_ap[:, :6])


def test_rayleigh_variance_matches_path_loss():
    rng = make_rng(0)
    n = 10_000
    pl = 2.5e-7
    nlos = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
    h = rician(np.ones(n), nlos, 0.0, pl)
    assert np.mean(np.abs(h) ** 2) == pytest.approx(pl, rel=0.05)


def test_rician_normalisation_monte_carlo():
    rng = make_rng(1)
    n = 10_000
    los = np.exp(1j * rng.uniform(0, 2 * np.pi, n))
    nlos = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
    h = rician(los, nlos, 3.0, 1e-6)
    assert np.mean(np.abs(h) ** 2) == pytest.approx(1e-6, rel=0.05)


def test_rician_infinite_factor_is_los():
    los = np.exp(1j * np.arange(5))
    nlos = np.ones(5) * (3 + 4j)
    h = rician(los, nlos, np.inf, 4e-6)
    np.testing.assert_allclose(np.abs(h), 2e-3 * np.abs(los))


def test_los_limit_profile():
    params, geom = _setup()
    fp = FadingParams(kappa_ap_ris=np.inf, kappa_ap_user=np.inf, kappa_ris_user=np.inf)
    ch = synthesize(geom, fp, params, 8, 1)
    d = np.linalg.norm(np.asarray(geom.ris_pos) - np.asarray(geom.ap_pos))
    np.testing.assert_allclose(np.abs(ch.ris_to_ap), np.sqrt(path_loss(d, 2.0, fp)), rtol=1e-12)
    for k in range(8):
        dk = np.linalg.norm(geom.user_positions[k] - np.asarray(geom.ap_pos))
        np.testing.assert_allclose(np.abs(ch.direct[:, k]), np.sqrt(path_loss(dk, 3.5, fp)),
                                   rtol=1e-12)


def test_users_inside_squares():
    pos = drop_users(50, 40, make_rng(2))
    tx, rx = pos[:50], pos[50:]
    assert np.all(np.abs(tx[:, 0] - 45) <= 25) and np.all(np.abs(tx[:, 1]) <= 25)
    assert np.all(np.abs(rx[:, 0] - 95) <= 25) and np.all(np.abs(rx[:, 1]) <= 25)
    assert np.all(pos[:, 2] == 0)


def test_synthesize_shapes_and_labels():
    params, geom = _setup((3, 2))
    ch = synthesize(geom, FadingParams(), params, 6, 0)
    assert ch.direct.shape == (10, 5) and ch.user_to_ris.shape == (6, 5)
    assert ch.ris_to_ap.shape == (6, 10)
    assert list(ch.is_reflection) == [False] * 3 + [True] * 2


def test_synthesize_rejects_user_count_mismatch():
    params, geom = _setup((3, 2))
    with pytest.raises(ModelError):
        synthesize(geom, FadingParams(), SystemParams.default(10, 4, 4), 6, 0)


def test_geometry_rejects_non_finite():
    with pytest.raises(ModelError):
        Geometry(user_positions=np.array([[np.nan, 0.0, 0.0]]))
