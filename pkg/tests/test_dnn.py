import json

import numpy as np
import pytest

from composite_adaptive import dnn
from composite_adaptive.tensor_ops import kron, vec

NET = dnn.DnnSpec.uniform(4, 5, 5, 2)
SCALAR = dnn.DnnSpec.uniform(1, 1, 1, 1)


def fd_jacobian(spec, theta, sigma, h=1e-6):
    cols = []
    for i in range(theta.size):
        d = np.zeros_like(theta)
        d[i] = h
        cols.append((dnn.forward(spec, theta + d, sigma) - dnn.forward(spec, theta - d, sigma)) / (2 * h))
    return np.array(cols).T


def kron_jacobian(spec, theta, sigma):
    """Right-to-left products over layers using (I kron a^T) explicitly."""
    mats = dnn.unpack(spec, theta)
    acts, pres = [np.append(sigma, 1.0)], []
    for v in mats[:-1]:
        z = v.T @ acts[-1]
        pres.append(z)
        acts.append(np.append(np.tanh(z), 1.0))
    blocks = []
    for j, v in enumerate(mats):
        left = np.eye(spec.output_size)
        for l in range(len(mats) - 1, j, -1):
            dphi = np.vstack([np.diag(1 - np.tanh(pres[l - 1]) ** 2), np.zeros((1, len(pres[l - 1])))])
            left = left @ mats[l].T @ dphi
        blocks.append(left @ kron(np.eye(v.shape[1]), acts[j][None, :]))
    return np.hstack(blocks)


@pytest.mark.parametrize(
    "spec, p",
    [(NET, 157), (SCALAR, 4), (dnn.DnnSpec.uniform(2, 2, 3, 2), 29)],
)
def test_param_count(spec, p):
    assert dnn.param_count(spec) == p
    assert dnn.layer_offsets(spec)[-1] == p


def test_zero_weights_give_zero_output():
    assert np.all(dnn.forward(NET, np.zeros(157), np.array([0.3, -1.0, 2.0, 0.1])) == 0)


def test_scalar_hand_value():
    theta = np.array([1.0, 0.0, 1.0, 0.0])
    assert dnn.forward(SCALAR, theta, [0.5])[0] == pytest.approx(np.tanh(0.5), abs=1e-15)
    jac = dnn.jacobian(SCALAR, theta, [0.5])
    # column 2 is the hidden-to-output weight
    assert jac[0, 2] == pytest.approx(np.tanh(0.5), abs=1e-15)
    assert jac[0, 3] == pytest.approx(1.0)


def test_zero_weights_jacobian_structure():
    jac = dnn.jacobian(NET, np.zeros(157), np.array([0.1, 0.2, 0.3, 0.4]))
    blocks = dnn.jacobian_blocks(NET, jac)
    for b in blocks[:-1]:
        assert np.all(b == 0)
    np.testing.assert_array_equal(blocks[-1], np.kron(np.eye(2), [[0, 0, 0, 0, 0, 1.0]]))


def test_output_bound():
    rng = np.random.default_rng(7)
    theta = dnn.init_weights(NET, rng)
    out = dnn.forward(NET, theta, rng.normal(size=4))
    v_last = dnn.unpack(NET, theta)[-1]
    # hidden activations are in (-1, 1) and the bias entry is 1
    assert np.all(np.abs(out) <= np.abs(v_last).sum(axis=0))


def test_init_weights_range_and_determinism():
    a = dnn.init_weights(NET, np.random.default_rng(3))
    b = dnn.init_weights(NET, np.random.default_rng(3))
    assert a.shape == (157,) and np.all(np.abs(a) <= 0.5)
    np.testing.assert_array_equal(a, b)


def test_linear_in_final_layer():
    rng = np.random.default_rng(4)
    theta = dnn.init_weights(NET, rng)
    sigma = rng.normal(size=4)
    off = dnn.layer_offsets(NET)[-2]
    scaled = theta.copy()
    scaled[off:] *= 3.0
    np.testing.assert_allclose(dnn.forward(NET, scaled, sigma), 3.0 * dnn.forward(NET, theta, sigma), rtol=1e-14)


def test_jacobian_matches_kron_reference():
    rng = np.random.default_rng(5)
    for _ in range(5):
        theta = dnn.init_weights(NET, rng)
        sigma = rng.uniform(-1, 1, 4)
        np.testing.assert_allclose(dnn.jacobian(NET, theta, sigma), kron_jacobian(NET, theta, sigma), atol=1e-13)


@pytest.mark.parametrize("layers", [1, 2, 4, 6])
def test_jacobian_matches_finite_differences(layers):
    rng = np.random.default_rng(layers)
    spec = dnn.DnnSpec(3, tuple(int(w) for w in rng.integers(2, 6, layers)), 2)
    theta = dnn.init_weights(spec, rng)
    sigma = rng.normal(size=3)
    jac = dnn.jacobian(spec, theta, sigma)
    assert jac.shape == (2, dnn.param_count(spec))
    assert np.abs(jac - fd_jacobian(spec, theta, sigma)).max() < 1e-6


def test_sigmoid_jacobian():
    spec = dnn.DnnSpec(2, (3, 3), 1, activation="sigmoid")
    rng = np.random.default_rng(9)
    theta, sigma = dnn.init_weights(spec, rng), rng.normal(size=2)
    assert np.abs(dnn.jacobian(spec, theta, sigma) - fd_jacobian(spec, theta, sigma)).max() < 1e-6


def test_forward_and_jacobian_consistent():
    rng = np.random.default_rng(6)
    theta, sigma = dnn.init_weights(NET, rng), rng.normal(size=4)
    out, jac = dnn.forward_and_jacobian(NET, theta, sigma)
    np.testing.assert_array_equal(out, dnn.forward(NET, theta, sigma))
    np.testing.assert_array_equal(jac, dnn.jacobian(NET, theta, sigma))


def test_unpack_is_column_stacked():
    theta = np.arange(157.0)
    mats = dnn.unpack(NET, theta)
    assert [m.shape for m in mats] == [(5, 5), (6, 5), (6, 5), (6, 5), (6, 5), (6, 2)]
    np.testing.assert_array_equal(vec(mats[0]), theta[:25])


@pytest.mark.parametrize(
    "theta, sigma",
    [(np.zeros(156), np.zeros(4)), (np.zeros(157), np.zeros(3)), (np.full(157, np.nan), np.zeros(4)),
     (np.zeros(157), np.array([0, np.inf, 0, 0]))],
)
def test_bad_inputs_raise(theta, sigma):
    with pytest.raises(ValueError):
        dnn.forward(NET, theta, sigma)


def test_bad_spec_raises():
    with pytest.raises(ValueError):
        dnn.DnnSpec(0, (5,), 2)
    with pytest.raises(ValueError):
        dnn.DnnSpec(4, (5,), 2, activation="relu")


def test_taylor_residual_zero_and_quadratic():
    rng = np.random.default_rng(8)
    theta, sigma = dnn.init_weights(NET, rng), rng.normal(size=4)
    assert dnn.taylor_residual(NET, theta, theta, sigma) == 0.0
    d = rng.normal(size=157)
    d /= np.linalg.norm(d)
    r1 = dnn.taylor_residual(NET, theta + 1e-2 * d, theta, sigma)
    r2 = dnn.taylor_residual(NET, theta + 5e-3 * d, theta, sigma)
    assert 3.5 <= r1 / r2 <= 4.5


@pytest.mark.parametrize("suffix", [".json", ".csv"])
def test_weights_round_trip(tmp_path, suffix):
    theta = dnn.init_weights(NET, np.random.default_rng(11))
    path = tmp_path / f"w{suffix}"
    dnn.save_weights(path, NET, theta)
    spec, back = dnn.load_weights(path, NET)
    assert spec == NET
    np.testing.assert_array_equal(back, theta)


def test_weights_json_layout(tmp_path):
    path = tmp_path / "w.json"
    dnn.save_weights(path, NET, np.zeros(157))
    doc = json.loads(path.read_text())
    assert doc["layer_shapes"][0] == [5, 5] and len(doc["theta"]) == 157


def test_load_weights_wrong_length(tmp_path):
    path = tmp_path / "w.json"
    path.write_text(json.dumps({"theta": [0.0] * 10}))
    with pytest.raises(ValueError):
        dnn.load_weights(path, NET)


def test_spec_dict_round_trip():
    assert dnn.DnnSpec.from_dict(NET.to_dict()) == NET
