import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from tnqsim import gates
from tnqsim.errors import DimensionError, PreconditionError

from conftest import embed, rot_oracle


@pytest.mark.parametrize("name", gates.STANDARD_NAMES)
def test_standard_gates_unitary(name):
    u = gates.standard_gate(name)
    np.testing.assert_allclose(u @ u.conj().T, np.eye(u.shape[0]), atol=1e-12)


def test_standard_gate_examples():
    np.testing.assert_array_equal(gates.standard_gate("s"), [[1, 0], [0, 1j]])
    np.testing.assert_array_equal(gates.standard_gate("i"), np.eye(2))
    h = gates.standard_gate("h")
    np.testing.assert_allclose(h @ h, np.eye(2), atol=1e-15)
    with pytest.raises(PreconditionError):
        gates.standard_gate("rx")


def test_rotation_examples():
    np.testing.assert_allclose(gates.rotation_gate("x", 0), np.eye(2))
    np.testing.assert_allclose(gates.rotation_gate("x", 2 * np.pi), -np.eye(2), atol=1e-15)
    th = 0.7
    np.testing.assert_allclose(np.diag(gates.rz(th)), [np.exp(-0.5j * th), np.exp(0.5j * th)])


@settings(max_examples=40, deadline=None)
@given(st.sampled_from("xyz"), st.floats(-10, 10))
def test_rotations_match_expm(axis, theta):
    np.testing.assert_allclose(gates.rotation_gate(axis, theta), rot_oracle(axis, theta), atol=1e-12)


def test_exp1_examples():
    np.testing.assert_allclose(gates.exp1_gate(0.0, gates.ZZ), np.eye(4), atol=1e-15)
    np.testing.assert_allclose(gates.exp1_gate(np.pi / 2, gates.ZZ), 1j * np.diag([1, -1, -1, 1]),
                               atol=1e-15)
    for th in (0.1, 1.0, 3.0):
        np.testing.assert_allclose(gates.exp1_gate(th, gates.XX), gates.exp_gate(th, gates.XX),
                                   atol=1e-12)


def test_exp1_rejects_non_involution():
    with pytest.raises(PreconditionError):
        gates.exp1_gate(0.3, np.diag([2.0, 1.0]))


def test_exp_examples(rng):
    np.testing.assert_allclose(gates.exp_gate(0.2, np.diag([2.0, 1.0])),
                               np.diag([np.exp(0.4j), np.exp(0.2j)]), atol=1e-15)
    np.testing.assert_allclose(gates.exp_gate(0.0, gates.XX), np.eye(4), atol=1e-15)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    g = a + a.conj().T
    np.testing.assert_allclose(gates.exp_gate(0.8, g) @ gates.exp_gate(-0.8, g), np.eye(4), atol=1e-10)
    np.testing.assert_allclose(gates.exp_gate(0.8, g), expm(0.8j * g), atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=1, max_size=3), st.floats(-6, 6))
def test_exp1_equals_exp_on_pauli_strings(codes, theta):
    g = gates.pauli_string_matrix(codes)
    np.testing.assert_allclose(gates.exp1_gate(theta, g), gates.exp_gate(theta, g), atol=1e-12)


def projector_multicontrol(ctrl, u):
    """Brute force ``I + (|c><c| (x) (U - I))`` on controls then target."""
    m = len(ctrl)
    proj = np.ones((1, 1))
    for c in ctrl:
        p = np.zeros((2, 2))
        p[c, c] = 1
        proj = np.kron(proj, p)
    d = (1 << m) * u.shape[0]
    return np.eye(d) + np.kron(proj, u - np.eye(u.shape[0]))


def test_multicontrol_ccnot_variant():
    # controls q0 = 1 and q2 = 0, target X on q1 -> sites ordered (q0, q2, q1)
    mpo = gates.multicontrol_mpo([1, 0], gates.X)
    dense_sites = mpo.to_dense()
    n = 3
    full = embed(dense_sites, [0, 2, 1], n)
    for col in range(8):
        b0, b1, b2 = (col >> 2) & 1, (col >> 1) & 1, col & 1
        expect = col
        if b0 == 1 and b2 == 0:
            expect = col ^ 0b010
        assert abs(full[expect, col] - 1) < 1e-12


def test_multicontrol_single_control_is_cnot():
    np.testing.assert_allclose(gates.multicontrol_mpo([1], gates.X).to_dense(), gates.CNOT, atol=1e-12)


@pytest.mark.parametrize("ctrl", [[1], [0, 1], [1, 1, 0]])
def test_multicontrol_bond_dimension_and_projector(ctrl):
    mpo = gates.multicontrol_mpo(ctrl, gates.Y)
    assert max(mpo.bond_dimensions()) == 2
    np.testing.assert_allclose(mpo.to_dense(), projector_multicontrol(ctrl, gates.Y), atol=1e-12)


def test_multicontrol_errors():
    with pytest.raises(PreconditionError):
        gates.multicontrol_mpo([2], gates.X)
    with pytest.raises(DimensionError):
        gates.multicontrol_mpo([1], np.eye(3))
