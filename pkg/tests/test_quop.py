import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tnqsim import gates
from tnqsim.circuit import Circuit
from tnqsim.errors import DimensionError
from tnqsim.quop import (
    MPOOperator,
    Node,
    QuOperator,
    QuVector,
    mpo_from_dense,
    mps_vector,
    reduced_density_matrix,
)

from conftest import embed, random_state


def random_mpo(r, n, bond):
    sites = []
    for k in range(n):
        bl = 1 if k == 0 else bond
        br = 1 if k == n - 1 else bond
        sites.append(r.normal(size=(bl, 2, 2, br)) + 1j * r.normal(size=(bl, 2, 2, br)))
    return MPOOperator(sites)


def mpo_dense_oracle(sites):
    """Explicit sum over bond indices of Kronecker products of site matrices."""
    n = len(sites)
    dims = [s.shape[3] for s in sites[:-1]]
    out = 0
    for bonds in itertools.product(*[range(d) for d in dims]):
        b = (0,) + bonds + (0,)
        m = np.ones((1, 1))
        for k, w in enumerate(sites):
            m = np.kron(m, w[b[k], :, :, b[k + 1]])
        out = out + m
    return out


def test_worked_network_all_sixteen():
    n1 = Node(np.ones([2, 2, 2]))
    n2 = Node(np.ones([2, 2, 2]))
    n3 = Node(np.ones([2, 2]))
    n1[2] ^ n2[2]
    n2[1] ^ n3[0]
    matrix = QuOperator(out_edges=[n1[0], n2[0]], in_edges=[n1[1], n3[1]])
    n4 = Node(np.ones([2]))
    n5 = Node(np.ones([2]))
    vector = QuVector([n4[0], n5[0]])
    nvector = matrix @ vector
    assert isinstance(nvector, QuVector)
    np.testing.assert_array_equal(nvector.eval_matrix(), [[16], [16], [16], [16]])


def test_identity_and_scalar(rng):
    v = QuOperator.from_tensor(rng.normal(size=(2, 2)), 2)
    assert isinstance(v, QuVector)
    ident = QuOperator.identity([2, 2])
    np.testing.assert_allclose((ident @ v).eval(), v.eval())
    np.testing.assert_allclose((5 * v).eval(), 5 * v.eval())
    np.testing.assert_array_equal(QuOperator.identity([2, 3]).eval_matrix(), np.eye(6))


def test_adjoint_involution(rng):
    a = random_mpo(rng, 3, 2)
    np.testing.assert_allclose(a.adjoint().adjoint().eval_matrix(), a.eval_matrix())
    np.testing.assert_allclose(a.adjoint().eval_matrix(), a.eval_matrix().conj().T, atol=1e-12)


def test_partial_trace_product(rng):
    ra = rng.normal(size=(2, 2))
    rb = rng.normal(size=(4, 4))
    a = QuOperator.from_tensor(ra, 1)
    b = QuOperator.from_tensor(rb.reshape(2, 2, 2, 2), 2)
    prod = a | b
    np.testing.assert_allclose(prod.partial_trace([0]).eval_matrix(), np.trace(ra) * rb, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 4), st.integers(1, 3))
def test_densification_homomorphism(seed, n, bond):
    r = np.random.default_rng(seed)
    a, b = random_mpo(r, n, bond), random_mpo(r, n, bond)
    da, db = a.eval_matrix(), b.eval_matrix()
    np.testing.assert_allclose((a @ b).eval_matrix(), da @ db, atol=1e-10 * np.abs(da @ db).max())
    np.testing.assert_allclose(a.adjoint().eval_matrix(), da.conj().T, atol=1e-12)
    if n <= 2:
        np.testing.assert_allclose((a | b).eval_matrix(), np.kron(da, db), atol=1e-10 * np.abs(da).max() * np.abs(db).max())
    np.testing.assert_allclose(da, mpo_dense_oracle(a.site_tensors), atol=1e-10 * np.abs(da).max())


def test_laziness(rng):
    a, b = random_mpo(rng, 3, 2), random_mpo(rng, 3, 2)
    assert (a @ b).node_count == a.node_count + b.node_count
    assert (a | b).node_count == a.node_count + b.node_count
    assert a.adjoint().node_count == a.node_count


def test_mps_matches_tensor_train(rng):
    shapes = [(1, 2, 3), (3, 2, 3), (3, 2, 3), (3, 2, 1)]
    sites = [rng.normal(size=s) + 1j * rng.normal(size=s) for s in shapes]
    v = mps_vector(sites)
    ref = np.zeros(16, dtype=np.complex128)
    for idx in itertools.product(range(2), repeat=4):
        m = np.ones((1, 1))
        for k, i in enumerate(idx):
            m = m @ sites[k][:, i, :]
        ref[int("".join(map(str, idx)), 2)] = m[0, 0]
    np.testing.assert_allclose(v.eval().reshape(-1), ref, atol=1e-12)


def test_mps_storage_accounting():
    for n, d in ((6, 2), (10, 4)):
        sites = [np.ones((1 if k == 0 else d, 2, 1 if k == n - 1 else d)) for k in range(n)]
        v = mps_vector(sites)
        assert v.element_count() == 2 * (2 * d + (n - 2) * d * d)


def test_circuit_mps_input_and_quvector():
    nodes = [Node(np.array([0.0, 1.0])) for _ in range(3)]
    c = Circuit(3, mps_inputs=QuVector([nd[0] for nd in nodes]))
    c.x(0)
    assert abs(c.expectation_ps(z=[0]) - 1) < 1e-12
    psi = random_state(np.random.default_rng(1), 3)
    np.testing.assert_allclose(Circuit(3, inputs=psi).quvector().eval().reshape(-1), psi, atol=1e-15)
    g = Circuit(4)
    g.h(0)
    for q in range(3):
        g.cnot(q, q + 1)
    ref = np.zeros(16)
    ref[0] = ref[-1] = 2 ** -0.5
    np.testing.assert_allclose(g.quvector().eval().reshape(-1), ref, atol=1e-15)


def test_mpo_gate_application(rng):
    c = Circuit(3, inputs=np.eye(8)[0b100])  # q0 = 1, q1 = 0, q2 = 0
    c.multicontrol(0, 2, 1, ctrl=[1, 0], unitary=gates.X)
    np.testing.assert_allclose(c.state(), np.eye(8)[0b110], atol=1e-14)
    c = Circuit(1)
    c.mpo(0, mpo=MPOOperator([gates.X.reshape(1, 2, 2, 1)]))
    np.testing.assert_allclose(c.state(), [0, 1], atol=1e-15)
    mpo = random_mpo(rng, 3, 2)
    psi = random_state(rng, 3)
    c = Circuit(3, inputs=psi)
    c.mpo(0, 1, 2, mpo=mpo)
    np.testing.assert_allclose(c.state(), mpo.eval_matrix() @ psi, atol=1e-12)
    c = Circuit(3, inputs=psi)
    c.mpo(2, 0, 1, mpo=mpo)
    np.testing.assert_allclose(c.state(), embed(mpo.eval_matrix(), [2, 0, 1], 3) @ psi, atol=1e-12)


def test_mpo_from_dense_round_trip(rng):
    m = rng.normal(size=(8, 8))
    np.testing.assert_allclose(mpo_from_dense(m, 3).to_dense(), m, atol=1e-12)
    with pytest.raises(DimensionError):
        mpo_from_dense(np.eye(6), 3)


def test_reduced_density_matrix(rng):
    np.testing.assert_allclose(reduced_density_matrix(np.array([1, 0, 0, 1]) / np.sqrt(2), [0]),
                               np.eye(2) / 2, atol=1e-15)
    np.testing.assert_allclose(reduced_density_matrix(np.eye(4)[0b01], [0]), np.diag([0, 1]))
    rho = reduced_density_matrix(random_state(rng, 3), [1])
    assert np.linalg.eigvalsh(rho).min() > -1e-12
    assert abs(np.trace(rho) - 1) < 1e-12


def test_matmul_dimension_mismatch():
    with pytest.raises(DimensionError):
        QuOperator.identity([2]) @ QuOperator.identity([2, 2])
