import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tnqsim import gates
from tnqsim.channels import (
    DMCircuit,
    KrausChannel,
    amplitude_damping,
    depolarizing,
    dm_expectation,
    make_channel,
    mc_general_kraus,
    mc_unitary_kraus,
    phase_damping,
    reset,
)
from tnqsim.circuit import Circuit, GateSpec
from tnqsim.errors import PreconditionError
from tnqsim.rng import StatusSource

GRID = [0.0, 0.25, 0.5, 0.75, 1.0]


def all_channels():
    out = [reset()]
    for g in GRID:
        out += [amplitude_damping(g), phase_damping(g)]
    for px, py, pz in itertools.product(GRID, repeat=3):
        if px + py + pz <= 1:
            out.append(depolarizing(px, py, pz))
    return out


@pytest.mark.parametrize("ch", all_channels(), ids=lambda c: f"{c.name}{c.params}")
def test_builtin_channels_cptp(ch):
    acc = sum(k.conj().T @ k for k in ch.operators)
    np.testing.assert_allclose(acc, np.eye(2), atol=1e-10)
    assert ch.is_cptp()


def test_invalid_parameters():
    with pytest.raises(PreconditionError):
        amplitude_damping(1.2)
    with pytest.raises(PreconditionError):
        depolarizing(0.5, 0.5, 0.5)
    with pytest.raises(PreconditionError):
        make_channel("bitflip", {})


def test_phase_damping_zero_is_identity():
    ch = phase_damping(0.0)
    rho = np.array([[0.3, 0.2j], [-0.2j, 0.7]])
    np.testing.assert_allclose(ch.apply_to_density(rho), rho, atol=1e-15)


def test_amplitude_damping_on_one():
    out = amplitude_damping(0.3).apply_to_density(np.diag([0.0, 1.0]))
    np.testing.assert_allclose(out, np.diag([0.3, 0.7]), atol=1e-15)


def test_worked_density_evolution():
    d = DMCircuit(1, dminputs=np.diag([0.8, 0.2]))
    d.x(0)
    d.apply_kraus(amplitude_damping(0.3), [0])
    np.testing.assert_allclose(d.state(), np.diag([0.44, 0.56]), atol=1e-14)
    assert abs(dm_expectation(d, (gates.Z, [0])) + 0.12) < 1e-14


def test_identity_channel_and_mixed_state():
    rho = np.array([[0.6, 0.1], [0.1, 0.4]])
    d = DMCircuit(1, dminputs=rho)
    d.apply_kraus(KrausChannel((np.eye(2),)), [0])
    np.testing.assert_allclose(d.state(), rho)
    d = DMCircuit(1, dminputs=np.eye(2) / 2)
    for p in (gates.X, gates.Y, gates.Z):
        assert abs(d.expectation((p, [0]))) < 1e-15


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_density_stays_physical(seed):
    r = np.random.default_rng(seed)
    chans = all_channels()
    d = DMCircuit(2)
    for _ in range(6):
        if r.uniform() < 0.5:
            d.apply_gate(str(r.choice(["h", "x", "s"])), int(r.integers(2)))
            d.cnot(0, 1)
        else:
            d.apply_kraus(chans[int(r.integers(len(chans)))], [int(r.integers(2))])
    rho = d.state()
    assert abs(np.trace(rho) - 1) < 1e-10
    np.testing.assert_allclose(rho, rho.conj().T, atol=1e-10)
    assert np.linalg.eigvalsh(rho).min() > -1e-10


def test_mc_identity_channel():
    c = Circuit(1)
    c.h(0)
    before = c.state()
    assert mc_general_kraus(c, KrausChannel((np.eye(2),)), [0], 0.999) == 0
    np.testing.assert_allclose(c.state(), before, atol=1e-15)


def test_mc_phase_damping_branch_boundary():
    for s, expect in ((0.1, 0), (0.74, 0), (0.76, 1)):
        c = Circuit(1, inputs=np.array([1, 1]) / np.sqrt(2))
        assert mc_general_kraus(c, phase_damping(0.5), [0], s) == expect


def test_mc_branch_is_pure_function():
    a = Circuit(1, inputs=[0.6, 0.8])
    b = Circuit(1, inputs=[0.6, 0.8])
    assert a.general_kraus(depolarizing(0.1, 0.2, 0.3), 0, status=0.37) == \
        b.general_kraus(depolarizing(0.1, 0.2, 0.3), 0, status=0.37)
    assert a.state().tobytes() == b.state().tobytes()


def test_mc_depolarizing_matches_dm():
    ch = depolarizing(0.1, 0.2, 0.3)
    src = StatusSource(2024)
    n_traj = 10_000
    vals = np.empty(n_traj)
    for i in range(n_traj):
        c = Circuit(1, inputs=np.array([1, 1]) / np.sqrt(2))
        c.general_kraus(ch, 0, status=src.uniform())
        vals[i] = c.expectation_ps(x=[0]).real
    d = DMCircuit(1, inputs=np.array([1, 1]) / np.sqrt(2))
    d.apply_kraus(ch, [0])
    ref = d.expectation_ps(x=[0]).real
    assert abs(vals.mean() - ref) <= 3 * vals.std(ddof=1) / np.sqrt(n_traj)


def test_mc_unitary_kraus_selection():
    ops = [GateSpec("rx", {"theta": 0.3}), GateSpec("ry", {"theta": 0.3}), GateSpec("rz", {"theta": 0.3})]
    c = Circuit(1)
    assert mc_unitary_kraus(c, [gates.X, gates.Y], [1.0, 0.0], [0], 0.99) == 0
    assert mc_unitary_kraus(c, ops, [1 / 3] * 3, [0], 0.5) == 1
    src = StatusSource(9)
    counts = np.zeros(3)
    for _ in range(3000):
        c = Circuit(1)
        counts[c.unitary_kraus(ops, 0, probs=[1 / 3] * 3, rng=src)] += 1
    assert np.all((counts / 3000 >= 0.28) & (counts / 3000 <= 0.39))


def test_status_must_be_in_unit_interval():
    c = Circuit(1)
    with pytest.raises(PreconditionError):
        c.general_kraus(phase_damping(0.2), 0, status=1.5)


def test_incremental_resolution_matches_fresh(rng):
    c = Circuit(3)
    branches = []
    for layer in range(4):
        for q in range(3):
            c.ry(q, theta=rng.uniform(0, np.pi))
        c.cnot(layer % 3, (layer + 1) % 3)
        branches.append(c.general_kraus(amplitude_damping(0.3), layer % 3, status=rng.uniform()))
        c.cond_measure(2, status=rng.uniform())
    fresh = c.copy()
    np.testing.assert_array_equal(c.state(), fresh.state())
    assert [op.branch for op in fresh.linear_ops() if op.kind == "kraus"] == branches


def test_status_one_skips_empty_branches():
    c = Circuit(1)
    assert c.general_kraus(amplitude_damping(0.3), 0, status=1.0) == 0
    np.testing.assert_allclose(c.state(), [1, 0])
    c = Circuit(1)
    assert c.unitary_kraus([gates.X, gates.Z], 0, probs=[1.0, 0.0], status=1.0) == 0
