import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tnqsim import gates
from tnqsim.channels import amplitude_damping
from tnqsim.circuit import Circuit, GateSpec
from tnqsim.errors import SchemaError
from tnqsim.ir import circuit_from_ir, circuit_to_ir, dumps
from tnqsim.quop import Node, QuVector


def test_empty_circuit():
    doc = circuit_to_ir(Circuit(3))
    assert doc["n"] == 3 and doc["ops"] == []


def test_fig2_round_trip():
    c = Circuit(2)
    c.h(0)
    c.cnot(0, 1)
    c.rx(1, theta=0.2)
    back = Circuit.from_ir(json.loads(dumps(c)))
    assert back.state().tobytes() == c.state().tobytes()


def test_round_trip_all_kinds():
    c = Circuit(3, inputs=np.ones(8) / np.sqrt(8), split={"max_singular_values": 4})
    c.exp1(0, 1, theta=0.3, unitary=gates.ZZ)
    c.unitary(2, unitary=np.array([[1, 2], [2, 3]]))
    c.general_kraus(amplitude_damping(0.3), 1, status=0.7)
    c.unitary_kraus([GateSpec("rx", {"theta": 0.4}), gates.Y], 0, probs=[0.5, 0.5], status=0.8)
    b = c.cond_measure(2, status=0.1)
    c.conditional_gate(b, [gates.I2, gates.X], 0)
    c.post_select(1, keep=0)
    c.multicontrol(0, 2, 1, ctrl=[1, 0], unitary=gates.X)
    back = circuit_from_ir(dumps(c))
    np.testing.assert_allclose(back.state(), c.state(), atol=1e-14)
    assert circuit_to_ir(back) == circuit_to_ir(c)


def test_mps_input_round_trip():
    nodes = [Node(np.array([0.0, 1.0])) for _ in range(3)]
    c = Circuit(3, mps_inputs=QuVector([nd[0] for nd in nodes]))
    c.x(0)
    np.testing.assert_allclose(circuit_from_ir(circuit_to_ir(c)).state(), c.state())


@pytest.mark.parametrize("doc, path", [
    ({"n": 2, "ops": [{"kind": "gate", "name": "nope", "qubits": [0]}]}, "ops[0].name"),
    ({"n": 2, "ops": [{"kind": "gate", "name": "h", "qubits": [0]},
                      {"kind": "gate", "name": "h", "qubits": [5]}]}, "ops[1].qubits[0]"),
    ({"n": 2, "ops": [{"kind": "teleport", "qubits": [0]}]}, "ops[0].kind"),
    ({"ops": []}, "$"),
])
def test_schema_errors_name_the_field(doc, path):
    doc = dict(doc, version="1")
    with pytest.raises(SchemaError) as err:
        circuit_from_ir(doc)
    assert err.value.path == path


def test_invalid_json_text():
    with pytest.raises(SchemaError):
        circuit_from_ir("{not json")


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(["h", "x", "rx", "rz", "cnot", "cz"]),
                          st.floats(-4, 4)), max_size=10))
def test_round_trip_random(ops):
    c = Circuit(3)
    for i, (name, th) in enumerate(ops):
        if name in ("cnot", "cz"):
            c.apply_gate(name, i % 3, (i + 1) % 3)
        elif name in ("rx", "rz"):
            c.apply_gate(name, i % 3, theta=th)
        else:
            c.apply_gate(name, i % 3)
    assert circuit_from_ir(dumps(c)).state().tobytes() == c.state().tobytes()


def test_short_kraus_form():
    doc = {"version": "1", "n": 1,
           "ops": [{"kind": "gate", "name": "x", "qubits": [0]},
                   {"kind": "kraus", "channel": "amplitude_damping", "qubits": [0],
                    "params": {"gamma": 0.3}, "status": 0.42}]}
    c = Circuit.from_ir(doc)
    assert c.ops[-1].name == "amplitude_damping"
    assert c.to_ir()["ops"][-1]["kind"] == "kraus_general"
    # weights 0.7 (stay in |1>) and 0.3 (decay); 0.42 falls in the first interval
    assert abs(c.state()[1]) == pytest.approx(1.0)
