import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dense_unitary
from paramchar import qcore
from paramchar.errors import InvalidArgumentError
from paramchar.simulator import (
    CircuitSpec,
    Gate,
    NoiseProfile,
    apply_readout_noise,
    circuit_unitary,
    execute_batch,
    final_state,
    ideal_distribution,
    local_transition,
    noisy_distribution,
    readout_matrix,
    rotation,
    rotation_gate,
    run_noisy,
    sample_counts,
    unitary_gate,
    validate_transition,
)


def random_circuit(seed, n, depth=6):
    rng = np.random.default_rng(seed)
    gates = []
    for _ in range(depth):
        kind = rng.integers(4)
        q = int(rng.integers(n))
        if kind == 0 and n > 1:
            t = int((q + 1 + rng.integers(n - 1)) % n)
            gates.append(Gate("CX", (q, t)))
        elif kind == 1:
            gates.append(rotation(rng.choice(["X", "Y"]), rng.uniform(-math.pi, math.pi), q))
        else:
            gates.append(Gate(str(rng.choice(["H", "S", "X", "Y", "Z"])), (q,)))
    return gates


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 3))
def test_state_vector_matches_dense_oracle(seed, n):
    gates = random_circuit(seed, n)
    U = circuit_unitary(CircuitSpec(n, gates))
    np.testing.assert_allclose(U, dense_unitary(gates, n), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.floats(-0.3, 0.3))
def test_offset_applies_to_swept_rotations_only(seed, theta0):
    n = 2
    gates = random_circuit(seed, n) + [rotation("Y", 0.4, 1), rotation("X", -0.7, 0, swept=False)]
    noise = NoiseProfile.uniform(n, prep_phase=theta0)
    offsets = {(q, a): theta0 for q in range(n) for a in "XY"}
    expected = dense_unitary(gates, n, offsets)[:, 0]
    np.testing.assert_allclose(final_state(CircuitSpec(n, gates), noise), expected, atol=1e-12)


def test_rotation_conventions():
    # RY(pi)|0> = |1>, RX(pi/2)|0> = (|0> - i|1>)/sqrt2
    np.testing.assert_allclose(rotation_gate("Y", math.pi, 0, 1) @ [1, 0], [0, 1], atol=1e-15)
    np.testing.assert_allclose(rotation_gate("X", math.pi / 2, 0, 1) @ [1, 0], np.array([1, -1j]) / math.sqrt(2))


def test_cx_on_reversed_qubits():
    U = circuit_unitary(CircuitSpec(2, [Gate("CX", (1, 0))]))
    # control qubit 1 flips qubit 0: |01> -> |11>
    assert abs(U[3, 1]) == pytest.approx(1.0)


def test_unitary_gate_and_initial_state():
    V = qcore.random_unitary(4, np.random.default_rng(1))
    c = CircuitSpec(2, [unitary_gate(V, (0, 1))], initial=2)
    np.testing.assert_allclose(final_state(c), V[:, 2])


@pytest.mark.parametrize("bad", [
    lambda: CircuitSpec(2, [Gate("H", (2,))]),
    lambda: CircuitSpec(2, [Gate("CX", (1, 1))]),
    lambda: CircuitSpec(1, [], initial=2),
    lambda: CircuitSpec(1, [rotation("Y", float("nan"), 0)]),
    lambda: rotation_gate("Z", 0.1, 0, 1),
    lambda: NoiseProfile(np.eye(2), {(0, "Y"): 4.0}),
    lambda: validate_transition([[0.9, 0.2], [0.2, 0.8]]),
])
def test_invalid_inputs(bad):
    with pytest.raises(InvalidArgumentError):
        bad()


def test_readout_noise_is_matrix_vector():
    T = local_transition([readout_matrix(0.9, 0.8), readout_matrix(0.95, 0.85)])
    assert np.allclose(T.sum(axis=0), 1)
    p = np.array([0.1, 0.2, 0.3, 0.4])
    np.testing.assert_allclose(apply_readout_noise(p, T), T @ p)


def test_noisy_distribution_of_x_gate():
    noise = NoiseProfile(readout_matrix(0.9, 0.8))
    q = noisy_distribution(CircuitSpec(1, [Gate("X", (0,))]), noise)
    np.testing.assert_allclose(q, [0.2, 0.8])
    np.testing.assert_allclose(ideal_distribution(CircuitSpec(1, [Gate("H", (0,))])), [0.5, 0.5])


def test_sampling_is_seeded():
    p = np.array([0.25, 0.75])
    a, b = sample_counts(p, 1000, 7), sample_counts(p, 1000, 7)
    assert np.array_equal(a, b) and a.sum() == 1000
    with pytest.raises(InvalidArgumentError):
        sample_counts(p, 0, 1)
    c = CircuitSpec(1, [Gate("H", (0,))])
    assert np.array_equal(run_noisy(c, NoiseProfile.ideal(1, seed=3), 100),
                          run_noisy(c, NoiseProfile.ideal(1, seed=3), 100))
    np.testing.assert_allclose(run_noisy(c, NoiseProfile.ideal(1), exact=True), [0.5, 0.5])


def test_batch_independent_of_worker_count():
    circuits = [CircuitSpec(2, random_circuit(s, 2)) for s in range(12)]
    noise = NoiseProfile.uniform(2, local_transition([readout_matrix(0.9, 0.8)] * 2), 0.05)
    serial = execute_batch(circuits, noise, 500, seed=42, stream=1)
    threaded = execute_batch(circuits, noise, 500, seed=42, stream=1, max_workers=4)
    assert np.array_equal(serial, threaded)
    assert serial.dtype.kind == "i" and np.all(serial.sum(axis=1) == 500)
    other = execute_batch(circuits, noise, 500, seed=42, stream=2)
    assert not np.array_equal(serial, other)


def test_batch_sample_mean_converges_to_exact():
    circuits = [CircuitSpec(1, [rotation("Y", t, 0)]) for t in np.linspace(-3, 3, 7)]
    noise = NoiseProfile.ideal(1)
    exact = execute_batch(circuits, noise, exact=True)
    counts = execute_batch(circuits, noise, 200_000, seed=0)
    assert np.max(np.abs(counts / 200_000 - exact)) < 5e-3
