import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qcsi_lab import hvm, oracle
from qcsi_lab.gates import Gate
from qcsi_lab.hvm import (
    DomainError,
    HVMDistribution,
    ImpossibleOutcomeError,
    ValueAssignment,
    assignment_value,
    exact_measure_update,
    hvm_expectation,
)
from qcsi_lab.pauli import BitString2n, PauliObservable, parse_pauli, symplectic_form
from qcsi_lab.scheme import SchemeSpec, local_scheme


def idx(s):
    return parse_pauli(s).label.index


def born_chain(n, labels, outcomes):
    """Joint probability of an outcome string from I/2^n by dense projection."""
    state = oracle.maximally_mixed(n)
    total = 1.0
    for a, o in zip(labels, outcomes):
        p = PauliObservable(BitString2n.from_index(n, a))
        prob, state = oracle.project_pauli(state, p, o)
        total *= prob
        if state is None:
            return 0.0
    return total


def single_qubit_labels(n):
    return [PauliObservable.single(n, q, k).label.index for q in range(n) for k in "XYZ"]


class TestAssignment:
    def test_examples(self):
        lam = ValueAssignment.local(1)
        x, z = idx("X"), idx("Z")
        assert assignment_value(lam, 0, x) == 1
        assert assignment_value(lam, z, x) == -1  # [Z, X] = 1
        assert assignment_value(lam, x, x) == 1
        assert assignment_value(lam, idx("Y"), z) == -1

    def test_matches_symplectic_form(self):
        n = 2
        lam = ValueAssignment.local(n)
        for nu, a in itertools.product(range(16), repeat=2):
            want = (-1) ** symplectic_form(BitString2n.from_index(n, nu), BitString2n.from_index(n, a))
            assert assignment_value(lam, nu, a) == want

    def test_domain(self):
        lam = ValueAssignment(2, {0: 1, idx("XI"): 1}, frozenset({idx("XI")}))
        with pytest.raises(DomainError):
            lam.base_value(idx("ZZ"))
        assert not lam.is_measurable(idx("ZI"))
        with pytest.raises(DomainError):
            ValueAssignment.local(1).base_value(7)


class TestExpectation:
    def test_point_mass(self):
        lam = ValueAssignment.local(1)
        q = HVMDistribution.point(1, idx("Z"))
        assert hvm_expectation(q, lam, idx("X")) == -1
        assert hvm_expectation(q, lam, idx("Z")) == 1
        assert hvm_expectation(q, lam, idx("X"), alpha=-1) == 1

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_local_model_is_maximally_mixed(self, n):
        q, lam = hvm.local_scheme_hvm(n)
        rho = oracle.maximally_mixed(n)
        for a in range(4 ** n):
            p = PauliObservable(BitString2n.from_index(n, a))
            assert hvm_expectation(q, lam, a) == oracle.pauli_expectation(rho, p)

    def test_distribution_validation(self):
        with pytest.raises(ValueError):
            HVMDistribution(1, np.array([0.5, 0.5, 0.5, -0.5]))
        with pytest.raises(ValueError):
            HVMDistribution(1, np.ones(3) / 3)
        q = HVMDistribution.uniform(1)
        with pytest.raises(ValueError):
            q.q[0] = 1

    def test_translate(self):
        q = HVMDistribution.point(2, 3).translate(5)
        assert q.q[6] == 1


class TestExactUpdate:
    def test_single_qubit(self):
        q, lam = hvm.local_scheme_hvm(1)
        p, q1 = exact_measure_update(q, lam, idx("Z"), 1)
        assert p == 0.5
        assert hvm_expectation(q1, lam, idx("Z")) == 1
        assert hvm_expectation(q1, lam, idx("X")) == 0
        p, _ = exact_measure_update(q1, lam, idx("Z"), 1)
        assert p == 1
        with pytest.raises(ImpossibleOutcomeError):
            exact_measure_update(q1, lam, idx("Z"), -1)

    def test_x_after_z_is_fair(self):
        q, lam = hvm.local_scheme_hvm(1)
        _, q = exact_measure_update(q, lam, idx("Z"), -1)
        p, q = exact_measure_update(q, lam, idx("X"), -1)
        assert p == 0.5
        assert hvm_expectation(q, lam, idx("Z")) == 0

    def test_not_measurable(self):
        q, lam = hvm.local_scheme_hvm(2)
        with pytest.raises(DomainError):
            exact_measure_update(q, lam, idx("XX"), 1)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_normalized_and_covariant(self, seed):
        r = np.random.default_rng(seed)
        n = 2
        lam = ValueAssignment.local(n)
        q = HVMDistribution(n, r.dirichlet(np.ones(16)))
        a = int(r.choice(single_qubit_labels(n)))
        u = int(r.integers(16))
        s = int(r.choice([1, -1]))
        pa, qa = exact_measure_update(q, lam, a, s)
        assert qa.q.sum() == pytest.approx(1, abs=1e-12)
        # translating by u flips the outcome exactly when [u, a] = 1
        flip = (-1) ** symplectic_form(BitString2n.from_index(n, u), BitString2n.from_index(n, a))
        pb, qb = exact_measure_update(q.translate(u), lam, a, s * flip)
        assert pb == pytest.approx(pa, abs=1e-12)
        np.testing.assert_allclose(qb.q, qa.translate(u).q, atol=1e-12)

    def test_matches_born_chain(self):
        r = np.random.default_rng(3)
        n = 2
        q0, lam = hvm.local_scheme_hvm(n)
        labs = single_qubit_labels(n)
        for _ in range(10):
            seq = [int(r.choice(labs)) for _ in range(5)]
            ms = [hvm.Measurement(PauliObservable(BitString2n.from_index(n, a)),
                                  PauliObservable(BitString2n.from_index(n, a))) for a in seq]
            joint = hvm.exact_joint_distribution(q0, lam, ms)
            assert math.fsum(joint.values()) == pytest.approx(1, abs=1e-12)
            for out in itertools.product((1, -1), repeat=5):
                assert joint.get(out, 0.0) == pytest.approx(born_chain(n, seq, out), abs=1e-12)


class TestSampler:
    def test_deterministic_per_seed(self):
        lam = ValueAssignment.local(2)
        labs = single_qubit_labels(2)
        a = hvm.sample_trajectories(lam, labs, 20000, seed=9, threads=1)
        b = hvm.sample_trajectories(lam, labs, 20000, seed=9, threads=4)
        assert np.array_equal(a, b)
        c = hvm.sample_trajectories(lam, labs, 20000, seed=10, threads=1)
        assert not np.array_equal(a, c)

    def test_repeat_measurement(self):
        lam = ValueAssignment.local(1)
        z = idx("Z")
        out = hvm.sample_trajectories(lam, [z, z, idx("X"), z], 5000, seed=1)
        assert np.array_equal(out[:, 0], out[:, 1])
        assert abs(out[:, 3].mean()) < 4 / np.sqrt(5000)

    def test_scalar_sampler(self):
        lam = ValueAssignment.local(1)
        s = hvm.HVMSampler(lam, np.random.default_rng(0), nu=idx("X"))
        assert hvm.sample_step(s, idx("Z")) == -1
        assert s.nu in (idx("X"), idx("Y"))

    def test_scalar_sampler_large_n(self):
        lam = ValueAssignment.local(40)
        s = hvm.HVMSampler(lam, np.random.default_rng(0))
        a = PauliObservable.single(40, 39, "Z").label.index
        first = s.step(a)
        assert s.step(a) == first

    def test_bad_shots(self):
        with pytest.raises(ValueError):
            hvm.sample_trajectories(ValueAssignment.local(1), [1], 0, seed=0)

    def test_thread_env(self, monkeypatch):
        monkeypatch.setenv("QCSI_LAB_THREADS", "3")
        assert hvm.thread_count() == 3


class TestCircuits:
    def test_parse(self):
        ops = hvm.parse_circuit("gate H 0  # comment\nmeasure -ZI\n\ngate CZ 0 1\n")
        assert ops[0] == Gate("H", (0,)) and ops[1] == parse_pauli("-ZI")
        with pytest.raises(hvm.CircuitError, match="line 1"):
            hvm.parse_circuit("flip 0")

    def test_h_then_z_reads_x(self):
        spec = local_scheme(1)
        ms = hvm.compile_circuit(spec, hvm.parse_circuit("gate H 0\nmeasure +Z"))
        assert ms[0].label == idx("X") and ms[0].sign == 1

    def test_not_free(self):
        with pytest.raises(hvm.CircuitError, match="not free"):
            hvm.compile_circuit(local_scheme(2), [Gate("CZ", (0, 1))])
        with pytest.raises(hvm.CircuitError, match="not free"):
            hvm.compile_circuit(local_scheme(1), [Gate("T", (0,))])
        with pytest.raises(hvm.CircuitError, match="not in O"):
            hvm.compile_circuit(local_scheme(2), [parse_pauli("XX")])

    def test_empty_circuit(self):
        spec = local_scheme(2)
        res = hvm.simulate_circuit_hvm(hvm.scheme_hvm(spec), spec, [], 10, 0)
        assert res.labels == [] and res.outcomes.shape == (10, 0)

    def test_uniform_joint(self):
        spec = local_scheme(2)
        circuit = hvm.parse_circuit("measure +ZI\nmeasure +IX\nmeasure -XI")
        shots = 40000
        res = hvm.simulate_circuit_hvm(hvm.scheme_hvm(spec), spec, circuit, shots, seed=5)
        sigma = np.sqrt(0.125 * 0.875 / shots)
        assert len(res.counts) == 8
        for f in res.frequencies().values():
            assert abs(f - 0.125) < 4 * sigma

    def test_signed_measurement(self):
        spec = local_scheme(1)
        res = hvm.simulate_circuit_hvm(hvm.scheme_hvm(spec), spec, hvm.parse_circuit("measure +Z\nmeasure -Z"), 100, 0)
        assert np.array_equal(res.outcomes[:, 0], -res.outcomes[:, 1])

    def test_exact_records(self):
        spec = local_scheme(1)
        q, lam = hvm.scheme_hvm(spec)
        circ = hvm.parse_circuit("measure +X\ngate H 0\nmeasure +Z")
        recs = hvm.exact_records(q, lam, spec, circ, [1, 1])
        assert [r.model_p for r in recs] == [0.5, 1.0]
        with pytest.raises(ImpossibleOutcomeError):
            hvm.exact_records(q, lam, spec, circ, [1, -1])
        with pytest.raises(hvm.CircuitError):
            hvm.exact_records(q, lam, spec, circ, [1])

    def test_parse_outcomes(self):
        assert hvm.parse_outcomes("+-") == [1, -1]
        assert hvm.parse_outcomes("1,-1") == [1, -1]
        assert hvm.parse_outcomes("01") == [1, -1]
        with pytest.raises(ValueError):
            hvm.parse_outcomes("+x")

    def test_generic_scheme_model(self):
        spec = SchemeSpec(2, tuple(parse_pauli(s) for s in ("XI", "IX", "ZI", "IZ")))
        q, lam = hvm.scheme_hvm(spec)
        assert lam.base is not None
        assert hvm_expectation(q, lam, idx("XX")) == 0
        with pytest.raises(DomainError):
            hvm_expectation(q, lam, idx("YY"))
