import itertools

import numpy as np
import pytest

from qcsi_lab import oracle
from qcsi_lab.gates import Gate, SINGLE_QUBIT
from qcsi_lab.pauli import PauliObservable, parse_pauli

from conftest import all_pauli_strings, textbook_matrix


def expect(state, s):
    return oracle.pauli_expectation(state, parse_pauli(s))


class TestPrepare:
    def test_ghz_stabilizers(self):
        g = oracle.ghz()
        assert expect(g, "XXX") == pytest.approx(1, abs=1e-12)
        for s in ("XZZ", "ZXZ", "ZZX"):
            assert expect(g, s) == pytest.approx(-1, abs=1e-12)

    def test_ghz_textbook(self):
        """Each signed stabilizer fixes the state, checked with Kronecker matrices."""
        psi = oracle.ghz().data
        for s in oracle.GHZ_STABILIZERS:
            m = textbook_matrix(parse_pauli(s))
            np.testing.assert_allclose(m @ psi, psi, atol=1e-12)

    def test_zeros(self):
        z = oracle.zeros(3)
        assert expect(z, "ZII") == 1 and expect(z, "IIZ") == 1
        assert expect(z, "XII") == 0

    def test_maximally_mixed(self):
        m = oracle.maximally_mixed(2)
        for s in all_pauli_strings(2):
            want = 1.0 if s == "II" else 0.0
            assert expect(m, s) == pytest.approx(want, abs=1e-15)

    def test_prepare_dispatch(self):
        assert np.allclose(oracle.prepare("zeros", 2).data, oracle.zeros(2).data)
        st = oracle.prepare("ghz_from_stabilizers", 3, [parse_pauli(s) for s in oracle.GHZ_STABILIZERS])
        assert oracle.fidelity(st, oracle.ghz()) == pytest.approx(1)
        with pytest.raises(oracle.OracleError):
            oracle.prepare("nope", 1)

    def test_custom_rejects_unnormalized(self):
        with pytest.raises(oracle.OracleError):
            oracle.custom([1, 1])

    def test_bounds(self):
        with pytest.raises(oracle.OracleError):
            oracle.maximally_mixed(oracle.MAX_MIXED_QUBITS + 1)

    def test_noncommuting_stabilizers(self):
        with pytest.raises(oracle.StabilizerError, match="commute"):
            oracle.ghz_from_stabilizers([parse_pauli("XI"), parse_pauli("ZI")])

    def test_inconsistent_stabilizers(self):
        with pytest.raises(oracle.StabilizerError, match="inconsistent"):
            oracle.ghz_from_stabilizers([parse_pauli("+ZZ"), parse_pauli("-ZZ")])

    def test_underdetermined(self):
        with pytest.raises(oracle.StabilizerError, match="rank 2"):
            oracle.ghz_from_stabilizers([parse_pauli("ZZ")])

    def test_stabilizer_rank(self):
        assert oracle.stabilizer_rank([parse_pauli("ZII")]) == 4
        assert oracle.stabilizer_rank([parse_pauli(s) for s in oracle.GHZ_STABILIZERS]) == 1


class TestPauliAction:
    @pytest.mark.parametrize("s", list(all_pauli_strings(2)) + ["-XYZ", "+YYY", "-ZIX"])
    def test_matrix_matches_textbook(self, s):
        p = parse_pauli(s)
        np.testing.assert_allclose(oracle.pauli_matrix(p), textbook_matrix(p), atol=1e-15)

    def test_expectations_real(self, rng):
        psi = rng.normal(size=8) + 1j * rng.normal(size=8)
        st = oracle.custom(psi / np.linalg.norm(psi))
        for s in all_pauli_strings(3):
            v = expect(st, s)
            want = np.vdot(st.data, textbook_matrix(parse_pauli(s)) @ st.data).real
            assert v == pytest.approx(want, abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(oracle.OracleError):
            expect(oracle.zeros(2), "X")


class TestGates:
    def test_h_on_zero(self):
        st = oracle.apply_gate(oracle.zeros(1), Gate("H", (0,)))
        assert expect(st, "X") == pytest.approx(1)

    def test_t_rotation(self):
        st = oracle.apply_gate(oracle.plus_state(1), Gate("T", (0,)))
        # e^{-i pi/8 Z} rotates X toward Y by pi/4
        assert expect(st, "X") == pytest.approx(np.cos(np.pi / 4))
        assert expect(st, "Y") == pytest.approx(np.sin(np.pi / 4))

    def test_cz_plus_plus(self):
        st = oracle.apply_gate(oracle.plus_state(2), Gate("CZ", (0, 1)))
        assert expect(st, "XZ") == pytest.approx(1)
        assert expect(st, "ZX") == pytest.approx(1)

    def test_qubit_order(self):
        st = oracle.apply_gate(oracle.zeros(3), Gate("X", (0,)))
        assert st.data[1] == 1
        assert expect(st, "ZII") == pytest.approx(-1)

    @pytest.mark.parametrize("name", ["H", "S", "T", "X", "Y", "Z", "SDG"])
    def test_unitary_is_kron(self, name):
        u = oracle.gate_unitary(Gate(name, (1,)), 2)
        np.testing.assert_allclose(u, np.kron(SINGLE_QUBIT[name], np.eye(2)), atol=1e-15)

    def test_mixed_and_pure_agree(self, rng):
        psi = rng.normal(size=4) + 1j * rng.normal(size=4)
        st = oracle.custom(psi / np.linalg.norm(psi))
        gates = [Gate("H", (0,)), Gate("CZ", (0, 1)), Gate("T", (1,))]
        a = oracle.apply_gates(st, gates)
        b = oracle.apply_gates(st.to_mixed(), gates)
        np.testing.assert_allclose(a.density_matrix(), b.data, atol=1e-14)


class TestMeasure:
    def test_collapse(self, rng):
        out, post, prob = oracle.measure_pauli(oracle.plus_state(1), parse_pauli("Z"), rng)
        assert prob == pytest.approx(0.5)
        assert expect(post, "Z") == pytest.approx(out)

    def test_repeatable(self, rng):
        st = oracle.ghz()
        p = parse_pauli("ZIX")
        out, post, _ = oracle.measure_pauli(st, p, rng)
        for _ in range(5):
            again, post, prob = oracle.measure_pauli(post, p, rng)
            assert again == out and prob == pytest.approx(1)

    def test_impossible(self):
        prob, post = oracle.project_pauli(oracle.zeros(1), parse_pauli("Z"), -1)
        assert prob == 0 and post is None

    def test_mixed_projection(self):
        prob, post = oracle.project_pauli(oracle.maximally_mixed(2), parse_pauli("XX"), -1)
        assert prob == pytest.approx(0.5)
        assert expect(post, "XX") == pytest.approx(-1)
        assert expect(post, "ZI") == pytest.approx(0)

    def test_projector_idempotent(self, rng):
        for s in ("XYZ", "-ZZI", "YII"):
            p = parse_pauli(s)
            proj = 0.5 * (np.eye(8) + oracle.pauli_matrix(p))
            np.testing.assert_allclose(proj @ proj, proj, atol=1e-14)

    def test_born_statistics(self):
        rng = np.random.default_rng(11)
        st = oracle.apply_gate(oracle.plus_state(1), Gate("T", (0,)))
        p = parse_pauli("X")
        shots = 4000
        mean = np.mean([oracle.measure_pauli(st, p, rng)[0] for _ in range(shots)])
        want = expect(st, "X")
        sigma = np.sqrt((1 - want ** 2) / shots)
        assert abs(mean - want) < 4 * sigma

    def test_project_single(self):
        prob, post = oracle.project_single(oracle.plus_state(2), SINGLE_QUBIT["Z"], 1, -1)
        assert prob == pytest.approx(0.5)
        assert expect(post, "IZ") == pytest.approx(-1)


class TestFidelity:
    def test_examples(self):
        z, one = oracle.basis_state(1, 0), oracle.basis_state(1, 1)
        plus = oracle.plus_state(1)
        assert oracle.fidelity(z, z) == pytest.approx(1)
        assert oracle.fidelity(z, one) == pytest.approx(0)
        assert oracle.fidelity(z, plus) == pytest.approx(0.5)
        assert oracle.fidelity(z.to_mixed(), plus) == pytest.approx(0.5)
        assert oracle.fidelity(z.to_mixed(), plus.to_mixed()) == pytest.approx(0.5)
        assert oracle.fidelity(oracle.maximally_mixed(1), z) == pytest.approx(0.5)

    def test_reduced_qubit(self):
        st = oracle.ghz()
        for q in range(3):
            np.testing.assert_allclose(oracle.reduced_qubit(st, q), np.eye(2) / 2, atol=1e-12)
        prod = oracle.apply_gate(oracle.zeros(2), Gate("H", (1,)))
        np.testing.assert_allclose(oracle.reduced_qubit(prod, 1), np.full((2, 2), 0.5), atol=1e-15)
        np.testing.assert_allclose(oracle.reduced_qubit(prod.to_mixed(), 0), np.diag([1, 0]), atol=1e-15)


class TestMisc:
    def test_depolarize_linear(self):
        g = oracle.ghz()
        for eps in (0.0, 0.3, 1.0):
            assert expect(oracle.depolarize(g, eps), "XXX") == pytest.approx(1 - eps, abs=1e-12)

    def test_dump(self):
        raw = oracle.dump_amplitudes(oracle.basis_state(2, 2))
        arr = np.frombuffer(raw, dtype="<c16")
        assert arr[2] == 1 and len(raw) == 64

    def test_label_expectations(self):
        tab = oracle.label_expectations(oracle.zeros(1))
        assert tab == pytest.approx({0: 1.0, 1: 1.0, 2: 0.0, 3: 0.0})

    def test_density_check(self):
        with pytest.raises(oracle.OracleError):
            oracle.DenseState(1, np.eye(2), "mixed").check()  # trace 2
