import numpy as np
import pytest

from adaptprep.hilbert import (
    ID2,
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_X,
    SIGMA_Z,
    FermionMap,
    QubitRegister,
    basis_state,
    chain_register,
    dicke_operators,
    embed,
    jw_annihilation,
    number_operator,
    partial_trace,
    partial_transpose,
    total_parity,
    vacuum_state,
)
from adaptprep.linalg import dag


def test_register_layout():
    reg = chain_register(2, aux=True)
    assert reg.labels == ("A1", "A2", "B1", "B2", "P")
    assert reg.dim == 32
    with pytest.raises(KeyError):
        reg.position("C1")
    with pytest.raises(ValueError):
        QubitRegister(("a", "a"))


class TestEmbed:
    def test_sigma_z_first_site(self):
        reg = chain_register(1)  # A1, B1
        assert np.array_equal(embed(SIGMA_Z, "A1", reg), np.diag([1, 1, -1, -1.0]))

    def test_second_site(self):
        reg = chain_register(1)
        assert np.array_equal(embed(SIGMA_X, "B1", reg), np.kron(ID2, SIGMA_X))

    def test_distinct_sites_commute(self):
        reg = chain_register(1)
        a = embed(SIGMA_PLUS, "A1", reg)
        b = embed(SIGMA_MINUS, "B1", reg)
        assert np.abs(a @ b - b @ a).max() < 1e-15

    def test_two_site_embed_matches_kron(self):
        reg = QubitRegister(("x", "y", "z"))
        op = np.random.default_rng(0).standard_normal((4, 4)) + 0j
        direct = np.kron(op, ID2)
        assert np.abs(embed(op, ["x", "y"], reg) - direct).max() < 1e-14
        # reversed site order permutes the operator factors
        swapped = embed(op, ["y", "x"], reg)
        perm = embed(op.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4), ["x", "y"], reg)
        assert np.abs(swapped - perm).max() < 1e-14

    def test_errors(self):
        reg = chain_register(1)
        with pytest.raises(ValueError):
            embed(SIGMA_X, ["A1", "B1"], reg)  # dimension mismatch
        with pytest.raises(KeyError):
            embed(SIGMA_X, "Q9", reg)


class TestJordanWigner:
    def test_first_site_no_string(self):
        reg = chain_register(1)
        c1 = jw_annihilation(1, FermionMap(reg))
        assert np.abs(c1 - embed(SIGMA_MINUS, "A1", reg)).max() < 1e-15

    def test_second_site_string(self):
        reg = QubitRegister(("s1", "s2"))
        c2 = jw_annihilation(2, FermionMap(reg))
        assert np.abs(c2 - np.kron(SIGMA_Z, SIGMA_MINUS)).max() < 1e-15

    def test_number_anticommutator(self):
        reg = QubitRegister(("s1", "s2"))
        c2 = jw_annihilation(2, FermionMap(reg))
        acc = c2 @ dag(c2) + dag(c2) @ c2
        assert np.abs(acc - np.eye(4)).max() < 1e-14

    def test_all_anticommutators_five_sites(self):
        reg = QubitRegister(tuple(f"s{i}" for i in range(5)))
        fmap = FermionMap(reg)
        cs = [jw_annihilation(i, fmap) for i in range(1, 6)]
        eye = np.eye(reg.dim)
        for i, ci in enumerate(cs):
            for j, cj in enumerate(cs):
                acc = ci @ dag(cj) + dag(cj) @ ci
                ref = eye if i == j else 0 * eye
                assert np.abs(acc - ref).max() < 1e-12
                assert np.abs(ci @ cj + cj @ ci).max() < 1e-12

    def test_index_range(self):
        reg = chain_register(1)
        with pytest.raises(IndexError):
            jw_annihilation(3, FermionMap(reg))


class TestParity:
    def test_vacuum(self):
        reg = chain_register(2)
        p = total_parity(reg)
        vac = vacuum_state(reg)
        assert abs(np.vdot(vac, p @ vac) - 1.0) < 1e-15

    def test_single_flip(self):
        reg = chain_register(2)
        p = total_parity(reg)
        one = basis_state(reg, excited=["B2"])
        assert abs(np.vdot(one, p @ one) + 1.0) < 1e-15

    def test_involution(self):
        reg = chain_register(2)
        p = total_parity(reg)
        assert np.abs(p @ p - np.eye(reg.dim)).max() < 1e-15

    def test_commutation_structure(self):
        reg = chain_register(2)
        p = total_parity(reg)
        for label in reg.labels:
            z = embed(SIGMA_Z, label, reg)
            assert np.abs(p @ z - z @ p).max() < 1e-14
            for op in (SIGMA_PLUS, SIGMA_MINUS):
                s = embed(op, label, reg)
                assert np.abs(p @ s + s @ p).max() < 1e-14

    def test_number_operator(self):
        reg = chain_register(2)
        n = number_operator(reg)
        vac = vacuum_state(reg)
        assert abs(np.vdot(vac, n @ vac)) < 1e-15
        two = basis_state(reg, excited=["A1", "B1"])
        assert abs(np.vdot(two, n @ two) - 2.0) < 1e-15


def _naive_partial_trace(rho, keep, reg):
    nq = reg.n_qubits
    keep_pos = sorted(reg.position(s) for s in keep)
    dk = 2 ** len(keep_pos)
    out = np.zeros((dk, dk), dtype=complex)
    for i in range(reg.dim):
        for j in range(reg.dim):
            bits_i = [(i >> (nq - 1 - q)) & 1 for q in range(nq)]
            bits_j = [(j >> (nq - 1 - q)) & 1 for q in range(nq)]
            if any(bits_i[q] != bits_j[q] for q in range(nq) if q not in keep_pos):
                continue
            ki = sum(bits_i[q] << (len(keep_pos) - 1 - a) for a, q in enumerate(keep_pos))
            kj = sum(bits_j[q] << (len(keep_pos) - 1 - a) for a, q in enumerate(keep_pos))
            out[ki, kj] += rho[i, j]
    return out


class TestPartialTrace:
    def test_product_state(self):
        reg = QubitRegister(("q1", "q2"))
        excited = basis_state(reg, excited=["q2"])  # |0>|1>
        rho = np.outer(excited, excited.conj())
        red = partial_trace(rho, ["q1"], reg)
        ground = np.array([[0, 0], [0, 1.0]])  # |0><0| in (|1>,|0>) ordering
        assert np.abs(red - ground).max() < 1e-14

    def test_bell_maximally_mixed(self):
        reg = QubitRegister(("q1", "q2"))
        bell = np.zeros(4, dtype=complex)
        bell[0] = bell[3] = 1 / np.sqrt(2)
        rho = np.outer(bell, bell.conj())
        red = partial_trace(rho, ["q1"], reg)
        assert np.abs(red - np.eye(2) / 2).max() < 1e-14

    def test_against_naive_oracle(self):
        reg = QubitRegister(("a", "b", "c"))
        rng = np.random.default_rng(4)
        m = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        rho = m @ dag(m)
        rho /= np.trace(rho)
        for keep in (["a"], ["b"], ["a", "c"], ["b", "c"]):
            fast = partial_trace(rho, keep, reg)
            slow = _naive_partial_trace(rho, keep, reg)
            assert np.abs(fast - slow).max() < 1e-12
            assert abs(np.trace(fast) - 1.0) < 1e-12

    def test_keep_everything(self):
        reg = QubitRegister(("a", "b"))
        rng = np.random.default_rng(8)
        m = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        rho = m @ dag(m)
        rho /= np.trace(rho)
        assert np.abs(partial_trace(rho, ["a", "b"], reg) - rho).max() < 1e-14


class TestPartialTranspose:
    def test_product_invariant(self):
        reg = QubitRegister(("a", "b"))
        psi = basis_state(reg, excited=["a"])
        rho = np.outer(psi, psi.conj())
        assert np.abs(partial_transpose(rho, ["a"], reg) - rho).max() < 1e-14

    def test_bell_negative_eigenvalue(self):
        reg = QubitRegister(("a", "b"))
        bell = np.zeros(4, dtype=complex)
        bell[0] = bell[3] = 1 / np.sqrt(2)
        rho = np.outer(bell, bell.conj())
        pt = partial_transpose(rho, ["a"], reg)
        assert abs(np.linalg.eigvalsh(pt).min() + 0.5) < 1e-12

    def test_involution(self):
        reg = QubitRegister(("a", "b", "c"))
        rng = np.random.default_rng(6)
        m = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        rho = m @ dag(m)
        pt2 = partial_transpose(partial_transpose(rho, ["b"], reg), ["b"], reg)
        assert np.abs(pt2 - rho).max() < 1e-14


class TestDicke:
    def test_single_spin(self):
        ops = dicke_operators(1)
        assert np.array_equal(ops.sp, SIGMA_PLUS)
        assert np.array_equal(ops.sz, SIGMA_Z)

    def test_two_spin_sz(self):
        ops = dicke_operators(2)
        assert np.array_equal(ops.sz, np.diag([2.0, 0.0, -2.0]))

    def test_ladder_elements_exact(self):
        N = 7
        ops = dicke_operators(N)
        S = N / 2
        m = S - np.arange(N + 1)
        for k in range(1, N + 1):
            expect = np.sqrt(S * (S + 1) - m[k] * (m[k] + 1))
            assert abs(ops.sp[k - 1, k] - expect) < 1e-14

    def test_algebra(self):
        for N in (1, 2, 5, 8):
            ops = dicke_operators(N)
            assert np.abs(ops.sm - dag(ops.sp)).max() < 1e-14
            comm = ops.sp @ ops.sm - ops.sm @ ops.sp
            assert np.abs(comm - ops.sz).max() < 1e-12
            comm2 = ops.sz @ ops.sp - ops.sp @ ops.sz
            assert np.abs(comm2 - 2 * ops.sp).max() < 1e-12
            assert np.abs(ops.sx - dag(ops.sx)).max() < 1e-14
            assert np.abs(ops.sy - dag(ops.sy)).max() < 1e-14

    def test_casimir(self):
        for N in (2, 4, 6):
            ops = dicke_operators(N)
            S = N / 2
            casimir = ops.sx @ ops.sx + ops.sy @ ops.sy + ops.sz @ ops.sz
            assert np.abs(casimir - 4 * S * (S + 1) * np.eye(N + 1)).max() < 1e-10
