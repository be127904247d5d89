import math

import numpy as np
import pytest

from adaptprep.hilbert import DickeSpace, chain_register, dicke_operators
from adaptprep.lindblad import (
    DegenerateDarkSpaceError,
    build_superoperator,
    spectral_data,
    stationary_state_from,
    steady_state_dark,
)
from adaptprep.linalg import spectral_multiset_distance
from adaptprep.models import (
    ChainParams,
    RandomModelParams,
    SqueezeParams,
    adaptive_continuous,
    adaptive_jump_sets,
    chain_dark_state,
    dark_state_entropy,
    fermion_chain,
    random_lindbladian,
    spin_chain,
    squeezing_adaptive,
    squeezing_dark_state,
    squeezing_jump_sets,
    squeezing_standard,
    string_spin_model,
)
from adaptprep.policy import DeskScaleError


class TestParams:
    def test_chain_normalization(self):
        with pytest.raises(ValueError):
            ChainParams(n=2, u=1.0, v=0.5)
        p = ChainParams.from_v2(n=2, v2=0.3)
        assert abs(p.u**2 + p.v**2 - 1.0) < 1e-12

    def test_chain_size_guard(self):
        with pytest.raises(DeskScaleError):
            fermion_chain(ChainParams.from_v2(n=7, v2=0.1))

    def test_squeeze_params(self):
        with pytest.raises(ValueError):
            SqueezeParams(N=5, r=1.0)
        with pytest.raises(ValueError):
            SqueezeParams(N=4, r=-0.1)

    def test_random_params(self):
        with pytest.raises(ValueError):
            RandomModelParams(N=4, s2_target=0.5, seed=0, m=1)
        with pytest.raises(ValueError):
            RandomModelParams(N=4, s2_target=2 * math.log(4), seed=0)


@pytest.mark.parametrize("v2", [0.0, 0.2, 0.5])
@pytest.mark.parametrize("delta", [0.0, 2.0])
def test_chain_dark_states(v2, delta):
    p = ChainParams.from_v2(n=3, v2=v2, delta=delta)
    for build, sign, ferm in [
        (spin_chain, -1.0, False),
        (fermion_chain, -1.0, True),
    ]:
        m = build(p)
        psi = chain_dark_state(p, pairing_sign=sign, fermionic=ferm)
        for op, _ in m.jumps:
            assert np.linalg.norm(op @ psi) < 1e-10
        hpsi = m.h @ psi
        e = np.vdot(psi, hpsi)
        assert np.linalg.norm(hpsi - e * psi) < 1e-10


def test_string_dark_state():
    p = ChainParams.from_v2(n=3, v2=0.3)
    m = string_spin_model(p)
    psi = chain_dark_state(p, pairing_sign=+1.0)
    for op, _ in m.jumps:
        assert np.linalg.norm(op @ psi) < 1e-10


def test_string_rejects_delta():
    with pytest.raises(ValueError):
        string_spin_model(ChainParams.from_v2(n=2, v2=0.2, delta=1.0))
    with pytest.raises(ValueError):
        adaptive_continuous(ChainParams.from_v2(n=2, v2=0.2, delta=1.0))


def test_string_fermion_spectral_equivalence():
    # the master oracle for the Jordan-Wigner conventions (small size here,
    # 2n = 6 runs in the acceptance suite)
    for v2 in (0.0, 0.3, 0.5):
        p = ChainParams.from_v2(n=2, v2=v2)
        sf = spectral_data(build_superoperator(fermion_chain(p)), want_vectors=False)
        ss = spectral_data(build_superoperator(string_spin_model(p)), want_vectors=False)
        assert spectral_multiset_distance(sf.eigenvalues, ss.eigenvalues) < 1e-8


def test_string_reduces_to_spin_chain_at_v0():
    p = ChainParams.from_v2(n=2, v2=0.0)
    ms = string_spin_model(p)
    mp = spin_chain(p)
    assert np.abs(ms.h - mp.h).max() < 1e-14
    assert np.abs(ms.jumps[0][0] - mp.jumps[0][0]).max() < 1e-14
    sd_s = spectral_data(build_superoperator(ms), want_vectors=False)
    sd_p = spectral_data(build_superoperator(mp), want_vectors=False)
    assert spectral_multiset_distance(sd_s.eigenvalues, sd_p.eigenvalues) < 1e-10
    assert abs(abs(np.vdot(steady_state_dark(ms), steady_state_dark(mp))) - 1) < 1e-10


def test_dark_state_entropy_matches_schmidt():
    from adaptprep.analysis import entanglement_entropy

    p = ChainParams.from_v2(n=2, v2=0.3)
    psi = chain_dark_state(p, pairing_sign=-1.0)
    svn = entanglement_entropy(psi, [0, 1])  # A chain = first two positions
    assert abs(svn - dark_state_entropy(p)) < 1e-12
    expect = -(0.7 * math.log(0.7) + 0.3 * math.log(0.3)) * 2
    assert abs(svn - expect) < 1e-12


def test_spin_and_fermion_share_entropy_profile():
    from adaptprep.analysis import entanglement_entropy

    for v2 in (0.1, 0.37, 0.5):
        p = ChainParams.from_v2(n=2, v2=v2)
        s_spin = entanglement_entropy(chain_dark_state(p, -1.0), [0, 1])
        s_ferm = entanglement_entropy(chain_dark_state(p, -1.0, fermionic=True), [0, 1])
        assert abs(s_spin - s_ferm) < 1e-10


class TestAdaptiveContinuous:
    def test_gap_flat_small_size(self):
        gaps = {}
        for v2 in (0.1, 0.49):
            m = adaptive_continuous(ChainParams.from_v2(n=2, v2=v2))
            gaps[v2] = spectral_data(build_superoperator(m), want_vectors=False).gap
        assert gaps[0.49] > 0.5 * gaps[0.1]

    def test_degenerate_dark_space(self):
        m = adaptive_continuous(ChainParams.from_v2(n=2, v2=0.3))
        with pytest.raises(DegenerateDarkSpaceError):
            steady_state_dark(m)

    def test_aux_traced_steady_state_entropy(self):
        from adaptprep.analysis import entropy_from_probabilities
        from adaptprep.hilbert import partial_trace

        p = ChainParams.from_v2(n=2, v2=0.3)
        m = adaptive_continuous(p)
        reg = chain_register(2, aux=True)
        # start in the P-up sector: aux excited, chains in vacuum
        from adaptprep.hilbert import basis_state

        psi0 = basis_state(reg, excited=["P"])
        rho_inf = stationary_state_from(m, np.outer(psi0, psi0.conj()))
        rho_sys = partial_trace(rho_inf, [f"A{i}" for i in (1, 2)] + [f"B{i}" for i in (1, 2)], reg)
        rho_a = partial_trace(rho_inf, ["A1", "A2"], reg)
        svn = entropy_from_probabilities(np.linalg.eigvalsh(rho_a))
        assert abs(svn - dark_state_entropy(p)) < 1e-7
        # system state is the pure dimer
        dimer = chain_dark_state(p, pairing_sign=-1.0)
        overlap = np.real(dimer.conj() @ rho_sys @ dimer)
        assert overlap > 1 - 1e-7

    def test_aux_phase_flip_leaves_spectrum(self):
        # sigma_z^P -> -sigma_z^P is a relabeling of the aux basis
        p = ChainParams.from_v2(n=2, v2=0.3)
        m = adaptive_continuous(p)
        reg = chain_register(2, aux=True)
        from adaptprep.hilbert import SIGMA_X, embed

        x = embed(SIGMA_X, "P", reg)

        class Space:
            dim = reg.dim

        flipped = type(m)(
            h=x @ m.h @ x,
            jumps=[(x @ op @ x, r) for op, r in m.jumps],
            register=Space(),
        )
        sd0 = spectral_data(build_superoperator(m), want_vectors=False)
        sd1 = spectral_data(build_superoperator(flipped), want_vectors=False)
        assert spectral_multiset_distance(sd0.eigenvalues, sd1.eigenvalues) < 1e-9

    def test_v0_matches_spin_chain_gap(self):
        p = ChainParams.from_v2(n=2, v2=0.0)
        g_ad = spectral_data(build_superoperator(adaptive_continuous(p)), want_vectors=False).gap
        g_sp = spectral_data(build_superoperator(spin_chain(p)), want_vectors=False).gap
        assert abs(g_ad - g_sp) < 1e-9


class TestSqueezing:
    def test_r0_superradiant(self):
        gaps = {}
        for N in (4, 8):
            m = squeezing_standard(SqueezeParams(N=N, r=0.0))
            psi = steady_state_dark(m)
            assert abs(abs(psi[0]) - 1.0) < 1e-10  # m = +S dark state
            gaps[N] = spectral_data(build_superoperator(m), want_vectors=False).gap
        assert gaps[8] > gaps[4]  # gap grows with N

    def test_dark_state_n2(self):
        psi = squeezing_dark_state(2, 1.3)
        t = math.tanh(1.3)
        ref = np.array([1.0, 0.0, -t]) / math.sqrt(1 + t * t)
        assert np.abs(np.abs(psi) - np.abs(ref)).max() < 1e-12

    def test_gap_decay_slope(self):
        rs = np.linspace(1.5, 3.0, 4)
        gaps = []
        for r in rs:
            m = squeezing_standard(SqueezeParams(N=12, r=float(r)))
            gaps.append(spectral_data(build_superoperator(m), want_vectors=False).gap)
        slope = np.polyfit(rs, np.log(gaps), 1)[0]
        assert abs(slope + 4.0) < 0.5

    def test_adaptive_gap_stays_open(self):
        for r in (0.5, 2.0, 4.0):
            m = squeezing_adaptive(SqueezeParams(N=12, r=r))
            gap = spectral_data(build_superoperator(m), want_vectors=False).gap
            assert gap > 0.5

    def test_adaptive_r0_sector_gap(self):
        # at r = 0 the Dicke-sector relaxation matches the standard model
        g_std = spectral_data(
            build_superoperator(squeezing_standard(SqueezeParams(N=6, r=0.0))),
            want_vectors=False,
        ).gap
        g_ad = spectral_data(
            build_superoperator(squeezing_adaptive(SqueezeParams(N=6, r=0.0))),
            want_vectors=False,
        ).gap
        assert abs(g_std - g_ad) < 1e-9

    def test_adaptive_aux_traced_wineland(self):
        from adaptprep.analysis import trace_out_aux, wineland

        N, r = 8, 1.2
        m = squeezing_adaptive(SqueezeParams(N=N, r=r))
        psi0 = np.zeros(2 * (N + 1), dtype=complex)
        psi0[0] = 1.0  # aux up, coherent state
        rho_inf = stationary_state_from(m, np.outer(psi0, psi0.conj()))
        rho_spin = trace_out_aux(rho_inf, N + 1, aux_first=True)
        xi_mixed = wineland(rho_spin, DickeSpace(N), axis="x")
        xi_dark = wineland(squeezing_dark_state(N, r), DickeSpace(N), axis="x")
        assert abs(xi_mixed - xi_dark) < 1e-6

    def test_jump_set_pair(self):
        plus, minus = squeezing_jump_sets(SqueezeParams(N=4, r=1.0))
        ops = dicke_operators(4)
        t = math.tanh(1.0)
        assert np.abs(plus.jumps[0][0] - (ops.sp + t * ops.sm)).max() < 1e-14
        assert np.abs(minus.jumps[0][0] - (ops.sp - t * ops.sm)).max() < 1e-14

    def test_adaptive_aux_phase_flip_spectrum_invariant(self):
        from adaptprep.hilbert import SIGMA_X, TensorSpace

        m = squeezing_adaptive(SqueezeParams(N=6, r=1.5))
        x = np.kron(SIGMA_X, np.eye(7))
        flipped = type(m)(
            h=x @ m.h @ x,
            jumps=[(x @ op @ x, r) for op, r in m.jumps],
            register=TensorSpace((2, 7)),
        )
        sd0 = spectral_data(build_superoperator(m), want_vectors=False)
        sd1 = spectral_data(build_superoperator(flipped), want_vectors=False)
        assert spectral_multiset_distance(sd0.eigenvalues, sd1.eigenvalues) < 1e-9


class TestRandomLindbladian:
    def test_target_annihilated(self):
        for with_aux in (False, True):
            p = RandomModelParams(N=4, s2_target=0.8 * math.log(4), seed=3,
                                  with_aux=with_aux)
            model, target = random_lindbladian(p)
            assert abs(np.linalg.norm(target) - 1.0) < 1e-10
            for op, _ in model.jumps:
                assert np.linalg.norm(op @ target) < 1e-10

    def test_uniform_coefficients_max_entropy(self):
        # uniform squared coefficients give S2 = ln N exactly
        probs = np.full(4, 0.25)
        assert abs(-math.log(np.sum(probs**2)) - math.log(4)) < 1e-15
        # asking for ln N pins the sample to the uniform point
        p = RandomModelParams(N=4, s2_target=math.log(4), seed=5)
        model, target = random_lindbladian(p)
        coeffs = np.abs(target.reshape(4, 4).diagonal())
        assert np.abs(coeffs - 0.5).max() < 2e-3

    def test_s2_pinned(self):
        for frac in (0.4, 0.7, 0.95):
            s2 = frac * math.log(4)
            p = RandomModelParams(N=4, s2_target=s2, seed=11)
            _, target = random_lindbladian(p)
            probs = np.abs(target.reshape(4, 4).diagonal()) ** 2
            assert abs(-math.log(np.sum(probs**2)) - s2) < 2e-6

    def test_seed_deterministic(self):
        p = RandomModelParams(N=3, s2_target=0.8, seed=21)
        m1, t1 = random_lindbladian(p)
        m2, t2 = random_lindbladian(p)
        assert np.array_equal(t1, t2)
        assert np.array_equal(m1.jumps[0][0], m2.jumps[0][0])

    def test_unique_steady_state(self):
        p = RandomModelParams(N=3, s2_target=0.7, seed=2)
        model, target = random_lindbladian(p)
        sd = spectral_data(build_superoperator(model))
        assert sd.n_zero_modes == 1
        rho = sd.steady_states()[0]
        overlap = np.real(target.conj() @ rho @ target)
        assert overlap > 1 - 1e-8


def test_adaptive_jump_sets_frames():
    p = ChainParams.from_v2(n=2, v2=0.3)
    for frame in ("conserving", "paired"):
        plus, minus = adaptive_jump_sets(p, frame=frame)
        assert plus.dim == 16
        assert np.abs(plus.h - minus.h).max() < 1e-14
    with pytest.raises(ValueError):
        adaptive_jump_sets(p, frame="bogus")
    with pytest.raises(ValueError):
        adaptive_jump_sets(ChainParams.from_v2(n=2, v2=0.3, delta=1.0))
