import numpy as np
import pytest

from kzising import ChainSpec, Schedule
from kzising.bdg import (CorrelatorUndefinedError, bdg_matrix, build_AB, correlators_bdg, evolve_bdg, init_uv,
                         kink_density, kink_stats_bdg, two_point, unitarity_defect)
from kzising.dense import DenseChain, dense_oracle, evolve_dense, ground_space, observables
from kzising.modes import kink_density_modes, modes, pgs_modes, sudden_quench

from conftest import disordered_chain


def test_build_ab_decoupled():
    sch = Schedule.tabulated([0.0, 1.0], [1.0, 1.0], [0.0, 1.0])
    A, B = build_AB(ChainSpec.uniform(4, -1.0), sch, 0.0)
    assert np.array_equal(A, -2 * np.eye(4)) and not B.any()


def test_build_ab_no_field_structure():
    sch = Schedule.linear(1.0)
    A, B = build_AB(ChainSpec.uniform(4, 0.7), sch, 1.0)
    assert not np.diag(A).any()
    assert np.allclose(A, A.T) and np.allclose(B, -B.T)
    assert A[0, 1] == A[1, 2] == A[2, 3] == 0.7
    assert A[3, 0] == A[0, 3] == -0.7  # flipped corner
    assert B[3, 0] == -0.7 and B[0, 3] == 0.7


@pytest.mark.parametrize("s", [0.2, 0.5, 0.8])
@pytest.mark.parametrize("J", [-1.0, 1.3])
def test_bdg_dispersion_oracle(s, J):
    L = 10
    sch = Schedule.linear(1.0)
    g, jc = sch.eval(s)
    w = np.sort(np.linalg.eigvalsh(bdg_matrix(ChainSpec.uniform(L, J), sch, s)))
    m = np.arange(L)
    k = (2 * m + 1) * np.pi / L  # full anti-periodic set
    e = 2 * np.sqrt(g**2 + (jc * J) ** 2 - 2 * g * jc * abs(J) * np.cos(k))
    assert np.allclose(w, np.sort(np.concatenate([e, -e])), atol=1e-12)


def test_init_uv_paramagnet():
    sch = Schedule.linear(1.0)
    st = init_uv(ChainSpec.uniform(8, -1.0), sch)
    assert unitarity_defect(st.u, st.v) < 1e-12
    # occupied bare fermions = all spins along +x; this is the bdg ground state for J=0
    assert np.allclose(st.u, 0) and np.allclose(st.v, np.eye(8))
    assert np.allclose(two_point(st), 0.0, atol=1e-15)


def test_init_uv_diagonalizes_nonzero_start():
    sch = Schedule.tabulated([0.0, 1.0], [1.0, 0.0], [0.2, 1.0])
    ch = ChainSpec.uniform(8, -1.0)
    st = init_uv(ch, sch)
    assert unitarity_defect(st.u, st.v) < 1e-12
    # same state from the dense ground state
    dc = DenseChain(ch)
    psi = ground_space(dc.hamiltonian(sch, 0.0))[:, 0]
    ref = observables(dc, psi, sch)
    assert np.allclose(two_point(st), ref.zz, atol=1e-10)


def test_init_uv_zero_mode_error():
    # no transverse field and no coupling: every spin configuration is degenerate
    sch = Schedule.tabulated([0.0, 1.0], [0.0, 0.0], [0.0, 1.0])
    with pytest.raises(ValueError):
        init_uv(ChainSpec.uniform(8, -1.0), sch)


@pytest.mark.parametrize("L", [8, 64])
@pytest.mark.parametrize("t_a", [0.5, 3.0, 10.0])
def test_matches_modes(L, t_a):
    sch = Schedule.linear(1.0)
    ch = ChainSpec.uniform(L, -1.0)
    st = evolve_bdg(ch, sch, t_a, n_steps=8000)
    assert st.unitarity() < 1e-7
    assert abs(kink_density(st, ch) - kink_density_modes(sch, -1.0, t_a, L)) < 1e-8
    zz = two_point(st)
    assert np.ptp(zz) < 1e-9  # translation invariance


def test_sudden_limit():
    sch = Schedule.linear(1.0)
    ch = ChainSpec.uniform(16, -1.0)
    st = evolve_bdg(ch, sch, 1e-4, n_steps=200)
    ref = 2.0 / 16 * sudden_quench(sch, -1.0, modes(16)).sum()
    assert abs(kink_density(st, ch) - ref) < 1e-6


def test_disordered_matches_dense():
    sch = Schedule.linear(1.0, 1.4)
    ch = disordered_chain(8, -1.4, 0.05, seed=3)
    st = evolve_bdg(ch, sch, 2.0, n_steps=8000)
    n, c = kink_stats_bdg(st, ch)
    ref = dense_oracle(ch, sch, 2.0)
    assert abs(n - ref.n_bar) < 1e-6
    assert np.max(np.abs(c - ref.ckk)) < 1e-6
    assert np.max(np.abs(two_point(st) - ref.zz)) < 1e-6


def test_clean_all_observables_match_dense():
    sch = Schedule.linear(1.0)
    ch = ChainSpec.uniform(8, -1.0)
    st = evolve_bdg(ch, sch, 3.0, n_steps=8000)
    n, c = kink_stats_bdg(st, ch)
    ref = dense_oracle(ch, sch, 3.0)
    assert abs(n - ref.n_bar) < 1e-6
    assert np.max(np.abs(c - ref.ckk)) < 1e-6
    assert abs(pgs_modes(sch, -1.0, 3.0, 8) - ref.pgs) < 1e-6


def test_adiabatic_limit_ordered():
    sch = Schedule.linear(1.0)
    for J in (-1.0, 1.0):
        ch = ChainSpec.uniform(8, J)
        st = evolve_bdg(ch, sch, 300.0)
        assert np.allclose(two_point(st), -np.sign(J), atol=1e-4)


def test_four_point_clusters():
    sch = Schedule.linear(1.0)
    L = 128
    ch = ChainSpec.uniform(L, -1.0)
    st = evolve_bdg(ch, sch, 0.5)
    zz, zzzz = correlators_bdg(st, r=[L // 2])
    assert np.max(np.abs(zzzz[0] - zz * np.roll(zz, -L // 2))) < 1e-3


def test_correlator_symmetry_and_short_range():
    sch = Schedule.linear(1.0)
    L = 64
    ch = ChainSpec.uniform(L, -1.0)
    st = evolve_bdg(ch, sch, 8.0)
    n, c = kink_stats_bdg(st, ch)
    r = np.arange(1, L)
    assert np.allclose(c[r], c[L - r], atol=1e-10)
    assert c[1] < -0.9  # anti-bunching at r << xi for a slow anneal


def test_positive_peak_fast_anneal():
    sch = Schedule.linear(1.0, 1.4)
    L = 128
    ch = ChainSpec.uniform(L, -1.4)
    st = evolve_bdg(ch, sch, 1.0)
    n, c = kink_stats_bdg(st, ch)
    x = n * np.arange(L)
    half = slice(1, L // 2)
    peak = np.argmax(c[half]) + 1
    assert c[peak] > 0 and 0.45 <= x[peak] <= 0.75


def test_zero_density_correlator_error():
    from kzising.bdg import BdGState

    # P = I and Q P^dag = [[0, 1], [-1, 0]] give <z0 z1> = +1 on both bonds of an L=2 ring
    P = np.eye(2)
    Q = np.array([[0.0, 1.0], [-1.0, 0.0]])
    st = BdGState((P - Q) / 2, (P + Q) / 2, 1.0)
    assert np.allclose(two_point(st), 1.0)
    with pytest.raises(CorrelatorUndefinedError):
        kink_stats_bdg(st, ChainSpec.uniform(2, -1.0))


def test_unitarity_maintained_long_anneal():
    ch = ChainSpec.uniform(16, -1.0)
    st = evolve_bdg(ch, Schedule.linear(), 300.0)
    assert st.unitarity_error < 1e-7


def test_unitarity_abort_diagnostic():
    from kzising.bdg import UnitarityError

    with pytest.raises(UnitarityError, match="increase n_steps"):
        evolve_bdg(ChainSpec.uniform(8, -1.0), Schedule.linear(), 300.0, n_steps=2000)


def test_fields_rejected():
    ch = ChainSpec(8, -1.0, fields=np.full(8, 0.1))
    with pytest.raises(ValueError):
        evolve_bdg(ch, Schedule.linear(), 1.0)


def test_dense_two_site_analytic():
    """L=2: only the parity-even sector matters; the dense result equals a 2-level integration."""
    from scipy.integrate import solve_ivp

    sch = Schedule.linear(1.0)
    ch = ChainSpec.uniform(2, -1.0)
    res = dense_oracle(ch, sch, 1.5)
    # in the basis |++>, |--> (x eigenstates, even sector reachable from |++>) the
    # ring has two identical bonds: H = -g (X1 + X2) + 2 jc J Z1 Z2, and Z1Z2 maps |++> <-> |-->
    # energies in |++>: -2g, in |-->: +2g, coupling 2 jc J
    def rhs(s, y):
        g, jc = sch.eval(s)
        H = np.array([[-2 * g, 2 * jc * -1.0], [2 * jc * -1.0, 2 * g]])
        return -1j * 2 * np.pi * 1.5 * H @ y

    sol = solve_ivp(rhs, (0, 1), np.array([1, 0], complex), method="DOP853", rtol=1e-12, atol=1e-13)
    a, b = sol.y[:, -1]
    # <Z1 Z2> = 2 Re(a* b) ... in the x basis Z1Z2 is sigma_x of this two-level problem
    zz = 2 * (np.conj(a) * b).real
    assert abs(res.zz[0] - zz) < 1e-9
    assert abs(res.n_bar - 0.5 * (1 - zz)) < 1e-9


def test_dense_refuses_large():
    with pytest.raises(ValueError):
        DenseChain(ChainSpec.uniform(14, -1.0))


def test_dense_unitarity():
    dc, psi = evolve_dense(ChainSpec.uniform(6, -1.0), Schedule.linear(), 2.0)
    assert abs(np.linalg.norm(psi) - 1) < 1e-12
