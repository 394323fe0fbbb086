import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from kzising.schedule import (NoCriticalPointError, Schedule, ScheduleError, ScheduleRangeError,
                              critical_point, kz_b)


def sympy_b(gamma_expr, jcal_expr, absJ):
    """Independent symbolic oracle for the quench-rate constant."""
    s = sp.symbols("s", real=True)
    G, Jc = gamma_expr(s), jcal_expr(s)
    roots = [r for r in sp.solve(sp.Eq(G, Jc * absJ), s) if 0 <= float(r) <= 1]
    sc = roots[0]
    denom = (sp.diff(Jc, s) / Jc - sp.diff(G, s) / G).subs(s, sc)
    return float(2 * sp.pi * G.subs(s, sc) / denom), float(sc)


def test_eval_examples():
    lin = Schedule.linear(1.0)
    assert lin.eval(0.0) == (1.0, 0.0)
    assert np.allclose(lin.eval(0.5), (0.5, 0.5))
    assert np.allclose(Schedule.quadratic(1.0).eval(0.5), (1.0, 1.0))


def test_analytic_forms_exact():
    s = np.linspace(0, 1, 11)
    g, j = Schedule.linear(2.0, J=1.4).eval(s)
    assert np.allclose(g, 2.0 * (1 - s)) and np.allclose(j * 1.4, 2.0 * s)
    g, j = Schedule.quadratic(1.5, J=2.0).eval(s)
    assert np.allclose(g, 6.0 * (1 - s) ** 2) and np.allclose(j * 2.0, 6.0 * s**2)


def test_tabulated_exact_on_knots_and_range_error():
    s = np.array([0.0, 0.3, 0.7, 0.9])
    sch = Schedule.tabulated(s, [4.0, 2.0, 0.5, 0.1], [0.0, 1.0, 3.0, 4.0])
    g, j = sch.eval(s)
    assert np.array_equal(g, [4.0, 2.0, 0.5, 0.1]) and np.array_equal(j, [0.0, 1.0, 3.0, 4.0])
    assert np.isclose(sch.eval(0.5)[0], 1.25)
    with pytest.raises(ScheduleRangeError):
        sch.eval(0.95)


@pytest.mark.parametrize("s,g,j", [([0.0, 0.0], [1, 0], [0, 1]), ([0.0, 1.0], [0, 1], [0, 1]),
                                   ([0.0, 1.0], [1, 0], [1, 0]), ([0.0, 1.0], [-1, -2], [0, 1])])
def test_tabulated_validation(s, g, j):
    with pytest.raises(ScheduleError):
        Schedule.tabulated(s, g, j)


def test_csv_roundtrip(tmp_path):
    sch = Schedule.tabulated([0.0, 0.5, 0.8], [3.0, 1.0, 0.2], [0.1, 1.0, 2.5])
    sch.to_csv(tmp_path / "s.csv")
    back = Schedule.from_csv(tmp_path / "s.csv")
    assert np.array_equal(back.s, sch.s) and np.array_equal(back.jcal, sch.jcal)
    (tmp_path / "bad.csv").write_text("s,gamma\n0,1\n")
    with pytest.raises(ScheduleError, match="missing columns"):
        Schedule.from_csv(tmp_path / "bad.csv")


def test_critical_point_examples():
    assert abs(critical_point(Schedule.linear(1.0), 1.0) - 0.5) < 1e-12
    assert abs(critical_point(Schedule.linear(1.0, J=1.0), 2.0) - 1 / 3) < 1e-12


def test_critical_point_tabulated_fixture():
    # hardware-like fixture: transverse field decays fast, Ising scale grows; crossing near 0.36
    s = np.linspace(0.0, 0.8, 81)
    gamma = 6.0 * np.exp(-5.0 * s)
    jcal = 0.1 + 2.5 * s**1.5
    sch = Schedule.tabulated(s, gamma, jcal)
    sc = critical_point(sch, 1.4)
    g, j = sch.eval(sc)
    assert abs(g - 1.4 * j) < 1e-9 * g
    assert abs(sc - 0.36) < 0.02


def test_no_critical_point():
    sch = Schedule.tabulated([0.0, 1.0], [5.0, 4.0], [0.0, 1.0])
    with pytest.raises(NoCriticalPointError):
        critical_point(sch, 1.0)


@pytest.mark.parametrize("kind,beta,J", [("linear", 1.0, 1.0), ("linear", 2.0, 1.0), ("linear", 1.0, 2.0),
                                         ("quadratic", 1.0, 1.0), ("quadratic", 0.7, 3.0)])
def test_kz_b_symbolic_oracle(kind, beta, J):
    if kind == "linear":
        b_ref, sc_ref = sympy_b(lambda s: beta * (1 - s), lambda s: beta * s, J)
        sch = Schedule.linear(beta, 1.0)
    else:
        b_ref, sc_ref = sympy_b(lambda s: 4 * beta * (1 - s) ** 2, lambda s: 4 * beta * s**2, J)
        sch = Schedule.quadratic(beta, 1.0)
    kz = kz_b(sch, J)
    assert abs(kz.s_c - sc_ref) < 1e-10
    assert abs(kz.b - b_ref) < 1e-9 * b_ref


def test_kz_b_values():
    assert abs(kz_b(Schedule.linear(1.0), 1.0).b - np.pi / 4) < 1e-12
    assert abs(kz_b(Schedule.linear(2.0), 1.0).b - np.pi / 2) < 1e-12
    # the symbolic oracle fixes the quadratic value at pi/4 (see test above)
    assert abs(kz_b(Schedule.quadratic(1.0), 1.0).b - np.pi / 4) < 1e-12


def test_kz_b_tabulated_refinement_invariance():
    bs = []
    for n in (11, 101, 1001):
        s = np.linspace(0, 1, n)
        bs.append(kz_b(Schedule.tabulated(s, 1 - s, s), 1.0).b)
    assert np.allclose(bs, np.pi / 4, rtol=1e-6, atol=0)
    s = np.linspace(0, 1, 41)
    sch = Schedule.tabulated(s, 1 - s, s)
    assert abs(kz_b(sch, 1.0, h=1e-4).b - kz_b(sch, 1.0, h=1e-5).b) < 1e-6 * np.pi / 4


def test_kz_b_bad_denominator():
    # Gamma rising faster than Jcal: denominator negative
    s = np.linspace(0, 1, 5)
    with pytest.raises(ScheduleError):
        Schedule.tabulated(s, s, s)


@given(beta=st.floats(0.1, 10.0), J=st.floats(0.2, 5.0), t_a=st.floats(1e-3, 1e4))
def test_tau_q_identity_and_crossing(beta, J, t_a):
    sch = Schedule.linear(beta, 1.0)
    kz = kz_b(sch, J)
    assert kz.b > 0
    assert kz.tau_q(t_a) == kz.b * t_a
    g, j = sch.eval(kz.s_c)
    assert abs(g - j * J) <= 1e-9 * max(g, 1e-300) + 1e-12


def test_from_config(tmp_path):
    sch = Schedule.from_config({"kind": "quadratic", "beta_ghz": 2.0})
    assert sch.kind == "quadratic" and sch.beta_ghz == 2.0
    Schedule.linear().to_csv(tmp_path / "lin.csv", n=21)
    tab = Schedule.from_config({"kind": "tabulated", "path": "lin.csv"}, base_dir=tmp_path)
    assert tab.s.size == 21
