import time

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from etcor import linalg, regulator
from etcor.errors import ConfigError, DomainError, SingularityError, SynthesisError
from etcor.graph import Topology
from etcor.plant import AgentPlant, Exosystem
from etcor.regulator import InternalModelPair, companion_pair, compute_T_and_psi

IM = InternalModelPair(np.array([[0.0, 1.0], [-25.0, -10.0]]), np.array([[0.0], [1.0]]))


def test_companion_pairs():
    cp = companion_pair([4, 0])
    assert np.array_equal(cp.Phi, [[0, 1], [-4, 0]])
    assert np.array_equal(cp.Gamma, [[1, 0]])
    cp = companion_pair([1])
    assert np.array_equal(cp.Phi, [[-1]]) and np.array_equal(cp.Gamma, [[1]])
    assert np.array_equal(companion_pair([6, 11, 6]).Phi[-1], [-6, -11, -6])


def test_T_and_psi_at_sigma_two():
    T, psi = compute_T_and_psi(companion_pair([4, 0]), IM)
    assert np.allclose(np.linalg.inv(T), [[21, 10], [-40, 21]], atol=1e-9)
    assert np.allclose(psi, [[21, 10]], atol=1e-9)


def test_T_and_psi_fast():
    cp = companion_pair([4, 0])
    compute_T_and_psi(cp, IM)
    t0 = time.perf_counter()
    for _ in range(100):
        compute_T_and_psi(cp, IM)
    assert (time.perf_counter() - t0) / 100 < 1e-3


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 4.95))
def test_psi_closed_form(sigma):
    # closed form of T^-1 and Gamma T^-1 for the critically damped internal model
    T, psi = compute_T_and_psi(companion_pair([sigma**2, 0.0]), IM)
    s2 = sigma**2
    assert np.allclose(np.linalg.inv(T), [[25 - s2, 10], [-10 * s2, 25 - s2]], atol=1e-8)
    assert np.allclose(psi, [[25 - s2, 10]], atol=1e-8)


def test_degree_mismatch():
    with pytest.raises(SynthesisError):
        compute_T_and_psi(companion_pair([1.0]), IM)


def test_shared_eigenvalues():
    # internal model with the exosystem's own spectrum is rejected before reaching T
    with pytest.raises(ConfigError):
        InternalModelPair(np.array([[0.0, 2.0], [-2.0, 0.0]]), np.array([[0.0], [1.0]]))
    with pytest.raises(SingularityError):
        linalg.solve_sylvester(np.diag([-1.0, -2.0]), np.diag([-1.0, 3.0]), np.eye(2))


def test_uncontrollable_internal_model():
    with pytest.raises(ConfigError):
        InternalModelPair(np.diag([-1.0, -2.0]), np.array([[0.0], [1.0]]))


def test_zero_forcing_gives_zero_pi():
    p = AgentPlant(np.array([[-1.0, 0.0], [0.0, 1.0]]), [0.0, 1.0], [0.0, 1.0], np.zeros((2, 2)))
    e = Exosystem.harmonic(2.0)
    sol = regulator.solve_regulator_equations(p, e, companion_pair([4, 0]), IM)
    assert np.array_equal(sol.Pi, np.zeros((1, 2)))


def test_example_residuals_and_oracle(example, regs):
    S = example.exosystem.S
    F = example.exosystem.F
    for p, sol in zip(example.agents, regs):
        assert max(sol.residuals.values()) <= 1e-9
        rhs = p.A2 @ F + p.E0
        oracle = scipy.linalg.solve_sylvester(-p.A1, S, rhs)
        assert np.allclose(sol.Pi, oracle, atol=1e-12)
        # Upsilon_bar = T Upsilon reproduces U through Psi_sigma
        assert np.allclose(sol.Psi_sigma @ sol.Upsilon_bar, sol.U, atol=1e-10)


def test_agent_one_pi_by_hand(regs):
    # row 2 solves Pi_2 (S + I) = [1, 0]; row 1 solves Pi_1 (S + 1.5 I) = Pi_2
    assert np.allclose(regs[0].Pi, [[-0.08, -0.16], [0.2, -0.4]], atol=1e-12)


def test_beta_for_accuracy():
    assert regulator.beta_for_accuracy(Topology(1, [(0, 1)]), 0.0, 1.0) == pytest.approx(1.0)
    assert regulator.beta_for_accuracy(Topology.default(), 0.9, 1650.0) == pytest.approx(0.6, rel=1e-3)
    with pytest.raises(DomainError):
        regulator.beta_for_accuracy(Topology.default(), 1.0, 1.0)
    with pytest.raises(DomainError):
        regulator.beta_for_accuracy(Topology.default(), 0.5, 0.0)
