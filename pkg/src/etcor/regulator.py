"""Internal-model synthesis from the regulator equations.

These quantities depend on the true plant and exosystem parameters.  The
controller never reads them; they serve as ground truth for tests and for
the augmented coordinates used in :mod:`etcor.analysis`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import ConfigError, DomainError, SynthesisError
from .graph import Topology, compute_h_matrix
from .plant import AgentPlant, Exosystem

MAX_CONDITION = 1e12


@dataclass(frozen=True)
class CompanionPair:
    Phi: np.ndarray
    Gamma: np.ndarray

    @property
    def degree(self):
        return self.Phi.shape[0]


@dataclass(frozen=True)
class InternalModelPair:
    """Hurwitz ``M`` with ``Q`` such that (M, Q) is controllable."""

    M: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        m = linalg.as_matrix(self.M, "M")
        q = np.asarray(self.Q, dtype=float).reshape(-1, 1)
        if m.shape[0] != m.shape[1] or q.shape[0] != m.shape[0]:
            raise ConfigError("internal model needs M l x l and Q l x 1")
        if not linalg.is_hurwitz(m):
            raise ConfigError("internal model matrix M must be Hurwitz")
        if linalg.controllability_rank(m, q) < m.shape[0]:
            raise ConfigError("(M, Q) must be controllable")
        object.__setattr__(self, "M", m)
        object.__setattr__(self, "Q", q)

    @property
    def degree(self):
        return self.M.shape[0]


@dataclass(frozen=True)
class RegulatorSolution:
    Pi: np.ndarray
    U: np.ndarray
    Upsilon: np.ndarray
    Upsilon_bar: np.ndarray
    T: np.ndarray
    Psi_sigma: np.ndarray
    residuals: dict


def companion_pair(min_poly):
    coeffs = [float(c) for c in min_poly]
    if not coeffs:
        raise ValueError("minimal polynomial coefficient list is empty")
    l = len(coeffs)
    phi = np.zeros((l, l))
    phi[:-1, 1:] = np.eye(l - 1)
    phi[-1, :] = [-c for c in coeffs]
    gamma = np.zeros((1, l))
    gamma[0, 0] = 1.0
    return CompanionPair(phi, gamma)


def compute_T_and_psi(cp: CompanionPair, im: InternalModelPair):
    """Solve ``T Phi - M T = Q Gamma`` and return ``(T, Gamma T^-1)``."""
    if cp.degree != im.degree:
        raise SynthesisError(
            f"internal model has order {im.degree} but the minimal polynomial has degree {cp.degree}"
        )
    T = linalg.solve_sylvester(im.M, cp.Phi, im.Q @ cp.Gamma)
    cond = np.linalg.cond(T)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SynthesisError(f"T is numerically singular (condition {cond:.3g})")
    psi = cp.Gamma @ np.linalg.inv(T)
    return T, psi


def solve_regulator_equations(p: AgentPlant, e: Exosystem, cp: CompanionPair, im: InternalModelPair):
    S, F = e.S, e.F
    l = cp.degree
    Pi = linalg.solve_sylvester(p.A1, S, p.A2 @ F + p.E0)
    U = -(p.A3 @ Pi + p.A4 * F + p.E1 - F @ S) / p.b
    rows = [U]
    for _ in range(l - 1):
        rows.append(rows[-1] @ S)
    Upsilon = np.vstack(rows)
    T, psi = compute_T_and_psi(cp, im)
    Upsilon_bar = T @ Upsilon

    def res(m):
        return float(np.max(np.abs(m))) if m.size else 0.0

    residuals = {
        "pi": res(Pi @ S - p.A1 @ Pi - p.A2 @ F - p.E0),
        "gamma": res(U - cp.Gamma @ Upsilon),
        "upsilon": res(Upsilon @ S - cp.Phi @ Upsilon),
        "T": res(T @ cp.Phi - im.M @ T - im.Q @ cp.Gamma),
        "psi": res(U - psi @ Upsilon_bar),
    }
    return RegulatorSolution(Pi, U, Upsilon, Upsilon_bar, T, psi, residuals)


def synthesize(scenario, tol=1e-9):
    """Companion pair, T, Psi and a regulator solution for every agent of ``scenario``."""
    coeffs = linalg.minimal_polynomial(scenario.exosystem.S, tol)
    cp = companion_pair(coeffs)
    sols = [solve_regulator_equations(p, scenario.exosystem, cp, scenario.internal_model)
            for p in scenario.agents]
    return cp, sols


def beta_for_accuracy(t: Topology, kappa_max, epsilon):
    """Largest common beta whose ultimate tracking bound does not exceed ``epsilon``."""
    if not 0.0 <= kappa_max < 1.0:
        raise DomainError("kappa_max must lie in [0, 1)")
    if epsilon <= 0.0:
        raise DomainError("epsilon must be positive")
    h = compute_h_matrix(t)
    lam_min = linalg.eigenvalues(h @ h).min_real
    return epsilon * lam_min * (1.0 - kappa_max) / t.n_agents
