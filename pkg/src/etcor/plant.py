"""Agent and exosystem models.

Agents are stored in generic state-space form ``(A, B, C, E)``.  The
normal-form partition (zero dynamics ``z`` on top, output ``xi`` as the
last state) is read off the matrices on demand.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import ConfigError, DimensionError


@dataclass(frozen=True)
class AgentPlant:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    E: np.ndarray

    def __post_init__(self):
        a = linalg.as_matrix(self.A, "A")
        n = a.shape[0]
        if a.shape != (n, n) or n < 2:
            raise ConfigError(f"agent A must be square with n >= 2, got {a.shape}")
        b = np.asarray(self.B, dtype=float).reshape(-1, 1)
        c = np.asarray(self.C, dtype=float).reshape(1, -1)
        e = linalg.as_matrix(self.E, "E")
        if b.shape[0] != n or c.shape[1] != n or e.shape[0] != n:
            raise ConfigError("agent matrices have inconsistent dimensions")
        unit = np.zeros((1, n))
        unit[0, -1] = 1.0
        if not np.array_equal(c, unit):
            raise ConfigError("C must be [0 ... 0 1] (output is the last state)")
        if np.any(b[:-1] != 0.0):
            raise ConfigError("B must be zero except for its last entry (unity relative degree)")
        if not b[-1, 0] > 0.0:
            raise ConfigError("high-frequency gain b (last entry of B) must be positive")
        for name, val in (("A", a), ("B", b), ("C", c), ("E", e)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def q(self):
        return self.E.shape[1]

    # normal-form blocks
    @property
    def A1(self):
        return self.A[:-1, :-1]

    @property
    def A2(self):
        return self.A[:-1, -1:]

    @property
    def A3(self):
        return self.A[-1:, :-1]

    @property
    def A4(self):
        return float(self.A[-1, -1])

    @property
    def E0(self):
        return self.E[:-1, :]

    @property
    def E1(self):
        return self.E[-1:, :]

    @property
    def b(self):
        return float(self.B[-1, 0])

    def is_minimum_phase(self):
        return linalg.is_hurwitz(self.A1)


def harmonic_matrix(sigma):
    return np.array([[0.0, sigma], [-sigma, 0.0]])


@dataclass(frozen=True)
class Exosystem:
    sigma: float
    S: np.ndarray
    F: np.ndarray

    def __post_init__(self):
        s = linalg.as_matrix(self.S, "S")
        f = np.asarray(self.F, dtype=float).reshape(1, -1)
        if s.shape[0] != s.shape[1] or f.shape[1] != s.shape[0]:
            raise ConfigError("exosystem S must be q x q and F 1 x q")
        s.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "S", s)
        object.__setattr__(self, "F", f)
        object.__setattr__(self, "sigma", float(self.sigma))

    @classmethod
    def harmonic(cls, sigma, F=(1.0, 0.0)):
        return cls(sigma, harmonic_matrix(sigma), np.asarray(F, dtype=float))

    @property
    def q(self):
        return self.S.shape[0]

    def satisfies_assumption1(self, tol=1e-8):
        """Eigenvalues of S semi-simple and on the imaginary axis."""
        spec = linalg.eigenvalues(self.S)
        on_axis = np.all(np.abs(spec.eigenvalues.real) <= tol * max(1.0, np.abs(spec.eigenvalues).max()))
        return bool(on_axis) and linalg.is_semisimple(self.S)


def agent_derivative(p: AgentPlant, x, u, v):
    x = np.asarray(x, dtype=float).reshape(-1)
    v = np.asarray(v, dtype=float).reshape(-1)
    if x.shape[0] != p.n or v.shape[0] != p.q:
        raise DimensionError(f"state has {x.shape[0]} entries (want {p.n}), exo state {v.shape[0]} (want {p.q})")
    return p.A @ x + p.B[:, 0] * float(u) + p.E @ v


def exosystem_derivative(e: Exosystem, v):
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape[0] != e.q:
        raise DimensionError(f"exo state has {v.shape[0]} entries, want {e.q}")
    return e.S @ v


# -- bundled example: two third-order and two fourth-order agents ---------

NOMINAL_C = (-2.0, -2.0, -2.0, 2.0)

EXAMPLE_W = (
    (0.5, 1.0, -1.0, 0.1),
    (-0.5, 0.5, -1.5, 1.5),
    (0.2, 0.5, -0.5, 1.0),
    (0.1, 1.0, -1.0, 1.5),
)


def example_agent(order, c, q=2):
    """Third- or fourth-order example agent built from parameters ``c = (c1, c2, c3, c4)``."""
    c1, c2, c3, c4 = c
    if order == 3:
        a = [[c1, 1.0, 0.0],
             [0.0, -1.0, 1.0],
             [1.0, c2, c3]]
    elif order == 4:
        a = [[c1, 0.0, 0.0, 1.0],
             [0.0, -1.0, 0.0, 1.0],
             [0.0, 0.0, -2.0, 1.0],
             [1.0, 1.0, c2, c3]]
    else:
        raise ValueError("example agents are of order 3 or 4")
    b = np.zeros(order)
    b[-1] = c4
    cmat = np.zeros(order)
    cmat[-1] = 1.0
    return AgentPlant(np.array(a), b, cmat, np.zeros((order, q)))


def build_example_scenario():
    """The four-agent harmonic-tracking example with its published parameters."""
    from .scenario import Scenario, InitialConditions, IntegratorSettings
    from .controller import ControllerParams
    from .graph import Topology
    from .regulator import InternalModelPair

    agents = []
    for k, w in enumerate(EXAMPLE_W):
        c = tuple(c0 + dw for c0, dw in zip(NOMINAL_C, w))
        agents.append(example_agent(3 if k < 2 else 4, c))
    gammas = (80.0, 10.0, 10.0, 10.0)
    params = [
        ControllerParams(gamma=g, delta=5.0, kappa=0.9, beta=0.6, alpha=1.0, psi_adapt=(True, False))
        for g in gammas
    ]
    ic = InitialConditions(
        x=[np.array(v, dtype=float) for v in ([-2, 1, -1], [1, -1, -2], [0, 2, -1, 2], [-2, 2, 0, 1])],
        v=np.array([0.2, 1.0]),
        eta=[np.array(v, dtype=float) for v in ([-1, -2], [3, 2], [4, 6], [-2, -4])],
        psi_hat=[np.array([15.0, 10.0]) for _ in range(4)],
        K=[10.0] * 4,
        h=[1.0] * 4,
    )
    return Scenario(
        name="four-agent harmonic example",
        agents=agents,
        exosystem=Exosystem.harmonic(2.0),
        topology=Topology.default(),
        params=params,
        internal_model=InternalModelPair(
            np.array([[0.0, 1.0], [-25.0, -10.0]]), np.array([[0.0], [1.0]])
        ),
        initial=ic,
        integrator=IntegratorSettings(dt=1e-3, horizon=30.0, decimate=10),
        uncertainty=[np.array(w) for w in EXAMPLE_W],
    )
