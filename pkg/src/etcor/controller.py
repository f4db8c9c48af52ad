"""Per-agent event-triggered adaptive controller.

Each agent runs an internal model ``eta' = M eta + Q u`` driven by a
zero-order-held input ``u = psi_hat(t_k) eta(t_k) - K(t_k) e_v(t_k)``.
The estimate ``psi_hat`` and the gain ``K`` adapt continuously from the
local consensus error ``e_v``; a new sample is taken whenever the trigger
function ``f`` crosses the threshold of the selected mode.

The functions here are the reference per-agent definitions.  The simulation
engine evaluates the same formulas in vectorized form.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError

PERIOD_SLACK = 1e-9


class Mode(str, enum.Enum):
    DYNAMIC = "dynamic"
    STATIC = "static"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class ControllerParams:
    gamma: float
    delta: float
    kappa: float
    beta: float
    alpha: float
    mode: Mode = Mode.DYNAMIC
    period: float | None = None
    # entries of psi_hat that adapt; the others stay at their initial value
    psi_adapt: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.gamma <= 0 or self.delta <= 0:
            raise ConfigError("adaptation gains gamma and delta must be positive")
        if not 0.0 < self.kappa < 1.0:
            raise ConfigError("kappa must lie in (0, 1)")
        if self.beta <= 0 or self.alpha <= 0:
            raise ConfigError("beta and alpha must be positive")
        if self.mode is Mode.PERIODIC and not (self.period and self.period > 0):
            raise ConfigError("periodic mode needs a positive period")
        if self.psi_adapt is not None:
            object.__setattr__(self, "psi_adapt", tuple(bool(b) for b in self.psi_adapt))

    def adapt_mask(self, l):
        if self.psi_adapt is None:
            return np.ones(l)
        if len(self.psi_adapt) != l:
            raise ConfigError(f"psi_adapt has {len(self.psi_adapt)} entries, internal model order is {l}")
        return np.array(self.psi_adapt, dtype=float)


@dataclass(frozen=True)
class ControllerState:
    eta: np.ndarray
    psi_hat: np.ndarray
    K: float
    h: float
    held_u_term: float = 0.0
    held_fb_term: float = 0.0
    last_trigger_time: float = 0.0
    trigger_count: int = 0


@dataclass(frozen=True)
class TriggerDecision:
    fired: bool
    f_value: float
    zeta1: float
    zeta2: float


def compute_ev(outputs, t, i):
    """Consensus error of agent ``i``: sum of ``a_ij (y_i - y_j)`` over in-neighbors, node 0 included."""
    yi = outputs[i]
    return float(sum(yi - outputs[j] for j in t.in_neighbors(i)))


def control_input(s: ControllerState):
    return s.held_u_term - s.held_fb_term


def controller_derivatives(s: ControllerState, u, e_vi, f_i, p: ControllerParams, M, Q):
    eta = np.asarray(s.eta, dtype=float)
    eta_dot = M @ eta + np.asarray(Q, dtype=float).reshape(-1) * u
    psi_dot = -p.gamma * e_vi * eta * p.adapt_mask(eta.shape[0])
    K_dot = p.delta * e_vi**2
    h_dot = -p.alpha * s.h - f_i
    return eta_dot, psi_dot, K_dot, h_dot


def trigger_function(zeta1, zeta2, e_vi, p: ControllerParams):
    return zeta1**2 + zeta2**2 - p.kappa * e_vi**2 - p.beta


def trigger_evaluate(s: ControllerState, current_K_ev, current_psi_eta, e_vi, p: ControllerParams, t):
    zeta1 = s.held_fb_term - current_K_ev
    zeta2 = s.held_u_term - current_psi_eta
    f = trigger_function(zeta1, zeta2, e_vi, p)
    if p.mode is Mode.DYNAMIC:
        fired = f >= s.h
    elif p.mode is Mode.STATIC:
        fired = f >= 0.0
    else:
        fired = (t - s.last_trigger_time) >= p.period * (1.0 - PERIOD_SLACK)
    return TriggerDecision(bool(fired), float(f), float(zeta1), float(zeta2))


def on_trigger(s: ControllerState, current_K_ev, current_psi_eta, t):
    return replace(
        s,
        held_u_term=current_psi_eta,
        held_fb_term=current_K_ev,
        last_trigger_time=t,
        trigger_count=s.trigger_count + 1,
    )
