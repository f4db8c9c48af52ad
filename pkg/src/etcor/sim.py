"""Fixed-step closed-loop simulation.

The engine integrates plants, exosystem, internal models, adaptive laws
and dynamic trigger variables as one stacked state with classical RK4.
Control inputs are held constant over a step.  Trigger conditions are
checked at step boundaries only, so detection latency is at most ``dt``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import block_diag

from .controller import Mode
from .errors import DivergenceError, NumericError
from .graph import compute_h_matrix
from .scenario import Scenario

TRACE_SCHEMA = "etcor-trace/1"
EVENTS_SCHEMA = "etcor-events/1"


@dataclass
class Event:
    agent: int
    step: int
    t: float
    zeta1: float
    zeta2: float


@dataclass
class Trace:
    """Sampled closed-loop signals plus the complete event log.

    Per-agent arrays have shape ``(samples, N)``; ``state`` holds the full
    stacked vector ``[x, v, eta, psi_hat, K, h]`` at every sample.
    """

    t: np.ndarray
    y0: np.ndarray
    y: np.ndarray
    u: np.ndarray
    K: np.ndarray
    h: np.ndarray
    f: np.ndarray
    ev: np.ndarray
    zeta_sq: np.ndarray
    held_u: np.ndarray
    held_fb: np.ndarray
    state: np.ndarray
    events: list
    dt: float
    mode: str
    scenario_hash: str
    layout: dict = field(repr=False)
    completed: bool = True

    @property
    def e(self):
        return self.y - self.y0[:, None]

    @property
    def n_agents(self):
        return self.y.shape[1]

    def events_for(self, agent):
        return [ev for ev in self.events if ev.agent == agent]

    def block(self, name):
        lo, hi = self.layout[name]
        return self.state[:, lo:hi]

    @property
    def psi_hat(self):
        n = self.n_agents
        return self.block("psi").reshape(len(self.t), n, -1)

    @property
    def eta(self):
        n = self.n_agents
        return self.block("eta").reshape(len(self.t), n, -1)

    @property
    def v(self):
        return self.block("v")

    def agent_state(self, i):
        """State history of agent ``i`` (0-based)."""
        lo, hi = self.layout["x"][i]
        return self.state[:, lo:hi]

    def write_csv(self, path):
        n = self.n_agents
        cols = ["t", "y0"]
        for i in range(1, n + 1):
            cols += [f"y{i}", f"e{i}", f"u{i}", f"K{i}", f"h{i}", f"f{i}"]
        e = self.e
        with open(path, "w", newline="") as fh:
            fh.write(f"# {TRACE_SCHEMA} mode={self.mode} dt={self.dt!r} scenario={self.scenario_hash}\n")
            w = csv.writer(fh)
            w.writerow(cols)
            for k in range(len(self.t)):
                row = [repr(float(self.t[k])), repr(float(self.y0[k]))]
                for i in range(n):
                    row += [repr(float(v)) for v in (self.y[k, i], e[k, i], self.u[k, i],
                                                     self.K[k, i], self.h[k, i], self.f[k, i])]
                w.writerow(row)

    def write_events_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(f"# {EVENTS_SCHEMA} mode={self.mode} dt={self.dt!r} scenario={self.scenario_hash}\n")
            w = csv.writer(fh)
            w.writerow(["agent", "t_k", "zeta1", "zeta2"])
            for ev in self.events:
                w.writerow([ev.agent, repr(ev.t), repr(ev.zeta1), repr(ev.zeta2)])


class _Model:
    """Stacked matrices and index ranges for one scenario."""

    def __init__(self, s: Scenario):
        n = s.n_agents
        l = s.internal_model.degree
        q = s.exosystem.q
        dims = [p.n for p in s.agents]
        nx = sum(dims)
        self.n, self.l, self.q, self.nx = n, l, q, nx
        offs = np.cumsum([0] + dims)
        self.x_slices = [(int(offs[i]), int(offs[i + 1])) for i in range(n)]

        A = block_diag(*[p.A for p in s.agents])
        B = block_diag(*[p.B for p in s.agents])
        E = np.vstack([p.E for p in s.agents])
        C = block_diag(*[p.C for p in s.agents])
        M, Q = s.internal_model.M, s.internal_model.Q
        Mb = np.kron(np.eye(n), M)
        Qb = np.kron(np.eye(n), Q)

        # linear part z = [x, v, eta]
        nz = nx + q + n * l
        lin = np.zeros((nz, nz))
        lin[:nx, :nx] = A
        lin[:nx, nx:nx + q] = E
        lin[nx:nx + q, nx:nx + q] = s.exosystem.S
        lin[nx + q:, nx + q:] = Mb
        bu = np.zeros((nz, n))
        bu[:nx] = B
        bu[nx + q:] = Qb
        self.lin, self.bu, self.nz = lin, bu, nz

        H = compute_h_matrix(s.topology)
        a0 = s.topology.adjacency[1:, 0]
        F = s.exosystem.F
        # e_v = H (y - 1 y0) = H C x - a0 F v
        gev = np.zeros((n, nz))
        gev[:, :nx] = H @ C
        gev[:, nx:nx + q] = -np.outer(a0, F[0])
        self.gev = gev
        self.C = C
        self.F = F[0]
        self.H = H

        self.i_v = (nx, nx + q)
        self.i_eta = (nx + q, nz)
        self.i_psi = (nz, nz + n * l)
        self.i_K = (nz + n * l, nz + n * l + n)
        self.i_h = (nz + n * l + n, nz + n * l + 2 * n)
        self.dim = self.i_h[1]
        # owning agent (1-based) of every state entry; 0 for the exosystem
        owner = np.zeros(self.dim, dtype=int)
        for i, (lo, hi) in enumerate(self.x_slices):
            owner[lo:hi] = i + 1
        per_l = np.repeat(np.arange(1, n + 1), l)
        owner[slice(*self.i_eta)] = per_l
        owner[slice(*self.i_psi)] = per_l
        owner[slice(*self.i_K)] = np.arange(1, n + 1)
        owner[slice(*self.i_h)] = np.arange(1, n + 1)
        self.owner = owner

        P = s.params
        self.gamma = np.repeat([p.gamma for p in P], l)
        self.mask = np.concatenate([p.adapt_mask(l) for p in P])
        self.delta = np.array([p.delta for p in P])
        self.kappa = np.array([p.kappa for p in P])
        self.beta = np.array([p.beta for p in P])
        self.alpha = np.array([p.alpha for p in P])
        self.neg_gamma_mask = -self.gamma * self.mask
        # sum_l: per-agent sum over the l internal-model entries; spread_l its transpose
        self.sum_l = np.kron(np.eye(n), np.ones((1, l)))
        self.spread_l = self.sum_l.T.copy()
        self.s_eta = slice(*self.i_eta)
        self.s_psi = slice(*self.i_psi)
        self.s_K = slice(*self.i_K)
        self.s_h = slice(*self.i_h)

    def layout(self):
        return {
            "x": self.x_slices,
            "v": self.i_v,
            "eta": self.i_eta,
            "psi": self.i_psi,
            "K": self.i_K,
            "h": self.i_h,
        }

    def initial_state(self, s: Scenario):
        ic = s.initial
        return np.concatenate([
            np.concatenate([np.asarray(x, float) for x in ic.x]),
            np.asarray(ic.v, float),
            np.concatenate([np.asarray(e, float) for e in ic.eta]),
            np.concatenate([np.asarray(p, float) for p in ic.psi_hat]),
            np.asarray(ic.K, float),
            np.asarray(ic.h, float),
        ])

    def signals(self, X):
        """(e_v, K e_v, psi_hat eta) at state X."""
        ev = self.gev @ X[:self.nz]
        K = X[self.s_K]
        psi_eta = self.sum_l @ (X[self.s_psi] * X[self.s_eta])
        return ev, K * ev, psi_eta

    def rhs(self, X, lin_u, held_u, held_fb, sampled=None):
        """Closed-loop vector field with inputs frozen over the step.

        ``lin_u`` is ``bu @ u``.  When ``sampled`` is given as
        ``(ev_k, eta_k)`` the adaptive laws use those held values.
        """
        nz = self.nz
        z = X[:nz]
        eta = X[self.s_eta]
        psi = X[self.s_psi]
        K = X[self.s_K]
        ev = self.gev @ z
        out = np.empty_like(X)
        out[:nz] = self.lin @ z + lin_u
        if sampled is None:
            ev_a, eta_a = ev, eta
        else:
            ev_a, eta_a = sampled
        out[self.s_psi] = self.neg_gamma_mask * (self.spread_l @ ev_a) * eta_a
        out[self.s_K] = self.delta * ev_a * ev_a
        zeta1 = held_fb - K * ev
        zeta2 = held_u - self.sum_l @ (psi * eta)
        f = zeta1 * zeta1 + zeta2 * zeta2 - self.kappa * ev * ev - self.beta
        out[self.s_h] = -self.alpha * X[self.s_h] - f
        return out


def run(s: Scenario) -> Trace:
    """Simulate ``s`` over its horizon; raises ``DivergenceError`` on blow-up."""
    model = _Model(s)
    integ = s.integrator
    dt = integ.dt
    n_steps = integ.n_steps
    dec = integ.decimate
    n = model.n
    modes = [p.mode for p in s.params]
    is_dyn = np.array([m is Mode.DYNAMIC for m in modes])
    is_static = np.array([m is Mode.STATIC for m in modes])
    is_per = np.array([m is Mode.PERIODIC for m in modes])
    periods = np.array([p.period if p.period else np.inf for p in s.params])
    full_sample = integ.periodic_sample == "full" and bool(is_per.all())
    guard = integ.divergence_guard
    mode_label = modes[0].value if len(set(modes)) == 1 else "mixed"

    X = model.initial_state(s)
    ev, kev, psi_eta = model.signals(X)
    held_u = psi_eta.copy()
    held_fb = kev.copy()
    last_step = np.zeros(n, dtype=int)
    events = [Event(i + 1, 0, 0.0, 0.0, 0.0) for i in range(n)]
    sampled_ev = ev.copy()
    sampled_eta = X[model.i_eta[0]:model.i_eta[1]].copy()

    # the final step is always recorded, even off the decimation grid
    n_samples = n_steps // dec + 1 + (1 if n_steps % dec else 0)
    rec_t = np.empty(n_samples)
    rec_state = np.empty((n_samples, model.dim))
    rec = {k: np.empty((n_samples, n)) for k in ("u", "f", "ev", "zeta_sq", "held_u", "held_fb")}

    def record(j, k, X, ev, f, zsq):
        rec_t[j] = k * dt
        rec_state[j] = X
        rec["u"][j] = held_u - held_fb
        rec["f"][j] = f
        rec["ev"][j] = ev
        rec["zeta_sq"][j] = zsq
        rec["held_u"][j] = held_u
        rec["held_fb"][j] = held_fb

    f0 = -model.kappa * ev**2 - model.beta
    record(0, 0, X, ev, f0, np.zeros(n))
    j = 1

    def finish(count):
        lay = model.layout()
        st = rec_state[:count]
        x = st[:, :model.nx]
        return Trace(
            t=rec_t[:count].copy(),
            y0=st[:, model.i_v[0]:model.i_v[1]] @ model.F,
            y=x @ model.C.T,
            u=rec["u"][:count].copy(),
            K=st[:, model.i_K[0]:model.i_K[1]].copy(),
            h=st[:, model.i_h[0]:model.i_h[1]].copy(),
            f=rec["f"][:count].copy(),
            ev=rec["ev"][:count].copy(),
            zeta_sq=rec["zeta_sq"][:count].copy(),
            held_u=rec["held_u"][:count].copy(),
            held_fb=rec["held_fb"][:count].copy(),
            state=st.copy(),
            events=events,
            dt=dt,
            mode=mode_label,
            scenario_hash=s.digest(),
            layout=lay,
            completed=count == n_samples,
        )

    half = 0.5 * dt
    for k in range(n_steps):
        u = held_u - held_fb
        lin_u = model.bu @ u
        sampled = (sampled_ev, sampled_eta) if full_sample else None
        k1 = model.rhs(X, lin_u, held_u, held_fb, sampled)
        k2 = model.rhs(X + half * k1, lin_u, held_u, held_fb, sampled)
        k3 = model.rhs(X + half * k2, lin_u, held_u, held_fb, sampled)
        k4 = model.rhs(X + dt * k3, lin_u, held_u, held_fb, sampled)
        X = X + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        step = k + 1
        t = step * dt

        if not np.all(np.isfinite(X)):
            raise NumericError(f"non-finite state at t={t:.6g}", t)
        big = np.abs(X)
        if big.max() >= guard:
            agent = int(model.owner[int(np.argmax(big))]) or None
            raise DivergenceError(
                f"divergence guard {guard:g} tripped at t={t:.6g}"
                + (f" (agent {agent})" if agent else ""),
                t, agent, trace=finish(j),
            )

        ev, kev, psi_eta = model.signals(X)
        zeta1 = held_fb - kev
        zeta2 = held_u - psi_eta
        zsq = zeta1**2 + zeta2**2
        f = zsq - model.kappa * ev**2 - model.beta
        h = X[model.i_h[0]:model.i_h[1]]
        elapsed = (step - last_step) * dt
        fired = (is_dyn & (f >= h)) | (is_static & (f >= 0.0)) | (
            is_per & (elapsed >= periods * (1.0 - 1e-9)))
        if fired.any():
            for i in np.flatnonzero(fired):
                events.append(Event(int(i) + 1, step, t, float(zeta1[i]), float(zeta2[i])))
            held_u = np.where(fired, psi_eta, held_u)
            held_fb = np.where(fired, kev, held_fb)
            last_step = np.where(fired, step, last_step)
            if full_sample:
                sampled_ev = np.where(fired, ev, sampled_ev)
                eta = X[model.i_eta[0]:model.i_eta[1]]
                sampled_eta = np.where(np.repeat(fired, model.l), eta, sampled_eta)
            f = np.where(fired, -model.kappa * ev**2 - model.beta, f)

        if step % dec == 0 or step == n_steps:
            record(j, step, X, ev, f, zsq)
            j += 1

    return finish(j)


def run_baseline(s: Scenario, periods) -> Trace:
    """Same engine with every agent sampling periodically."""
    periods = [float(p) for p in periods]
    if len(periods) != s.n_agents or any(p <= 0 for p in periods):
        raise ValueError("need one positive period per agent")
    return run(s.with_mode(Mode.PERIODIC, periods))
