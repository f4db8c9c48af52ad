"""Post-processing of simulation traces.

Tracking accuracy, event statistics, the augmented (error) coordinates
built from the regulator solutions, and a numerical Lyapunov check.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag

from . import linalg
from .errors import CertificateError, DomainError
from .graph import compute_h_matrix


def ultimate_bound(t, kappas, betas):
    """Asymptotic cap on every |e_i|: ``N beta_max / (lambda_min(H^2) (1 - kappa_max))``."""
    kmax = max(kappas)
    bmax = max(betas)
    if not kmax < 1.0:
        raise DomainError("kappa_max must be below 1")
    h = compute_h_matrix(t)
    lam = linalg.eigenvalues(h @ h).min_real
    if lam <= 0:
        raise DomainError("H is not positive definite")
    return t.n_agents * bmax / (lam * (1.0 - kmax))


@dataclass
class AgentEventStats:
    count: int
    min_gap: float | None
    avg_gap: float | None
    max_gap: float | None


@dataclass
class EventStats:
    agents: list

    @property
    def total(self):
        return sum(a.count for a in self.agents)

    @property
    def min_gap(self):
        gaps = [a.min_gap for a in self.agents if a.min_gap is not None]
        return min(gaps) if gaps else None


def event_stats(tr, t_end=None, n_agents=None):
    """Counts and inter-event gaps per agent, optionally restricted to ``t <= t_end``."""
    n = n_agents if n_agents is not None else tr.n_agents
    per = []
    for i in range(1, n + 1):
        times = [ev.t for ev in tr.events if ev.agent == i and (t_end is None or ev.t <= t_end + 1e-12)]
        if len(times) >= 2:
            gaps = np.diff(times)
            per.append(AgentEventStats(len(times), float(gaps.min()), float(gaps.mean()), float(gaps.max())))
        else:
            per.append(AgentEventStats(len(times), None, None, None))
    return EventStats(per)


def tracking_metrics(tr, tail_fraction):
    """Max |e_i| per agent over the last ``tail_fraction`` of the run."""
    if not 0.0 < tail_fraction <= 1.0:
        raise DomainError("tail_fraction must lie in (0, 1]")
    t_end = tr.t[-1]
    start = t_end - tail_fraction * t_end
    sel = tr.t >= start - 1e-12
    return np.abs(tr.e[sel]).max(axis=0)


def augmented_transform(s, x, v, eta, regs):
    """Error coordinates ``(z_bar, xi_bar, eta_bar)`` per agent at one instant.

    ``x`` and ``eta`` are per-agent lists (or the stacked vectors), ``regs``
    the regulator solutions for the true parameters.
    """
    v = np.asarray(v, dtype=float)
    F = s.exosystem.F[0]
    Q = s.internal_model.Q[:, 0]
    xs = _split(x, [p.n for p in s.agents])
    etas = _split(eta, [s.internal_model.degree] * s.n_agents)
    out = []
    for p, xi_state, eta_i, reg in zip(s.agents, xs, etas, regs):
        z = xi_state[:-1]
        xi = xi_state[-1]
        z_bar = z - reg.Pi @ v
        xi_bar = xi - F @ v
        eta_bar = eta_i - reg.Upsilon_bar @ v - Q * xi_bar / p.b
        out.append((z_bar, float(xi_bar), eta_bar))
    return out


def _split(vec, sizes):
    if isinstance(vec, (list, tuple)):
        return [np.asarray(a, dtype=float) for a in vec]
    vec = np.asarray(vec, dtype=float).reshape(-1)
    offs = np.cumsum([0] + list(sizes))
    return [vec[offs[i]:offs[i + 1]] for i in range(len(sizes))]


def augmented_rhs_xi(s, reg, p, z_bar, xi_bar, eta_bar, eta, psi_hat, ev, held_u, held_fb):
    """Right-hand side of the ``xi_bar`` equation of the augmented system."""
    psi = reg.Psi_sigma[0]
    Q = s.internal_model.Q[:, 0]
    a5 = p.A4 + float(psi @ Q)
    u_bar = -held_fb
    return float(p.A3[0] @ z_bar + a5 * xi_bar + p.b * u_bar + p.b * psi @ eta_bar
                 + p.b * (psi_hat - psi) @ eta + p.b * (held_u - psi_hat @ eta))


@dataclass(frozen=True)
class LyapunovCertificate:
    P1: np.ndarray
    P2: np.ndarray
    mu0: float
    K0: float
    mu1: float
    b_min: float


def build_certificate(s, regs):
    """Constants of the Lyapunov-like function at the scenario's true parameters."""
    n = s.n_agents
    M = s.internal_model.M
    Q = s.internal_model.Q
    H = compute_h_matrix(s.topology)
    Hinv = np.linalg.inv(H)
    psi = regs[0].Psi_sigma
    bs = np.array([p.b for p in s.agents])
    try:
        A1 = block_diag(*[p.A1 for p in s.agents])
        P1 = linalg.solve_lyapunov(A1, 2.0 * np.eye(A1.shape[0]))
        Mb = np.kron(np.eye(n), M)
        P2 = linalg.solve_lyapunov(Mb, 2.0 * np.eye(Mb.shape[0]))
    except (DomainError, linalg.SingularityError) as exc:
        raise CertificateError(f"Lyapunov equations have no positive definite solution: {exc}") from exc
    A2 = block_diag(*[p.A2 for p in s.agents])
    A3 = block_diag(*[p.A3 for p in s.agents])
    a5 = np.array([p.A4 + (psi @ Q).item() for p in s.agents])
    A5 = np.diag(a5)
    A6 = block_diag(*[-(Q @ p.A3) / p.b for p in s.agents])
    A7 = block_diag(*[(M @ Q + Q * (psi @ Q).item() - Q * a5[i]) / p.b for i, p in enumerate(s.agents)])
    bpsi = np.kron(np.diag(bs), psi)

    def nrm(m):
        return float(np.linalg.norm(m, 2))

    mu0 = 2.0 * nrm(P2 @ A6) ** 2 + 2.0
    # 2 xi^T H A5 xi = 2 e_v^T A5 H^-1 e_v, hence the factor 2 on the first term
    mu1 = (2.0 * nrm(A5 @ Hinv) + mu0 * nrm(P1 @ A2 @ Hinv) ** 2 + 4.0 * nrm(P2 @ A7 @ Hinv) ** 2
           + nrm(A3) ** 2 + 4.0 * nrm(bpsi) ** 2 + 2.0 * nrm(np.diag(bs)) ** 2)
    b_min = float(bs.min())
    K0 = (mu1 + 1.0) / (2.0 * b_min)
    if not (linalg.is_positive_definite(P1) and linalg.is_positive_definite(P2)):
        raise CertificateError("Lyapunov solutions are not positive definite")
    return LyapunovCertificate(P1, P2, mu0, K0, mu1, b_min)


def lyapunov_value(s, cert, regs, x, v, eta, psi_hat, K, h):
    """Evaluate the Lyapunov-like function at one instant.

    Returns ``(V, region)`` where ``region`` is
    ``|z_bar|^2 + |eta_bar|^2 + |e_v|^2``.
    """
    coords = augmented_transform(s, x, v, eta, regs)
    z_bar = np.concatenate([c[0] for c in coords])
    xi_bar = np.array([c[1] for c in coords])
    eta_bar = np.concatenate([c[2] for c in coords])
    H = compute_h_matrix(s.topology)
    psi = regs[0].Psi_sigma[0]
    V = cert.mu0 * z_bar @ cert.P1 @ z_bar + eta_bar @ cert.P2 @ eta_bar + xi_bar @ H @ xi_bar
    for i, (p, prm) in enumerate(zip(s.agents, s.params)):
        d = np.asarray(psi_hat[i]) - psi
        V += p.b * (d @ d) / prm.gamma + p.b * (K[i] - cert.K0) ** 2 / prm.delta + h[i]
    ev = H @ xi_bar
    region = z_bar @ z_bar + eta_bar @ eta_bar + ev @ ev
    return float(V), float(region)


@dataclass
class LyapunovReport:
    t: np.ndarray
    V: np.ndarray
    dVdt: np.ndarray
    region: np.ndarray
    threshold: float
    checked: int
    violations: list
    # max over sample pairs of dV/dt minus the decrease bound
    # -(1 - kappa_max) * region + N * beta_max (averaged over the pair)
    max_bound_excess: float


def lyapunov_diagnostic(tr, s, cert, regs, rel_tol=1e-3):
    """V along the trace and every inter-trigger sample pair where it fails to decrease.

    A pair counts as checked when no event lies strictly between the two
    samples and the region condition holds at both ends.  It is a
    violation when ``dV/dt >= rel_tol * V``.
    """
    n = s.n_agents
    xs = tr.state[:, :tr.layout["x"][-1][1]]
    v = tr.v
    eta = tr.eta
    psi = tr.psi_hat
    V = np.empty(len(tr.t))
    region = np.empty(len(tr.t))
    for k in range(len(tr.t)):
        V[k], region[k] = lyapunov_value(s, cert, regs, xs[k], v[k], eta[k], psi[k], tr.K[k], tr.h[k])
    kmax = max(p.kappa for p in s.params)
    bmax = max(p.beta for p in s.params)
    threshold = n * bmax / (1.0 - kmax)
    ev_times = np.array(sorted(ev.t for ev in tr.events))
    dt = np.diff(tr.t)
    dVdt = np.diff(V) / dt
    violations = []
    checked = 0
    for k in range(len(dt)):
        a, b = tr.t[k], tr.t[k + 1]
        inner = np.searchsorted(ev_times, a, side="right") < np.searchsorted(ev_times, b, side="left")
        if inner or region[k] <= threshold or region[k + 1] <= threshold:
            continue
        checked += 1
        if dVdt[k] >= rel_tol * max(V[k], V[k + 1]):
            violations.append((float(a), float(dVdt[k])))
    bound = -(1.0 - kmax) * region + n * bmax
    excess = float(np.max(dVdt - 0.5 * (bound[:-1] + bound[1:]))) if len(dt) else float("-inf")
    return LyapunovReport(tr.t, V, dVdt, region, threshold, checked, violations, excess)
