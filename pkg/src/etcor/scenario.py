"""Scenario description and its YAML configuration format.

Schema (all matrices are lists of rows)::

    schema: etcor-scenario/1
    name: <free text>
    exosystem:
      sigma: 2.0
      S: [[0, 2], [-2, 0]]      # optional; harmonic S(sigma) when omitted
      F: [[1, 0]]
    topology:
      n_agents: 4
      edges: [[0, 1], [1, 2], [2, 1], ...]   # (j, i): i receives from j
    internal_model:
      M: [[0, 1], [-25, -10]]
      Q: [[0], [1]]
    agents:
      - A: [[...], ...]
        B: [[0], [0], [2.1]]
        C: [[0, 0, 1]]
        E: [[0, 0], ...]
        w: [0.5, 1.0, -1.0, 0.1]   # optional, informational
        x0: [-2, 1, -1]
        eta0: [-1, -2]
        psi_hat0: [15, 10]
        K0: 10
        h0: 1.0
        controller: {gamma: 80, delta: 5, kappa: 0.9, beta: 0.6, alpha: 1,
                     mode: dynamic, period: null, psi_adapt: [true, false]}
    v0: [0.2, 1.0]
    integrator: {dt: 0.001, horizon: 30.0, decimate: 10,
                 divergence_guard: 1.0e9, periodic_sample: input}
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np
import yaml

from .controller import ControllerParams, Mode
from .errors import ConfigError
from .graph import Topology
from .plant import AgentPlant, Exosystem, harmonic_matrix
from .regulator import InternalModelPair

SCHEMA = "etcor-scenario/1"


@dataclass(frozen=True)
class InitialConditions:
    x: list
    v: np.ndarray
    eta: list
    psi_hat: list
    K: list
    h: list


@dataclass(frozen=True)
class IntegratorSettings:
    dt: float = 1e-3
    horizon: float = 30.0
    decimate: int = 10
    divergence_guard: float = 1e9
    # "input": periodic mode samples only the input; "full": the adaptive
    # laws also use the sampled e_v and eta
    periodic_sample: str = "input"

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        if self.horizon < self.dt * (1 - 1e-12):
            raise ConfigError("horizon must be at least one step")
        if int(self.decimate) < 1:
            raise ConfigError("decimate must be a positive integer")
        if self.periodic_sample not in ("input", "full"):
            raise ConfigError("periodic_sample must be 'input' or 'full'")
        object.__setattr__(self, "decimate", int(self.decimate))

    @property
    def n_steps(self):
        return int(round(self.horizon / self.dt))


@dataclass(frozen=True)
class Scenario:
    name: str
    agents: list
    exosystem: Exosystem
    topology: Topology
    params: list
    internal_model: InternalModelPair
    initial: InitialConditions
    integrator: IntegratorSettings = field(default_factory=IntegratorSettings)
    uncertainty: list | None = None

    def __post_init__(self):
        n = len(self.agents)
        if n != self.topology.n_agents:
            raise ConfigError(f"{n} agents but topology has {self.topology.n_agents}")
        ic = self.initial
        for name in ("x", "eta", "psi_hat", "K", "h"):
            if len(getattr(ic, name)) != n:
                raise ConfigError(f"initial condition {name!r} needs one entry per agent")
        if len(self.params) != n:
            raise ConfigError("controller parameters need one entry per agent")
        l = self.internal_model.degree
        q = self.exosystem.q
        for k, p in enumerate(self.agents):
            if len(ic.x[k]) != p.n:
                raise ConfigError(f"agent {k + 1}: x0 has {len(ic.x[k])} entries, state dimension is {p.n}")
            if p.q != q:
                raise ConfigError(f"agent {k + 1}: E has {p.q} columns, exosystem order is {q}")
            if len(ic.eta[k]) != l or len(ic.psi_hat[k]) != l:
                raise ConfigError(f"agent {k + 1}: eta0 and psi_hat0 need {l} entries")
            if ic.h[k] <= 0:
                raise ConfigError(f"agent {k + 1}: h0 must be positive")
            if ic.K[k] <= 0:
                raise ConfigError(f"agent {k + 1}: K0 must be positive")
            self.params[k].adapt_mask(l)
        if len(ic.v) != q:
            raise ConfigError(f"v0 has {len(ic.v)} entries, exosystem order is {q}")

    @property
    def n_agents(self):
        return len(self.agents)

    def with_mode(self, mode, periods=None):
        mode = Mode(mode)
        params = []
        for k, p in enumerate(self.params):
            period = periods[k] if periods is not None else p.period
            if mode is not Mode.PERIODIC:
                period = p.period
            params.append(replace(p, mode=mode, period=period))
        return replace(self, params=params)

    def with_integrator(self, **kw):
        return replace(self, integrator=replace(self.integrator, **kw))

    def with_params(self, **kw):
        return replace(self, params=[replace(p, **kw) for p in self.params])

    def to_dict(self):
        ex = self.exosystem
        ic = self.initial
        agents = []
        for k, p in enumerate(self.agents):
            c = self.params[k]
            entry = {
                "A": p.A.tolist(),
                "B": p.B.tolist(),
                "C": p.C.tolist(),
                "E": p.E.tolist(),
            }
            if self.uncertainty is not None:
                entry["w"] = np.asarray(self.uncertainty[k], dtype=float).tolist()
            entry.update({
                "x0": np.asarray(ic.x[k], dtype=float).tolist(),
                "eta0": np.asarray(ic.eta[k], dtype=float).tolist(),
                "psi_hat0": np.asarray(ic.psi_hat[k], dtype=float).tolist(),
                "K0": float(ic.K[k]),
                "h0": float(ic.h[k]),
                "controller": {
                    "gamma": c.gamma, "delta": c.delta, "kappa": c.kappa,
                    "beta": c.beta, "alpha": c.alpha, "mode": c.mode.value,
                    "period": c.period,
                    "psi_adapt": None if c.psi_adapt is None else list(c.psi_adapt),
                },
            })
            agents.append(entry)
        integ = self.integrator
        return {
            "schema": SCHEMA,
            "name": self.name,
            "exosystem": {"sigma": ex.sigma, "S": ex.S.tolist(), "F": ex.F.tolist()},
            "topology": {
                "n_agents": self.topology.n_agents,
                "edges": [list(e) for e in self.topology.sorted_edges()],
            },
            "internal_model": {
                "M": self.internal_model.M.tolist(),
                "Q": self.internal_model.Q.tolist(),
            },
            "agents": agents,
            "v0": np.asarray(ic.v, dtype=float).tolist(),
            "integrator": {
                "dt": integ.dt, "horizon": integ.horizon, "decimate": integ.decimate,
                "divergence_guard": integ.divergence_guard,
                "periodic_sample": integ.periodic_sample,
            },
        }

    def digest(self):
        """Short content hash, stable across runs and platforms."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _get(d, key, where):
    try:
        return d[key]
    except (KeyError, TypeError):
        raise ConfigError(f"missing key {key!r} in {where}") from None


def scenario_from_dict(d):
    if not isinstance(d, dict):
        raise ConfigError("scenario file must contain a mapping")
    schema = d.get("schema", SCHEMA)
    if schema != SCHEMA:
        raise ConfigError(f"unsupported schema {schema!r}")
    try:
        exo = _get(d, "exosystem", "scenario")
        sigma = float(_get(exo, "sigma", "exosystem"))
        S = exo.get("S")
        S = harmonic_matrix(sigma) if S is None else np.array(S, dtype=float)
        exosystem = Exosystem(sigma, S, np.array(_get(exo, "F", "exosystem"), dtype=float))

        topo = _get(d, "topology", "scenario")
        for e in _get(topo, "edges", "topology"):
            if any(isinstance(x, float) and not float(x).is_integer() for x in e):
                raise ConfigError(f"edge {e} carries a weight; only 0/1 adjacency is supported")
        topology = Topology(_get(topo, "n_agents", "topology"), [tuple(e) for e in topo["edges"]])

        im = _get(d, "internal_model", "scenario")
        internal_model = InternalModelPair(
            np.array(_get(im, "M", "internal_model"), dtype=float),
            np.array(_get(im, "Q", "internal_model"), dtype=float),
        )

        agents, params, xs, etas, psis, Ks, hs, ws = [], [], [], [], [], [], [], []
        for k, a in enumerate(_get(d, "agents", "scenario")):
            where = f"agent {k + 1}"
            n = len(_get(a, "A", where))
            E = a.get("E")
            E = np.zeros((n, exosystem.q)) if E is None else np.array(E, dtype=float)
            agents.append(AgentPlant(
                np.array(a["A"], dtype=float),
                np.array(_get(a, "B", where), dtype=float),
                np.array(_get(a, "C", where), dtype=float),
                E,
            ))
            c = _get(a, "controller", where)
            params.append(ControllerParams(
                gamma=float(_get(c, "gamma", where)),
                delta=float(_get(c, "delta", where)),
                kappa=float(_get(c, "kappa", where)),
                beta=float(_get(c, "beta", where)),
                alpha=float(_get(c, "alpha", where)),
                mode=c.get("mode", "dynamic"),
                period=None if c.get("period") is None else float(c["period"]),
                psi_adapt=c.get("psi_adapt"),
            ))
            xs.append(np.array(_get(a, "x0", where), dtype=float))
            etas.append(np.array(_get(a, "eta0", where), dtype=float))
            psis.append(np.array(_get(a, "psi_hat0", where), dtype=float))
            Ks.append(float(_get(a, "K0", where)))
            hs.append(float(a.get("h0", 1.0)))
            ws.append(None if a.get("w") is None else np.array(a["w"], dtype=float))

        integ = d.get("integrator") or {}
        integrator = IntegratorSettings(
            dt=float(integ.get("dt", 1e-3)),
            horizon=float(integ.get("horizon", 30.0)),
            decimate=int(integ.get("decimate", 10)),
            divergence_guard=float(integ.get("divergence_guard", 1e9)),
            periodic_sample=integ.get("periodic_sample", "input"),
        )
        initial = InitialConditions(xs, np.array(_get(d, "v0", "scenario"), dtype=float),
                                    etas, psis, Ks, hs)
        return Scenario(
            name=str(d.get("name", "")),
            agents=agents,
            exosystem=exosystem,
            topology=topology,
            params=params,
            internal_model=internal_model,
            initial=initial,
            integrator=integrator,
            uncertainty=ws if all(w is not None for w in ws) else None,
        )
    except ConfigError:
        raise
    except (TypeError, ValueError, AttributeError) as exc:
        raise ConfigError(f"malformed scenario: {exc}") from exc


def load_scenario(path):
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return scenario_from_dict(data)


def dump_scenario(scenario, path):
    with open(path, "w") as fh:
        fh.write(f"# {SCHEMA}\n")
        yaml.safe_dump(scenario.to_dict(), fh, sort_keys=False, default_flow_style=None)


def example_scenario_path():
    return resources.files("etcor") / "data" / "example.yaml"
