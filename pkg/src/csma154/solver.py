"""Global fixed-point iteration over the per-node unknowns (alpha, gamma, nu)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import model
from .model import NodeState
from .timing import MacParams
from .topology import NetworkSpec, has_hidden_nodes, interference_sets

TRACKED = ("alpha", "gamma", "nu")
RESIDUAL_FLOOR = 1e-12


class SolverError(RuntimeError):
    """Raised when an update produces NaN or an infinite value."""


@dataclass(frozen=True)
class SolverOptions:
    tolerance: float = 1e-8
    max_iterations: int = 10000
    damping: float = 0.5
    saturated_goodput: str = "discard"   # or "service-rate": theta = sigma when saturated
    regime: str = "auto"                 # "auto", "no-hidden" or "hidden"

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.saturated_goodput not in ("discard", "service-rate"):
            raise ValueError("saturated_goodput must be 'discard' or 'service-rate'")
        if self.regime not in ("auto", "no-hidden", "hidden"):
            raise ValueError("regime must be 'auto', 'no-hidden' or 'hidden'")


@dataclass
class SolverResult:
    states: dict[int, NodeState]
    iterations: int
    residual_history: list[float]
    converged: bool
    regime: str
    params: MacParams = field(repr=False, default=None)

    @property
    def residual(self) -> float:
        return self.residual_history[-1] if self.residual_history else math.inf


def residual(prev: dict[int, NodeState], new: dict[int, NodeState]) -> float:
    """Largest relative change over the tracked unknowns."""
    if set(prev) != set(new):
        raise ValueError("state vectors cover different node sets")
    worst = 0.0
    for i in prev:
        for name in TRACKED:
            a, b = getattr(prev[i], name), getattr(new[i], name)
            worst = max(worst, abs(b - a) / max(abs(a), RESIDUAL_FLOOR))
    return worst


def _finite(i, s: NodeState):
    for name, v in vars(s).items():
        if not math.isfinite(v):
            raise SolverError(f"node {i}: {name} became {v}")


def sweep(net: NetworkSpec, params: MacParams, current: dict[int, NodeState],
          hidden: bool, saturated_goodput: str = "discard") -> dict[int, NodeState]:
    """One pass of the update equations from the current (alpha, gamma, nu).

    Returns fresh states whose alpha, gamma and nu are the undamped images.
    """
    T = params.T
    st = {}
    # quantities driven by the current unknowns
    for i in net.ids:
        cur = current[i]
        s = NodeState(alpha=cur.alpha, gamma=cur.gamma, nu=cur.nu)
        s.beta = model.cca_rate(s.alpha, params)
        s.b = model.backoff_fraction(s.alpha, params)
        _, _, s.sigma = model.service_stats(s.alpha, s.gamma, params)
        s.q = min(1.0, s.nu / s.sigma)
        st[i] = s

    sets = interference_sets(net) if hidden else None
    if hidden:
        for i in net.ids:
            s = st[i]
            s.zeta = model.zeta(i, st, sets[i].omega)
            s.t_eff = model.dilated_period(s.zeta, T)
            eta, g = model.eta_g_hidden(s.beta, s.zeta)
            c = model.simultaneous_sensing_prob(s.beta)
            s.h = model.not_transmitting_fraction(eta, c, g, T, s.t_eff)
            s.h_bar = model.unconditional_not_transmitting(s.h, s.q)

    new = {}
    total_bb = sum(s.beta_bar for s in st.values())
    for i in net.ids:
        s = st[i]
        c = model.simultaneous_sensing_prob(s.beta)
        if hidden:
            eta, _ = model.eta_g_hidden(s.beta, s.zeta)
            alpha = model.alpha_hidden(eta, c, s.beta, s.t_eff)
            p = model.collision_prob_hidden(i, st, sets[i], T)
        else:
            others = total_bb - s.beta_bar
            eta, _ = model.eta_g_no_hidden(s.beta, others)
            alpha = model.alpha_no_hidden(eta, c, s.beta, T)
            p = model.collision_prob_no_hidden(eta, c, others)
        n = NodeState(alpha=alpha, p=p, nu=s.nu, beta=s.beta, b=s.b, q=s.q,
                      zeta=s.zeta, t_eff=s.t_eff if hidden else float(T),
                      h=s.h, h_bar=s.h_bar)
        n.gamma = model.packet_failure(p, net.nodes[i].link_error)
        _, _, n.sigma = model.service_stats(n.alpha, n.gamma, params)
        n.delta = model.discard_prob(n.alpha, n.gamma, params)
        new[i] = n

    # goodputs propagate towards the sink in a single pass
    for i in net.leaf_to_root():
        n = new[i]
        n.nu, n.theta, n.q = model.traffic_update(i, new, net, params,
                                                  saturated_goodput)
    for i, n in new.items():
        _finite(i, n)
    return new


def initial_states(net: NetworkSpec) -> dict[int, NodeState]:
    return {i: NodeState(alpha=0.0, gamma=0.0, nu=net.nodes[i].lam) for i in net.ids}


def solve(net: NetworkSpec, params: MacParams, opts: SolverOptions | None = None
          ) -> SolverResult:
    opts = opts or SolverOptions()
    if opts.regime == "auto":
        hidden = has_hidden_nodes(net)
    else:
        hidden = opts.regime == "hidden"
    regime = "hidden" if hidden else "no-hidden"

    cur = initial_states(net)
    history = []
    d = opts.damping
    new = cur
    for it in range(1, opts.max_iterations + 1):
        new = sweep(net, params, cur, hidden, opts.saturated_goodput)
        res = residual(cur, new)
        history.append(res)
        if res <= opts.tolerance:
            return SolverResult(new, it, history, True, regime, params)
        nxt = {}
        for i, n in new.items():
            o = cur[i]
            nxt[i] = NodeState(alpha=(1 - d) * o.alpha + d * n.alpha,
                               gamma=(1 - d) * o.gamma + d * n.gamma,
                               nu=(1 - d) * o.nu + d * n.nu)
        cur = nxt
    return SolverResult(new, opts.max_iterations, history, False, regime, params)
