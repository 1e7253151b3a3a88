"""Mean sojourn times, end-to-end delays and delivery probabilities.

Per-node service times follow the geometric backoff/transmission recursion
with exponential backoffs; the network is then swept from the leaves to the
sink with a two-moment (rate, squared coefficient of variation) queueing
network approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .solver import SolverResult
from .topology import NetworkSpec


def service_moments(beta: float, alpha: float, gamma: float, T: float
                    ) -> tuple[float, float]:
    """First two moments of S = B + {S' | T | T + S'} with B ~ Exp(beta)
    and branch probabilities alpha, (1-alpha)(1-gamma), (1-alpha)gamma."""
    if beta <= 0:
        raise ValueError("beta must be > 0")
    if not (0 <= alpha < 1 and 0 <= gamma < 1):
        raise ValueError("service time is infinite for alpha = 1 or gamma = 1")
    done = (1 - alpha) * (1 - gamma)          # probability a round ends service
    again = 1 - done
    m1 = (1 / (beta * (1 - alpha)) + T) / (1 - gamma)
    m2 = (2 / beta ** 2
          + (2 / beta) * ((1 - alpha) * T + again * m1)
          + (1 - alpha) * T ** 2
          + 2 * (1 - alpha) * gamma * T * m1) / done
    return m1, m2


@dataclass
class NodeDelay:
    E_S: float
    E_S2: float
    c_S2: float
    Lambda: float
    rho: float
    c_A2: float = math.nan
    c_D2: float = math.nan
    sojourn: float = math.nan

    @property
    def stable(self) -> bool:
        return self.rho < 1 and math.isfinite(self.sojourn)


@dataclass
class DelayReport:
    nodes: dict[int, NodeDelay]
    end_to_end: dict[int, float] = field(default_factory=dict)
    delivery: dict[int, float] = field(default_factory=dict)
    variant: str = "discard-weighted"

    def unstable(self) -> list[int]:
        return sorted(i for i, d in self.nodes.items() if not d.stable)


def departure_scv(rho: float, c_S2: float, c_A2: float, delta: float,
                  variant: str = "discard-weighted") -> float:
    if variant == "discard-weighted":
        return 1 + delta * (rho ** 2 * (c_S2 - 1) + (1 - rho ** 2) * (c_A2 - 1))
    if variant == "whitt":
        keep = 1 - delta
        return 1 + keep * (rho ** 2 * (c_S2 - 1) + (1 - rho ** 2) * (c_A2 - 1))
    raise ValueError(f"unknown QNA variant {variant!r}")


def mean_sojourn(rho: float, E_S: float, c_A2: float, c_S2: float) -> float:
    if rho >= 1:
        return math.inf
    return rho * E_S * (c_A2 + c_S2) / (2 * (1 - rho)) + E_S


def qna_sweep(net: NetworkSpec, result: SolverResult, ack_enabled: bool | None = None,
              variant: str = "discard-weighted") -> DelayReport:
    """Leaf-to-root QNA pass over a converged solution.

    Without ACKs a packet is never retransmitted, so the service recursion
    is run with gamma = 0 there.
    """
    params = result.params
    T = params.T
    if ack_enabled is None:
        ack_enabled = params.ack_enabled
    nodes = {}
    for i in net.leaf_to_root():
        s = result.states[i]
        lam = net.nodes[i].lam
        kids = net.children(i)
        gamma = s.gamma if ack_enabled else 0.0
        try:
            m1, m2 = service_moments(s.beta, s.alpha, gamma, T)
        except ValueError:
            m1 = m2 = math.inf
        c_S2 = m2 / m1 ** 2 - 1 if math.isfinite(m1) else math.inf
        Lam = lam + sum(nodes[k].Lambda for k in kids)
        rho = Lam * m1
        d = NodeDelay(m1, m2, c_S2, Lam, rho)
        if not kids:
            d.c_A2 = 1.0
        elif Lam > 0:
            d.c_A2 = (lam + sum(nodes[k].Lambda * nodes[k].c_D2 for k in kids)) / Lam
        else:
            d.c_A2 = 1.0
        if rho < 1 and math.isfinite(d.c_A2):
            d.sojourn = mean_sojourn(rho, m1, d.c_A2, c_S2)
            d.c_D2 = departure_scv(rho, c_S2, d.c_A2, s.delta, variant)
        else:
            d.sojourn = math.inf
        nodes[i] = d
    rep = DelayReport(nodes, variant=variant)
    for j in net.sources():
        rep.end_to_end[j] = end_to_end_delay(rep, net, j)
        rep.delivery[j] = delivery_probability(result, net, j, ack_enabled)
    return rep


class UnstablePathError(ArithmeticError):
    pass


def end_to_end_delay(report: DelayReport, net: NetworkSpec, j: int,
                     strict: bool = False) -> float:
    path = net.path(j)
    bad = [i for i in path if not report.nodes[i].stable]
    if bad:
        if strict:
            raise UnstablePathError(f"source {j}: unstable node(s) {bad} on path")
        return math.inf
    return sum(report.nodes[i].sojourn for i in path)


def delivery_probability(result: SolverResult, net: NetworkSpec, j: int,
                         ack_enabled: bool | None = None) -> float:
    if ack_enabled is None:
        ack_enabled = result.params.ack_enabled
    p = 1.0
    for i in net.path(j):
        s = result.states[i]
        p *= 1 - s.delta
        if not ack_enabled:
            p *= 1 - s.gamma
    return p
