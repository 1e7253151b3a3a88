"""Per-node closed-form relations of the decoupled CSMA/CA model.

Rates are per symbol time and durations in symbol times. Every function is
pure; the solver in :mod:`csma154.solver` wires them together.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .timing import (MacParams, mean_backoff_given_discard, mean_total_backoff,
                     success_backoff_mass)

# Rx-to-Tx turnaround: window in which two CCAs can both succeed
SENSING_WINDOW = 12.0


@dataclass
class NodeState:
    alpha: float = 0.0
    p: float = 0.0
    gamma: float = 0.0
    nu: float = 0.0
    theta: float = 0.0
    delta: float = 0.0
    sigma: float = 0.0
    q: float = 0.0
    b: float = 1.0
    beta: float = 0.0
    zeta: float = 0.0
    t_eff: float = 0.0
    h: float = 1.0
    h_bar: float = 1.0

    @property
    def beta_bar(self) -> float:
        return self.beta * self.b * self.q

    @property
    def tau_bar(self) -> float:
        return self.beta_bar * (1.0 - self.alpha)


def eta_g_no_hidden(beta_i: float, sum_beta_bar_others: float) -> tuple[float, float]:
    if beta_i <= 0:
        raise ValueError("beta_i must be > 0")
    total = beta_i + sum_beta_bar_others
    return beta_i / total, 1.0 / total


def eta_g_hidden(beta_i: float, sum_tau_bar_omega: float) -> tuple[float, float]:
    # same algebra; the competing rate is now transmission initiations in range
    return eta_g_no_hidden(beta_i, sum_tau_bar_omega)


def simultaneous_sensing_prob(beta_i: float) -> float:
    if beta_i < 0:
        raise ValueError("beta_i must be >= 0")
    return -math.expm1(-SENSING_WINDOW * beta_i)


def alpha_no_hidden(eta: float, c: float, beta_i: float, T: float) -> float:
    busy = (1.0 - eta) * (1.0 - c) * beta_i * T
    den = eta + (1.0 - eta) * c + busy
    if den <= 0:
        raise ZeroDivisionError("degenerate CCA-failure denominator")
    return busy / den


def alpha_hidden(eta: float, c: float, beta_i: float, t_eff: float) -> float:
    return alpha_no_hidden(eta, c, beta_i, t_eff)


def zeta(i: int, states: dict[int, NodeState], omega) -> float:
    """Aggregate transmission-initiation rate of the nodes ``i`` can hear."""
    return sum(states[j].tau_bar for j in omega if j in states)


def dilated_period(zeta: float, T: float) -> float:
    """Mean busy period of an M/D/inf queue with arrival rate ``zeta`` and
    service time ``T``: (exp(zeta*T) - 1) / zeta."""
    if zeta < 0 or T <= 0:
        raise ValueError("need zeta >= 0 and T > 0")
    x = zeta * T
    if x < 1e-6:
        return T * (1.0 + x / 2.0 + x * x / 6.0 + x ** 3 / 24.0)
    return math.expm1(x) / zeta


def collision_prob_no_hidden(eta: float, c: float, sum_beta_bar_others: float) -> float:
    num = eta * -math.expm1(-SENSING_WINDOW * sum_beta_bar_others) + (1.0 - eta) * c
    den = 1.0 - (1.0 - eta) * (1.0 - c)
    if den <= 0:
        raise ZeroDivisionError("collision probability undefined for eta = c = 0")
    return num / den


def not_transmitting_fraction(eta: float, c: float, g: float, T: float,
                              t_eff: float) -> float:
    """Fraction of non-empty time during which the node is not transmitting."""
    idle = g + (1.0 - eta) * (1.0 - c) * t_eff
    den = idle + eta * T + (1.0 - eta) * c * T
    if den <= 0:
        return 1.0
    return idle / den


def unconditional_not_transmitting(h: float, q: float) -> float:
    return (1.0 - q) + q * h


def collision_terms(eta: float, c: float, beta_i: float, sum_tau_omega: float,
                    sum_tau_c1: float, sum_tau_c2: float, prod_h_c2: float,
                    T: float) -> tuple[float, float, float, float]:
    """The four collision scenarios for a node with hidden interferers."""
    r1 = eta * (1.0 - prod_h_c2)
    r2 = (1.0 - eta) * c * (1.0 - prod_h_c2)
    clear = math.exp(-SENSING_WINDOW * sum_tau_c1 - T * sum_tau_c2)
    r3 = eta * prod_h_c2 * (1.0 - clear)
    r4 = sum_tau_c1 / (beta_i + sum_tau_omega) * c * prod_h_c2
    return r1, r2, r3, r4


def collision_prob_hidden(i: int, states: dict[int, NodeState], sets, T: float
                          ) -> float:
    s = states[i]
    tau = {j: st.tau_bar for j, st in states.items()}
    sum_omega = sum(tau.get(j, 0.0) for j in sets.omega)
    sum_c1 = sum(tau.get(j, 0.0) for j in sets.c1)
    sum_c2 = sum(tau.get(j, 0.0) for j in sets.c2)
    prod_h = math.prod(states[j].h_bar if j in states else 1.0 for j in sets.c2)
    eta, _ = eta_g_hidden(s.beta, sum_omega)
    c = simultaneous_sensing_prob(s.beta)
    terms = collision_terms(eta, c, s.beta, sum_omega, sum_c1, sum_c2, prod_h, T)
    den = eta + (1.0 - eta) * c
    if den <= 0:
        raise ZeroDivisionError("collision probability denominator is zero")
    return min(1.0, sum(terms) / den)


def packet_failure(p: float, l: float) -> float:
    return p + (1.0 - p) * l


def service_stats(alpha: float, gamma: float, params: MacParams
                  ) -> tuple[float, float, float]:
    """Mean backoff time Z, mean transmission time Y per packet, and the
    service rate 1/(Z+Y). Without ACKs a packet gets a single attempt."""
    K = params.cca_attempts
    aK = alpha ** K
    t2 = mean_backoff_given_discard(params)
    t1_mass = success_backoff_mass(alpha, params)      # (1 - aK) * T1
    T = params.T
    g = gamma if params.ack_enabled else 0.0
    z = aK * t2 + t1_mass
    y = (1.0 - aK) * T
    for _ in range(params.transmissions - 1):
        z = aK * t2 + t1_mass + (1.0 - aK) * g * z
        y = (1.0 - aK) * (T + g * y)
    return z, y, 1.0 / (z + y)


def discard_prob(alpha: float, gamma: float, params: MacParams) -> float:
    """Probability a packet is dropped after exhausting CCAs or retries."""
    aK = alpha ** params.cca_attempts
    if not params.ack_enabled:
        return aK
    d = aK + (1.0 - aK) * gamma
    for _ in range(params.transmissions - 1):
        d = aK + (1.0 - aK) * gamma * d
    return d


def backoff_fraction(alpha: float, params: MacParams) -> float:
    B = mean_total_backoff(alpha, params)
    tx = (1.0 - alpha ** params.cca_attempts) * params.T
    if B + tx <= 0:
        return 1.0
    return B / (B + tx)


def cca_rate(alpha: float, params: MacParams) -> float:
    """CCA attempts per unit of backoff time."""
    ccas = sum(alpha ** k for k in range(params.cca_attempts))
    return ccas / mean_total_backoff(alpha, params)


def hop_goodput(nu: float, sigma: float, delta: float, gamma: float,
                params: MacParams, saturated_goodput: str = "discard") -> float:
    """Rate of packets the node gets through to its receiver."""
    if sigma <= 0:
        raise ZeroDivisionError("service rate must be > 0")
    if nu > sigma and saturated_goodput == "service-rate":
        served = sigma
        return served if params.ack_enabled else served * (1.0 - gamma)
    theta = min(nu, sigma) * (1.0 - delta)
    if not params.ack_enabled:
        theta *= 1.0 - gamma
    return theta


def traffic_update(i: int, states: dict[int, NodeState], net, params: MacParams,
                   saturated_goodput: str = "discard") -> tuple[float, float, float]:
    """(nu, theta, q) of node ``i`` from its children's current goodputs."""
    s = states[i]
    nu = net.nodes[i].lam + sum(states[k].theta for k in net.children(i))
    if s.sigma <= 0:
        raise ZeroDivisionError(f"node {i}: service rate is zero")
    q = min(1.0, nu / s.sigma)
    theta = hop_goodput(nu, s.sigma, s.delta, s.gamma, params, saturated_goodput)
    return nu, theta, q
