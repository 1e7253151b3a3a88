"""IEEE 802.15.4 unslotted CSMA/CA timing constants and backoff statistics.

All durations are in symbol times (1 symbol = 16 us at 2.4 GHz).
"""

from __future__ import annotations

from dataclasses import dataclass

SYMBOL_TIME_S = 16e-6
SYMBOLS_PER_SECOND = 1.0 / SYMBOL_TIME_S


@dataclass(frozen=True)
class MacParams:
    mac_min_be: int = 3
    mac_max_be: int = 5
    max_csma_backoffs: int = 4
    max_frame_retries: int = 3
    data_symbols: int = 152
    ack_enabled: bool = True
    slot_symbols: int = 20
    turnaround_symbols: int = 12
    ack_symbols: int = 22
    cca_symbols: int = 8

    def __post_init__(self):
        if self.mac_min_be < 0 or self.mac_max_be < self.mac_min_be:
            raise ValueError(
                f"invalid backoff exponent range [{self.mac_min_be}, {self.mac_max_be}]")
        for name in ("max_csma_backoffs", "max_frame_retries", "slot_symbols",
                     "turnaround_symbols", "ack_symbols", "cca_symbols"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.data_symbols <= 0:
            raise ValueError("data_symbols must be > 0")

    @property
    def cca_attempts(self) -> int:
        """Maximum number of CCAs per transmission attempt."""
        return self.max_csma_backoffs + 1

    @property
    def transmissions(self) -> int:
        """Maximum number of transmissions of one packet (1 without ACKs)."""
        return self.max_frame_retries + 1 if self.ack_enabled else 1

    @property
    def ack_wait_symbols(self) -> int:
        return self.turnaround_symbols + self.ack_symbols

    @property
    def T(self) -> int:
        return transmission_period(self)


@dataclass(frozen=True)
class BackoffStageMeans:
    fail: tuple[float, ...]
    success: tuple[float, ...]

    def __len__(self):
        return len(self.fail)


def stage_exponent(params: MacParams, stage: int) -> int:
    return min(params.mac_min_be + stage, params.mac_max_be)


def backoff_stage_means(params: MacParams) -> BackoffStageMeans:
    """Mean time spent in each backoff stage, ending in a failed or a
    successful CCA.

    A failed CCA adds the CCA duration; a successful one also adds the
    Rx-to-Tx turnaround.
    """
    fail, success = [], []
    for k in range(params.cca_attempts):
        be = stage_exponent(params, k)
        mean_slots = (2 ** be - 1) / 2.0
        backoff = mean_slots * params.slot_symbols
        fail.append(backoff + params.cca_symbols)
        success.append(backoff + params.cca_symbols + params.turnaround_symbols)
    return BackoffStageMeans(tuple(fail), tuple(success))


def _check_alpha(alpha):
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha!r}")


def mean_total_backoff(alpha: float, params: MacParams) -> float:
    """Mean backoff time until the packet is sent or dropped after CCA failures."""
    _check_alpha(alpha)
    means = backoff_stage_means(params)
    K = params.cca_attempts
    total = sum(alpha ** k * f for k, f in enumerate(means.fail))
    return total + params.turnaround_symbols * (1.0 - alpha ** K)


def _success_paths(params: MacParams) -> list[float]:
    # cumulative backoff time of a packet whose CCA succeeds at stage k
    means = backoff_stage_means(params)
    out, acc = [], 0.0
    for f, s in zip(means.fail, means.success):
        out.append(acc + s)
        acc += f
    return out


def success_backoff_mass(alpha: float, params: MacParams) -> float:
    """E[backoff time; CCA eventually succeeds], i.e. (1 - alpha^K) * T1.

    Stays finite at alpha = 1, where the conditional mean itself is undefined.
    """
    _check_alpha(alpha)
    return sum(alpha ** k * (1.0 - alpha) * s
               for k, s in enumerate(_success_paths(params)))


def mean_backoff_given_success(alpha: float, params: MacParams) -> float:
    _check_alpha(alpha)
    K = params.cca_attempts
    if alpha >= 1.0:
        raise ValueError("conditional mean undefined at alpha = 1")
    if alpha == 0.0:
        return _success_paths(params)[0]
    return success_backoff_mass(alpha, params) / (1.0 - alpha ** K)


def mean_backoff_given_discard(params: MacParams) -> float:
    return float(sum(backoff_stage_means(params).fail))


def transmission_period(params: MacParams) -> int:
    """Channel holding time of one transmission attempt.

    With ACKs the sender also waits out the turnaround and ACK (or the
    equivalent ACK wait on failure).
    """
    if params.ack_enabled:
        return params.data_symbols + params.turnaround_symbols + params.ack_symbols
    return params.data_symbols


def data_symbols_for(packet_bytes: int, phy_overhead_symbols: int = 12) -> int:
    """Frame airtime in symbols: 2 symbols per byte plus PHY preamble/header."""
    if packet_bytes <= 0:
        raise ValueError("packet_bytes must be > 0")
    return 2 * packet_bytes + phy_overhead_symbols
