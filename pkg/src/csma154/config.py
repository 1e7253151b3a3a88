"""Scenario files.

A scenario is an INI-style file (``configparser`` syntax) with the sections
``[network]``, one ``[node <id>]`` per node, and optional ``[mac]``,
``[analysis]``, ``[sim]``, ``[sweep]`` and ``[output]``. Human units are used
in the file (seconds, packets per second, bytes) and converted to symbol
times on load. See ``data/fig11.cfg`` for a commented example.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .solver import SolverOptions
from .timing import SYMBOLS_PER_SECOND, MacParams, data_symbols_for
from .topology import (NetworkSpec, NodeSpec, TopologyError, adjacency_from_coordinates,
                       adjacency_from_pairs, full_adjacency)


class ConfigError(ValueError):
    pass


SECTION_KEYS = {
    "network": {"sink", "adjacency", "pairs", "cs_range", "lambda_pps", "link_error"},
    "node": {"parent", "lambda_pps", "link_error", "x", "y"},
    "mac": {"min_be", "max_be", "max_csma_backoffs", "max_frame_retries",
            "packet_bytes", "overhead_symbols", "data_symbols", "ack_enabled"},
    "analysis": {"tolerance", "max_iterations", "damping", "qna_variant",
                 "saturated_goodput", "regime"},
    "sim": {"measurement_s", "warmup_s", "seed", "replications", "cca_sample",
            "ack_occupies_channel", "workers"},
    "sweep": {"lambda_scale"},
    "output": {"directory", "formats"},
}
FORMATS = {"csv", "png"}


@dataclass
class RunConfig:
    net: NetworkSpec
    mac: MacParams
    solver: SolverOptions = field(default_factory=SolverOptions)
    qna_variant: str = "discard-weighted"
    measurement: float = 200 * SYMBOLS_PER_SECOND
    warmup: float | None = None
    seed: int = 1
    replications: int = 10
    cca_sample: str = "end"
    ack_occupies_channel: bool = True
    workers: int = 1
    sweep: list[float] = field(default_factory=lambda: [1.0])
    out_dir: Path = Path("out")
    formats: tuple[str, ...] = ("csv", "png")
    source: str = ""

    def network_at(self, scale: float) -> NetworkSpec:
        """The network with every generation rate multiplied by ``scale``."""
        nodes = {i: dataclasses.replace(n, lam=n.lam * scale)
                 for i, n in self.net.nodes.items()}
        return NetworkSpec(nodes, dict(self.net.neighbors), self.net.sink)

    def base_rates_pps(self) -> dict[int, float]:
        return {i: n.lam * SYMBOLS_PER_SECOND for i, n in self.net.nodes.items()}


class _Section:
    """Typed access to one section, recording a dotted path for errors."""

    def __init__(self, name, data):
        self.name = name
        self.data = data

    def _raw(self, key):
        return self.data.get(key)

    def err(self, key, msg):
        return ConfigError(f"{self.name}.{key}: {msg}")

    def get(self, key, conv, default=None, required=False):
        raw = self._raw(key)
        if raw is None or raw.strip() == "":
            if required:
                raise self.err(key, "missing required field")
            return default
        try:
            return conv(raw.strip())
        except (TypeError, ValueError) as e:
            raise self.err(key, f"cannot parse {raw!r} ({e})") from None


def _bool(s):
    v = s.lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _floats(s):
    return [float(x) for x in s.replace(",", " ").split()]


def _pairs(s):
    out = []
    for tok in s.replace(",", " ").split():
        a, sep, b = tok.partition("-")
        if not sep:
            raise ValueError(f"pair {tok!r} is not of the form a-b")
        out.append((int(a), int(b)))
    return out


def _check_keys(name, data, allowed):
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"{name}: unknown key(s) {', '.join(unknown)}")


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{path}: no such file")
    return parse_config(path.read_text(encoding="utf-8"), source=str(path))


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"),
                                   interpolation=None)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as e:
        raise ConfigError(f"{source}: {e}") from None

    node_sections = {}
    for sec in cp.sections():
        kind, _, rest = sec.partition(" ")
        if kind == "node":
            try:
                nid = int(rest)
            except ValueError:
                raise ConfigError(f"[{sec}]: node id must be an integer") from None
            node_sections[nid] = dict(cp[sec])
            _check_keys(f"node {nid}", node_sections[nid], SECTION_KEYS["node"])
        elif sec in SECTION_KEYS and not rest:
            _check_keys(sec, dict(cp[sec]), SECTION_KEYS[sec])
        else:
            raise ConfigError(f"unknown section [{sec}]")

    if "network" not in cp:
        raise ConfigError("network: missing section")
    nw = _Section("network", dict(cp["network"]))
    sink = nw.get("sink", int, required=True)
    default_lam = nw.get("lambda_pps", float, 0.0)
    default_err = nw.get("link_error", float, 0.0)

    nodes = {}
    coords = {}
    for nid, data in sorted(node_sections.items()):
        s = _Section(f"node {nid}", data)
        x, y = s.get("x", float), s.get("y", float)
        if (x is None) != (y is None):
            raise s.err("x" if x is None else "y", "both x and y are required")
        if x is not None:
            coords[nid] = (x, y)
        if nid == sink:
            extra = set(data) - {"x", "y"}
            if extra:
                raise ConfigError(f"node {nid}: the sink accepts only x and y")
            continue
        lam = s.get("lambda_pps", float, default_lam)
        if lam < 0:
            raise s.err("lambda_pps", "must be >= 0")
        try:
            nodes[nid] = NodeSpec(nid, s.get("parent", int, required=True),
                                  lam / SYMBOLS_PER_SECOND,
                                  s.get("link_error", float, default_err))
        except TopologyError as e:
            raise ConfigError(f"node {nid}: {e}") from None
    if not nodes:
        raise ConfigError("network: no transmitting nodes defined")

    ids = sorted(set(nodes) | {sink})
    form = nw.get("adjacency", str, required=True)
    try:
        if form == "full":
            adj = full_adjacency(ids)
        elif form == "pairs":
            adj = adjacency_from_pairs(ids, nw.get("pairs", _pairs, required=True))
        elif form == "coordinates":
            missing = [i for i in ids if i not in coords]
            if missing:
                raise ConfigError(f"node {missing[0]}: x/y required for coordinate adjacency")
            cs = nw.get("cs_range", float, required=True)
            if cs <= 0:
                raise nw.err("cs_range", "must be > 0")
            adj = adjacency_from_coordinates({i: coords[i] for i in ids}, cs)
        else:
            raise nw.err("adjacency", "expected full, pairs or coordinates")
        if form != "pairs" and nw._raw("pairs") is not None:
            raise nw.err("pairs", "given but adjacency is not 'pairs'")
        if form != "coordinates" and nw._raw("cs_range") is not None:
            raise nw.err("cs_range", "given but adjacency is not 'coordinates'")
        net = NetworkSpec(nodes, adj, sink)
    except TopologyError as e:
        raise ConfigError(f"network: {e}") from None

    mac = _Section("mac", dict(cp["mac"]) if "mac" in cp else {})
    if mac._raw("data_symbols") is not None and mac._raw("packet_bytes") is not None:
        raise mac.err("data_symbols", "give either packet_bytes or data_symbols")
    ds = mac.get("data_symbols", int)
    if ds is None:
        nbytes = mac.get("packet_bytes", int, 70)
        try:
            ds = data_symbols_for(nbytes, mac.get("overhead_symbols", int, 12))
        except ValueError as e:
            raise mac.err("packet_bytes", str(e)) from None
    try:
        params = MacParams(mac_min_be=mac.get("min_be", int, 3),
                           mac_max_be=mac.get("max_be", int, 5),
                           max_csma_backoffs=mac.get("max_csma_backoffs", int, 4),
                           max_frame_retries=mac.get("max_frame_retries", int, 3),
                           data_symbols=ds,
                           ack_enabled=mac.get("ack_enabled", _bool, True))
    except ValueError as e:
        raise ConfigError(f"mac: {e}") from None

    an = _Section("analysis", dict(cp["analysis"]) if "analysis" in cp else {})
    try:
        solver = SolverOptions(tolerance=an.get("tolerance", float, 1e-8),
                               max_iterations=an.get("max_iterations", int, 10000),
                               damping=an.get("damping", float, 0.5),
                               saturated_goodput=an.get("saturated_goodput", str, "discard"),
                               regime=an.get("regime", str, "auto"))
    except ValueError as e:
        raise ConfigError(f"analysis: {e}") from None
    variant = an.get("qna_variant", str, "discard-weighted")
    if variant not in ("discard-weighted", "whitt"):
        raise an.err("qna_variant", "expected discard-weighted or whitt")

    sm = _Section("sim", dict(cp["sim"]) if "sim" in cp else {})
    meas = sm.get("measurement_s", float, 200.0)
    if meas <= 0:
        raise sm.err("measurement_s", "must be > 0")
    warm = sm.get("warmup_s", float)
    if warm is not None and warm < 0:
        raise sm.err("warmup_s", "must be >= 0")
    reps = sm.get("replications", int, 10)
    if reps < 1:
        raise sm.err("replications", "must be >= 1")
    cca = sm.get("cca_sample", str, "end")
    if cca not in ("end", "start"):
        raise sm.err("cca_sample", "expected end or start")
    workers = sm.get("workers", int, 1)
    if workers < 1:
        raise sm.err("workers", "must be >= 1")

    sw = _Section("sweep", dict(cp["sweep"]) if "sweep" in cp else {})
    sweep = sw.get("lambda_scale", _floats, [1.0])
    if not sweep or any(s <= 0 for s in sweep):
        raise sw.err("lambda_scale", "multipliers must be > 0")

    out = _Section("output", dict(cp["output"]) if "output" in cp else {})
    fmts = tuple(out.get("formats", lambda s: s.replace(",", " ").split(), ["csv", "png"]))
    bad = set(fmts) - FORMATS
    if bad:
        raise out.err("formats", f"unsupported format(s) {sorted(bad)}")

    return RunConfig(
        net=net, mac=params, solver=solver, qna_variant=variant,
        measurement=meas * SYMBOLS_PER_SECOND,
        warmup=None if warm is None else warm * SYMBOLS_PER_SECOND,
        seed=sm.get("seed", int, 1), replications=reps, cca_sample=cca,
        ack_occupies_channel=sm.get("ack_occupies_channel", _bool, True),
        workers=workers, sweep=sweep,
        out_dir=Path(out.get("directory", str, "out")), formats=fmts, source=source)


def bundled(name: str) -> Path:
    """Path of a scenario shipped with the package (``fig11``, ``fig12``)."""
    if not name.endswith(".cfg"):
        name += ".cfg"
    return Path(str(resources.files("csma154") / "data" / name))
