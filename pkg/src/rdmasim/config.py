"""Run configuration: dataclasses, derived defaults, strict INI parsing.

Users hand the CLI a sectioned key-value file; everything not spelled
out falls back to a default derived from the fabric (buffer sized to
twice the bandwidth-delay product, pause threshold leaving one hop of
wire headroom, long retransmission timeout covering a full round trip
with queuing).  Unknown sections or keys are errors: silent typos in
experiment configs are how wrong numbers get published.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, field

from . import fabric, workload


class ConfigError(Exception):
    pass


@dataclass
class TopologyConfig:
    kind: str = "fat_tree"          # fat_tree | line
    arity: int = 6
    line_switches: int = 1
    bandwidth_gbps: float = 40.0
    propagation_us: float = 2.0
    mtu: int = 1024
    buffer_bytes: int | None = None        # default: 2 * network BDP
    pfc: bool = True
    pfc_headroom_bytes: int | None = None  # default: one-hop round-trip BDP
    pfc_xon_offset_bytes: int = 0          # resume this far below the pause mark


@dataclass
class TransportConfig:
    kind: str = "irn"               # irn | gbn
    bdp_fc: bool | None = None      # default: on for irn, off for gbn
    rto_low_us: float = 100.0
    rto_high_us: float | None = None  # default derived from fabric
    n_small: int = 3
    retx_fetch_delay_us: float = 0.0
    extra_headers: bool = False     # per-packet request header bytes on the wire
    ack_bytes: int = 64


@dataclass
class CcConfig:
    scheme: str = "none"
    slow_start: bool = False


@dataclass
class WorkloadConfig:
    kind: str = "poisson"           # poisson | incast
    load: float = 0.7
    flow_count: int = 10_000
    distribution: str = "heavy_tailed"
    bands: list | None = None       # explicit [(mass, lo, hi, law)] override
    incast_fan_in: int = 8
    incast_total_bytes: int = 150_000_000
    incast_repeats: int = 5
    incast_gap_us: float = 500.0


@dataclass
class RunConfig:
    seed: int = 1
    label: str = "run"
    duration_ms: float | None = None  # None: run until every flow completes
    topology: TopologyConfig = field(default_factory=TopologyConfig)
    transport: TransportConfig = field(default_factory=TransportConfig)
    cc: CcConfig = field(default_factory=CcConfig)
    workload: WorkloadConfig = field(default_factory=WorkloadConfig)


class Resolved:
    """RunConfig with every derived quantity filled in."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        t = cfg.topology
        if t.kind == "fat_tree":
            self.graph = fabric.build_fat_tree(t.arity)
        elif t.kind == "line":
            self.graph = fabric.build_line(t.line_switches)
        else:
            raise ConfigError(f"unknown topology kind {t.kind!r}")
        self.bandwidth_bps = int(t.bandwidth_gbps * 1e9)
        self.prop_ns = int(t.propagation_us * 1000)
        if t.mtu < 64:
            raise ConfigError("mtu below 64 bytes")
        self.mtu = t.mtu
        self.bdp_bytes = fabric.bdp_bytes(self.bandwidth_bps, self.prop_ns,
                                          self.graph.diameter_hops)
        self.bdp_cap_packets = max(1, self.bdp_bytes // self.mtu)
        self.buffer_bytes = t.buffer_bytes if t.buffer_bytes is not None \
            else 2 * self.bdp_bytes
        headroom = t.pfc_headroom_bytes if t.pfc_headroom_bytes is not None \
            else fabric.bdp_bytes(self.bandwidth_bps, self.prop_ns, 1)
        self.pfc_headroom_bytes = headroom
        self.xoff_bytes = self.buffer_bytes - headroom
        self.xon_bytes = self.xoff_bytes - t.pfc_xon_offset_bytes
        if t.pfc and self.xoff_bytes <= 0:
            raise ConfigError("pause headroom leaves no usable buffer")

        tr = cfg.transport
        if tr.kind not in ("irn", "gbn"):
            raise ConfigError(f"unknown transport kind {tr.kind!r}")
        self.bdp_fc = tr.bdp_fc if tr.bdp_fc is not None else (tr.kind == "irn")
        self.rto_low_ns = int(tr.rto_low_us * 1000)
        if tr.rto_high_us is not None:
            self.rto_high_ns = int(tr.rto_high_us * 1000)
        else:
            # Round trip of the longest path plus draining a full buffer
            # at every hop: comfortably above any real in-network delay.
            drain = self.buffer_bytes * 8_000_000_000 // self.bandwidth_bps
            self.rto_high_ns = (2 * self.graph.diameter_hops * self.prop_ns
                                + self.graph.diameter_hops * drain)
        # Pausing networks do not drop, so timeouts would only misfire.
        self.timeouts_enabled = not t.pfc
        self.retx_fetch_delay_ns = int(tr.retx_fetch_delay_us * 1000)

        if cfg.cc.scheme not in ("none", "aimd", "dcqcn", "timely"):
            raise ConfigError(f"unknown cc scheme {cfg.cc.scheme!r}")

        w = cfg.workload
        if w.kind not in ("poisson", "incast"):
            raise ConfigError(f"unknown workload kind {w.kind!r}")
        if w.bands is not None:
            self.size_dist = workload.SizeDistribution(
                [workload.SizeBand(m, lo, hi, law) for m, lo, hi, law in w.bands])
        else:
            try:
                self.size_dist = workload.DISTRIBUTIONS[w.distribution]()
            except KeyError:
                raise ConfigError(
                    f"unknown distribution {w.distribution!r}; "
                    f"known: {sorted(workload.DISTRIBUTIONS)}") from None
        self.stop_ns = None if cfg.duration_ms is None \
            else int(cfg.duration_ms * 1e6)

    def scenario_signature(self) -> str:
        """Hash of everything that must match for two runs to be
        comparable: fabric geometry, workload, seed, stop rule.  The
        transport, flow control, and congestion control may differ."""
        t, w = self.cfg.topology, self.cfg.workload
        core = {
            "graph": self.graph.label,
            "bandwidth_bps": self.bandwidth_bps,
            "prop_ns": self.prop_ns,
            "mtu": self.mtu,
            "workload": asdict(w),
            "seed": self.cfg.seed,
            "duration_ms": self.cfg.duration_ms,
        }
        blob = json.dumps(core, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def manifest(self) -> dict:
        return {
            "label": self.cfg.label,
            "seed": self.cfg.seed,
            "scenario_signature": self.scenario_signature(),
            "config": asdict(self.cfg),
            "derived": {
                "bdp_bytes": self.bdp_bytes,
                "bdp_cap_packets": self.bdp_cap_packets,
                "buffer_bytes": self.buffer_bytes,
                "xoff_bytes": self.xoff_bytes,
                "xon_bytes": self.xon_bytes,
                "rto_high_ns": self.rto_high_ns,
                "rto_low_ns": self.rto_low_ns,
                "timeouts_enabled": self.timeouts_enabled,
                "hosts": self.graph.n_hosts,
                "switches": self.graph.n_switches,
            },
        }


def _parse_bool(raw: str, where: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"{where}: expected a boolean, got {raw!r}")


def _parse_bands(raw: str):
    bands = []
    for chunk in raw.split(","):
        parts = chunk.strip().split(":")
        if len(parts) not in (3, 4):
            raise ConfigError(f"band {chunk!r} is not mass:lo:hi[:law]")
        mass, lo, hi = float(parts[0]), int(parts[1]), int(parts[2])
        law = parts[3] if len(parts) == 4 else "log_uniform"
        bands.append((mass, lo, hi, law))
    return bands


# section -> key -> (coercion, (sub-object attr, field)); None sub means RunConfig.
_INT = int
_FLOAT = float
_STR = lambda s: s.strip()
_SCHEMA = {
    "run": {
        "seed": (_INT, (None, "seed")),
        "label": (_STR, (None, "label")),
        "duration_ms": (_FLOAT, (None, "duration_ms")),
    },
    "topology": {
        "kind": (_STR, ("topology", "kind")),
        "arity": (_INT, ("topology", "arity")),
        "line_switches": (_INT, ("topology", "line_switches")),
        "bandwidth_gbps": (_FLOAT, ("topology", "bandwidth_gbps")),
        "propagation_us": (_FLOAT, ("topology", "propagation_us")),
        "mtu": (_INT, ("topology", "mtu")),
        "buffer_bytes": (_INT, ("topology", "buffer_bytes")),
        "pfc": ("bool", ("topology", "pfc")),
        "pfc_headroom_bytes": (_INT, ("topology", "pfc_headroom_bytes")),
        "pfc_xon_offset_bytes": (_INT, ("topology", "pfc_xon_offset_bytes")),
    },
    "transport": {
        "kind": (_STR, ("transport", "kind")),
        "bdp_fc": ("bool", ("transport", "bdp_fc")),
        "rto_low_us": (_FLOAT, ("transport", "rto_low_us")),
        "rto_high_us": (_FLOAT, ("transport", "rto_high_us")),
        "n_small": (_INT, ("transport", "n_small")),
        "retx_fetch_delay_us": (_FLOAT, ("transport", "retx_fetch_delay_us")),
        "extra_headers": ("bool", ("transport", "extra_headers")),
        "ack_bytes": (_INT, ("transport", "ack_bytes")),
    },
    "cc": {
        "scheme": (_STR, ("cc", "scheme")),
        "slow_start": ("bool", ("cc", "slow_start")),
    },
    "workload": {
        "kind": (_STR, ("workload", "kind")),
        "load": (_FLOAT, ("workload", "load")),
        "flow_count": (_INT, ("workload", "flow_count")),
        "distribution": (_STR, ("workload", "distribution")),
        "bands": (_parse_bands, ("workload", "bands")),
        "incast_fan_in": (_INT, ("workload", "incast_fan_in")),
        "incast_total_bytes": (_INT, ("workload", "incast_total_bytes")),
        "incast_repeats": (_INT, ("workload", "incast_repeats")),
        "incast_gap_us": (_FLOAT, ("workload", "incast_gap_us")),
    },
}


def apply_setting(cfg: RunConfig, dotted: str, raw: str) -> None:
    """Set one 'section.key' from its string form, with validation."""
    try:
        section, key = dotted.split(".", 1)
    except ValueError:
        raise ConfigError(f"setting {dotted!r} is not section.key") from None
    try:
        coerce, (sub, fieldname) = _SCHEMA[section][key]
    except KeyError:
        raise ConfigError(f"unknown setting {dotted!r}") from None
    try:
        value = _parse_bool(raw, dotted) if coerce == "bool" else coerce(raw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{dotted}: {exc}") from None
    target = cfg if sub is None else getattr(cfg, sub)
    setattr(target, fieldname, value)


def load_ini(path) -> tuple[RunConfig, dict]:
    """Parse an INI run config.  Returns (config, sweep axes); the sweep
    section maps dotted settings to lists of values to grid over."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    cfg = RunConfig()
    sweeps: dict = {}
    for section in parser.sections():
        if section == "sweep":
            for key, raw in parser.items(section):
                if "." not in key:
                    raise ConfigError(f"sweep key {key!r} is not section.key")
                values = [v.strip() for v in raw.split(",") if v.strip()]
                if not values:
                    raise ConfigError(f"sweep {key!r} has no values")
                sweeps[key] = values
            continue
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            apply_setting(cfg, f"{section}.{key}", raw)
    for dotted in sweeps:
        section, key = dotted.split(".", 1)
        if section not in _SCHEMA or key not in _SCHEMA[section]:
            raise ConfigError(f"sweep over unknown setting {dotted!r}")
    return cfg, sweeps
