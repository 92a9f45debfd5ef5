"""Labeled synthetic log corpora with realistic structure.

Generated corpora reproduce the structural characteristics of large
multi-component system logs: anomalies arrive in contiguous bursts rather
than uniformly, events from several components interleave, and message
text drifts over time via random word mutations. The four-system
benchmark pairs two source-like systems with two target-like systems;
their component vocabularies are disjoint while their anomaly template
families partially overlap, so cross-system transfer is possible but not
trivial.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InfeasibleRate
from .ingest import LogEvent, LogSplit, NORMAL_LABEL
from .seeds import substream

_LETTERS = "abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class ComponentSpec:
    """One reporting component and its normal (level, message) templates."""

    name: str
    templates: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class AnomalyFamily:
    """One anomaly incident type; the tag becomes the event label."""

    tag: str
    level: str
    templates: tuple[str, ...]


@dataclass
class SystemProfile:
    system_id: str
    components: tuple[ComponentSpec, ...]
    anomaly_families: tuple[AnomalyFamily, ...]
    anomaly_rate: float
    cluster_length: tuple[int, int]
    template_noise: float = 0.05
    seed: int = 0
    start_ts: int = 1_100_000_000

    def __post_init__(self):
        if not 0.0 <= self.anomaly_rate <= 1.0:
            raise ValueError(f"anomaly_rate must be in [0, 1], got {self.anomaly_rate}")
        cmin, cmax = self.cluster_length
        if cmin < 1 or cmax < cmin:
            raise ValueError(f"bad cluster bounds {self.cluster_length}")
        if not 0.0 <= self.template_noise <= 1.0:
            raise ValueError(f"template_noise must be in [0, 1], got {self.template_noise}")
        if not self.components:
            raise ValueError("component lexicon must be non-empty")
        if self.anomaly_rate > 0 and not self.anomaly_families:
            raise ValueError("anomaly_rate > 0 requires anomaly families")


def _fill_slots(template: str, rng: np.random.Generator) -> str:
    """Replace <n> with a random integer and <x> with random 8-digit hex."""
    out = template
    while "<n>" in out:
        out = out.replace("<n>", str(int(rng.integers(1, 100_000))), 1)
    while "<x>" in out:
        out = out.replace("<x>", format(int(rng.integers(0, 2**32)), "08x"), 1)
    return out


def _mutate_words(message: str, noise: float, rng: np.random.Generator) -> str:
    """Per-word mutation with probability ``noise``; models log drift."""
    if noise <= 0.0:
        return message
    words = message.split(" ")
    for i, word in enumerate(words):
        if not word or rng.random() >= noise:
            continue
        op = int(rng.integers(3))
        if op == 0:
            words[i] = word + _LETTERS[int(rng.integers(26))]
        elif op == 1 and len(word) > 2:
            words[i] = word[:-1]
        else:
            words[i] = word[0] + word
    return " ".join(words)


def _burst_lengths(
    target: int, lo: int, hi: int, cmin: int, cmax: int, rng: np.random.Generator
) -> list[int]:
    """Burst lengths summing into [lo, hi], each within [cmin, cmax]."""
    lengths: list[int] = []
    total = 0
    while total < lo:
        room = hi - total
        if room < cmin:
            raise InfeasibleRate(
                f"cannot reach {target} anomalies with bursts of {cmin}..{cmax} "
                f"inside the +-10% band [{lo}, {hi}]"
            )
        length = int(rng.integers(cmin, min(cmax, room) + 1))
        gap = lo - (total + length)
        if 0 < gap < cmin:
            if length + gap <= min(cmax, room):
                length += gap
            elif length - (cmin - gap) >= cmin:
                length -= cmin - gap
            else:
                raise InfeasibleRate(
                    f"cluster bounds {cmin}..{cmax} cannot tile the band [{lo}, {hi}]"
                )
        lengths.append(length)
        total += length
    return lengths


def generate_corpus(profile: SystemProfile, n_events: int) -> LogSplit:
    """Generate ``n_events`` canonical events for one system.

    Anomalies are injected as contiguous bursts whose lengths come from
    the profile's cluster distribution until the total lands within 10%
    relative of the target rate; each burst reports one incident family
    through one component. Timestamps increase strictly. Regeneration with
    the same profile is byte-identical.
    """
    if n_events < 1:
        raise ValueError(f"n_events must be >= 1, got {n_events}")
    rng = substream(profile.seed, f"synth:{profile.system_id}")
    target = int(round(profile.anomaly_rate * n_events))
    if profile.anomaly_rate > 0 and target == 0:
        raise InfeasibleRate(
            f"rate {profile.anomaly_rate} rounds to zero anomalies for {n_events} events"
        )
    cmin, cmax = profile.cluster_length
    bursts: list[int] = []
    if target > 0:
        lo = int(np.ceil(target * 0.9 - 1e-9))
        hi = int(np.floor(target * 1.1 + 1e-9))
        bursts = _burst_lengths(target, max(lo, 1), hi, cmin, cmax, rng)
    total_anomalous = sum(bursts)
    n_normal = n_events - total_anomalous
    if n_normal < 0 or len(bursts) > n_normal + 1:
        raise InfeasibleRate(
            f"{len(bursts)} bursts totalling {total_anomalous} anomalies do not fit "
            f"{n_events} events"
        )
    # Each burst occupies one distinct gap between normal events, so runs
    # of anomalies never merge and every run keeps its burst length.
    gap_slots = np.sort(rng.choice(n_normal + 1, size=len(bursts), replace=False))
    # Burst incidents cycle through a shuffled family order, so any stretch
    # of the corpus covering >= len(families) bursts has seen every family.
    family_order = list(rng.permutation(len(profile.anomaly_families))) if bursts else []

    events: list[LogEvent] = []
    ts = profile.start_ts
    burst_idx = 0

    def emit(label: str, component: str, level: str, message: str) -> None:
        nonlocal ts
        ts += int(rng.integers(1, 4))
        events.append(
            LogEvent(
                seq=len(events),
                timestamp=ts,
                label=label,
                component=component,
                level=level,
                message=message,
            )
        )

    def emit_burst(index: int, length: int) -> None:
        family_idx = family_order[index % len(family_order)]
        family = profile.anomaly_families[family_idx]
        component = profile.components[int(rng.integers(len(profile.components)))]
        for _ in range(length):
            template = family.templates[int(rng.integers(len(family.templates)))]
            message = _mutate_words(_fill_slots(template, rng), profile.template_noise, rng)
            emit(family.tag, component.name, family.level, message)

    for normal_idx in range(n_normal):
        while burst_idx < len(bursts) and gap_slots[burst_idx] == normal_idx:
            emit_burst(burst_idx, bursts[burst_idx])
            burst_idx += 1
        component = profile.components[int(rng.integers(len(profile.components)))]
        level, template = component.templates[int(rng.integers(len(component.templates)))]
        message = _mutate_words(_fill_slots(template, rng), profile.template_noise, rng)
        emit(NORMAL_LABEL, component.name, level, message)
    while burst_idx < len(bursts):
        emit_burst(burst_idx, bursts[burst_idx])
        burst_idx += 1
    return LogSplit(profile.system_id, 0, events)


# Shared pool of anomaly incident families. Systems draw overlapping
# subsets: the overlap makes transfer possible, the disjoint remainder
# makes single-source training insufficient. Every family repeats a few
# anchor words across its template variants, so word-level drift noise
# rarely masks all of a family's evidence at once.
ANOMALY_POOL: dict[str, AnomalyFamily] = {
    "DISKFAIL": AnomalyFamily(
        "DISKFAIL", "ERROR",
        (
            "unrecoverable scsi write fault on disk volume <n> sector <x>",
            "disk controller reported unrecoverable medium error at sector <x>",
            "scsi command timeout disk offline after unrecoverable retries <n>",
        ),
    ),
    "ECCMEM": AnomalyFamily(
        "ECCMEM", "ERROR",
        (
            "uncorrectable double bit ecc fault detected in dimm slot <n>",
            "memory scrubber flagged uncorrectable ecc syndrome at address <x>",
            "dimm <n> exceeded correctable ecc threshold entering uncorrectable state",
        ),
    ),
    "NETDOWN": AnomalyFamily(
        "NETDOWN", "ERROR",
        (
            "fabric link carrier lost interface eth<n> now unreachable",
            "destination node n<n> unreachable packet route withdrawn from fabric",
            "carrier loss detected fabric lane <n> traffic unreachable",
        ),
    ),
    "KERNPANIC": AnomalyFamily(
        "KERNPANIC", "FATAL",
        (
            "kernel panic unhandled page fault exception at address <x>",
            "fatal oops unhandled interrupt vector <n> halting cpu",
            "panic stack trace dumped unhandled exception in scheduler",
        ),
    ),
    "FSCORRUPT": AnomalyFamily(
        "FSCORRUPT", "ERROR",
        (
            "filesystem journal corruption detected replay aborted on /scratch/vol<n>/data",
            "orphaned inode chain corruption found during journal replay",
            "metadata checksum corruption in journal block <x> marking inode orphaned",
        ),
    ),
    "PSUFAULT": AnomalyFamily(
        "PSUFAULT", "FATAL",
        (
            "psu voltage excursion beyond limit on rail <n>",
            "power rail undervoltage fault psu entering failsafe",
            "psu fan stall detected rail current unstable",
        ),
    ),
    "OVERTEMP": AnomalyFamily(
        "OVERTEMP", "WARNING",
        (
            "thermal overheat condition core temperature beyond critical threshold",
            "socket <n> overheat thermal throttle engaged emergency",
            "ambient thermal runaway detected overheat protection active",
        ),
    ),
    "JOBABORT": AnomalyFamily(
        "JOBABORT", "INFO",
        (
            "job step <n> aborted task terminated by resource manager preemption",
            "allocation revoked job aborted with nonzero exit status <n>",
            "scheduler preempted job terminated abort signal delivered",
        ),
    ),
    "AUTHFAIL": AnomalyFamily(
        "AUTHFAIL", "WARNING",
        (
            "authentication denied repeated invalid credential for user u<n>",
            "credential verification failure access denied from 10.0.<n>.<n>",
            "authentication token rejected denied by policy gateway",
        ),
    ),
    "SWAPSTORM": AnomalyFamily(
        "SWAPSTORM", "ERROR",
        (
            "swap thrash storm free memory exhausted oom imminent",
            "oom killer invoked swap pressure critical process <n> sacrificed",
            "page thrash detected swap device saturated memory reclaim failing",
        ),
    ),
}

# Each target draws exactly three families from each source's exclusive
# set, so the sources jointly cover every target family while either one
# alone covers only half.
_BENCHMARK_FAMILIES: dict[str, tuple[str, ...]] = {
    "aurora": ("DISKFAIL", "ECCMEM", "NETDOWN", "KERNPANIC", "FSCORRUPT", "PSUFAULT"),
    "borealis": ("NETDOWN", "KERNPANIC", "OVERTEMP", "JOBABORT", "AUTHFAIL", "SWAPSTORM"),
    "cascade": ("DISKFAIL", "ECCMEM", "FSCORRUPT", "OVERTEMP", "JOBABORT", "AUTHFAIL"),
    "dunefield": ("ECCMEM", "FSCORRUPT", "PSUFAULT", "JOBABORT", "AUTHFAIL", "SWAPSTORM"),
}

_BENCHMARK_COMPONENTS: dict[str, tuple[ComponentSpec, ...]] = {
    "aurora": (
        ComponentSpec("fabricd", (
            ("INFO", "link training complete on port <n>"),
            ("INFO", "routing table refresh finished in <n> ms"),
            ("DEBUG", "credit counters rebalanced across lanes"),
            ("INFO", "fabric heartbeat acknowledged by switch <n>"),
            ("WARNING", "transient crc retry succeeded on port <n>"),
        )),
        ComponentSpec("jobmgr", (
            ("INFO", "job <n> dispatched to partition batch"),
            ("INFO", "epilogue completed for job <n>"),
            ("INFO", "reservation window opened for project alpha"),
            ("DEBUG", "scheduler pass evaluated <n> queued jobs"),
        )),
        ComponentSpec("envmon", (
            ("INFO", "ambient sensors nominal in rack row <n>"),
            ("INFO", "coolant flow steady at <n> lpm"),
            ("DEBUG", "fan curve updated for chassis <n>"),
        )),
        ComponentSpec("ckptd", (
            ("INFO", "checkpoint flushed to /ckpt/stage<n>/img"),
            ("INFO", "incremental snapshot verified clean"),
            ("DEBUG", "dirty page scan finished with <n> pages"),
        )),
    ),
    "borealis": (
        ComponentSpec("lustrefs", (
            ("INFO", "ost rebalance completed on target <n>"),
            ("INFO", "metadata server responded in <n> us"),
            ("DEBUG", "striping policy applied to /lus/proj<n>"),
            ("WARNING", "slow io retry recovered on ost <n>"),
        )),
        ComponentSpec("schedq", (
            ("INFO", "queue depth now <n> awaiting resources"),
            ("INFO", "backfill placed job <n> ahead of window"),
            ("DEBUG", "priority decay applied to aged entries"),
        )),
        ComponentSpec("powerctl", (
            ("INFO", "cabinet power draw steady at <n> kw"),
            ("INFO", "capping policy relaxed for benchmark run"),
            ("DEBUG", "rail telemetry sampled at <n> hz"),
        )),
        ComponentSpec("imgload", (
            ("INFO", "compute image staged to node n<n>"),
            ("INFO", "boot profile verified against manifest"),
            ("DEBUG", "image cache hit ratio <n> percent"),
        )),
    ),
    "cascade": (
        ComponentSpec("nodeagent", (
            ("INFO", "agent heartbeat ok load average nominal"),
            ("INFO", "state report uploaded for node n<n>"),
            ("DEBUG", "inventory scan enumerated <n> devices"),
            ("WARNING", "heartbeat retry succeeded after jitter"),
        )),
        ComponentSpec("mpirun", (
            ("INFO", "rank table distributed to <n> processes"),
            ("INFO", "collective barrier completed in <n> us"),
            ("DEBUG", "binding policy set to core granularity"),
        )),
        ComponentSpec("thermald", (
            ("INFO", "inlet temperature within envelope"),
            ("INFO", "fan speeds converged after load shift"),
            ("DEBUG", "sensor poll cycle took <n> ms"),
        )),
        ComponentSpec("netpoll", (
            ("INFO", "route liveness confirmed for uplink <n>"),
            ("INFO", "latency probe round trip <n> us"),
            ("DEBUG", "arp cache refreshed entries <n>"),
        )),
    ),
    "dunefield": (
        ComponentSpec("raidmon", (
            ("INFO", "array scrub pass completed no defects"),
            ("INFO", "spare drive ready in bay <n>"),
            ("DEBUG", "stripe verify window advanced"),
            ("WARNING", "media retry recovered on disk <n>"),
        )),
        ComponentSpec("authgate", (
            ("INFO", "session opened for operator console"),
            ("INFO", "credential cache refreshed for realm hpc"),
            ("DEBUG", "ticket renewal scheduled in <n> s"),
        )),
        ComponentSpec("watchdogd", (
            ("INFO", "watchdog timer armed interval <n> s"),
            ("INFO", "liveness probe responded promptly"),
            ("DEBUG", "kick counter at <n> since boot"),
        )),
        ComponentSpec("pktfwd", (
            ("INFO", "forwarding table synced <n> entries"),
            ("INFO", "uplink utilization at <n> percent"),
            ("DEBUG", "flow cache eviction pass complete"),
        )),
    ),
}

# (anomaly_rate, cluster bounds, profile role) per benchmark system. Two
# lower-rate systems (aurora, cascade) and two higher-rate systems
# (borealis, dunefield) echo the corpus-level contrast between systems,
# scaled so that sampled splits land inside the preset anomaly bands.
# Rates and burst lengths are chosen so a 10,000-event source split holds
# enough bursts to cycle through every anomaly family.
_BENCHMARK_RATES: dict[str, tuple[float, tuple[int, int], str]] = {
    "aurora": (0.003, (3, 6), "source"),
    "borealis": (0.0045, (3, 8), "source"),
    "cascade": (0.0028, (3, 6), "target"),
    "dunefield": (0.005, (3, 7), "target"),
}

BENCHMARK_SOURCES = ("aurora", "borealis")
BENCHMARK_TARGETS = ("cascade", "dunefield")
# Split-sampling preset per target (lower-rate target uses the tighter band).
BENCHMARK_TARGET_PROFILES = {"cascade": "tbird", "dunefield": "spirit"}


def make_benchmark(seed: int) -> dict[str, SystemProfile]:
    """Four system profiles: two source-like and two target-like.

    Component lexicons are pairwise disjoint; anomaly families overlap at
    least 30% pairwise (overlap coefficient by family identity), and the
    two sources jointly cover every target family while neither source
    does alone.
    """
    profiles = {}
    for name, (rate, cluster, _) in _BENCHMARK_RATES.items():
        profiles[name] = SystemProfile(
            system_id=name,
            components=_BENCHMARK_COMPONENTS[name],
            anomaly_families=tuple(ANOMALY_POOL[f] for f in _BENCHMARK_FAMILIES[name]),
            anomaly_rate=rate,
            cluster_length=cluster,
            seed=seed,
        )
    return profiles


def profile_to_dict(profile: SystemProfile) -> dict:
    return {
        "system_id": profile.system_id,
        "components": [
            {"name": c.name, "templates": [list(t) for t in c.templates]}
            for c in profile.components
        ],
        "anomaly_families": [
            {"tag": f.tag, "level": f.level, "templates": list(f.templates)}
            for f in profile.anomaly_families
        ],
        "anomaly_rate": profile.anomaly_rate,
        "cluster_length": list(profile.cluster_length),
        "template_noise": profile.template_noise,
        "seed": profile.seed,
        "start_ts": profile.start_ts,
    }


def profile_from_dict(data: dict) -> SystemProfile:
    return SystemProfile(
        system_id=data["system_id"],
        components=tuple(
            ComponentSpec(c["name"], tuple((lvl, msg) for lvl, msg in c["templates"]))
            for c in data["components"]
        ),
        anomaly_families=tuple(
            AnomalyFamily(f["tag"], f["level"], tuple(f["templates"]))
            for f in data["anomaly_families"]
        ),
        anomaly_rate=data["anomaly_rate"],
        cluster_length=tuple(data["cluster_length"]),
        template_noise=data.get("template_noise", 0.05),
        seed=data.get("seed", 0),
        start_ts=data.get("start_ts", 1_100_000_000),
    )


def load_profile(path: str | Path) -> SystemProfile:
    with open(path, encoding="utf-8") as handle:
        return profile_from_dict(json.load(handle))


def save_profile(profile: SystemProfile, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(profile_to_dict(profile), handle, indent=2)
        handle.write("\n")
