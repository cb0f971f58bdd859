"""Labeled synthetic host-log corpora.

Benign streams are per-user Markov walks over a small Windows event alphabet.
Process creation (4688) and exit (4689) events track a per-user set of running
processes so that parent/child fields line up, and a fraction of events share
the previous event's timestamp. Malicious activity is spliced in as short
bursts drawn from a different transition matrix; each injected log uses a
family-specific process name with probability ``novel_prob`` and otherwise
mimics an ordinary application name.

Nothing here models real malware; the families are labels only.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigError
from .ingest import LogRecord

EVENTS = (4624, 4672, 4688, 4689, 4798, 4634)

BENIGN_TRANSITIONS = (
    # 4624  4672  4688  4689  4798  4634
    (0.00, 0.85, 0.10, 0.00, 0.05, 0.00),  # 4624 logon
    (0.00, 0.00, 0.50, 0.10, 0.40, 0.00),  # 4672 special privileges
    (0.00, 0.10, 0.25, 0.30, 0.30, 0.05),  # 4688 process created
    (0.00, 0.05, 0.45, 0.10, 0.30, 0.10),  # 4689 process exited
    (0.00, 0.05, 0.35, 0.20, 0.30, 0.10),  # 4798 group membership enumerated
    (1.00, 0.00, 0.00, 0.00, 0.00, 0.00),  # 4634 logoff
)

APPLICATIONS = (
    "chrome.exe", "msedge.exe", "firefox.exe", "outlook.exe", "teams.exe", "excel.exe",
    "winword.exe", "powerpnt.exe", "notepad.exe", "cmd.exe", "conhost.exe", "onedrive.exe",
    "searchapp.exe", "code.exe", "python.exe", "git.exe", "backgroundtaskhost.exe",
    "runtimebroker.exe", "taskhostw.exe", "dllhost.exe", "acrord32.exe", "zoom.exe",
    "slack.exe", "spotify.exe", "mstsc.exe", "svchost.exe",
)

ENUMERATORS = ("chrome.exe", "svchost.exe", "explorer.exe", "teams.exe")

LOGON_TYPES = (("2", 0.35), ("3", 0.3), ("5", 0.1), ("7", 0.2), ("11", 0.05))

FAMILIES = ("adware", "backdoor_trojan", "browser_hijacker", "crypto_miner",
            "ransomware", "rootkit", "others")


@dataclass(frozen=True)
class BehaviorProfile:
    events: tuple = EVENTS
    transitions: tuple = BENIGN_TRANSITIONS
    applications: tuple = APPLICATIONS
    enumerators: tuple = ENUMERATORS
    logon_types: tuple = LOGON_TYPES
    concurrency: float = 0.1
    gap_mean_ms: float = 2000.0
    app_concentration: float = 0.5  # Dirichlet alpha for per-user app preferences
    start_ms: int = 1_700_000_000_000

    def __post_init__(self):
        _check_matrix(self.transitions, len(self.events), "transitions")
        if not 0.0 <= self.concurrency < 1.0:
            raise ConfigError("concurrency must lie in [0, 1)")
        if self.gap_mean_ms <= 0:
            raise ConfigError("gap_mean_ms must be > 0")


RANSOMWARE_TRANSITIONS = (
    # 4624  4672  4688  4689  4798  4634
    (0.00, 0.60, 0.30, 0.00, 0.10, 0.00),
    (0.00, 0.00, 0.70, 0.10, 0.20, 0.00),
    (0.05, 0.05, 0.45, 0.25, 0.20, 0.00),
    (0.00, 0.05, 0.65, 0.10, 0.20, 0.00),
    (0.00, 0.05, 0.55, 0.15, 0.25, 0.00),
    (1.00, 0.00, 0.00, 0.00, 0.00, 0.00),
)

RANSOMWARE_PROCESSES = (
    "vssadmin.exe", "wmic.exe", "bcdedit.exe", "wbadmin.exe", "cipher.exe", "icacls.exe",
    "taskkill.exe", "powershell.exe", "rundll32.exe", "regsvr32.exe", "mshta.exe",
    "certutil.exe", "schtasks.exe", "xk3f9q.exe", "svch0st.exe", "update_x64.exe",
)


@dataclass(frozen=True)
class InjectionSpec:
    family: str = "ransomware"
    events: tuple = EVENTS
    transitions: tuple = RANSOMWARE_TRANSITIONS
    processes: tuple = RANSOMWARE_PROCESSES
    mimic_processes: tuple = APPLICATIONS
    novel_prob: float = 1.0
    length_min: int = 8
    length_max: int = 24
    rate: float = 0.05
    concurrency: float = 0.2
    gap_mean_ms: float = 300.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        _check_matrix(self.transitions, len(self.events), "transitions")
        if not 0.0 < self.rate <= 0.5:
            raise ConfigError("rate must lie in (0, 0.5]")
        if not 1 <= self.length_min <= self.length_max:
            raise ConfigError("need 1 <= length_min <= length_max")
        if not 0.0 <= self.novel_prob <= 1.0:
            raise ConfigError("novel_prob must lie in [0, 1]")
        if not 0.0 <= self.concurrency < 1.0:
            raise ConfigError("concurrency must lie in [0, 1)")


def _check_matrix(rows, n, name):
    m = np.asarray(rows, dtype=float)
    if m.shape != (n, n):
        raise ConfigError(f"{name} must be {n}x{n}")
    if np.any(m < 0) or not np.allclose(m.sum(axis=1), 1.0, atol=1e-9, rtol=0):
        raise ConfigError(f"{name} rows must be non-negative and sum to 1")


def user_name(i: int) -> str:
    return f"user{i + 1:02d}"


class _Host:
    """Per-user process bookkeeping shared by benign and injected generation."""

    def __init__(self):
        self.running: dict[str, str] = {}  # process -> parent process
        self.last_logon = "2"


def _gap(rng, mean_ms: float, concurrency: float) -> int:
    if rng.random() < concurrency:
        return 0
    return max(1, int(round(rng.exponential(mean_ms))))


def _benign_fields(event: int, rng, profile: BehaviorProfile, app_p, host: _Host):
    apps = profile.applications
    if event == 4624:
        values, weights = zip(*profile.logon_types)
        logon = values[rng.choice(len(values), p=np.asarray(weights) / sum(weights))]
        host.last_logon = logon
        proc = "winlogon.exe" if logon in ("2", "7", "11") else "svchost.exe"
        return proc, "", logon, "services.exe"
    if event == 4672:
        return "lsass.exe", "", "", "wininit.exe"
    if event == 4688:
        proc = apps[rng.choice(len(apps), p=app_p)]
        if host.running and rng.random() < 0.5:
            names = sorted(host.running)
            parent = names[rng.integers(len(names))]
        else:
            parent = "explorer.exe"
        host.running[proc] = parent
        return proc, proc, "", parent
    if event == 4689:
        if host.running:
            names = sorted(host.running)
            proc = names[rng.integers(len(names))]
            parent = host.running.pop(proc)
        else:
            proc, parent = apps[rng.choice(len(apps), p=app_p)], "explorer.exe"
        return proc, proc, "", parent
    if event == 4798:
        enum = profile.enumerators
        proc = enum[rng.integers(len(enum))]
        return proc, "", "", ""
    if event == 4634:
        return "lsass.exe", "", host.last_logon, ""
    proc = apps[rng.choice(len(apps), p=app_p)]
    return proc, "", "", ""


def gen_user(profile: BehaviorProfile, user_index: int, n_logs: int, seed: int) -> list[LogRecord]:
    rng = np.random.default_rng([seed, user_index])
    trans = np.asarray(profile.transitions, dtype=float)
    n_apps = len(profile.applications)
    app_p = rng.dirichlet(np.full(n_apps, profile.app_concentration))
    host = _Host()
    uid = user_name(user_index)
    ts = profile.start_ms + int(rng.integers(0, 60_000))
    state = 0
    out = []
    for i in range(n_logs):
        if i:
            state = int(rng.choice(len(profile.events), p=trans[state]))
            ts += _gap(rng, profile.gap_mean_ms, profile.concurrency)
        event = profile.events[state]
        proc, base, logon, parent = _benign_fields(event, rng, profile, app_p, host)
        out.append(LogRecord(uid, ts, event, proc, base, logon, parent))
    return out


def merge_streams(streams: Sequence[Sequence]) -> list:
    """Interleave per-user streams by timestamp (ties: user order, then position)."""
    keyed = [
        (item[0].timestamp if isinstance(item, tuple) else item.timestamp, u, i, item)
        for u, stream in enumerate(streams)
        for i, item in enumerate(stream)
    ]
    keyed.sort(key=lambda k: k[:3])
    return [k[3] for k in keyed]


def gen_benign(profile: BehaviorProfile, users: int, logs_per_user: int, seed: int = 42) -> list[LogRecord]:
    return merge_streams([gen_user(profile, u, logs_per_user, seed) for u in range(users)])


class Splice(NamedTuple):
    user_id: str
    after: int  # number of the user's benign logs preceding the burst
    length: int
    family: str


class Injection(NamedTuple):
    records: list
    labels: list
    splices: list


def _anomalous_burst(spec: InjectionSpec, rng, user_id: str, ts: int, length: int) -> list[LogRecord]:
    trans = np.asarray(spec.transitions, dtype=float)
    state = int(rng.integers(len(spec.events)))
    chain = []
    out = []
    for i in range(length):
        if i:
            state = int(rng.choice(len(spec.events), p=trans[state]))
            ts += _gap(rng, spec.gap_mean_ms, spec.concurrency)
        event = spec.events[state]
        pool = spec.processes if rng.random() < spec.novel_prob else spec.mimic_processes
        proc = pool[rng.integers(len(pool))]
        parent = chain[-1] if chain and rng.random() < 0.7 else ("outlook.exe", "winword.exe", "explorer.exe")[rng.integers(3)]
        if event in (4688, 4689):
            if event == 4688:
                chain.append(proc)
            rec = LogRecord(user_id, ts, event, proc, proc, "", parent)
        elif event == 4624:
            rec = LogRecord(user_id, ts, event, "svchost.exe", "", ("3", "10")[rng.integers(2)], "services.exe")
        elif event == 4672:
            rec = LogRecord(user_id, ts, event, "lsass.exe", "", "", "wininit.exe")
        elif event == 4634:
            rec = LogRecord(user_id, ts, event, "lsass.exe", "", "3", "")
        else:
            rec = LogRecord(user_id, ts, event, proc, "", "", parent if rng.random() < 0.5 else "")
        out.append(rec)
    return out


def inject(benign: Sequence[LogRecord], spec: InjectionSpec, seed: int = 42,
           n_segments: int | None = None) -> Injection:
    """Splice anomalous bursts into per-user streams.

    Without ``n_segments`` the total injected length is ``round(rate * len(benign))``.
    Each burst starts right after some benign log of a randomly chosen user;
    that user's later logs are shifted by the burst duration so timestamps
    stay monotone. Labels are True for injected logs.
    """
    if not benign:
        raise ConfigError("benign stream is empty")
    rng = np.random.default_rng([seed, 0x1A1])
    if n_segments is None:
        target = int(round(spec.rate * len(benign)))
        if target < spec.length_min:
            raise ConfigError(
                f"rate {spec.rate} yields {target} injected logs for {len(benign)} records; "
                f"need at least length_min={spec.length_min}")
        lengths = []
        while sum(lengths) < target:
            lengths.append(int(rng.integers(spec.length_min, spec.length_max + 1)))
        lengths[-1] -= sum(lengths) - target
        if lengths[-1] < spec.length_min and len(lengths) > 1:
            # fold the short remainder into its neighbor, splitting the pair
            # evenly when the sum would exceed length_max
            total = lengths.pop() + lengths.pop()
            if total <= spec.length_max or total // 2 < spec.length_min:
                lengths.append(total)
            else:
                lengths += [total // 2, total - total // 2]
    else:
        if n_segments < 0:
            raise ConfigError("n_segments must be >= 0")
        lengths = [int(rng.integers(spec.length_min, spec.length_max + 1)) for _ in range(n_segments)]

    per_user: dict[str, list] = {}
    for rec in benign:
        per_user.setdefault(rec.user_id, []).append(rec)
    users = list(per_user)
    plan: dict[str, list] = {u: [] for u in users}
    for length in lengths:
        u = users[int(rng.integers(len(users)))]
        after = int(rng.integers(1, len(per_user[u]) + 1))
        plan[u].append((after, length))

    streams, splices = [], []
    for u in users:
        recs = per_user[u]
        cuts = sorted(plan[u])
        merged = []
        shift = 0
        pos = 0
        for after, length in cuts:
            for rec in recs[pos:after]:
                merged.append((replace(rec, timestamp=rec.timestamp + shift), False))
            pos = after
            start = merged[-1][0].timestamp + _gap(rng, spec.gap_mean_ms, 0.0)
            burst = _anomalous_burst(spec, rng, u, start, length)
            merged.extend((r, True) for r in burst)
            shift += burst[-1].timestamp - merged[-length - 1][0].timestamp
            splices.append(Splice(u, after, length, spec.family))
        for rec in recs[pos:]:
            merged.append((replace(rec, timestamp=rec.timestamp + shift), False))
        streams.append(merged)

    out = merge_streams(streams)
    return Injection([r for r, _ in out], [lab for _, lab in out], splices)


def _tuplify(value):
    if isinstance(value, list):
        return tuple(_tuplify(v) for v in value)
    return value


def profile_from_dict(d: dict) -> BehaviorProfile:
    return BehaviorProfile(**{k: _tuplify(v) for k, v in d.items()})


def spec_from_dict(d: dict) -> InjectionSpec:
    return InjectionSpec(**{k: _tuplify(v) for k, v in d.items()})


def load_config(path: str | Path) -> tuple[BehaviorProfile, InjectionSpec]:
    """Read ``{"profile": {...}, "injection": {...}}`` JSON; missing keys keep defaults."""
    data = json.loads(Path(path).read_text())
    return profile_from_dict(data.get("profile", {})), spec_from_dict(data.get("injection", {}))


def dump_config(profile: BehaviorProfile, spec: InjectionSpec) -> str:
    return json.dumps({"profile": asdict(profile), "injection": asdict(spec)}, indent=2)


def split_by_time(records: Sequence[LogRecord], train_frac: float) -> tuple[list, list]:
    """Per user, the first ``train_frac`` of that user's logs go to the first part."""
    if not 0.0 < train_frac < 1.0:
        raise ConfigError("train_frac must lie in (0, 1)")
    per_user: dict[str, list] = {}
    for rec in records:
        per_user.setdefault(rec.user_id, []).append(rec)
    head, tail = [], []
    for recs in per_user.values():
        cut = int(round(train_frac * len(recs)))
        head.append(recs[:cut])
        tail.append(recs[cut:])
    return merge_streams(head), merge_streams(tail)
