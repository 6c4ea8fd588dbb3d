"""Monte-Carlo BLER driver.

Every block draws its randomness from two streams derived from
(master seed, snr index, block index): stream 0 for channel gains and noise,
stream 1 for message bits. Two configurations with the same seed therefore
see identical noise and (up to truncation to their message lengths) identical
messages, and the outcome does not depend on how batches are spread over
worker processes.
"""

from __future__ import annotations

import csv
import hashlib
import json
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .construction import ConstructionResult, McParams, construct_pup, construct_sup, total_info_bits
from .detector import DEFAULT_ITERATIONS
from .factor_graph import get_graph
from .noma_phy import NomaSystem, complex_noise, default_system, gen_channel, load_codebooks, noise_var_from_snr
from .receivers import SystemSpec, make_interleavers, receive, transmit

__version__ = "0.1.0"

CSV_COLUMNS = ["snr_db", "user", "blocks", "block_errors", "bler", "ber", "seconds",
               "scheme", "error_events", "config_hash", "version"]

PRESETS = {
    "desk": {"N": 256, "list_size": 8, "target_errors": 100},
    "full": {"N": 1024, "list_size": 32, "target_errors": 100},
}

# fields that do not change results and are left out of the config hash
_UNHASHED = ("out", "workers")


@dataclass
class SimConfig:
    graph: str = "pdma2x3"
    codebook: str | None = None
    N: int = 256
    rate: float = 0.5
    J: int | None = None
    mode: str = "jsc"
    list_size: int = 8
    iterations: int = DEFAULT_ITERATIONS
    scheduler: str = "ps"
    ps_method: str = "exit-mc"
    order: list[int] | None = None
    snr_db: list[float] = field(default_factory=lambda: [2.0, 4.0, 6.0, 8.0])
    channel: str = "awgn"
    max_blocks: int = 100_000
    target_errors: float = 100
    min_blocks: int = 0
    batch_size: int = 100
    seed: int = 1
    design_snr_db: float | None = None
    construction: str | None = None
    mc_samples: int = 50_000
    workers: int = 1
    out: str | None = None

    @classmethod
    def from_dict(cls, obj: dict) -> "SimConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**obj)
        cfg.snr_db = [float(s) for s in np.atleast_1d(cfg.snr_db)]
        return cfg

    @classmethod
    def load(cls, path) -> "SimConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        d = {k: v for k, v in self.to_dict().items() if k not in _UNHASHED}
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    @property
    def scheme(self) -> str:
        return f"jsc-{self.scheduler}" if self.mode == "jsc" else "psc"

    def validate(self, system: NomaSystem) -> None:
        if not self.snr_db:
            raise ValueError("the SNR grid is empty")
        if self.mode not in ("jsc", "psc"):
            raise ValueError(f"unknown receiver mode {self.mode!r}")
        if self.scheduler not in ("ps", "as", "explicit"):
            raise ValueError(f"unknown scheduler {self.scheduler!r}")
        if self.scheduler == "explicit" and self.mode == "jsc" and self.order is None:
            raise ValueError("the explicit scheduler needs an order")
        if self.ps_method not in ("sinr-greedy", "exit-mc"):
            raise ValueError(f"unknown ps_method {self.ps_method!r}")
        if self.J is not None and self.J != system.bits_per_symbol:
            raise ValueError(f"J={self.J} but the codebooks carry {system.bits_per_symbol} bits")
        total_info_bits(self.rate, self.N, system.num_users)
        if self.max_blocks < 1 or self.batch_size < 1:
            raise ValueError("max_blocks and batch_size must be positive")


@dataclass
class BlerRecord:
    snr_db: float
    scheme: str
    blocks: int
    block_errors: list[int]
    bit_errors: list[int]
    message_bits: list[int]
    seconds: float
    config_hash: str
    version: str

    @property
    def user_bler(self) -> list[float]:
        return [e / self.blocks for e in self.block_errors]

    @property
    def user_ber(self) -> list[float]:
        return [e / (self.blocks * k) if k else 0.0 for e, k in zip(self.bit_errors, self.message_bits)]

    @property
    def avg_bler(self) -> float:
        return float(np.mean(self.user_bler))

    @property
    def avg_ber(self) -> float:
        return sum(self.bit_errors) / (self.blocks * sum(self.message_bits))

    @property
    def error_events(self) -> float:
        """Block errors averaged over users, the count behind the average BLER."""
        return sum(self.block_errors) / len(self.block_errors)

    def rows(self) -> list[dict]:
        common = {"snr_db": self.snr_db, "blocks": self.blocks, "seconds": round(self.seconds, 3),
                  "scheme": self.scheme, "error_events": self.error_events,
                  "config_hash": self.config_hash, "version": self.version}
        out = [dict(common, user=v, block_errors=e, bler=b, ber=r)
               for v, (e, b, r) in enumerate(zip(self.block_errors, self.user_bler, self.user_ber), start=1)]
        out.append(dict(common, user="avg", block_errors=sum(self.block_errors),
                        bler=self.avg_bler, ber=self.avg_ber))
        return out


def version_string() -> str:
    """``git describe`` of the source tree when available, else the package version."""
    try:
        res = subprocess.run(["git", "describe", "--tags", "--always", "--dirty"],
                             cwd=Path(__file__).parent, capture_output=True, text=True, timeout=5)
        if res.returncode == 0 and res.stdout.strip():
            return f"{__version__}+{res.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def build_system(cfg: SimConfig) -> NomaSystem:
    graph = get_graph(cfg.graph)
    if cfg.codebook is None:
        return default_system(graph)
    return NomaSystem(graph, tuple(load_codebooks(cfg.codebook)))


def build_construction(cfg: SimConfig, system: NomaSystem, design_snr_db: float) -> ConstructionResult:
    mc = McParams(cfg.mc_samples, cfg.seed, cfg.channel, cfg.iterations)
    if cfg.mode == "psc":
        return construct_pup(system, design_snr_db, cfg.N, cfg.rate, mc)
    scheduler = {"ps": cfg.ps_method, "as": "as", "explicit": "explicit"}[cfg.scheduler]
    return construct_sup(system, design_snr_db, cfg.N, cfg.rate, mc, scheduler, cfg.order)


def load_construction(cfg: SimConfig, system: NomaSystem) -> ConstructionResult:
    res = ConstructionResult.load(cfg.construction)
    if res.N != cfg.N or len(res.info_sets) != system.num_users:
        raise ValueError(f"construction {cfg.construction} does not match N={cfg.N}, V={system.num_users}")
    expected = "pup" if cfg.mode == "psc" else "sup"
    if res.scheme != expected:
        raise ValueError(f"construction scheme {res.scheme!r} does not fit mode {cfg.mode!r}")
    return res


def make_spec(cfg: SimConfig, system: NomaSystem, construction: ConstructionResult) -> SystemSpec:
    codes = construction.codes()
    perms = make_interleavers(cfg.seed, system.num_users, system.bits_per_symbol,
                              cfg.N // system.bits_per_symbol)
    return SystemSpec(system, codes, perms, cfg.mode, construction.order, cfg.list_size, cfg.iterations)


def block_streams(seed: int, snr_index: int, block: int):
    """(channel/noise generator, message generator) of one block."""
    ss = np.random.SeedSequence(seed, spawn_key=(snr_index, block))
    chan, msg = ss.spawn(2)
    return np.random.default_rng(chan), np.random.default_rng(msg)


def draw_batch(spec: SystemSpec, channel: str, seed: int, snr_index: int, blocks: Sequence[int]):
    """Messages per user, gains (B, slots, V, F) and unit noise (B, slots, F)."""
    sys_, S = spec.system, spec.num_slots
    gains, noise, raw = [], [], []
    for b in blocks:
        rc, rm = block_streams(seed, snr_index, b)
        gains.append(gen_channel(channel, sys_.num_users, sys_.num_pre, S, rc))
        noise.append(complex_noise((S, sys_.num_pre), 1.0, rc))
        raw.append(rm.integers(0, 2, size=(sys_.num_users, spec.N), dtype=np.uint8))
    raw = np.stack(raw)
    msgs = [raw[:, v, : code.message_len] for v, code in enumerate(spec.codes)]
    return msgs, np.stack(gains), np.stack(noise)


def run_batch(spec: SystemSpec, channel: str, snr_db: float, seed: int, snr_index: int,
              blocks: Sequence[int]):
    """Per-user (block errors, bit errors) of one batch."""
    msgs, gains, noise = draw_batch(spec, channel, seed, snr_index, blocks)
    n0 = noise_var_from_snr(snr_db)
    tx = transmit(msgs, spec, n0, gains=gains, noise=noise)
    rx = receive(tx.received, gains, n0, spec)
    bit_err = [np.sum(m != h, axis=1) for m, h in zip(msgs, rx.messages)]
    return (np.array([int(np.sum(e > 0)) for e in bit_err]),
            np.array([int(np.sum(e)) for e in bit_err]))


def _batches(cfg: SimConfig):
    start = 0
    while start < cfg.max_blocks:
        stop = min(start + cfg.batch_size, cfg.max_blocks)
        yield range(start, stop)
        start = stop


def simulate_point(cfg: SimConfig, spec: SystemSpec, snr_db: float, snr_index: int,
                   pool: ProcessPoolExecutor | None = None):
    """Run batches in block order until the stopping rule; returns (blocks, blk_err, bit_err)."""
    V = spec.system.num_users
    blk, bits, blocks = np.zeros(V, dtype=int), np.zeros(V, dtype=int), 0
    batches = _batches(cfg)
    wave = max(1, cfg.workers if pool is not None else 1)
    done = False
    while not done:
        chunk = [b for _, b in zip(range(wave), batches)]
        if not chunk:
            break
        if pool is None:
            results = [run_batch(spec, cfg.channel, snr_db, cfg.seed, snr_index, b) for b in chunk]
        else:
            futures = [pool.submit(run_batch, spec, cfg.channel, snr_db, cfg.seed, snr_index, b)
                       for b in chunk]
            results = [f.result() for f in futures]
        # results are folded in block order; later batches of a wave are dropped
        # once the rule fires, so the outcome matches a serial run
        for b, (e, be) in zip(chunk, results):
            blk += e
            bits += be
            blocks += len(b)
            if (blk.sum() / V >= cfg.target_errors and blocks >= cfg.min_blocks) or blocks >= cfg.max_blocks:
                done = True
                break
    return blocks, blk, bits


def run_bler(cfg: SimConfig, constructions: list | None = None) -> list[BlerRecord]:
    """Simulate every SNR point of ``cfg``.

    Constructions are taken from ``cfg.construction`` when set, else built at
    ``cfg.design_snr_db`` (once) or at each SNR point. The ones used are
    appended to ``constructions`` when a list is passed.
    """
    system = build_system(cfg)
    cfg.validate(system)
    chash, version = cfg.config_hash(), version_string()
    fixed = None
    if cfg.construction is not None:
        fixed = load_construction(cfg, system)
    elif cfg.design_snr_db is not None:
        fixed = build_construction(cfg, system, cfg.design_snr_db)
    records = []
    pool = ProcessPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        for idx, snr in enumerate(cfg.snr_db):
            t0 = time.perf_counter()
            con = fixed if fixed is not None else build_construction(cfg, system, snr)
            if constructions is not None:
                constructions.append(con)
            spec = make_spec(cfg, system, con)
            blocks, blk, bits = simulate_point(cfg, spec, snr, idx, pool)
            records.append(BlerRecord(
                snr, cfg.scheme, blocks, blk.tolist(), bits.tolist(),
                [c.message_len for c in spec.codes], time.perf_counter() - t0, chash, version,
            ))
    finally:
        if pool is not None:
            pool.shutdown()
    return records


def write_csv(records: Sequence[BlerRecord], path_or_file) -> None:
    own = isinstance(path_or_file, (str, Path))
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for r in records:
            w.writerows(r.rows())
    finally:
        if own:
            fh.close()


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def to_long_format(rows: Sequence[dict], metric: str = "bler", default_scheme: str = "") -> list[dict]:
    """One (snr_db, scheme, metric, value) row per input row.

    The metric name carries the user, e.g. ``bler_user2`` or ``bler_avg``.
    """
    if metric not in ("bler", "ber", "block_errors", "blocks"):
        raise ValueError(f"unknown metric {metric!r}")
    return [{"snr_db": r["snr_db"], "scheme": r.get("scheme") or default_scheme,
             "metric": f"{metric}_{'avg' if r['user'] == 'avg' else 'user' + r['user']}",
             "value": r[metric]} for r in rows]
