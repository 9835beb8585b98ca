"""Seeded Monte Carlo sweeps over SNR for a set of channel estimators."""
from __future__ import annotations

import csv
import json
import logging
import math
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .channels import ChannelProfile, cfr_autocorrelation, load_profile
from .comms import EqualizationError, receive_coded_bits, transmit_frame, viterbi_decode
from .core import OfdmConfig
from .estimators import EstimatorSpec, run_estimator

log = logging.getLogger(__name__)

MODES = ("mse", "ber")
SIGMA2_SOURCES = ("true", "estimated")
SNR_DEFINITION = "Es/sigma2"


def estimate_noise_variance(blank) -> float:
    """Mean power of pure-noise (blank carrier) samples."""
    w = np.asarray(blank, dtype=np.complex128).ravel()
    if w.size == 0:
        raise ValueError("no blank-carrier samples")
    return float(np.mean(np.abs(w) ** 2))


@dataclass
class ExperimentConfig:
    scenario: str = "tu6"
    K: int = 64
    snr_grid_db: list[float] = field(default_factory=lambda: [0.0, 5.0, 10.0, 15.0, 20.0, 25.0])
    trials: int = 1000
    estimators: list[EstimatorSpec] = field(default_factory=lambda: [EstimatorSpec("ml"), EstimatorSpec("sure-let")])
    seed: int = 2024
    mode: str = "mse"
    sigma2_source: str = "true"
    blank_carriers: int = 500
    cp_len: int | None = None
    data_symbols: int = 4
    workers: int = 1
    chunk: int = 250
    out: str | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.snr_grid_db:
            raise ValueError("SNR grid is empty")
        if self.K < 8 or self.K & (self.K - 1):
            raise ValueError(f"K must be a power of two >= 8, got {self.K}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.sigma2_source not in SIGMA2_SOURCES:
            raise ValueError(f"sigma2_source must be one of {SIGMA2_SOURCES}, got {self.sigma2_source!r}")
        if not self.estimators:
            raise ValueError("no estimators selected")
        self.estimators = [e if isinstance(e, EstimatorSpec) else EstimatorSpec.parse(e) for e in self.estimators]
        self.snr_grid_db = [float(s) for s in self.snr_grid_db]

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def ofdm(self, profile: ChannelProfile) -> OfdmConfig:
        cp = self.cp_len if self.cp_len is not None else max(self.K // 4, profile.length)
        return OfdmConfig(self.K, cp, "qpsk", self.data_symbols)


@dataclass
class SweepRow:
    scenario: str
    estimator: str
    K: int
    snr_db: float
    trials: int
    mse_mean: float
    mse_ci95: float
    ber: float
    bit_count: int
    erasure_count: int
    mean_epsilon: float
    bit_errors: int = 0
    sigma2_source: str = "true"
    snr_definition: str = SNR_DEFINITION


COLUMNS = [f.name for f in fields(SweepRow)]


@dataclass
class SweepTable:
    rows: list[SweepRow] = field(default_factory=list)

    def select(self, estimator: str | None = None, **match) -> list[SweepRow]:
        out = [r for r in self.rows if estimator is None or r.estimator == estimator]
        return [r for r in out if all(getattr(r, k) == v for k, v in match.items())]

    def column(self, estimator: str, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.select(estimator)])


def trial_rng(seed: int, scenario: str, K: int, snr_index: int, trial: int) -> np.random.Generator:
    """Independent stream per (seed, scenario, K, SNR point, trial)."""
    key = zlib.crc32(scenario.encode())
    return np.random.default_rng(np.random.SeedSequence([seed & (2**64 - 1), key, K, snr_index, trial]))


def _run_chunk(config: ExperimentConfig, profile: ChannelProfile, snr_index: int, start: int, stop: int):
    """Per-trial squared errors, SURE values, bit errors and erasures."""
    ofdm = config.ofdm(profile)
    snr = config.snr_grid_db[snr_index]
    n, n_est = stop - start, len(config.estimators)
    sq = np.zeros((n_est, n))
    eps = np.full((n_est, n), np.nan)
    errors = np.zeros((n_est, n), dtype=np.int64)
    bits = np.zeros((n_est, n), dtype=np.int64)
    erased = np.zeros((n_est, n), dtype=bool)
    C = cfr_autocorrelation(profile, config.K) if any(e.name == "lmmse" for e in config.estimators) else None
    ber = config.mode == "ber"
    hard: list[list] = [[] for _ in range(n_est)]
    messages = []

    for i, trial in enumerate(range(start, stop)):
        rng = trial_rng(config.seed, profile.name, config.K, snr_index, trial)
        frame = transmit_frame(profile, ofdm, snr, rng, config.blank_carriers, with_data=ber)
        s2 = frame.sigma2 if config.sigma2_source == "true" else frame.sigma2_hat
        messages.append(frame.message)
        for j, spec in enumerate(config.estimators):
            h_hat, eps[j, i] = run_estimator(spec, frame.obs, s2, C_hh=C, h_true=frame.h)
            sq[j, i] = np.mean(np.abs(h_hat - frame.h) ** 2)
            if ber:
                try:
                    hard[j].append((i, receive_coded_bits(frame, h_hat)))
                except EqualizationError:
                    erased[j, i] = True

    if ber:
        for j in range(n_est):
            if not hard[j]:
                continue
            idx = [i for i, _ in hard[j]]
            decoded = viterbi_decode(np.stack([b for _, b in hard[j]]))
            for row, i in enumerate(idx):
                msg = messages[i]
                errors[j, i] = np.count_nonzero(decoded[row, : msg.size] != msg)
                bits[j, i] = msg.size
    return sq, eps, errors, bits, erased


def _chunks(trials: int, size: int):
    return [(s, min(s + size, trials)) for s in range(0, trials, size)]


def run_sweep(config: ExperimentConfig) -> SweepTable:
    """Run every (SNR, estimator) cell; estimators share each trial's draws.

    Results depend only on the config, never on ``workers`` or ``chunk``.
    """
    profile = load_profile(config.scenario)
    config.ofdm(profile)  # validate geometry up front
    table = SweepTable()
    pool = ProcessPoolExecutor(config.workers) if config.workers > 1 else None
    try:
        for si, snr in enumerate(config.snr_grid_db):
            t0 = time.perf_counter()
            jobs = [(config, profile, si, a, b) for a, b in _chunks(config.trials, config.chunk)]
            parts = list(pool.map(_run_chunk, *zip(*jobs))) if pool else [_run_chunk(*j) for j in jobs]
            sq, eps, errors, bits, erased = (np.concatenate(x, axis=1) for x in zip(*parts))
            for j, spec in enumerate(config.estimators):
                table.rows.append(_aggregate(config, profile, spec, snr, sq[j], eps[j], errors[j], bits[j], erased[j]))
            log.info("%s K=%d SNR=%g dB: %d trials in %.1fs", profile.name, config.K, snr,
                     config.trials, time.perf_counter() - t0)
    finally:
        if pool:
            pool.shutdown()
    return table


def _aggregate(config, profile, spec, snr, sq, eps, errors, bits, erased) -> SweepRow:
    n = sq.size
    ci = 1.96 * float(np.std(sq, ddof=1)) / math.sqrt(n) if n > 1 else float("nan")
    bit_count = int(bits.sum())
    bit_errors = int(errors.sum())
    ber = bit_errors / bit_count if bit_count else float("nan")
    mean_eps = float(np.mean(eps)) if not np.all(np.isnan(eps)) else float("nan")
    return SweepRow(profile.name, spec.label, config.K, float(snr), n, float(np.mean(sq)), ci,
                    ber, bit_count, int(erased.sum()), mean_eps, bit_errors, config.sigma2_source)


# ------------------------------------------------------------------ output


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.9g}"
    return str(v)


def write_csv(table: SweepTable, path) -> None:
    """Header plus one row per cell; floats to 9 significant digits."""
    try:
        with open(path, "w", newline="") as fh:
            _write(table, fh)
    except OSError as exc:
        raise OSError(f"cannot write {str(path)!r}: {exc.strerror}") from exc


def _write(table: SweepTable, fh) -> None:
    w = csv.writer(fh, lineterminator="\r\n")
    w.writerow(COLUMNS)
    for row in table.rows:
        w.writerow([_fmt(v) for v in asdict(row).values()])


def read_csv(path) -> SweepTable:
    types = {f.name: f.type for f in fields(SweepRow)}
    conv = {"int": int, "float": float, "str": str}
    table = SweepTable()
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            table.rows.append(SweepRow(**{k: conv[types[k]](v) for k, v in rec.items()}))
    return table


# ---------------------------------------------------------------- analysis


def mse_monotone_violations(table: SweepTable, n_ci: float = 2.0) -> list[tuple[str, float, float]]:
    """SNR steps where an estimator's MSE rises by more than ``n_ci`` CI widths."""
    bad = []
    for est in dict.fromkeys(r.estimator for r in table.rows):
        rows = sorted(table.select(est), key=lambda r: r.snr_db)
        for lo, hi in zip(rows, rows[1:]):
            if hi.mse_mean - lo.mse_mean > n_ci * max(lo.mse_ci95, hi.mse_ci95):
                bad.append((est, lo.snr_db, hi.snr_db))
    return bad


def snr_at_ber(snr_db, ber, target: float = 1e-3) -> float:
    """SNR where BER crosses ``target``, interpolating ``log10(BER)`` linearly.

    Uses the first bracketing pair; NaN if the curve never crosses.
    """
    snr_db = np.asarray(snr_db, dtype=float)
    lb = np.log10(np.maximum(np.asarray(ber, dtype=float), 1e-300))
    lt = math.log10(target)
    for i in range(len(snr_db) - 1):
        if lb[i] >= lt >= lb[i + 1] and lb[i] != lb[i + 1]:
            return float(snr_db[i] + (lt - lb[i]) * (snr_db[i + 1] - snr_db[i]) / (lb[i + 1] - lb[i]))
    return float("nan")
