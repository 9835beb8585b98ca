"""Coded 16-QAM OFDM link used for BER evaluation.

Rate-1/2, constraint-length-7 convolutional code with generators
``1 + D^3 + D^4 + D^5 + D^6`` and ``1 + D^3 + D^4 + D^6``, Gray-labelled
16-QAM, zero-forcing equalization and hard-decision Viterbi decoding.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ChannelProfile, cfr_autocorrelation, draw_cir
from .core import (ObservationPair, OfdmConfig, channel_gains, complex_noise, ofdm_demodulate,
                   ofdm_modulate, preamble_symbols)
from .estimators import run_estimator

# coefficient of D^0 first
G1 = np.array([1, 0, 0, 1, 1, 1, 1], dtype=np.uint8)
G2 = np.array([1, 0, 0, 1, 1, 0, 1], dtype=np.uint8)
MEMORY = 6
N_STATES = 1 << MEMORY

# Gray PAM-4 per axis: first bit picks the sign half, second the ring
_PAM4 = {(0, 0): -3, (0, 1): -1, (1, 1): 1, (1, 0): 3}
QAM16_SCALE = 1.0 / np.sqrt(10.0)


def _qam16_table() -> np.ndarray:
    pts = np.empty(16, dtype=np.complex128)
    for label in range(16):
        b = [(label >> (3 - i)) & 1 for i in range(4)]
        pts[label] = _PAM4[b[0], b[1]] + 1j * _PAM4[b[2], b[3]]
    return pts * QAM16_SCALE


QAM16_POINTS = _qam16_table()
"""Constellation point for each 4-bit label ``b0 b1 b2 b3`` (b0 is the MSB)."""


class EqualizationError(ArithmeticError):
    pass


# ------------------------------------------------------------ conv. code


def conv_encode(bits) -> np.ndarray:
    """Encode from the all-zero state; output interleaves (G1, G2) per input bit.

    The caller appends the ``MEMORY`` zero tail bits that flush the trellis.
    """
    u = np.asarray(bits, dtype=np.uint8)
    n = u.shape[-1]
    c1 = np.convolve(u, G1)[:n] & 1
    c2 = np.convolve(u, G2)[:n] & 1
    out = np.empty(2 * n, dtype=np.uint8)
    out[0::2] = c1
    out[1::2] = c2
    return out


def _trellis():
    """Predecessors and expected output pairs for every next state.

    A state holds the last six inputs with the newest in the MSB, so state
    ``s`` with input ``b`` moves to ``(b << 5) | (s >> 1)``.
    """
    ns = np.arange(N_STATES)
    b = ns >> (MEMORY - 1)
    prev = np.stack([((ns & (N_STATES // 2 - 1)) << 1) | k for k in (0, 1)])  # (2, 64)
    outs = np.empty((2, N_STATES, 2), dtype=np.uint8)
    for k in (0, 1):
        p = prev[k]
        # register contents: input, then u_{t-1} .. u_{t-6}
        reg = np.stack([b] + [(p >> (MEMORY - i)) & 1 for i in range(1, MEMORY + 1)], axis=1)
        outs[k, :, 0] = (reg @ G1) & 1
        outs[k, :, 1] = (reg @ G2) & 1
    return prev, outs


_PREV, _OUTS = _trellis()
# Hamming distance of each received pair (2*b0 + b1) to each branch output
_BRANCH = np.stack([
    np.stack([((v >> 1) != _OUTS[k, :, 0]).astype(np.int32) + ((v & 1) != _OUTS[k, :, 1]) for v in range(4)])
    for k in (0, 1)
])


def viterbi_decode(bits) -> np.ndarray:
    """Hard-decision Viterbi decoding of a terminated codeword.

    Accepts one codeword or a 2-D batch (one per row) and returns the input
    bits including the tail. Equal path metrics keep the lower-numbered
    predecessor state.
    """
    r = np.asarray(bits, dtype=np.uint8)
    single = r.ndim == 1
    r = np.atleast_2d(r)
    if r.shape[1] % 2:
        raise ValueError(f"codeword length must be even, got {r.shape[1]}")
    batch, n = r.shape[0], r.shape[1] // 2
    symbols = (r[:, 0::2].astype(np.intp) << 1) | r[:, 1::2]

    inf = np.iinfo(np.int32).max // 4
    metric = np.full((batch, N_STATES), inf, dtype=np.int32)
    metric[:, 0] = 0
    decisions = np.empty((n, batch, N_STATES), dtype=bool)
    for t in range(n):
        sym = symbols[:, t]
        m0 = metric[:, _PREV[0]] + _BRANCH[0][sym]
        m1 = metric[:, _PREV[1]] + _BRANCH[1][sym]
        choose1 = m1 < m0
        decisions[t] = choose1
        metric = np.where(choose1, m1, m0)

    out = np.empty((batch, n), dtype=np.uint8)
    state = np.zeros(batch, dtype=np.int64)
    rows = np.arange(batch)
    for t in range(n - 1, -1, -1):
        out[:, t] = state >> (MEMORY - 1)
        state = _PREV[decisions[t, rows, state].astype(np.int64), state]
    return out[0] if single else out


def free_distance(max_len: int = 16) -> int:
    """Minimum output weight over nonzero inputs starting with 1 (brute force)."""
    best = None
    for length in range(1, max_len + 1):
        for tail in range(1 << (length - 1)):
            u = np.zeros(length + MEMORY, dtype=np.uint8)
            u[0] = 1
            for i in range(1, length):
                u[i] = (tail >> (i - 1)) & 1
            w = int(conv_encode(u).sum())
            best = w if best is None else min(best, w)
    return best


# -------------------------------------------------------------- 16-QAM


def qam16_map(bits) -> np.ndarray:
    b = np.asarray(bits, dtype=np.uint8)
    if b.size % 4:
        raise ValueError(f"bit count must be a multiple of 4, got {b.size}")
    labels = b.reshape(-1, 4) @ np.array([8, 4, 2, 1])
    return QAM16_POINTS[labels]


def qam16_demap_hard(symbols) -> np.ndarray:
    """Nearest-point labels; exact ties go to the smaller label."""
    s = np.asarray(symbols, dtype=np.complex128).ravel()
    labels = np.argmin(np.abs(s[:, None] - QAM16_POINTS[None, :]), axis=1)
    return ((labels[:, None] >> np.array([3, 2, 1, 0])) & 1).astype(np.uint8).ravel()


def zf_equalize(y_data, h_hat) -> np.ndarray:
    """Per-subcarrier division ``y / h_hat`` (broadcast over symbol rows)."""
    h_hat = np.asarray(h_hat, dtype=np.complex128)
    if np.any(np.abs(h_hat) < 1e-12):
        raise EqualizationError("channel estimate has a (near) zero subcarrier")
    return np.asarray(y_data) / h_hat


# --------------------------------------------------------------- frames


def message_length(config: OfdmConfig) -> int:
    """Information bits per frame (coded bits fill the data symbols exactly)."""
    return config.data_symbols * config.K * 4 // 2 - MEMORY


@dataclass
class Frame:
    """One transmitted and received frame (channel constant over the frame)."""

    h: np.ndarray            # per-subcarrier channel gains
    obs: ObservationPair     # preamble CFR observation
    y_data: np.ndarray       # received data symbols, frequency domain (symbols x K)
    message: np.ndarray      # information bits (tail excluded)
    sigma2: float
    sigma2_hat: float


def snr_to_sigma2(snr_db: float) -> float:
    """Unit-power symbols over a unit-energy channel: ``SNR = 1 / sigma2``."""
    return 10.0 ** (-snr_db / 10.0)


def transmit_frame(profile: ChannelProfile, config: OfdmConfig, snr_db: float,
                   rng: np.random.Generator, blank_carriers: int = 500,
                   with_data: bool = True) -> Frame:
    """Preamble + coded data through one block-fading channel draw.

    The CP must cover the channel memory. ``blank_carriers`` pure-noise
    samples feed the noise-variance estimate.
    """
    from .harness import estimate_noise_variance

    K, cp = config.K, config.cp_len
    if profile.length > cp:
        raise ValueError(f"channel length {profile.length} exceeds cyclic prefix {cp}")
    sigma2 = snr_to_sigma2(snr_db)
    g = draw_cir(profile, rng)
    h = channel_gains(g, K)
    sigma2_hat = estimate_noise_variance(complex_noise(blank_carriers, sigma2, rng)) if blank_carriers else sigma2

    x_pre = preamble_symbols(K, config.preamble_constellation, rng)
    if with_data:
        message = rng.integers(0, 2, message_length(config), dtype=np.uint8)
        coded = conv_encode(np.concatenate([message, np.zeros(MEMORY, dtype=np.uint8)]))
        x_data = qam16_map(coded).reshape(config.data_symbols, K)
        x = np.vstack([x_pre, x_data])
    else:
        message = np.zeros(0, dtype=np.uint8)
        x = x_pre[None, :]

    stream = ofdm_modulate(x, cp).ravel()
    rx = np.convolve(stream, g)[: stream.size] + complex_noise(stream.size, sigma2, rng)
    Y = ofdm_demodulate(rx.reshape(x.shape[0], K + cp), K, cp)
    obs = ObservationPair.from_cfr(Y[0] / x_pre, sigma2)
    return Frame(h, obs, Y[1:], message, sigma2, sigma2_hat)


def receive_coded_bits(frame: Frame, h_hat) -> np.ndarray:
    """Equalize with ``h_hat`` and slice to hard coded bits."""
    return qam16_demap_hard(zf_equalize(frame.y_data, h_hat).ravel())


@dataclass
class TrialRecord:
    estimator: str
    bit_errors: int
    bits: int
    erased: bool
    sq_error: float
    epsilon: float = float("nan")


def run_frame(profile, config, estimator_spec, snr_db, rng, sigma2_source="true",
              blank_carriers=500) -> TrialRecord:
    """Full single-frame pipeline for one estimator."""
    frame = transmit_frame(profile, config, snr_db, rng, blank_carriers)
    s2 = frame.sigma2 if sigma2_source == "true" else frame.sigma2_hat
    C = cfr_autocorrelation(profile, config.K) if estimator_spec.name == "lmmse" else None
    h_hat, eps = run_estimator(estimator_spec, frame.obs, s2, C_hh=C, h_true=frame.h)
    sq = float(np.mean(np.abs(h_hat - frame.h) ** 2))
    try:
        hard = receive_coded_bits(frame, h_hat)
    except EqualizationError:
        return TrialRecord(estimator_spec.label, 0, 0, True, sq, eps)
    decoded = viterbi_decode(hard)[: frame.message.size]
    errors = int(np.count_nonzero(decoded != frame.message))
    return TrialRecord(estimator_spec.label, errors, frame.message.size, False, sq, eps)
