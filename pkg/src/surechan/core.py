"""Signal containers, unitary DFT and the preamble observation model.

All vectors are 1-D ``complex128`` numpy arrays. The DFT is unitary
(``1/sqrt(K)`` in both directions) so that white noise has the same
per-sample variance in the frequency and delay domains.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PREAMBLE_CONSTELLATIONS = ("bpsk", "qpsk")


def as_cvec(v, name: str = "v") -> np.ndarray:
    """Validate and convert ``v`` to a finite, non-empty complex vector."""
    arr = np.asarray(v, dtype=np.complex128)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def dft(v) -> np.ndarray:
    """Unitary DFT, ``V_k = K**-0.5 * sum_n v_n exp(-2j*pi*k*n/K)``."""
    return np.fft.fft(as_cvec(v), norm="ortho")


def idft(v) -> np.ndarray:
    """Inverse of :func:`dft` (and its adjoint)."""
    return np.fft.ifft(as_cvec(v), norm="ortho")


def build_cfr(g, K: int) -> np.ndarray:
    """Unitary DFT of the CIR ``g`` zero-padded to length ``K``."""
    g = as_cvec(g, "g")
    if g.size > K:
        raise ValueError(f"CIR length {g.size} exceeds K={K}")
    padded = np.zeros(K, dtype=np.complex128)
    padded[: g.size] = g
    return dft(padded)


def channel_gains(g, K: int) -> np.ndarray:
    """Per-subcarrier gain seen by a unit-power OFDM symbol.

    With a unitary modulator, circular convolution by ``g`` multiplies
    subcarrier ``k`` by ``sqrt(K) * build_cfr(g, K)[k]``, which has average
    power ``sum |g_p|^2``. This is the quantity every estimator targets.
    """
    return np.sqrt(K) * build_cfr(g, K)


@dataclass(frozen=True)
class OfdmConfig:
    K: int
    cp_len: int | None = None
    preamble_constellation: str = "qpsk"
    data_symbols: int = 4

    def __post_init__(self):
        if self.K < 8 or self.K & (self.K - 1):
            raise ValueError(f"K must be a power of two >= 8, got {self.K}")
        if self.cp_len is None:
            object.__setattr__(self, "cp_len", self.K // 4)
        if not 0 <= self.cp_len < self.K:
            raise ValueError(f"cp_len must satisfy 0 <= cp_len < K, got {self.cp_len}")
        if self.preamble_constellation not in PREAMBLE_CONSTELLATIONS:
            raise ValueError(f"unknown preamble constellation {self.preamble_constellation!r}")
        if self.data_symbols < 1:
            raise ValueError("data_symbols must be >= 1")


@dataclass(frozen=True)
class ObservationPair:
    """Noisy CFR observation ``y`` and its delay-domain image ``r = idft(y)``."""

    y: np.ndarray
    r: np.ndarray = field(repr=False)
    sigma2: float

    @classmethod
    def from_cfr(cls, y, sigma2: float) -> "ObservationPair":
        y = as_cvec(y, "y")
        return cls(y=y, r=idft(y), sigma2=float(sigma2))

    @property
    def K(self) -> int:
        return self.y.size


def observe_preamble(h, sigma2: float, rng: np.random.Generator) -> ObservationPair:
    """Return ``y = h + w`` with ``w ~ CN(0, sigma2 I)``.

    The known constant-modulus preamble cancels exactly, so it is not
    materialized here; the BER chain in :mod:`surechan.comms` runs the full
    transmit path instead.
    """
    if sigma2 < 0:
        raise ValueError(f"sigma2 must be non-negative, got {sigma2}")
    h = as_cvec(h, "h")
    return ObservationPair.from_cfr(h + complex_noise(h.size, sigma2, rng), sigma2)


def complex_noise(n: int, sigma2: float, rng: np.random.Generator) -> np.ndarray:
    """Circular complex Gaussian samples with total variance ``sigma2``."""
    scale = np.sqrt(sigma2 / 2.0)
    return scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def build_shift_matrix(y, L: int) -> np.ndarray:
    """Stack cyclic shifts of ``y`` as columns for lags ``-L..L``.

    Entry ``[k, l + L]`` is ``y[(k + l) mod K]``; the centre column is ``y``.
    """
    y = as_cvec(y, "y")
    K = y.size
    if not 0 <= L <= (K - 1) // 2:
        raise ValueError(f"L must be in [0, {(K - 1) // 2}] for K={K}, got {L}")
    return np.stack([np.roll(y, -lag) for lag in range(-L, L + 1)], axis=1)


def preamble_symbols(K: int, constellation: str, rng: np.random.Generator) -> np.ndarray:
    """Random unit-modulus preamble symbols."""
    if constellation == "bpsk":
        return (1.0 - 2.0 * rng.integers(0, 2, K)).astype(np.complex128)
    if constellation == "qpsk":
        b = rng.integers(0, 2, (K, 2))
        return ((1 - 2 * b[:, 0]) + 1j * (1 - 2 * b[:, 1])) / np.sqrt(2.0)
    raise ValueError(f"unknown preamble constellation {constellation!r}")


def ofdm_modulate(x: np.ndarray, cp_len: int) -> np.ndarray:
    """Unitary IDFT of each row of ``x`` (symbols x K) with a cyclic prefix."""
    s = np.fft.ifft(np.atleast_2d(x), axis=-1, norm="ortho")
    if cp_len:
        s = np.concatenate([s[:, -cp_len:], s], axis=-1)
    return s


def ofdm_demodulate(rx: np.ndarray, K: int, cp_len: int) -> np.ndarray:
    """Strip the cyclic prefix and apply the unitary DFT per symbol."""
    rx = np.atleast_2d(rx)
    return np.fft.fft(rx[:, cp_len: cp_len + K], axis=-1, norm="ortho")
