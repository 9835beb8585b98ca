"""Tapped-delay-line block-fading channels and their CFR statistics."""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .core import as_cvec

SHIPPED_PROFILES = ("awgn", "rayleigh1", "tu6")


@dataclass(frozen=True)
class ChannelProfile:
    """Power-delay profile with powers normalized to unit total energy.

    ``fading=False`` describes a deterministic channel whose taps are the
    square roots of the powers (the AWGN scenario).
    """

    delays: tuple[int, ...]
    powers: tuple[float, ...]
    name: str = "custom"
    fading: bool = True

    def __post_init__(self):
        if len(self.delays) == 0 or len(self.delays) != len(self.powers):
            raise ValueError("profile needs matching, non-empty delay and power lists")
        d = np.asarray(self.delays)
        if np.any(d < 0) or np.any(np.diff(d) <= 0):
            raise ValueError(f"delays must be non-negative and strictly increasing: {self.delays}")
        p = np.asarray(self.powers, dtype=float)
        if np.any(p <= 0) or not np.all(np.isfinite(p)):
            raise ValueError(f"tap powers must be positive: {self.powers}")
        object.__setattr__(self, "delays", tuple(int(x) for x in d))
        object.__setattr__(self, "powers", tuple(float(x) for x in p / p.sum()))

    @property
    def length(self) -> int:
        """CIR length ``P`` (largest delay + 1)."""
        return self.delays[-1] + 1

    @classmethod
    def from_db(cls, delays, powers_db, name="custom", fading=True) -> "ChannelProfile":
        return cls(tuple(delays), tuple(10.0 ** (np.asarray(powers_db) / 10.0)), name, fading)


def quantize_delays(delays_us, powers_db, sample_period_us: float = 0.2, name="custom"):
    """Map continuous-time tap delays onto the sample grid.

    Delays are floored to whole samples; taps landing on the same sample
    have their linear powers summed.
    """
    idx = np.floor(np.asarray(delays_us, dtype=float) / sample_period_us + 1e-9).astype(int)
    lin = 10.0 ** (np.asarray(powers_db, dtype=float) / 10.0)
    merged: dict[int, float] = {}
    for d, p in zip(idx, lin):
        merged[int(d)] = merged.get(int(d), 0.0) + p
    delays = sorted(merged)
    return ChannelProfile(tuple(delays), tuple(merged[d] for d in delays), name)


def parse_profile(text: str, name: str = "custom") -> ChannelProfile:
    """Parse ``delay_samples power_db`` lines; ``#`` starts a comment.

    A comment of the form ``# fading: none`` marks the profile as static.
    """
    delays, powers_db = [], []
    fading = True
    for lineno, raw in enumerate(text.splitlines(), 1):
        line, _, comment = raw.partition("#")
        if comment.strip().replace(" ", "").lower() == "fading:none":
            fading = False
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{name}:{lineno}: expected 'delay_samples power_db', got {raw!r}")
        try:
            delays.append(int(parts[0]))
            powers_db.append(float(parts[1]))
        except ValueError as exc:
            raise ValueError(f"{name}:{lineno}: {exc}") from None
    if not delays:
        raise ValueError(f"{name}: profile has no taps")
    return ChannelProfile.from_db(delays, powers_db, name=name, fading=fading)


def load_profile(spec: str | Path) -> ChannelProfile:
    """Load a shipped profile by name (``tu6``) or any profile file by path."""
    if isinstance(spec, str) and spec in SHIPPED_PROFILES:
        text = resources.files("surechan.profiles").joinpath(f"{spec}.prof").read_text()
        return parse_profile(text, name=spec)
    path = Path(spec)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValueError(f"cannot read channel profile {str(path)!r}: {exc.strerror}") from exc
    return parse_profile(text, name=path.stem)


def draw_cir(profile: ChannelProfile, rng: np.random.Generator) -> np.ndarray:
    """Draw one CIR of length ``profile.length``; zero away from profile delays."""
    g = np.zeros(profile.length, dtype=np.complex128)
    amp = np.sqrt(np.asarray(profile.powers))
    if profile.fading:
        n = len(profile.delays)
        g[list(profile.delays)] = amp * (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
    else:
        g[list(profile.delays)] = amp
    return g


def cfr_autocorrelation_lags(profile: ChannelProfile, K: int, unitary: bool = False) -> np.ndarray:
    """``c(l) = E[H_k conj(H_{k-l})]`` for ``l = 0..K-1``.

    With the forward kernel ``exp(-2j*pi*k*n/K)`` this is
    ``sum_p alpha_p exp(-2j*pi*l*d_p/K)``. The default scale matches
    :func:`surechan.core.channel_gains`; ``unitary=True`` matches
    :func:`surechan.core.build_cfr` (a factor ``1/K`` smaller).
    """
    delays = np.asarray(profile.delays)
    if delays[-1] >= K:
        raise ValueError(f"profile delay {delays[-1]} does not fit in K={K}")
    lags = np.arange(K)
    c = np.exp(-2j * np.pi * np.outer(lags, delays) / K) @ np.asarray(profile.powers)
    return c / K if unitary else c


def cfr_autocorrelation(profile: ChannelProfile, K: int, unitary: bool = False) -> np.ndarray:
    """Circulant ``K x K`` matrix ``C[k, m] = c((k - m) mod K)``."""
    c = cfr_autocorrelation_lags(profile, K, unitary)
    idx = (np.arange(K)[:, None] - np.arange(K)[None, :]) % K
    return c[idx]


def circular_convolve(s, g) -> np.ndarray:
    """``out[n] = sum_p g[p] * s[(n - p) mod K]`` by direct summation."""
    s = as_cvec(s, "s")
    g = as_cvec(g, "g")
    K = s.size
    if g.size > K:
        raise ValueError(f"CIR length {g.size} exceeds signal length {K}")
    out = np.zeros(K, dtype=np.complex128)
    for p in np.flatnonzero(g):
        out += g[p] * np.roll(s, p)
    return out
