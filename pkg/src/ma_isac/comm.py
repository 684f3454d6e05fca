"""Downlink multiuser communication model: user-zone sampling, LoS
channels, zero-forcing precoding, the Monte-Carlo expected minimum rate
and its interference-free upper bound.

Powers are linear milliwatts everywhere in this module; dBm conversion
happens only at the configuration boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularChannelError, SingularGeometryError
from .geometry import ArrayLayout, steering_vector

# Gram matrices with a larger condition number are declared singular and
# contribute zero rate to the Monte-Carlo average.
COND_LIMIT = 1e12


@dataclass(frozen=True)
class UserZone:
    """Spherical 3D zone a user moves within.  The x axis points away from
    the array (boresight), so the center must have x > 0."""

    center: tuple[float, float, float]
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        if self.radius <= 0:
            raise ValueError("zone radius must be positive")
        if c[0] <= 0:
            raise ValueError("zone center must lie in the x > 0 half-space")
        if np.linalg.norm(c) <= self.radius:
            raise ValueError("zone must not contain the array origin")

    def center_array(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float)


@dataclass(frozen=True)
class CommScenario:
    """K user zones plus the power/noise/wavelength context and the
    Monte-Carlo sample size for the expected-rate surrogate."""

    zones: tuple[UserZone, ...]
    power_mw: float
    noise_mw: float
    wavelength: float
    realizations: int
    seed: int = 0
    sampling: str = "ball"  # "ball": uniform in volume; "shell": on the surface

    def __post_init__(self):
        object.__setattr__(self, "zones", tuple(self.zones))
        if len(self.zones) < 1:
            raise ValueError("need at least one user zone")
        if self.power_mw <= 0 or self.noise_mw <= 0:
            raise ValueError("powers must be positive")
        if self.realizations < 1:
            raise ValueError("need at least one Monte-Carlo realization")
        if self.sampling not in ("ball", "shell"):
            raise ValueError(f"unknown sampling mode {self.sampling!r}")

    @property
    def n_users(self) -> int:
        return len(self.zones)


def sample_user_locations(scenario: CommScenario, realization_index: int) -> np.ndarray:
    """One location per user for the given realization, shape (K, 3).

    User k's point is uniform in (or on, for "shell" sampling) the ball of
    zone k.  The draw is a pure function of (seed, realization_index, k),
    so changing the realization count never reshuffles earlier samples.
    """
    pts = np.empty((scenario.n_users, 3))
    for k, zone in enumerate(scenario.zones):
        rng = np.random.default_rng(
            np.random.SeedSequence([scenario.seed, realization_index, k])
        )
        direction = rng.standard_normal(3)
        norm = np.linalg.norm(direction)
        while norm == 0.0:  # pragma: no cover - probability zero
            direction = rng.standard_normal(3)
            norm = np.linalg.norm(direction)
        if scenario.sampling == "ball":
            radius = zone.radius * rng.random() ** (1.0 / 3.0)
        else:
            radius = zone.radius
        pts[k] = zone.center_array() + direction / norm * radius
    return pts


def sample_batch(scenario: CommScenario) -> np.ndarray:
    """All Q realizations stacked, shape (Q, K, 3)."""
    return np.stack(
        [sample_user_locations(scenario, q) for q in range(scenario.realizations)]
    )


def wave_vector_2d(point) -> np.ndarray:
    """Projection of the unit direction to `point` onto the y-z plane."""
    p = np.asarray(point, dtype=float)
    d = np.linalg.norm(p)
    if d == 0.0:
        raise SingularGeometryError("user location coincides with the array origin")
    return p[1:3] / d


def los_channel(layout: ArrayLayout, user_point) -> np.ndarray:
    """Line-of-sight channel vector to a user at the given 3D point.

    h = wavelength/(4*pi*d) * exp(j*2*pi*d/wavelength) * steering vector
    toward the user's 2D wave vector, with d the BS-user distance.
    """
    p = np.asarray(user_point, dtype=float)
    d = float(np.linalg.norm(p))
    if d == 0.0:
        raise SingularGeometryError("user location coincides with the array origin")
    lam = layout.wavelength
    chi = p[1:3] / d
    gain = lam / (4.0 * np.pi * d) * np.exp(1j * 2.0 * np.pi * d / lam)
    return gain * steering_vector(layout, chi)


def channel_matrix(layout: ArrayLayout, user_points) -> np.ndarray:
    """N x K channel matrix with one column per user location."""
    pts = np.asarray(user_points, dtype=float)
    return np.column_stack([los_channel(layout, p) for p in pts])


def zf_precoder(h_matrix: np.ndarray, power_mw: float) -> np.ndarray:
    """Zero-forcing precoder W = sqrt(P) * H (H^H H)^-1 / ||H (H^H H)^-1||_F.

    Satisfies ||W||_F^2 = P and makes H^H W a scaled identity (every user
    sees the same interference-free effective gain).
    """
    h = np.asarray(h_matrix)
    n, k = h.shape
    if k > n:
        raise SingularChannelError("zero-forcing needs at most as many users as antennas")
    gram = h.conj().T @ h
    _guard_gram(gram)
    raw = h @ np.linalg.inv(gram)
    scale = np.linalg.norm(raw)
    return np.sqrt(power_mw) * raw / scale


def _guard_gram(gram: np.ndarray) -> np.ndarray:
    """Eigenvalues of a Hermitian Gram matrix, with a conditioning guard."""
    eig = np.linalg.eigvalsh(gram)
    if eig[0] <= 0.0 or eig[-1] / eig[0] > COND_LIMIT:
        raise SingularChannelError("channel Gram matrix is numerically singular")
    return eig


def zf_min_sinr(h_matrix: np.ndarray, power_mw: float, noise_mw: float) -> float:
    """Common per-user SINR under zero-forcing: P / (Tr((H^H H)^-1) * noise)."""
    h = np.asarray(h_matrix)
    if h.shape[1] > h.shape[0]:
        raise SingularChannelError("zero-forcing needs at most as many users as antennas")
    eig = _guard_gram(h.conj().T @ h)
    trace_inv = float(np.sum(1.0 / eig))
    return float(power_mw / (trace_inv * noise_mw))


def sinr_per_user(h_matrix: np.ndarray, w_matrix: np.ndarray, noise_mw: float) -> np.ndarray:
    """Receive SINR of each user for an arbitrary precoder."""
    h = np.asarray(h_matrix)
    w = np.asarray(w_matrix)
    cross = np.abs(h.conj().T @ w) ** 2  # cross[k, i] = |w_i^H h_k|^2
    signal = np.diag(cross)
    interference = cross.sum(axis=1) - signal
    return signal / (interference + noise_mw)


def rates(h_matrix: np.ndarray, w_matrix: np.ndarray, noise_mw: float) -> np.ndarray:
    """Per-user achievable rates log2(1 + SINR), bits/s/Hz."""
    return np.log2(1.0 + sinr_per_user(h_matrix, w_matrix, noise_mw))


def _batch_gram_eigs(y, z, lam, batch) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues of H^H H for every realization in the batch.

    Returns (eigs, valid) with eigs of shape (Q, K) ascending and a
    boolean mask of realizations whose Gram matrix is safely invertible.
    All heavy loops are vectorized over the Q realizations.
    """
    pts = np.asarray(batch, dtype=float)  # (Q, K, 3)
    d = np.linalg.norm(pts, axis=-1)  # (Q, K)
    u = pts[..., 1] / d
    v = pts[..., 2] / d
    k_wave = 2.0 * np.pi / lam
    phase = k_wave * (u[:, None, :] * y[:, None] + v[:, None, :] * z[:, None])
    amp = lam / (4.0 * np.pi * d)  # (Q, K)
    h = amp[:, None, :] * np.exp(1j * (phase + k_wave * d[:, None, :]))  # (Q, N, K)
    gram = np.einsum("qnk,qnl->qkl", h.conj(), h)
    eigs = np.linalg.eigvalsh(gram)
    floor = np.finfo(float).tiny
    valid = (eigs[:, 0] > 0) & (eigs[:, -1] / np.maximum(eigs[:, 0], floor) <= COND_LIMIT)
    return eigs, valid


def min_rate_per_realization(
    layout_y: np.ndarray,
    layout_z: np.ndarray,
    wavelength: float,
    batch: np.ndarray,
    power_mw: float,
    noise_mw: float,
) -> np.ndarray:
    """Zero-forcing minimum achievable rate for every sampled realization.

    Singular realizations contribute a rate of 0.
    """
    eigs, valid = _batch_gram_eigs(layout_y, layout_z, wavelength, batch)
    trace_inv = np.where(valid, (1.0 / np.where(eigs > 0, eigs, 1.0)).sum(-1), np.inf)
    gamma = np.where(valid, power_mw / (trace_inv * noise_mw), 0.0)
    return np.log2(1.0 + gamma)


def expected_min_rate(
    layout: ArrayLayout,
    scenario: CommScenario,
    batch: np.ndarray | None = None,
) -> float:
    """Monte-Carlo expected minimum rate under zero-forcing, bits/s/Hz.

    Averages the closed-form minimum rate over the Q sampled realizations.
    Passing an explicit batch reuses common random numbers across calls,
    which the optimizer relies on for monotone ascent.
    """
    if batch is None:
        batch = sample_batch(scenario)
    per_q = min_rate_per_realization(
        layout.y, layout.z, layout.wavelength, batch, scenario.power_mw, scenario.noise_mw
    )
    return float(per_q.mean())


def rate_upper_bound(
    scenario: CommScenario,
    n_antennas: int,
    batch: np.ndarray | None = None,
) -> float:
    """Interference-free upper bound on the expected minimum rate.

    Per realization the bound is log2(1 + gamma_bar) with
    gamma_bar = P * lam^2 * N / (16 * pi^2 * noise) / sum_k d_k^2,
    i.e. maximal-ratio transmission with the power split that equalizes
    all single-user SNRs.
    """
    if batch is None:
        batch = sample_batch(scenario)
    d2 = (np.asarray(batch, dtype=float) ** 2).sum(-1)  # (Q, K) squared distances
    lam = scenario.wavelength
    gamma_bar = (
        scenario.power_mw
        * lam**2
        * n_antennas
        / (16.0 * np.pi**2 * scenario.noise_mw)
        / d2.sum(-1)
    )
    return float(np.log2(1.0 + gamma_bar).mean())
