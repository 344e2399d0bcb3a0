"""Model parameters, lattice states and deterministic randomness.

Units: hbar = e = c = d = 1 (lattice constant d). The model is fixed by five
numbers: the hopping energies Jx, Jy, the magnetic flux per plaquette alpha,
the electric field magnitude F (applied along y) and the disorder amplitude
eps. Everything else is derived:

    F_cr    = 2*pi*alpha*Jx                critical field for directed drift
    omega_c = 2*pi*alpha*sqrt(Jx*Jy)       cyclotron frequency
    v_star  = F/(2*pi*alpha)               drift velocity (alpha != 0)
    lam     = 1/alpha                      magnetic period in sites (alpha != 0)
    T_B     = 2*pi/F                       Bloch period (F != 0)

Quantum states are complex amplitudes on explicit integer windows: ``Field1D``
for the reduced equation along x, ``Field2D`` for the full lattice.

Randomness (random site phases, on-site disorder) is counter-based: every
value is a pure hash of (seed, stream, realization, site), so ensembles are
reproducible bit-for-bit regardless of execution order or thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

# stream tags keeping independent uses of the RNG from colliding
_STREAM_DISORDER_1D = 1
_STREAM_DISORDER_2D = 2
_STREAM_PHASE_1D = 3
_STREAM_PHASE_2D = 4


class WindowTooSmallError(ValueError):
    """Requested window truncates the state above the allowed tail norm."""


# ---------------------------------------------------------------------------
# parameters and derived constants


@dataclass(frozen=True)
class ModelParams:
    """The five physical parameters plus the reproducibility seed.

    ``alpha`` is reduced modulo 1 into (-1/2, 1/2] on construction; Jx, Jy
    and eps must be non-negative.
    """

    Jx: float = 1.0
    Jy: float = 1.0
    alpha: float = 0.0
    F: float = 0.0
    eps: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("Jx", "Jy", "eps"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        a = self.alpha % 1.0
        if a > 0.5:
            a -= 1.0
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class DerivedConstants:
    """Derived scales; entries requiring alpha != 0 or F != 0 are None."""

    F_cr: float
    omega_c: float
    v_star: float | None
    lam: float | None
    T_B: float | None


def derive_constants(p: ModelParams) -> DerivedConstants:
    """Compute the derived constants of ``p``.

    Degenerate parameters are legal: quantities that would diverge
    (v_star and lam at alpha = 0, T_B at F = 0) come back as None,
    never as floating-point infinities.
    """
    two_pi_alpha = TWO_PI * p.alpha
    return DerivedConstants(
        F_cr=two_pi_alpha * p.Jx,
        omega_c=two_pi_alpha * math.sqrt(p.Jx * p.Jy),
        v_star=p.F / two_pi_alpha if p.alpha != 0.0 else None,
        lam=1.0 / p.alpha if p.alpha != 0.0 else None,
        T_B=TWO_PI / p.F if p.F != 0.0 else None,
    )


def magnetic_period_sites(p: ModelParams, fallback: int = 32) -> int:
    """|1/alpha| rounded up, or ``fallback`` when alpha = 0.

    Used as the natural window padding / growth quantum.
    """
    if p.alpha == 0.0:
        return fallback
    return max(1, math.ceil(abs(1.0 / p.alpha)))


# ---------------------------------------------------------------------------
# counter-based random streams


def _mix64(x: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer; input/output uint64
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def _to_u64(value) -> np.ndarray:
    arr = np.asarray(value, dtype=np.int64)
    return arr.view(np.uint64) if arr.dtype == np.int64 else arr.astype(np.uint64)


_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _hash_words(*words) -> np.ndarray:
    """Chain-hash integer words (scalars or broadcastable arrays) to uint64."""
    with np.errstate(over="ignore"):
        h = _mix64(_to_u64(words[0]) + _GOLDEN)
        for w in words[1:]:
            h = _mix64(h ^ (_to_u64(w) + _GOLDEN))
    return h


def _uniform01(*words) -> np.ndarray:
    """Deterministic uniforms in [0, 1) keyed by the given integer words."""
    h = _hash_words(*words)
    return (h >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)


def site_phases_1d(seed: int, realization: int, sites: np.ndarray) -> np.ndarray:
    """Independent uniform phases in [0, 2*pi) for 1D sites."""
    return TWO_PI * _uniform01(seed, _STREAM_PHASE_1D, realization, sites)


def site_phases_2d(seed: int, realization: int, l: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Independent uniform phases in [0, 2*pi) on a 2D site grid (broadcast)."""
    return TWO_PI * _uniform01(seed, _STREAM_PHASE_2D, realization, l, m)


# ---------------------------------------------------------------------------
# lattice states


@dataclass(frozen=True)
class Field1D:
    """Complex amplitudes b_l on the window l = offset ... offset+N-1."""

    offset: int
    amps: np.ndarray

    @property
    def n(self) -> int:
        return self.amps.shape[-1]

    def sites(self) -> np.ndarray:
        return self.offset + np.arange(self.n)

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))

    def density(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def mean_x(self) -> float:
        return float(np.dot(self.sites(), self.density()))

    def second_moment(self) -> float:
        """Raw second moment about the origin, sum_l l^2 |b_l|^2."""
        return float(np.dot(self.sites().astype(float) ** 2, self.density()))

    def embedded(self, offset: int, n: int) -> "Field1D":
        """Copy onto a larger window (zero padding); must contain the old one."""
        if offset > self.offset or offset + n < self.offset + self.n:
            raise ValueError("embedding window does not contain the field window")
        amps = np.zeros(n, dtype=complex)
        i0 = self.offset - offset
        amps[i0 : i0 + self.n] = self.amps
        return Field1D(offset, amps)


@dataclass(frozen=True)
class Field2D:
    """Complex amplitudes psi_{l,m}; axis 0 is l (x), axis 1 is m (y)."""

    offset_l: int
    offset_m: int
    amps: np.ndarray

    @property
    def nl(self) -> int:
        return self.amps.shape[-2]

    @property
    def nm(self) -> int:
        return self.amps.shape[-1]

    def sites_l(self) -> np.ndarray:
        return self.offset_l + np.arange(self.nl)

    def sites_m(self) -> np.ndarray:
        return self.offset_m + np.arange(self.nm)

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))

    def density(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def density_x(self) -> np.ndarray:
        """Population of the lattice columns, summed over m."""
        return np.sum(np.abs(self.amps) ** 2, axis=-1)

    def mean_x(self) -> float:
        return float(np.dot(self.sites_l(), self.density_x()))

    def second_moment_x(self) -> float:
        return float(np.dot(self.sites_l().astype(float) ** 2, self.density_x()))

    def embedded(self, offset_l: int, nl: int, offset_m: int, nm: int) -> "Field2D":
        if (
            offset_l > self.offset_l
            or offset_l + nl < self.offset_l + self.nl
            or offset_m > self.offset_m
            or offset_m + nm < self.offset_m + self.nm
        ):
            raise ValueError("embedding window does not contain the field window")
        amps = np.zeros((nl, nm), dtype=complex)
        i0 = self.offset_l - offset_l
        j0 = self.offset_m - offset_m
        amps[i0 : i0 + self.nl, j0 : j0 + self.nm] = self.amps
        return Field2D(offset_l, offset_m, amps)


TAIL_NORM = 1e-12


def landau_packet_1d(
    p: ModelParams, center_l: int = 0, window: tuple[int, int] | None = None
) -> Field1D:
    """Ground-Landau-like Gaussian, b_l ~ exp(-pi*alpha*(l-center)^2).

    ``window`` is (offset, n); when omitted it is sized so the truncated
    tail norm stays below 1e-12. An explicit window failing that bound
    raises WindowTooSmallError.
    """
    if p.alpha <= 0.0:
        raise ValueError("landau_packet_1d requires alpha > 0")
    # |b|^2 ~ exp(-2*pi*alpha*x^2); x with exponent >= 30 is below 1e-13
    radius = math.ceil(math.sqrt(30.0 / (TWO_PI * p.alpha))) + 2
    if window is None:
        offset, n = center_l - radius, 2 * radius + 1
    else:
        offset, n = int(window[0]), int(window[1])
        if n < 1:
            raise ValueError("window length must be >= 1")
    x = offset + np.arange(n) - center_l
    amps = np.exp(-math.pi * p.alpha * x.astype(float) ** 2)
    total = amps @ amps
    xr = np.arange(-4 * radius, 4 * radius + 1).astype(float)
    ref = np.exp(-TWO_PI * p.alpha * xr**2).sum()
    if 1.0 - total / ref > TAIL_NORM:
        raise WindowTooSmallError(
            f"window ({offset}, {n}) truncates tail norm {1.0 - total / ref:.3e} > {TAIL_NORM}"
        )
    return Field1D(offset, (amps / math.sqrt(total)).astype(complex))


def incoherent_packet(
    p: ModelParams,
    sigma_x: float,
    sigma_y: float | None = None,
    realization: int = 0,
) -> Field1D | Field2D:
    """Wide Gaussian envelope with independent random site phases.

    Amplitude magnitudes follow exp(-l^2/(4*sigma_x^2)) so the density is a
    Gaussian of RMS width sigma_x (initial second moment = sigma_x^2).
    Phases are uniform in [0, 2*pi), drawn from the deterministic stream
    keyed by (seed, realization, site). With ``sigma_y`` given, a 2D packet
    with a product envelope is returned.
    """
    if sigma_x <= 0 or (sigma_y is not None and sigma_y <= 0):
        raise ValueError("packet widths must be positive")
    rx = math.ceil(8.0 * sigma_x)
    lx = np.arange(-rx, rx + 1)
    gx = np.exp(-lx.astype(float) ** 2 / (4.0 * sigma_x**2))
    if sigma_y is None:
        phases = site_phases_1d(p.seed, realization, lx)
        amps = gx * np.exp(1j * phases)
        amps /= math.sqrt(float(np.sum(np.abs(amps) ** 2)))
        return Field1D(-rx, amps)
    ry = math.ceil(8.0 * sigma_y)
    lm = np.arange(-ry, ry + 1)
    gy = np.exp(-lm.astype(float) ** 2 / (4.0 * sigma_y**2))
    env = np.outer(gx, gy)
    phases = site_phases_2d(p.seed, realization, lx[:, None], lm[None, :])
    amps = env * np.exp(1j * phases)
    amps /= math.sqrt(float(np.sum(np.abs(amps) ** 2)))
    return Field2D(-rx, -ry, amps)


def staggered_transform(b: Field1D) -> Field1D:
    """Map between the low- and high-energy families: b_l -> (-1)^l b_l.

    Involution; signs use the absolute site index, not the array position.
    """
    signs = 1.0 - 2.0 * (np.abs(b.sites()) % 2)
    return Field1D(b.offset, b.amps * signs)


# ---------------------------------------------------------------------------
# on-site disorder


@dataclass(frozen=True)
class DisorderRealization:
    """Random on-site energies eps_n, i.i.d. uniform in [-eps/2, eps/2].

    The map site -> energy is a pure function of (seed, realization, site),
    so values for any window regenerate bit-identically; windows may grow
    during propagation without changing previously seen values.
    """

    eps: float
    seed: int
    realization: int
    ndim: int = 1

    def values_1d(self, offset: int, n: int) -> np.ndarray:
        sites = offset + np.arange(n)
        if self.eps == 0.0:
            return np.zeros(n)
        u = _uniform01(self.seed, _STREAM_DISORDER_1D, self.realization, sites)
        return self.eps * (u - 0.5)

    def values_2d(self, offset_l: int, nl: int, offset_m: int, nm: int) -> np.ndarray:
        if self.eps == 0.0:
            return np.zeros((nl, nm))
        l = (offset_l + np.arange(nl))[:, None]
        m = (offset_m + np.arange(nm))[None, :]
        u = _uniform01(self.seed, _STREAM_DISORDER_2D, self.realization, l, m)
        return self.eps * (u - 0.5)

    def value_at(self, l: int, m: int | None = None) -> float:
        if m is None:
            return float(self.values_1d(l, 1)[0])
        return float(self.values_2d(l, 1, m, 1)[0, 0])


def disorder(p: ModelParams, realization: int = 0, ndim: int = 1) -> DisorderRealization:
    """Deterministic disorder realization for the given index."""
    if ndim not in (1, 2):
        raise ValueError("ndim must be 1 or 2")
    return DisorderRealization(p.eps, p.seed, realization, ndim)
