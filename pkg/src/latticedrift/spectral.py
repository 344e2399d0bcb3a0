"""Eigenproblem of the tilted lattice at fixed quasimomentum.

With eigenfunctions of the static-gauge Hamiltonian written as Bloch waves
along x, psi_{l,m} = e^{i kappa l} c_m e^{-i 2 pi alpha l m} / sqrt(L_x),
the spectral problem collapses to a real symmetric tridiagonal chain in m:

    -(Jy/2)(c_{m+1} + c_{m-1}) + [F m - Jx cos(2 pi alpha m - kappa)] c_m
        = E c_m

Every eigenstate is extended along x and carries a mean current

    v = sum_m |c_m|^2 sin(2 pi alpha m - kappa),

whose sum over a complete truncated basis reduces to the trace identity
sum_m sin(2 pi alpha m - kappa) -- exactly zero whenever the window spans an
integer number of magnetic periods.

For |F| below the critical field the potential F m - Jx cos(...) has local
minima; ``mathieu_state`` solves the harmonic expansion about one of them,
which seeds diabatic tracking of the straight-line spectral families.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .core import DisorderRealization, ModelParams, TWO_PI, derive_constants


class ConvergenceError(RuntimeError):
    """Eigen-solve failed its residual/orthogonality bound."""


class NoExtremumError(ValueError):
    """No local extrema of the tilted potential: |F| >= F_cr."""


@dataclass(frozen=True)
class TridiagonalHamiltonian:
    """Symmetric tridiagonal chain Hamiltonian on m = m0 ... m1."""

    m0: int
    diag: np.ndarray
    offdiag: np.ndarray

    def to_dense(self) -> np.ndarray:
        return (
            np.diag(self.diag)
            + np.diag(self.offdiag, 1)
            + np.diag(self.offdiag, -1)
        )

    def apply(self, vec: np.ndarray) -> np.ndarray:
        out = self.diag * vec
        out[..., 1:] += self.offdiag * vec[..., :-1]
        out[..., :-1] += self.offdiag * vec[..., 1:]
        return out


@dataclass(frozen=True)
class SpectralSlice:
    """Eigenpairs and currents at one quasimomentum kappa.

    ``vectors[:, nu]`` is the eigenvector of ``energies[nu]``; energies
    ascend and each vector's largest-magnitude component is real positive.
    """

    kappa: float
    m0: int
    m1: int
    energies: np.ndarray
    vectors: np.ndarray
    currents: np.ndarray

    @property
    def n_states(self) -> int:
        return self.energies.shape[0]

    def sites(self) -> np.ndarray:
        return np.arange(self.m0, self.m1 + 1)

    def interior_mask(self, edge_amp: float = 1e-10) -> np.ndarray:
        """States negligibly supported on the window edges."""
        edge = np.maximum(np.abs(self.vectors[0, :]), np.abs(self.vectors[-1, :]))
        return edge < edge_amp


@dataclass
class BandScan:
    """Spectral slices on a strictly increasing kappa grid over [0, 2*pi).

    Carries the parameters and the shared m-window so that diabatic
    tracking can re-solve individual slices; ``families`` is filled by the
    transport layer.
    """

    kappas: np.ndarray
    slices: list[SpectralSlice]
    params: ModelParams
    window: tuple[int, int]
    dis: DisorderRealization | None = None
    families: list = field(default_factory=list)

    def __post_init__(self) -> None:
        if np.any(np.diff(self.kappas) <= 0):
            raise ValueError("kappa grid must be strictly increasing")
        if self.kappas[0] < 0 or self.kappas[-1] >= TWO_PI:
            raise ValueError("kappa grid must lie in [0, 2*pi)")


def default_window(p: ModelParams, center: float = 0.0) -> tuple[int, int]:
    """Half-width max(4/alpha, 8*Jy/F, 32) about ``center`` (rounded)."""
    half = 32.0
    if p.alpha != 0.0:
        half = max(half, 4.0 / abs(p.alpha))
    if p.F != 0.0:
        half = max(half, 8.0 * p.Jy / abs(p.F))
    h = math.ceil(half)
    c = round(center)
    return c - h, c + h


def build_hamiltonian_1d(
    p: ModelParams,
    kappa: float,
    window: tuple[int, int],
    dis: DisorderRealization | None = None,
) -> TridiagonalHamiltonian:
    """Tridiagonal chain in m: diagonal F*m - Jx*cos(2*pi*alpha*m - kappa)."""
    m0, m1 = int(window[0]), int(window[1])
    n = m1 - m0 + 1
    if n < 3:
        raise ValueError("window must span at least 3 sites")
    m = np.arange(m0, m1 + 1)
    diag = p.F * m - p.Jx * np.cos(TWO_PI * p.alpha * m - kappa)
    if dis is not None:
        diag = diag + dis.values_1d(m0, n)
    offdiag = np.full(n - 1, -0.5 * p.Jy)
    return TridiagonalHamiltonian(m0, diag, offdiag)


def _gauge_fix(vectors: np.ndarray) -> np.ndarray:
    """Sign-fix columns: largest-magnitude component real positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def solve_slice(
    p: ModelParams,
    kappa: float,
    window: tuple[int, int] | None = None,
    dis: DisorderRealization | None = None,
) -> SpectralSlice:
    """Diagonalize the chain at ``kappa`` and attach per-state currents.

    Without an explicit window the tilt must confine the states (F != 0);
    then the default truncation policy applies.
    """
    if window is None:
        if p.F == 0.0:
            raise ValueError("F = 0 needs an explicit window (no tilt confinement)")
        window = default_window(p)
    h = build_hamiltonian_1d(p, kappa, window, dis)
    energies, vectors = eigh_tridiagonal(h.diag, h.offdiag)
    vectors = _gauge_fix(vectors)
    scale = float(np.max(np.abs(h.diag))) + abs(h.offdiag[0]) * 2 + 1e-30
    residual = float(np.max(np.abs(h.apply(vectors.T).T - vectors * energies)))
    if residual > 1e-10 * scale:
        raise ConvergenceError(f"eigen residual {residual:.2e} exceeds 1e-10*|H|")
    gram = vectors.T @ vectors
    ortho = float(np.max(np.abs(gram - np.eye(gram.shape[0]))))
    if ortho > 1e-10:
        raise ConvergenceError(f"orthonormality defect {ortho:.2e} exceeds 1e-10")
    m = np.arange(window[0], window[1] + 1)
    weights = np.sin(TWO_PI * p.alpha * m - kappa)
    currents = (np.abs(vectors) ** 2).T @ weights
    return SpectralSlice(
        kappa=float(kappa) % TWO_PI,
        m0=int(window[0]),
        m1=int(window[1]),
        energies=energies,
        vectors=vectors,
        currents=currents,
    )


def sum_rule(sl: SpectralSlice) -> float:
    """Total current carried by the complete truncated basis.

    Equals sum_m sin(2*pi*alpha*m - kappa) by the trace identity; vanishes
    when the window length is a multiple of the magnetic period.
    """
    return float(np.sum(sl.currents))


def band_scan(
    p: ModelParams,
    kappas: np.ndarray,
    window: tuple[int, int] | None = None,
    dis: DisorderRealization | None = None,
) -> BandScan:
    """Solve slices on a kappa grid (shared window for diabatic tracking)."""
    if window is None:
        if p.F == 0.0:
            raise ValueError("F = 0 needs an explicit window")
        window = default_window(p)
    kappas = np.asarray(kappas, dtype=float)
    slices = [solve_slice(p, k, window, dis) for k in kappas]
    return BandScan(kappas=kappas, slices=slices, params=p, window=window, dis=dis)


@dataclass(frozen=True)
class HarmonicMode:
    """Localized ground mode of the harmonic expansion about one minimum."""

    m0: int
    vector: np.ndarray
    energy: float
    center: float


def mathieu_state(
    p: ModelParams,
    kappa: float = 0.0,
    extremum_site: int = 0,
    window: tuple[int, int] | None = None,
    branch: int | None = None,
    kind: str = "min",
) -> HarmonicMode:
    """Localized mode of the quadratic expansion about a potential extremum.

    The cosine in the chain potential is expanded to second order about the
    extremum branch passing nearest ``extremum_site`` (or about the given
    ``branch``, which pins one extremum while kappa varies). For a minimum
    (``kind="min"``) the lowest mode of the tilt-plus-parabola problem is
    returned; for a maximum the highest mode of the inverted parabola, its
    high-energy counterpart. Requires |F| < F_cr = 2*pi*alpha*Jx so that
    extrema exist.
    """
    if kind not in ("min", "max"):
        raise ValueError("kind must be 'min' or 'max'")
    cons = derive_constants(p)
    if cons.F_cr <= 0 or abs(p.F) >= cons.F_cr:
        raise NoExtremumError(
            f"|F|={abs(p.F)} >= F_cr={cons.F_cr}: the tilted potential has no extrema"
        )
    two_pi_alpha = TWO_PI * p.alpha
    phase0 = 0.0 if kind == "min" else math.pi
    if branch is None:
        branch = round((two_pi_alpha * extremum_site - kappa - phase0) / TWO_PI)
    sign = 1.0 if kind == "min" else -1.0
    theta_star = -sign * p.F / cons.F_cr
    center = (kappa + phase0 + TWO_PI * branch + theta_star) / two_pi_alpha
    if window is None:
        window = default_window(p, center)
    m0, m1 = window
    m = np.arange(m0, m1 + 1)
    theta = two_pi_alpha * m - kappa - phase0 - TWO_PI * branch
    diag = p.F * m + sign * 0.5 * p.Jx * theta**2
    offdiag = np.full(m.size - 1, -0.5 * p.Jy)
    pick = 0 if kind == "min" else m.size - 1
    energies, vectors = eigh_tridiagonal(
        diag, offdiag, select="i", select_range=(pick, pick)
    )
    vec = _gauge_fix(vectors)[:, 0]
    return HarmonicMode(m0=m0, vector=vec, energy=float(energies[0]), center=center)


@dataclass(frozen=True)
class YLocalization:
    """Transverse localization-length estimate (site counts).

    Over-critical tilt: a single scale L = max(1, 2*Jy/F). Under-critical:
    lengths spread over [L_min, L_max] = [1/sqrt(alpha), 1/alpha]. The exact
    critical point is classified as over-critical. Estimates assume
    alpha << 1 and Jx = Jy; ``advisory`` lists violated assumptions.
    """

    regime: str
    L: float | None
    L_max: float | None
    L_min: float | None
    advisory: tuple[str, ...]


def localization_length_y(p: ModelParams) -> YLocalization:
    cons = derive_constants(p)
    notes = []
    if abs(p.alpha) > 0.2:
        notes.append("alpha > 0.2: outside the small-flux regime of the estimate")
    if p.Jx != p.Jy:
        notes.append("Jx != Jy: estimate derived for equal hoppings")
    if abs(p.F) >= cons.F_cr:
        if p.F == 0.0:
            return YLocalization("over", None, None, None, tuple(notes + ["F = 0: no tilt confinement"]))
        return YLocalization("over", max(1.0, 2.0 * p.Jy / abs(p.F)), None, None, tuple(notes))
    a = abs(p.alpha)
    return YLocalization("under", None, 1.0 / a, 1.0 / math.sqrt(a), tuple(notes))
