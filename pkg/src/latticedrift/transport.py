"""Diabatic spectral families and rigidly drifting 2D states.

Straight-line features of the band scan are followed by eigenvector
overlap: at each quasimomentum the member maximizing |<c_prev|c>| is taken,
which jumps through avoided crossings instead of following the adiabatic
bands. A 2D state synthesized from one family,

    psi_{l,m} = e^{-i 2 pi alpha l m} sum_j w_j e^{i kappa_j l} c_m(kappa_j),

is localized in both directions and translates rigidly along x at the
family's energy slope dE/dkappa (the drift velocity F/(2*pi*alpha) for the
families tied to the extrema of the tilted potential). ``verify_drift``
measures that motion with the real propagator: fitted velocity, shape
fidelity after the flight, and the weight scattered against the drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Field2D, ModelParams, TWO_PI
from .propagate import PropagationConfig, evolve_2d_staticgauge
from .spectral import BandScan, SpectralSlice, build_hamiltonian_1d, mathieu_state

_OVERLAP_CONTINUITY = 0.9


class ContinuityError(RuntimeError):
    """Diabatic tracking lost the family (grid too coarse)."""


@dataclass
class DiabaticFamily:
    """One straight-line family followed over kappa in [0, 2*pi).

    ``vectors[j]`` is the (real, sign-aligned) family member at
    ``kappas[j]`` on the scan window; ``slope`` is the least-squares
    dE/dkappa and ``linearity`` the R^2 of that fit.
    """

    kappas: np.ndarray
    energies: np.ndarray
    vectors: np.ndarray
    m0: int
    extremum_site: int | None
    slope: float
    linearity: float
    params: ModelParams

    def min_overlap(self) -> float:
        """Smallest successive overlap; alignment makes it real positive."""
        ov = np.real(np.sum(np.conj(self.vectors[:-1]) * self.vectors[1:], axis=1))
        return float(np.min(ov)) if ov.size else 1.0


def _fit_line(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2


def _finish_family(
    scan: BandScan,
    energies: list[float],
    vectors: list[np.ndarray],
    extremum_site: int | None,
) -> DiabaticFamily:
    karr = np.asarray(scan.kappas, dtype=float)
    earr = np.array(energies)
    slope, r2 = _fit_line(karr, earr)
    return DiabaticFamily(
        kappas=karr,
        energies=earr,
        vectors=np.array(vectors),
        m0=scan.slices[0].m0,
        extremum_site=extremum_site,
        slope=slope,
        linearity=r2,
        params=scan.params,
    )


def _pick_member(
    sl: SpectralSlice, ref: np.ndarray, allowed: np.ndarray | None = None
) -> tuple[float, np.ndarray, float]:
    ov = ref @ sl.vectors
    aov = np.abs(ov)
    if allowed is not None:
        aov = np.where(allowed, aov, -1.0)
    best = int(np.argmax(aov))
    near = np.nonzero(aov > aov[best] - 1e-9)[0]
    if near.size > 1:
        # degenerate choice: break the tie toward the smaller energy change
        best = int(near[np.argmin(np.abs(sl.energies[near] - sl.energies[best]))])
    vec = sl.vectors[:, best] * (1.0 if ov[best] >= 0 else -1.0)
    return float(sl.energies[best]), vec, float(aov[best])


def _span_projection(
    sl: SpectralSlice,
    ref: np.ndarray,
    scan: BandScan,
    k: int = 3,
    allowed: np.ndarray | None = None,
) -> tuple[float, np.ndarray, float]:
    """Projection of ``ref`` onto the span of its top-k eigenvectors.

    Used inside avoided-crossing mixing zones, where no single eigenvector
    continues the family: the projected vector is the straight-through
    (diabatic) continuation, with the energy taken as its expectation value.
    """
    ov = ref @ sl.vectors
    if allowed is not None:
        ov = np.where(allowed, ov, 0.0)
    top = np.argsort(-np.abs(ov))[:k]
    vec = sl.vectors[:, top] @ ov[top]
    nrm = float(np.linalg.norm(vec))
    if nrm == 0.0:
        return float(sl.energies[top[0]]), sl.vectors[:, top[0]], 0.0
    vec /= nrm
    h = build_hamiltonian_1d(scan.params, sl.kappa, scan.window, scan.dis)
    energy = float(vec @ h.apply(vec))
    return energy, vec, float(abs(ref @ vec))


def _track_anchored(scan: BandScan, extremum_site: int, kind: str) -> DiabaticFamily:
    """Track an extremum family against its harmonic mode at every kappa.

    At each node the anchor is projected onto the exact eigenbasis through
    a smooth quartic energy window around its own expectation value: the
    on-line eigenstate passes (its residual anharmonic admixtures are
    stripped), avoided-crossing partners inside the window blend smoothly,
    and everything else is suppressed. Every quantity is a pointwise
    analytic function of kappa, so the family is independent of the grid
    and cannot be captured onto an adiabatic band.
    """
    p = scan.params
    kappa0 = float(scan.kappas[0])
    phase0 = 0.0 if kind == "min" else math.pi
    branch = round((TWO_PI * p.alpha * extremum_site - kappa0 - phase0) / TWO_PI)
    width = max(0.4 * abs(p.F), 0.1 * TWO_PI * abs(p.alpha) * math.sqrt(p.Jx * p.Jy))
    energies: list[float] = []
    vectors: list[np.ndarray] = []
    prev: np.ndarray | None = None
    for sl in scan.slices:
        anchor = mathieu_state(
            p, sl.kappa, extremum_site, window=scan.window, branch=branch, kind=kind
        ).vector
        h = build_hamiltonian_1d(p, sl.kappa, scan.window, scan.dis)
        e_ref = float(anchor @ h.apply(anchor))
        ov = anchor @ sl.vectors
        coef = ov * np.exp(-(((sl.energies - e_ref) / width) ** 4))
        nrm = float(np.linalg.norm(coef))
        if nrm > 0.3:
            vec = sl.vectors @ (coef / nrm)
            e = float(coef @ (sl.energies * coef)) / nrm**2
        else:
            vec = anchor
            e = e_ref
        if prev is not None and float(prev @ vec) < 0:
            vec = -vec
        energies.append(e)
        vectors.append(vec)
        prev = vec
    fam = _finish_family(scan, energies, vectors, extremum_site)
    if fam.min_overlap() < _OVERLAP_CONTINUITY:
        raise ContinuityError(
            f"successive overlap {fam.min_overlap():.3f} < {_OVERLAP_CONTINUITY}; "
            "refine the kappa grid"
        )
    return fam


def track_family(
    scan: BandScan, extremum_site: int = 0, kind: str = "min"
) -> DiabaticFamily:
    """Follow the straight-line family rooted at one potential extremum.

    The harmonic mode about the chosen extremum (minimum, or maximum for
    the high-energy counterpart) anchors the selection at every kappa.
    Raises NoExtremumError above the critical field and ContinuityError
    when the kappa grid is too coarse to keep successive overlaps above
    0.9.
    """
    fam = _track_anchored(scan, extremum_site, kind)
    scan.families.append(fam)
    return fam


def detect_lines(
    scan: BandScan,
    slope_range: tuple[float, float] = (-0.6, 0.6),
    n_slopes: int = 1201,
    tol: float = 0.01,
    min_fraction: float = 0.7,
    energy_range: tuple[float, float] | None = None,
) -> list[tuple[float, float, float]]:
    """Straight lines E = b + s*kappa through the band scan, found empirically.

    A slope grid is scanned; for each slope the intercepts of every
    eigenvalue are pooled and dense clusters (at least ``min_fraction`` of
    the kappa nodes within +-tol) are reported as (slope, intercept,
    fraction), de-duplicated and sorted by slope. Deep spectra are best
    restricted with ``energy_range`` around the spectrum center.
    """
    kappas = scan.kappas
    energies = np.array([sl.energies for sl in scan.slices])  # (nk, ns)
    if energy_range is None:
        interior = scan.slices[0].interior_mask()
        e_int = scan.slices[0].energies[interior]
        span = e_int[-1] - e_int[0]
        energy_range = (e_int[0] + 0.25 * span, e_int[-1] - 0.25 * span)
    nk = kappas.size
    need = min_fraction * nk
    hits: list[tuple[float, float, float]] = []
    for s in np.linspace(slope_range[0], slope_range[1], n_slopes):
        b = (energies - s * kappas[:, None]).ravel()
        b = b[(b >= energy_range[0]) & (b <= energy_range[1])]
        if b.size == 0:
            continue
        b.sort()
        cnt = np.searchsorted(b, b + tol) - np.searchsorted(b, b - tol)
        j = int(np.argmax(cnt))
        if cnt[j] >= need:
            hits.append((float(s), float(b[j]), cnt[j] / nk))
    # merge near-duplicates, keeping the best-supported representative
    hits.sort(key=lambda h: (-h[2], h[0]))
    lines: list[tuple[float, float, float]] = []
    ds = (slope_range[1] - slope_range[0]) / (n_slopes - 1)
    for s, b, frac in hits:
        if any(abs(s - s2) < 6 * ds and abs(b - b2) < 4 * tol for s2, b2, _ in lines):
            continue
        lines.append((s, b, frac))
    lines.sort(key=lambda h: h[0])
    return lines


def family_from_line(
    scan: BandScan,
    slope: float,
    intercept: float,
    zone_tol: float = 0.02,
) -> DiabaticFamily:
    """Assemble the diabatic family belonging to one detected line.

    The member at each kappa is the eigenstate nearest the line in energy;
    where several states fall within ``zone_tol`` of the line (an avoided
    crossing straddling it) the previous member is span-projected onto
    them, which carries the family straight through the zone.
    """
    energies: list[float] = []
    vectors: list[np.ndarray] = []
    prev: np.ndarray | None = None
    for j, sl in enumerate(scan.slices):
        target = intercept + slope * float(scan.kappas[j])
        dist = np.abs(sl.energies - target)
        near = dist <= zone_tol
        if prev is None or np.count_nonzero(near) <= 1:
            idx = int(np.argmin(dist))
            vec = sl.vectors[:, idx]
            e = float(sl.energies[idx])
        else:
            e, vec, _best = _span_projection(sl, prev, scan, k=5, allowed=near)
        if prev is not None and float(prev @ vec) < 0:
            vec = -vec
        energies.append(e)
        vectors.append(vec)
        prev = vec
    fam = _finish_family(scan, energies, vectors, None)
    if fam.min_overlap() < _OVERLAP_CONTINUITY:
        raise ContinuityError(
            f"successive overlap {fam.min_overlap():.3f} < {_OVERLAP_CONTINUITY}; "
            "refine the kappa grid"
        )
    return fam


def find_linear_families(
    scan: BandScan,
    slope_range: tuple[float, float] = (-0.6, 0.6),
    tol: float = 0.01,
    min_fraction: float = 0.7,
) -> list[DiabaticFamily]:
    """Detect straight spectral lines and assemble their families.

    Lines whose members cannot be followed continuously are skipped.
    Sorted by slope; used for the deep-quantum regime where straight lines
    of either sign exist without a harmonic seed.
    """
    families: list[DiabaticFamily] = []
    for s, b, _frac in detect_lines(scan, slope_range, tol=tol, min_fraction=min_fraction):
        try:
            families.append(family_from_line(scan, s, b, zone_tol=2 * tol))
        except ContinuityError:
            continue
    return families


@dataclass
class TransportingState:
    """Localized 2D state synthesized from one diabatic family."""

    field: Field2D
    family: DiabaticFamily
    n_kappa: int


def _period_kernel(x: np.ndarray, periods: int) -> np.ndarray:
    """(1/(2*pi*P)) * integral over P kappa periods of e^{i*kappa*x}."""
    small = np.abs(x) < 1e-9
    xs = np.where(small, 1.0, x)
    out = (np.exp(2j * math.pi * periods * xs) - 1.0) / (2j * math.pi * periods * xs)
    out[small] = 1.0
    return out


def _integrate_family(vectors: np.ndarray, delta: float, ls: np.ndarray) -> np.ndarray:
    """Quadrature of psi_l = int e^{i kappa l} c(kappa) d kappa over the loop.

    The family translates by ``delta`` sites per kappa period, so the plain
    periodic sum would see a boundary jump and converge only at O(1/N).
    Untwisting that drift in Fourier space over m makes the integrand
    periodic (up to a sign: a family that closes anti-periodically is
    integrated over two periods, where its loop closes). Each kappa
    harmonic then integrates exactly against the analytic kernel, which is
    spectrally accurate in the node count.
    """
    n, m = vectors.shape
    mp = 1 << (2 * m - 1).bit_length()
    c_hat = np.fft.fft(vectors, n=mp, axis=1)
    kfreq = TWO_PI * np.fft.fftfreq(mp)
    kappas = TWO_PI * np.arange(n) / n
    phi = c_hat * np.exp(1j * np.outer(kappas / TWO_PI, kfreq * delta))
    closure = np.vdot(phi[0], phi[-1]).real
    half = 0.5 if closure < 0 else 0.0
    periods = 2 if half else 1
    if half:
        phi = phi * np.exp(1j * 0.5 * kappas)[:, None]
    a = np.fft.fft(phi, axis=0) / n  # phi(kappa) = sum_r a_r e^{i r kappa}
    r = np.fft.fftfreq(n) * n
    psi_hat = np.empty((ls.size, mp), dtype=complex)
    mu0 = -half - kfreq * delta / TWO_PI
    for i, l in enumerate(ls):
        x = (l + mu0)[None, :] + r[:, None]
        psi_hat[i] = np.sum(a * _period_kernel(x, periods), axis=0)
    return np.fft.ifft(psi_hat, axis=1)[:, :m]


def build_transporting_state(
    fam: DiabaticFamily, tail: float = 1e-10, l_half: int | None = None
) -> TransportingState:
    """One-period quadrature of the family, cropped to support and normalized.

    The family is integrated with the shift-untwisted spectral rule of
    ``_integrate_family`` (the drift of the members across the period is
    what a plain periodic trapezoid cannot represent); the synthesized
    state is localized in both directions. The x window is set by the
    family's translation per period, independent of the grid size, so
    refining the kappa grid converges to the same state.
    """
    if fam.min_overlap() < _OVERLAP_CONTINUITY:
        raise ContinuityError("family violates the diabatic continuity invariant")
    p = fam.params
    n = fam.kappas.size
    base = fam.vectors
    # sites of translation per kappa period: the energy climbs F per site
    if fam.extremum_site is not None and p.alpha != 0:
        delta = 1.0 / p.alpha
    elif p.F != 0:
        delta = TWO_PI * fam.slope / p.F
        if abs(delta - round(delta)) < 0.05:
            delta = round(delta)
    else:
        raise ValueError("family translation per period undefined at F = 0")
    if l_half is None:
        l_half = max(64, math.ceil(4 * abs(delta)))
    ls = np.arange(-l_half, l_half + 1)
    psi = _integrate_family(base.astype(complex), delta, ls)
    ms = np.arange(fam.m0, fam.m0 + psi.shape[1])
    psi = psi * np.exp(-1j * TWO_PI * p.alpha * np.outer(ls, ms))
    dens = np.abs(psi) ** 2
    dens /= dens.sum()
    # crop to support above the tail threshold
    px = dens.sum(axis=1)
    py = dens.sum(axis=0)
    keep_x = np.nonzero(px > tail * px.max())[0]
    keep_y = np.nonzero(py > tail * py.max())[0]
    i0, i1 = int(keep_x[0]), int(keep_x[-1])
    j0, j1 = int(keep_y[0]), int(keep_y[-1])
    psi = psi[i0 : i1 + 1, j0 : j1 + 1]
    psi = psi / math.sqrt(float(np.sum(np.abs(psi) ** 2)))
    field = Field2D(int(ls[i0]), int(ms[j0]), psi)
    return TransportingState(field=field, family=fam, n_kappa=n)


@dataclass(frozen=True)
class DriftReport:
    """Measured transport of a state over one flight."""

    v_measured: float
    displacement: float
    shape_fidelity: float
    backscatter_norm: float
    duration: float


def _density_correlation(
    rho0: np.ndarray, rho1: np.ndarray
) -> tuple[float, float]:
    """(peak correlation, shift) of rho1 against rho0 along axis 0.

    Integer-shift normalized cross-correlation refined by a parabolic fit
    through the peak, i.e. the best overlap over sub-site displacements.
    """
    nl = rho0.shape[0]
    nfft = 1 << (2 * nl - 1).bit_length()
    f0 = np.fft.rfft(rho0, n=nfft, axis=0)
    f1 = np.fft.rfft(rho1, n=nfft, axis=0)
    corr = np.fft.irfft(f1 * np.conj(f0), n=nfft, axis=0).sum(axis=1)
    corr = np.concatenate([corr[-(nl - 1) :], corr[:nl]])  # shifts -(nl-1)..(nl-1)
    norm = math.sqrt(float(np.sum(rho0**2)) * float(np.sum(rho1**2)))
    corr /= norm
    k = int(np.argmax(corr))
    shift = float(k - (nl - 1))
    peak = float(corr[k])
    if 0 < k < corr.size - 1:
        ym, y0, yp = corr[k - 1], corr[k], corr[k + 1]
        denom = ym - 2 * y0 + yp
        if denom < 0:
            delta = 0.5 * (ym - yp) / denom
            peak = float(y0 - 0.25 * (ym - yp) * delta)
            shift += float(delta)
    return peak, shift


def verify_drift(
    state: TransportingState | Field2D,
    p: ModelParams,
    T: float,
    cfg: PropagationConfig | None = None,
) -> DriftReport:
    """Evolve a state for time T and measure its drift along x.

    v_measured is the linear fit of <l>(t); shape_fidelity the sub-site
    density cross-correlation between the final and initial state;
    backscatter_norm the probability found beyond the initial support on
    the side opposite to the measured drift.
    """
    field = state.field if isinstance(state, TransportingState) else state
    if cfg is None:
        n_steps = max(1, math.ceil(T / 0.25))
        cfg = PropagationConfig(
            t_end=T, dt_max=0.25, observer_stride=max(1, n_steps // 64)
        )
    final, series = evolve_2d_staticgauge(field, p, None, cfg=cfg)
    v, _ = np.polyfit(series.times, series.mean_x, 1)
    displacement = float(series.mean_x[-1] - series.mean_x[0])
    # common window for the density comparison
    l0 = min(field.offset_l, final.offset_l)
    l1 = max(field.offset_l + field.nl, final.offset_l + final.nl)
    m0 = min(field.offset_m, final.offset_m)
    m1 = max(field.offset_m + field.nm, final.offset_m + final.nm)
    rho0 = field.embedded(l0, l1 - l0, m0, m1 - m0).density()
    rho1 = final.embedded(l0, l1 - l0, m0, m1 - m0).density()
    fidelity, _ = _density_correlation(rho0, rho1)
    px0 = rho0.sum(axis=1)
    support = np.nonzero(px0 > 1e-8 * px0.max())[0]
    px1 = rho1.sum(axis=1)
    if v >= 0:
        back = float(px1[: support[0]].sum()) if support[0] > 0 else 0.0
    else:
        back = float(px1[support[-1] + 1 :].sum())
    return DriftReport(
        v_measured=float(v),
        displacement=displacement,
        shape_fidelity=fidelity,
        backscatter_norm=back,
        duration=T,
    )
