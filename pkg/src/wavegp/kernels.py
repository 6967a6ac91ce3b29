"""Covariance kernels for the 3D homogeneous wave equation.

A Gaussian process prior is placed on the initial speed v0 and/or the initial
position u0, both radial about a center x0 and compactly supported in a ball
of radius R. Pushing the prior through the solution operator of

    c^-2 d^2w/dt^2 - Laplace(w) = 0,  w(.,0) = u0,  dw/dt(.,0) = v0,

gives space-time covariances in closed form. With r = |x - x0|, r' = |x' - x0|
and the alternating/symmetric corner sums over eps, eps' in {-1, +1}:

    kv(z, z') = sgn(t t') / (16 c^2 r r')
                * sum eps eps' Kv(min(|r + eps c|t||, R)
                                  - min(|r' + eps' c|t'||, R))

    ku(z, z') = 1 / (4 r r')
                * sum A B' phi(|A| / R) phi(|B'| / R) ku0(|A| - |B'|),
                  A = r + eps c|t|,  B' = r' + eps' c|t'|

Kv and ku0 are stationary 1D kernels (Matern-5/2 here) acting on radius
increments; phi is a smooth cutoff that pins the prior support to the ball.
kv vanishes identically outside the light shell |r - c|t|| <= R (all four
clamped radii collapse to R and the alternating sum cancels), and so does ku
through the profile factors: sharp propagation is built into the prior.

Quadrature oracles for these closed forms live here too; they are test
utilities, not used in Gram assembly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import ndtr, roots_legendre

from .core import Hyperparameters, SpaceTimePoint

__all__ = [
    "Matern52",
    "TruncationProfile",
    "RadialVKernel",
    "RadialUKernel",
    "WaveKernelModel",
    "matern52",
    "ft_ft_density",
    "gaussian_stationary_wave",
    "kv_wave",
    "ku_wave",
    "wave_kernel",
    "kv_wave_matrix",
    "ku_wave_matrix",
    "wave_kernel_matrix",
    "kv_wave_diag",
    "ku_wave_diag",
    "wave_kernel_diag",
    "kirchhoff_oracle",
    "radial_kirchhoff_oracle",
    "radial_single_convolution",
    "radial_single_convolution_dt",
]

# relative threshold below which radii switch to the r -> 0 limit branches
_RTOL = 1e-6


def matern52(h, rho: float, sigma2: float = 1.0):
    """Matern kernel with smoothness 5/2, k(h) = s2 (1 + u + u^2/3) e^-u, u = |h|/rho."""
    u = np.abs(np.asarray(h, dtype=float)) / rho
    return sigma2 * (1.0 + u + u * u / 3.0) * np.exp(-u)


def matern52_deriv(h, rho: float, sigma2: float = 1.0):
    """First derivative of matern52 in h (odd, zero at h = 0)."""
    h = np.asarray(h, dtype=float)
    u = np.abs(h) / rho
    return -(sigma2 / (3.0 * rho * rho)) * h * (1.0 + u) * np.exp(-u)


def matern52_second_deriv(h, rho: float, sigma2: float = 1.0):
    """Second derivative of matern52 in h (even, -s2/(3 rho^2) at h = 0)."""
    u = np.abs(np.asarray(h, dtype=float)) / rho
    return -(sigma2 / (3.0 * rho * rho)) * (1.0 + u - u * u) * np.exp(-u)


@dataclass(frozen=True)
class Matern52:
    rho: float
    sigma2: float = 1.0

    def __post_init__(self):
        if self.rho <= 0 or self.sigma2 <= 0:
            raise ValueError("rho and sigma2 must be positive")

    def __call__(self, h):
        return matern52(h, self.rho, self.sigma2)

    def deriv(self, h):
        return matern52_deriv(h, self.rho, self.sigma2)

    def second_deriv(self, h):
        return matern52_second_deriv(h, self.rho, self.sigma2)


@dataclass(frozen=True)
class TruncationProfile:
    """C^1 cutoff: 1 on [0, alpha], cubic Hermite descent on (alpha, 1), 0 beyond.

    Values at s >= 1 are exactly 0.0 so that truncated kernels vanish exactly.
    """

    alpha: float = 0.8

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError("alpha must lie in [0, 1)")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        u = np.clip((s - self.alpha) / (1.0 - self.alpha), 0.0, 1.0)
        mid = 1.0 - u * u * (3.0 - 2.0 * u)
        return np.where(s >= 1.0, 0.0, np.where(s <= self.alpha, 1.0, mid))


@dataclass(frozen=True)
class RadialVKernel:
    """Initial-speed prior block: center, support radius, and Kv.

    Kv is the double antiderivative, in squared-radius coordinates, of the
    radial covariance of v0; it is modeled directly as a Matern-5/2 of the
    radius increment, Kv(s, s') = K(sqrt(s) - sqrt(s')), with both radii
    clamped at R so the prior is supported in the ball.
    """

    x0: np.ndarray
    R: float
    K: Matern52

    def __post_init__(self):
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float))
        if self.x0.shape != (3,):
            raise ValueError("x0 must be a 3-vector")
        if not self.R > 0:
            raise ValueError("R must be positive")


@dataclass(frozen=True)
class RadialUKernel:
    """Initial-position prior block: center, support radius, ku0, cutoff profile."""

    x0: np.ndarray
    R: float
    k0: Matern52
    trunc: TruncationProfile = field(default_factory=TruncationProfile)

    def __post_init__(self):
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float))
        if self.x0.shape != (3,):
            raise ValueError("x0 must be a 3-vector")
        if not self.R > 0:
            raise ValueError("R must be positive")


@dataclass(frozen=True)
class WaveKernelModel:
    """Sum of the propagated u- and v-blocks, sharing one wave speed c."""

    c: float
    u_kernel: Optional[RadialUKernel] = None
    v_kernel: Optional[RadialVKernel] = None
    theta: Optional[Hyperparameters] = None

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("c must be positive")
        if self.u_kernel is None and self.v_kernel is None:
            raise ValueError("model needs at least one of u_kernel, v_kernel")

    @classmethod
    def from_hyperparameters(cls, theta: Hyperparameters) -> "WaveKernelModel":
        uk = vk = None
        if theta.u_part is not None:
            p = theta.u_part
            uk = RadialUKernel(p.x0, p.R, Matern52(p.rho, p.sigma2))
        if theta.v_part is not None:
            p = theta.v_part
            vk = RadialVKernel(p.x0, p.R, Matern52(p.rho, p.sigma2))
        return cls(c=theta.c, u_kernel=uk, v_kernel=vk, theta=theta)


# ---------------------------------------------------------------------------
# stationary building blocks


def ft_ft_density(h, t: float, tp: float, c: float) -> float:
    """Lebesgue density of F_t * F_t' at spatial lag h (h != 0).

    Supported on the shell c| |t|-|t'| | <= |h| <= c (|t|+|t'|), where it equals
    sgn(t) sgn(t') / (8 pi c^2 |h|). Analysis/testing helper only; the Gram
    matrices never touch it.
    """
    h = np.asarray(h, dtype=float)
    d = float(np.linalg.norm(h)) if h.ndim else abs(float(h))
    if d == 0.0:
        raise ValueError("density is singular at zero spatial lag")
    lo = c * abs(abs(t) - abs(tp))
    hi = c * (abs(t) + abs(tp))
    if lo <= d <= hi:
        return np.sign(t) * np.sign(tp) / (8.0 * math.pi * c * c * d)
    return 0.0


def _cdf_diff_over(R: float, s, L: float):
    """(Phi((R+s)/L) - Phi((R-s)/L)) / (2 s), stable for small s (limit pdf(R/L)/L)."""
    s = np.asarray(s, dtype=float)
    u = R / L
    small = s < 1e-5 * L
    ss = np.where(small, L, s)  # dummy to avoid 0/0 in the masked lanes
    reg = (ndtr((R + ss) / L) - ndtr((R - ss) / L)) / (2.0 * ss)
    pdf = math.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)
    w = s / L
    taylor = (pdf / L) * (
        1.0 + (w * w / 6.0) * (u * u - 1.0) + (w ** 4 / 120.0) * (u ** 4 - 6.0 * u * u + 3.0)
    )
    return np.where(small, taylor, reg)


def gaussian_stationary_wave(h, t: float, tp: float, C: float, L: float, c: float):
    """(F_t * F_t' * kS)(h) for the squared-exponential kS(h) = C exp(-|h|^2 / 2L^2).

    Closed form: sgn(t t') (sqrt(2 pi)/2) (C L^3 / c^2)
                 [ g(R1, |h|) - g(R2, |h|) ],
    g(R, s) = (Phi((R+s)/L) - Phi((R-s)/L)) / (2 s),
    R1 = c | |t| - |t'| |, R2 = c (|t| + |t'|). The |h| -> 0 limit is taken
    analytically (g -> pdf(R/L)/L).
    """
    h = np.asarray(h, dtype=float)
    if h.ndim == 1 and h.shape == (3,):
        d = np.asarray(np.linalg.norm(h))
    elif h.ndim == 2:
        d = np.linalg.norm(h, axis=-1)
    else:
        d = np.abs(h)
    r1 = c * abs(abs(t) - abs(tp))
    r2 = c * (abs(t) + abs(tp))
    sgn = np.sign(t) * np.sign(tp)
    pref = sgn * (math.sqrt(2.0 * math.pi) / 2.0) * C * L ** 3 / (c * c)
    out = pref * (_cdf_diff_over(r1, d, L) - _cdf_diff_over(r2, d, L))
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# propagated kernels (closed forms)


def _prep_point(z):
    if isinstance(z, SpaceTimePoint):
        return z.x, z.t
    x, t = z
    return np.asarray(x, dtype=float), float(t)


def _v_side(X, T, kern: RadialVKernel, c: float):
    """Per-argument quantities for the v closed form."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    T = np.asarray(T, dtype=float).reshape(-1)
    r = np.linalg.norm(X - kern.x0, axis=1)
    ct = c * np.abs(T)
    sg = np.sign(T)
    ap = np.minimum(r + ct, kern.R)
    am = np.minimum(np.abs(r - ct), kern.R)
    rtol = _RTOL * np.maximum(1.0, ct)
    small = r < rtol
    rs = np.where(small, 1.0, r)
    inside = ct < kern.R  # expansion radii stay unclamped; outside, both clamp and cancel
    return r, rs, ct, sg, ap, am, inside, small


def kv_wave_matrix(X, T, Xp, Tp, kern: RadialVKernel, c: float) -> np.ndarray:
    """Cross-covariance matrix of the propagated v-kernel, shape (n, m)."""
    m = kern.K
    r, rs, ct, sg, ap, am, ins, sm = _v_side(X, T, kern, c)
    rp, rsp, ctp, sgp, bp, bm, insp, smp = _v_side(Xp, Tp, kern, c)
    S = (
        m(ap[:, None] - bp[None, :])
        - m(ap[:, None] - bm[None, :])
        - m(am[:, None] - bp[None, :])
        + m(am[:, None] - bm[None, :])
    )
    out = (sg[:, None] * sgp[None, :]) * S / (16.0 * c * c * rs[:, None] * rsp[None, :])
    if np.any(sm):
        ii = np.flatnonzero(sm)
        # first-order expansion in r: sum_eps eps K(|r + eps c|t|| - b)
        #                               ~ 2 r K'(c|t| - b)
        row = (
            (sg[ii][:, None] * sgp[None, :])
            * (m.deriv(ct[ii][:, None] - bp[None, :]) - m.deriv(ct[ii][:, None] - bm[None, :]))
            / (8.0 * c * c * rsp[None, :])
        )
        row[~ins[ii]] = 0.0
        out[ii] = row
    if np.any(smp):
        jj = np.flatnonzero(smp)
        col = (
            (sg[:, None] * sgp[jj][None, :])
            * (m.deriv(ctp[jj][None, :] - ap[:, None]) - m.deriv(ctp[jj][None, :] - am[:, None]))
            / (8.0 * c * c * rs[:, None])
        )
        col[:, ~insp[jj]] = 0.0
        out[:, jj] = col
    if np.any(sm) and np.any(smp):
        ii = np.flatnonzero(sm)
        jj = np.flatnonzero(smp)
        blk = (
            (sg[ii][:, None] * sgp[jj][None, :])
            * (-m.second_deriv(ct[ii][:, None] - ctp[jj][None, :]))
            / (4.0 * c * c)
        )
        blk[~ins[ii], :] = 0.0
        blk[:, ~insp[jj]] = 0.0
        out[np.ix_(ii, jj)] = blk
    return out


def _u_side(X, T, kern: RadialUKernel, c: float):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    T = np.asarray(T, dtype=float).reshape(-1)
    r = np.linalg.norm(X - kern.x0, axis=1)
    ct = c * np.abs(T)
    rtol = _RTOL * np.maximum(1.0, ct)
    # centered evaluation at r = rtol for near-axis points (formula is even in r)
    re = np.maximum(r, rtol)
    Apl = re + ct
    Ami = re - ct
    qpl = np.abs(Apl)
    qmi = np.abs(Ami)
    Ppl = Apl * kern.trunc(qpl / kern.R)
    Pmi = Ami * kern.trunc(qmi / kern.R)
    return re, qpl, qmi, Ppl, Pmi


def ku_wave_matrix(X, T, Xp, Tp, kern: RadialUKernel, c: float) -> np.ndarray:
    """Cross-covariance matrix of the propagated u-kernel, shape (n, m)."""
    m = kern.k0
    re, qpl, qmi, Ppl, Pmi = _u_side(X, T, kern, c)
    rep, qplp, qmip, Pplp, Pmip = _u_side(Xp, Tp, kern, c)
    S = (
        (Ppl[:, None] * Pplp[None, :]) * m(qpl[:, None] - qplp[None, :])
        + (Ppl[:, None] * Pmip[None, :]) * m(qpl[:, None] - qmip[None, :])
        + (Pmi[:, None] * Pplp[None, :]) * m(qmi[:, None] - qplp[None, :])
        + (Pmi[:, None] * Pmip[None, :]) * m(qmi[:, None] - qmip[None, :])
    )
    return S / (4.0 * re[:, None] * rep[None, :])


def kv_wave_diag(X, T, kern: RadialVKernel, c: float) -> np.ndarray:
    """Pointwise prior variance of the propagated v-kernel, k(z, z) for each z."""
    m = kern.K
    r, rs, ct, sg, ap, am, ins, sm = _v_side(X, T, kern, c)
    S = 2.0 * (m(np.zeros_like(ap)) - m(ap - am))
    out = (sg * sg) * S / (16.0 * c * c * rs * rs)
    if np.any(sm):
        blk = (sg * sg) * (-m.second_deriv(np.zeros_like(ct))) / (4.0 * c * c)
        out[sm] = np.where(ins[sm], blk[sm], 0.0)
    return out


def ku_wave_diag(X, T, kern: RadialUKernel, c: float) -> np.ndarray:
    """Pointwise prior variance of the propagated u-kernel."""
    m = kern.k0
    re, qpl, qmi, Ppl, Pmi = _u_side(X, T, kern, c)
    S = (Ppl * Ppl + Pmi * Pmi) * m(np.zeros_like(qpl)) + 2.0 * Ppl * Pmi * m(qpl - qmi)
    return S / (4.0 * re * re)


def wave_kernel_diag(X, T, model: WaveKernelModel) -> np.ndarray:
    out = None
    if model.u_kernel is not None:
        out = ku_wave_diag(X, T, model.u_kernel, model.c)
    if model.v_kernel is not None:
        kv = kv_wave_diag(X, T, model.v_kernel, model.c)
        out = kv if out is None else out + kv
    return out


def kv_wave(z, zp, kern: RadialVKernel, c: float) -> float:
    """Propagated v-kernel at a pair of space-time points."""
    x, t = _prep_point(z)
    xp, tp = _prep_point(zp)
    return float(kv_wave_matrix(x[None, :], [t], xp[None, :], [tp], kern, c)[0, 0])


def ku_wave(z, zp, kern: RadialUKernel, c: float) -> float:
    """Propagated u-kernel at a pair of space-time points."""
    x, t = _prep_point(z)
    xp, tp = _prep_point(zp)
    return float(ku_wave_matrix(x[None, :], [t], xp[None, :], [tp], kern, c)[0, 0])


def wave_kernel_matrix(X, T, Xp, Tp, model: WaveKernelModel) -> np.ndarray:
    """Full space-time covariance (u-part + v-part) between two point sets."""
    out = None
    if model.u_kernel is not None:
        out = ku_wave_matrix(X, T, Xp, Tp, model.u_kernel, model.c)
    if model.v_kernel is not None:
        kv = kv_wave_matrix(X, T, Xp, Tp, model.v_kernel, model.c)
        out = kv if out is None else out + kv
    return out


def wave_kernel(z, zp, model: WaveKernelModel) -> float:
    x, t = _prep_point(z)
    xp, tp = _prep_point(zp)
    return float(wave_kernel_matrix(x[None, :], [t], xp[None, :], [tp], model)[0, 0])


# ---------------------------------------------------------------------------
# quadrature oracles (test utilities)


def _sphere_rule(n_quad: int):
    """Tensor rule on the unit sphere: GL in cos(theta) x midpoint-uniform in phi.

    Returns directions (n_quad^2, 3) and weights normalized to sum to 1
    (spherical averages).
    """
    mu, w = roots_legendre(n_quad)
    phi = 2.0 * math.pi * (np.arange(n_quad) + 0.5) / n_quad
    st = np.sqrt(1.0 - mu * mu)
    gam = np.empty((n_quad, n_quad, 3))
    gam[:, :, 0] = st[:, None] * np.cos(phi)[None, :]
    gam[:, :, 1] = st[:, None] * np.sin(phi)[None, :]
    gam[:, :, 2] = mu[:, None]
    wt = np.repeat(w / (2.0 * n_quad), n_quad)
    return gam.reshape(-1, 3), wt


def kirchhoff_oracle(z, zp, k_init: Callable, c: float, n_quad: int = 64) -> float:
    """Double-sphere tensor quadrature for (F_t (x) F_t') * k_init at (z, z').

    k_init(XA, XB) must map point arrays (n,3), (m,3) to an (n, m) matrix.
    Cost is O(n_quad^4) kernel values; test use only.
    """
    if n_quad < 8:
        raise ValueError("n_quad must be at least 8")
    x, t = _prep_point(z)
    xp, tp = _prep_point(zp)
    if t == 0.0 or tp == 0.0:
        return 0.0
    gam, wt = _sphere_rule(n_quad)
    A = x[None, :] - c * abs(t) * gam
    B = xp[None, :] - c * abs(tp) * gam
    total = 0.0
    step = max(1, 2 ** 22 // len(B))
    for i0 in range(0, len(A), step):
        K = np.asarray(k_init(A[i0 : i0 + step], B))
        total += wt[i0 : i0 + step] @ K @ wt
    return float(t * tp * total)


def _panel_nodes(lo: float, hi: float, cuts, n_quad: int):
    """Composite GL nodes/weights on [lo, hi] split at interior cut points."""
    mu, w = roots_legendre(n_quad)
    edges = [lo] + sorted(cs for cs in cuts if lo < cs < hi) + [hi]
    nodes, wts = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        half = 0.5 * (b - a)
        nodes.append(0.5 * (a + b) + half * mu)
        wts.append(half * w)
    return np.concatenate(nodes), np.concatenate(wts)


def _radial_side_rule(x, t, center, c: float, n_quad: int, breaks):
    """Quadrature in s = |x - c|t| gamma - center|^2, parameterized by radius.

    With the polar axis along (x - center) the phi-average is exact and s is
    uniform on [(r-c|t|)^2, (r+c|t|)^2]; substituting s = b^2 turns this into
    a composite GL rule in the radius b, which stays accurate when the
    integrand carries 1/sqrt(s) factors. Returns nodes s_q and sphere-average
    weights summing to 1.
    """
    r = float(np.linalg.norm(np.asarray(x, dtype=float) - center))
    ct = c * abs(t)
    if r * ct == 0.0:
        # degenerate sphere collapse: s is constant on the sphere
        return np.array([(r + ct) ** 2]), np.array([1.0])
    blo, bhi = abs(r - ct), r + ct
    b, w = _panel_nodes(blo, bhi, list(breaks), n_quad)
    return b * b, 2.0 * b * w / (bhi * bhi - blo * blo)


def radial_kirchhoff_oracle(
    z, zp, k0: Callable, center, c: float, n_quad: int = 64, breaks=()
) -> float:
    """Kirchhoff double-sphere quadrature, reduced exactly for radial kernels.

    k0(s, sp) is the initial covariance as a function of squared radii about
    `center` (broadcastable). `breaks` lists radii where the integrand is
    non-smooth (truncation radii); quadrature panels are split there so the
    composite GL rule keeps spectral accuracy. Same integral as
    kirchhoff_oracle, exploiting the rotational symmetry of k0.
    """
    x, t = _prep_point(z)
    xp, tp = _prep_point(zp)
    if t == 0.0 or tp == 0.0:
        return 0.0
    center = np.asarray(center, dtype=float)
    sA, wA = _radial_side_rule(x, t, center, c, n_quad, breaks)
    sB, wB = _radial_side_rule(xp, tp, center, c, n_quad, breaks)
    K = np.asarray(k0(sA[:, None], sB[None, :]))
    return float(t * tp * (wA @ K @ wB))


def radial_single_convolution(x, t: float, F_anti: Callable, c: float, f: Callable = None) -> float:
    """(F_t * g)(x) for radial g with antiderivative F_anti in squared radius.

    g(y) = f(|y|^2) and F_anti' = f. Value: sgn(t)/(4 c |x|)
    [F((|x| + c|t|)^2) - F((|x| - c|t|)^2)]; at |x| -> 0 the limit branch
    t f((c t)^2) is used (f approximated from F_anti when not supplied).
    """
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x)) if x.ndim else abs(float(x))
    if t == 0.0:
        return 0.0
    ct = c * abs(t)
    if r < _RTOL * max(1.0, ct):
        s = ct * ct
        if f is None:
            d = 1e-6 * max(1.0, s)
            fs = (F_anti(s + d) - F_anti(max(s - d, 0.0))) / (d + min(d, s))
        else:
            fs = f(s)
        return float(t * fs)
    return float(
        np.sign(t) / (4.0 * c * r) * (F_anti((r + ct) ** 2) - F_anti((r - ct) ** 2))
    )


def radial_single_convolution_dt(
    x, t: float, f: Callable, c: float, f_deriv: Callable = None
) -> float:
    """(dF_t/dt * g)(x) for radial g, g(y) = f(|y|^2).

    Value: (1/(2|x|)) sum_eps (|x| + eps c|t|) f((|x| + eps c|t|)^2); even in t.
    Limit branch at |x| -> 0: f((ct)^2) + 2 c^2 t^2 f'((ct)^2).
    """
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x)) if x.ndim else abs(float(x))
    ct = c * abs(t)
    if r < _RTOL * max(1.0, ct):
        s = ct * ct
        if f_deriv is None:
            d = 1e-6 * max(1.0, s)
            fp = (f(s + d) - f(max(s - d, 0.0))) / (d + min(d, s))
        else:
            fp = f_deriv(s)
        return float(f(s) + 2.0 * s * fp)
    return float(
        ((r + ct) * f((r + ct) ** 2) + (r - ct) * f((r - ct) ** 2)) / (2.0 * r)
    )
