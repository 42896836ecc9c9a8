"""Coherency-matrix scattering model.

Forward model for a three-mechanism scene: a randomly-oriented-dipole volume plus an
oriented double-bounce (dihedral) and an oriented surface (Bragg) contribution,

    T = T_v + R(psi_d) T_d R(psi_d)^H + R(psi_s) T_s R(psi_s)^H

with the standard Freeman-Durden mechanism forms (beta real, alpha complex, both
inside the unit disk) and the line-of-sight rotation acting on the lower 2x2 block.
Also provides the Bragg beta(epsilon, theta) map and its inverse, the Fresnel
dihedral alpha, Cloude-Pottier entropy, and power bookkeeping.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

PSI_CELL = math.pi / 4
"""Half-width of the canonical orientation cell (-pi/4, pi/4]."""

_EPS_BRACKET = (1.1, 80.0)  # dielectric-constant search bracket for epsilon_from_beta


@dataclass(frozen=True)
class CoherencyMatrix:
    """3x3 Hermitian coherency matrix; only the upper triangle is stored.

    Diagonal entries are linear power, off-diagonals complex. The conjugate lower
    triangle is implied, so the value is Hermitian by construction.
    """

    t11: float
    t22: float
    t33: float
    t12: complex
    t13: complex
    t23: complex

    @property
    def span(self) -> float:
        """Total power: trace of the matrix."""
        return self.t11 + self.t22 + self.t33

    def to_array(self) -> np.ndarray:
        return np.array(
            [
                [self.t11, self.t12, self.t13],
                [np.conj(self.t12), self.t22, self.t23],
                [np.conj(self.t13), np.conj(self.t23), self.t33],
            ],
            dtype=complex,
        )

    @classmethod
    def from_array(cls, a) -> "CoherencyMatrix":
        a = np.asarray(a, dtype=complex)
        if a.shape != (3, 3):
            raise ValueError(f"expected a 3x3 matrix, got shape {a.shape}")
        return cls(
            t11=a[0, 0].real,
            t22=a[1, 1].real,
            t33=a[2, 2].real,
            t12=complex(a[0, 1]),
            t13=complex(a[0, 2]),
            t23=complex(a[1, 2]),
        )

    def components(self) -> np.ndarray:
        """The nine independent real components.

        Order: [t11, t22, t33, Re t12, Im t12, Re t13, Im t13, Re t23, Im t23].
        The squared norm of this vector counts each off-diagonal once.
        """
        return np.array(
            [
                self.t11,
                self.t22,
                self.t33,
                self.t12.real,
                self.t12.imag,
                self.t13.real,
                self.t13.imag,
                self.t23.real,
                self.t23.imag,
            ]
        )

    @classmethod
    def from_components(cls, c) -> "CoherencyMatrix":
        c = np.asarray(c, dtype=float)
        if c.shape != (9,):
            raise ValueError(f"expected 9 components, got shape {c.shape}")
        return cls(
            t11=c[0],
            t22=c[1],
            t33=c[2],
            t12=complex(c[3], c[4]),
            t13=complex(c[5], c[6]),
            t23=complex(c[7], c[8]),
        )

    def __add__(self, other: "CoherencyMatrix") -> "CoherencyMatrix":
        return CoherencyMatrix(
            self.t11 + other.t11,
            self.t22 + other.t22,
            self.t33 + other.t33,
            self.t12 + other.t12,
            self.t13 + other.t13,
            self.t23 + other.t23,
        )


@dataclass(frozen=True)
class ModelParams:
    """The eight real degrees of freedom of the forward model.

    Power coefficients f_v, f_d, f_s are nonnegative; alpha (complex) and beta
    (real) live in the unit disk/interval; orientation angles are radians, with
    (-pi/4, pi/4] as the canonical cell (see canonicalize in the inversion module
    for how out-of-cell angles fold back).
    """

    f_v: float
    f_d: float
    f_s: float
    alpha: complex
    beta: float
    psi_d: float
    psi_s: float

    def as_vector(self) -> np.ndarray:
        """[f_v, f_d, f_s, Re alpha, Im alpha, beta, psi_d, psi_s]."""
        return np.array(
            [
                self.f_v,
                self.f_d,
                self.f_s,
                self.alpha.real,
                self.alpha.imag,
                self.beta,
                self.psi_d,
                self.psi_s,
            ]
        )

    @classmethod
    def from_vector(cls, x) -> "ModelParams":
        x = np.asarray(x, dtype=float)
        return cls(
            f_v=x[0],
            f_d=x[1],
            f_s=x[2],
            alpha=complex(x[3], x[4]),
            beta=x[5],
            psi_d=x[6],
            psi_s=x[7],
        )


@dataclass(frozen=True)
class DihedralSpec:
    """Ground-trunk dihedral description of alpha: trunk dielectric and the
    relative phase (degrees) between the H and V double-bounce returns."""

    epsilon_trunk: float
    phase_deg: float = 180.0


@dataclass(frozen=True)
class Scenario:
    """Physical scene description from which ModelParams are derived.

    alpha_spec may be an explicit complex alpha, a DihedralSpec, or None (None
    means a dihedral with epsilon_trunk = epsilon_soil and a 180-degree phase).
    power_fractions are (volume, surface, double) shares of the span and must
    sum to 1.
    """

    epsilon_soil: float
    theta0_deg: float
    psi_d_deg: float
    psi_s_deg: float
    power_fractions: tuple[float, float, float]
    alpha_spec: complex | DihedralSpec | None = None
    span: float = 1.0


@dataclass(frozen=True)
class MechanismPowers:
    """Per-mechanism backscattered power and the resulting span."""

    p_v: float
    p_s: float
    p_d: float

    @property
    def span(self) -> float:
        return self.p_v + self.p_s + self.p_d

    @property
    def fractions(self) -> tuple[float, float, float]:
        """(P_v/SPAN, P_s/SPAN, P_d/SPAN)."""
        s = self.span
        return (self.p_v / s, self.p_s / s, self.p_d / s)


def surface_coherency(f_s: float, beta: float) -> CoherencyMatrix:
    """Bragg surface mechanism: f_s * [[1, beta, 0], [beta, beta^2, 0], [0, 0, 0]].

    Rank <= 1, real-symmetric, trace f_s*(1+beta^2).
    """
    if f_s < 0:
        raise ValueError(f"surface coefficient must be nonnegative, got {f_s}")
    if abs(beta) > 1:
        raise ValueError(f"|beta| must not exceed 1, got {beta}")
    return CoherencyMatrix(
        t11=f_s,
        t22=f_s * beta * beta,
        t33=0.0,
        t12=complex(f_s * beta, 0.0),
        t13=0j,
        t23=0j,
    )


def double_bounce_coherency(f_d: float, alpha: complex) -> CoherencyMatrix:
    """Dihedral mechanism: f_d * [[|alpha|^2, alpha, 0], [alpha*, 1, 0], [0, 0, 0]].

    Rank <= 1 with t22 >= t11 under the canonical |alpha| <= 1 convention.
    """
    if f_d < 0:
        raise ValueError(f"double-bounce coefficient must be nonnegative, got {f_d}")
    alpha = complex(alpha)
    if abs(alpha) > 1:
        raise ValueError(f"|alpha| must not exceed 1, got {abs(alpha)}")
    return CoherencyMatrix(
        t11=f_d * (alpha.real**2 + alpha.imag**2),
        t22=f_d,
        t33=0.0,
        t12=f_d * alpha,
        t13=0j,
        t23=0j,
    )


def volume_coherency(f_v: float) -> CoherencyMatrix:
    """Randomly oriented dipole cloud: (f_v/4) * diag(2, 1, 1), trace f_v.

    Rotation-invariant (the lower 2x2 block is a multiple of the identity).
    """
    if f_v < 0:
        raise ValueError(f"volume coefficient must be nonnegative, got {f_v}")
    return CoherencyMatrix(
        t11=f_v / 2.0, t22=f_v / 4.0, t33=f_v / 4.0, t12=0j, t13=0j, t23=0j
    )


def rotate(t: CoherencyMatrix, psi: float) -> CoherencyMatrix:
    """Rotate about the line of sight: R(psi) T R(psi)^H.

    R(psi) = [[1, 0, 0], [0, cos 2psi, sin 2psi], [0, -sin 2psi, cos 2psi]];
    trace, eigenvalues and t11 are preserved.
    """
    if not math.isfinite(psi):
        raise ValueError(f"rotation angle must be finite, got {psi}")
    c = math.cos(2.0 * psi)
    s = math.sin(2.0 * psi)
    r = np.array([[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]])
    return CoherencyMatrix.from_array(r @ t.to_array() @ r.T)


def assemble(params: ModelParams) -> CoherencyMatrix:
    """Forward model: volume + rotated double-bounce + rotated surface."""
    return (
        volume_coherency(params.f_v)
        + rotate(double_bounce_coherency(params.f_d, params.alpha), params.psi_d)
        + rotate(surface_coherency(params.f_s, params.beta), params.psi_s)
    )


def _check_bragg_domain(epsilon: float, theta: float) -> None:
    if epsilon <= 1:
        raise ValueError(f"dielectric constant must exceed 1, got {epsilon}")
    if not 0 < theta < math.pi / 2:
        raise ValueError(f"incidence angle must lie in (0, pi/2) rad, got {theta}")


def bragg_beta(epsilon: float, theta: float) -> float:
    """Bragg (small-perturbation) surface shape parameter.

    R_H = (cos t - sqrt(e - sin^2 t)) / (cos t + sqrt(e - sin^2 t))
    R_V = (e - 1)(sin^2 t - e(1 + sin^2 t)) / (e cos t + sqrt(e - sin^2 t))^2
    beta = (R_H - R_V) / (R_H + R_V)

    theta in radians. Strictly monotone in epsilon at fixed theta over the
    supported range, which is what makes epsilon_from_beta well-posed.
    """
    _check_bragg_domain(epsilon, theta)
    st2 = math.sin(theta) ** 2
    ct = math.cos(theta)
    root = math.sqrt(epsilon - st2)
    r_h = (ct - root) / (ct + root)
    r_v = (epsilon - 1.0) * (st2 - epsilon * (1.0 + st2)) / (epsilon * ct + root) ** 2
    return (r_h - r_v) / (r_h + r_v)


def epsilon_from_beta(beta: float, theta: float, sign_agnostic: bool = False) -> float:
    """Invert bragg_beta in epsilon by bracketed root finding over [1.1, 80].

    With sign_agnostic=True only |beta| is matched (some literature defines beta
    with the opposite sign); beta is strictly negative here for all epsilon in
    the bracket, so the agnostic target is -|beta|.
    """
    if not 0 < theta < math.pi / 2:
        raise ValueError(f"incidence angle must lie in (0, pi/2) rad, got {theta}")
    target = -abs(beta) if sign_agnostic else beta
    lo, hi = _EPS_BRACKET
    g_lo = bragg_beta(lo, theta) - target
    g_hi = bragg_beta(hi, theta) - target
    if g_lo * g_hi > 0:
        raise ValueError(
            f"beta={beta} not attainable for any dielectric constant in "
            f"[{lo}, {hi}] at theta={math.degrees(theta):.3g} deg"
        )
    return brentq(lambda e: bragg_beta(e, theta) - target, lo, hi, xtol=1e-12)


def _fresnel_h(epsilon: float, theta: float) -> float:
    ct = math.cos(theta)
    root = math.sqrt(epsilon - math.sin(theta) ** 2)
    return (ct - root) / (ct + root)


def _fresnel_v(epsilon: float, theta: float) -> float:
    ct = math.cos(theta)
    root = math.sqrt(epsilon - math.sin(theta) ** 2)
    return (epsilon * ct - root) / (epsilon * ct + root)


def dihedral_alpha(
    epsilon_ground: float, epsilon_trunk: float, theta: float, phase: float
) -> complex:
    """Double-bounce shape parameter from a ground-trunk Fresnel composition.

    alpha = (R_gh R_th + e^{j phase} R_gv R_tv) / (R_gh R_th - e^{j phase} R_gv R_tv)

    where the ground reflection is evaluated at incidence theta and the trunk
    reflection at (pi/2 - theta). If the composition lands outside the unit
    disk it is swapped to its reciprocal, the |alpha| <= 1 representative of
    the same mechanism.
    """
    _check_bragg_domain(epsilon_ground, theta)
    _check_bragg_domain(epsilon_trunk, theta)
    r_gh = _fresnel_h(epsilon_ground, theta)
    r_gv = _fresnel_v(epsilon_ground, theta)
    theta_t = math.pi / 2 - theta
    r_th = _fresnel_h(epsilon_trunk, theta_t)
    r_tv = _fresnel_v(epsilon_trunk, theta_t)
    rot = cmath.exp(1j * phase)
    num = r_gh * r_th + rot * r_gv * r_tv
    den = r_gh * r_th - rot * r_gv * r_tv
    if abs(den) < 1e-12:
        raise ValueError("degenerate dihedral: |denominator| < 1e-12")
    alpha = num / den
    if abs(alpha) > 1:
        if abs(num) < 1e-12:
            raise ValueError("degenerate dihedral: |numerator| < 1e-12")
        alpha = 1.0 / alpha
    return alpha


def entropy(t: CoherencyMatrix) -> float:
    """Cloude-Pottier eigenvalue entropy, base-3 normalized to [0, 1].

    H = -sum_i p_i log3 p_i with p_i = lambda_i / sum(lambda); negative
    eigenvalues within -1e-9*span are clamped to zero, 0*log(0) := 0.
    """
    span = t.span
    if span <= 0:
        raise ValueError(f"entropy requires positive total power, got span={span}")
    lam = np.linalg.eigvalsh(t.to_array())
    if lam.min() < -1e-9 * span:
        raise ValueError(
            f"matrix is not PSD within tolerance: min eigenvalue {lam.min():.3e}"
        )
    lam = np.clip(lam, 0.0, None)
    p = lam / lam.sum()
    nz = p[p > 0]
    h = float(-(nz * np.log(nz)).sum() / math.log(3.0))
    # guard against log rounding pushing an equal-eigenvalue case past 1
    return min(max(h, 0.0), 1.0)


def mechanism_powers(params: ModelParams) -> MechanismPowers:
    """Backscattered power per mechanism: P_v = f_v, P_s = f_s(1+beta^2),
    P_d = f_d(1+|alpha|^2); their sum equals trace(assemble(params))."""
    a2 = params.alpha.real**2 + params.alpha.imag**2
    return MechanismPowers(
        p_v=params.f_v,
        p_s=params.f_s * (1.0 + params.beta**2),
        p_d=params.f_d * (1.0 + a2),
    )


def fold_orientation(psi: float) -> tuple[float, bool]:
    """Fold an angle into the canonical cell (-pi/4, pi/4].

    Returns (folded angle, flip) where flip indicates an odd number of pi/2
    steps, i.e. the paired shape parameter (alpha or beta) changes sign.
    """
    n = math.ceil((psi - PSI_CELL) / (2.0 * PSI_CELL))
    return psi - n * 2.0 * PSI_CELL, (n % 2) != 0


def scenario_to_params(s: Scenario) -> ModelParams:
    """Derive model coefficients from a physical scenario.

    beta comes from the Bragg map, alpha from the explicit value or the dihedral
    composition, and each f coefficient is scaled so the mechanism's share of
    the span matches the requested power fraction.
    """
    fr_v, fr_s, fr_d = s.power_fractions
    for name, fr in (("volume", fr_v), ("surface", fr_s), ("double", fr_d)):
        if not 0.0 <= fr <= 1.0:
            raise ValueError(f"{name} power fraction must lie in [0, 1], got {fr}")
    if abs(fr_v + fr_s + fr_d - 1.0) > 1e-9:
        raise ValueError(
            f"power fractions must sum to 1, got {fr_v + fr_s + fr_d!r}"
        )
    if s.span <= 0:
        raise ValueError(f"span must be positive, got {s.span}")
    theta = math.radians(s.theta0_deg)
    beta = bragg_beta(s.epsilon_soil, theta)
    spec = s.alpha_spec
    if spec is None:
        spec = DihedralSpec(epsilon_trunk=s.epsilon_soil)
    if isinstance(spec, DihedralSpec):
        alpha = dihedral_alpha(
            s.epsilon_soil, spec.epsilon_trunk, theta, math.radians(spec.phase_deg)
        )
    else:
        alpha = complex(spec)
        if abs(alpha) > 1:
            raise ValueError(f"explicit alpha must satisfy |alpha| <= 1, got {alpha}")

    psi_d, flip_d = fold_orientation(math.radians(s.psi_d_deg))
    if flip_d:
        alpha = -alpha
    psi_s, flip_s = fold_orientation(math.radians(s.psi_s_deg))
    if flip_s:
        beta = -beta

    a2 = alpha.real**2 + alpha.imag**2
    return ModelParams(
        f_v=s.span * fr_v,
        f_d=s.span * fr_d / (1.0 + a2),
        f_s=s.span * fr_s / (1.0 + beta**2),
        alpha=alpha,
        beta=beta,
        psi_d=psi_d,
        psi_s=psi_s,
    )
