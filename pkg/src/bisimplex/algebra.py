"""Complexified chiral rotation algebra.

A Lorentz rotation factors into two commuting chiral halves.  Each half is
carried by a rotor (w, u), w a complex scalar and u a complex 3-vector with
w**2 + u.u = 1, representing cos(phi/2) + Sigma.n sin(phi/2) for a complex
angle phi.  Real phi gives spatial rotations, imaginary phi gives boosts.
All dot products in this module are complex bilinear; nothing conjugates.
"""

from dataclasses import dataclass, field
from itertools import permutations

import numpy as np
from scipy.optimize import brentq

from .branchcut import sqrt_pp
from .errors import InvalidAxisError, LorentzValidationError, ValidationError

METRIC = np.diag([-1.0, 1.0, 1.0, 1.0])

EPS3 = np.zeros((3, 3, 3))
for _p in permutations(range(3)):
    _sign = 1.0
    _lst = list(_p)
    for _i in range(3):
        for _j in range(_i + 1, 3):
            if _lst[_i] > _lst[_j]:
                _sign = -_sign
    EPS3[_p] = _sign

# Contravariant Levi-Civita with eps^{0123} = +1; the covariant one picks up
# det(g) = -1.
EPS4_UPPER = np.zeros((4, 4, 4, 4))
for _p in permutations(range(4)):
    _sign = 1.0
    _lst = list(_p)
    for _i in range(4):
        for _j in range(_i + 1, 4):
            if _lst[_i] > _lst[_j]:
                _sign = -_sign
    EPS4_UPPER[_p] = _sign
EPS4_LOWER = -EPS4_UPPER


def _generators():
    ek = np.zeros((3, 4, 4), dtype=complex)
    lk = np.zeros((3, 4, 4), dtype=complex)
    for k in range(3):
        for i in range(3):
            for j in range(3):
                ek[k, 1 + i, 1 + j] = -EPS3[k, i, j]
        lk[k, 0, 1 + k] = -1.0
        lk[k, 1 + k, 0] = -1.0
    return ek, lk


_E, _L = _generators()
# Mixed-index (one up, one down) chiral generators, so matrix products act
# directly on 4-vector components.
SIGMA_PLUS = _E + 1j * _L
SIGMA_MINUS = _E - 1j * _L


@dataclass(frozen=True)
class ChiralRotor:
    """One chiral half of a rotation: w**2 + u.u = 1, complex bilinear."""

    w: complex
    u: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=complex).reshape(3)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "w", complex(self.w))
        if abs(self.unit_defect) > 1e-9:
            raise ValidationError(
                f"rotor is not unit: w^2 + u.u deviates by {self.unit_defect:.3e}"
            )

    @property
    def unit_defect(self):
        return abs(self.w ** 2 + np.dot(self.u, self.u) - 1.0)


def identity_rotor():
    return ChiralRotor(1.0, np.zeros(3))


def rotor_from_axis_angle(phi, axis):
    """Rotor for complex angle phi about a complex unit axis (axis.axis = 1)."""
    axis = np.asarray(axis, dtype=complex).reshape(3)
    norm2 = np.dot(axis, axis)
    if abs(norm2 - 1.0) > 1e-10:
        raise InvalidAxisError(f"axis.axis = {norm2} is not 1")
    phi = complex(phi)
    return ChiralRotor(np.cos(phi / 2.0), axis * np.sin(phi / 2.0))


def rotor_from_phivec(phivec):
    """Rotor from an angle 3-vector: angle |phi|, axis phi/|phi|."""
    phivec = np.asarray(phivec, dtype=complex).reshape(3)
    norm2 = np.dot(phivec, phivec)
    if abs(norm2) < 1e-30:
        return identity_rotor()
    phi = sqrt_pp(norm2)
    return rotor_from_axis_angle(phi, phivec / phi)


def compose(a, b):
    """Group product matching to_adjoint: adjoint(compose(a, b)) = A @ B."""
    w = a.w * b.w - np.dot(a.u, b.u)
    u = a.w * b.u + b.w * a.u + np.cross(b.u, a.u)
    return ChiralRotor(w, u)


def inverse(r):
    return ChiralRotor(r.w, -r.u)


def rotor_distance(a, b):
    return max(abs(a.w - b.w), float(np.max(np.abs(a.u - b.u))))


def to_adjoint(r):
    """3x3 complex-orthogonal matrix n n + (1 - n n) cos phi + eps n sin phi.

    Double-angle relations express everything in (w, u), so phi = 0 is exact.
    """
    w, u = r.w, r.u
    cos_phi = 2.0 * w ** 2 - 1.0
    m = cos_phi * np.eye(3) + 2.0 * np.outer(u, u)
    m += 2.0 * w * np.einsum("abc,c->ab", EPS3, u)
    return m


def adjoint_defect(m):
    """Max deviation of m from complex-orthogonal with unit determinant."""
    ortho = np.max(np.abs(m.T @ m - np.eye(3)))
    return max(float(ortho), abs(np.linalg.det(m) - 1.0))


def gauge_transform(omega, g):
    """Common frame rotation Omega -> Omega.G; leaves all relative rotors
    compose(inverse(Omega_i), Omega_k) exactly invariant."""
    return compose(g, omega)


def circ(v, r):
    """Scalar pairing of a chiral 3-vector with a rotor: equals v.u."""
    return complex(np.dot(np.asarray(v, dtype=complex), r.u))


def star(v, m):
    """Dual pairing of a chiral 3-vector with an adjoint matrix.

    star(v, to_adjoint(rotor(phi, n))) = (v.n) sin phi.
    """
    v = np.asarray(v, dtype=complex)
    return complex(0.5 * np.einsum("a,abc,bc->", v, EPS3, m))


def chiral_matrix(r, chirality):
    """4x4 mixed-index matrix w + u.Sigma for one chirality (+1 or -1)."""
    sigma = SIGMA_PLUS if chirality > 0 else SIGMA_MINUS
    return r.w * np.eye(4, dtype=complex) + np.einsum("k,kab->ab", r.u, sigma)


def assemble(p, m):
    """Full rotation from its chiral halves: chiral_matrix(p,+1) @ chiral_matrix(m,-1)."""
    return chiral_matrix(p, +1) @ chiral_matrix(m, -1)


def validate_lorentz(lam, tol=1e-10):
    lam = np.asarray(lam)
    if lam.shape != (4, 4):
        raise LorentzValidationError(f"expected 4x4 matrix, got {lam.shape}")
    if np.iscomplexobj(lam):
        if np.max(np.abs(lam.imag)) > tol:
            raise LorentzValidationError("matrix has a non-real part")
        lam = lam.real
    defect = np.max(np.abs(lam.T @ METRIC @ lam - METRIC))
    if defect > tol:
        raise LorentzValidationError(f"metric not preserved, defect {defect:.3e}")
    if np.linalg.det(lam) < 0.0:
        raise LorentzValidationError("improper rotation (det < 0)")
    if lam[0, 0] <= 0.0:
        raise LorentzValidationError("not orthochronous")
    return lam


def split_lorentz(lam, tol=1e-10):
    """Chiral halves (p, m) of a proper orthochronous Lorentz matrix.

    Uses the trace projections tr(L)/4 = w_p w_m, -tr(L Sigma+_j)/4 = w_m p_j,
    -tr(L Sigma-_j)/4 = w_p m_j, tr(L Sigma+_j Sigma-_l)/4 = p_j m_l, which
    assemble into the rank-1 outer product P_mu M_nu of the two rotor
    4-component vectors.  The factorization stays well conditioned because
    max |M_nu| >= 1/2 for any unit rotor.  Overall sign fixed by Re w_p > 0
    (first significant entry of (w_p, p) when w_p is a half turn).
    """
    lam = validate_lorentz(lam, tol=tol).astype(complex)
    x = np.empty((4, 4), dtype=complex)
    x[0, 0] = np.trace(lam) / 4.0
    for j in range(3):
        x[1 + j, 0] = -np.trace(lam @ SIGMA_PLUS[j]) / 4.0
        x[0, 1 + j] = -np.trace(lam @ SIGMA_MINUS[j]) / 4.0
        for l in range(3):
            x[1 + j, 1 + l] = np.trace(lam @ SIGMA_PLUS[j] @ SIGMA_MINUS[l]) / 4.0
    col = int(np.argmax(np.sum(np.abs(x) ** 2, axis=0)))
    q = x[:, col]
    m_col = sqrt_pp(np.dot(q, q))
    pvec = q / m_col
    row = int(np.argmax(np.abs(pvec)))
    mvec = x[row, :] / pvec[row]
    for cand in pvec:
        if abs(cand) > 0.25:
            if cand.real < 0.0 or (cand.real == 0.0 and cand.imag < 0.0):
                pvec = -pvec
                mvec = -mvec
            break
    p = ChiralRotor(pvec[0], pvec[1:])
    m = ChiralRotor(mvec[0], mvec[1:])
    return p, m


def chiral_split_tensor(v):
    """Chiral 3-vectors of an antisymmetric rank-2 tensor v^{ab}.

    2 (+/-)v_k = -eps_{klm} v^{lm} -/+ 2i v^{k0}.
    """
    v = np.asarray(v, dtype=complex)
    spatial = np.einsum("klm,lm->k", EPS3, v[1:, 1:])
    timelike = v[1:, 0]
    vp = 0.5 * (-spatial - 2j * timelike)
    vm = 0.5 * (-spatial + 2j * timelike)
    return vp, vm


def circ_tensor(a, b):
    """Scalar product (1/2) a_{ab} b^{ab} of upper-index antisymmetric tensors."""
    return complex(0.5 * np.einsum("ab,cd,ac,bd->", a, b, METRIC, METRIC))


def star_tensor(a, b):
    """Dual product (1/4) eps_{abcd} a^{ab} b^{cd}."""
    return complex(0.25 * np.einsum("abcd,ab,cd->", EPS4_LOWER, a, b))


def haar_density(phivec):
    """Invariant measure density sin^2(phi/2) / (4 pi^2 phi^2) at angle vector phi."""
    phivec = np.asarray(phivec, dtype=float).reshape(3)
    phi = float(np.linalg.norm(phivec))
    if phi < 1e-8:
        return 1.0 / (16.0 * np.pi ** 2)
    return float(np.sin(phi / 2.0) ** 2 / (4.0 * np.pi ** 2 * phi ** 2))


def haar_radial_cdf(phi):
    """CDF of the radial angle on [0, 2 pi]: (phi - sin phi) / (2 pi)."""
    return (phi - np.sin(phi)) / (2.0 * np.pi)


def haar_radial_ppf(q):
    if not 0.0 <= q <= 1.0:
        raise ValidationError(f"quantile {q} outside [0, 1]")
    if q == 0.0:
        return 0.0
    if q == 1.0:
        return 2.0 * np.pi
    return brentq(lambda t: haar_radial_cdf(t) - q, 0.0, 2.0 * np.pi, xtol=1e-14)


def sample_haar(rng, n=None):
    """Haar-random compact rotors (real angle in [0, 2 pi], real axis)."""
    scalar = n is None
    count = 1 if scalar else n
    out = []
    for _ in range(count):
        phi = haar_radial_ppf(rng.random())
        z = rng.normal(size=3)
        nrm = np.linalg.norm(z)
        while nrm < 1e-12:
            z = rng.normal(size=3)
            nrm = np.linalg.norm(z)
        out.append(rotor_from_axis_angle(phi, z / nrm))
    return out[0] if scalar else out


def sigma_identities_check():
    """Max deviations of the generator identities; all entries ~ 1e-15.

    Checked: self-duality (1/2) eps^{ab}_{cd} Sigma^{cd} = -/+ i Sigma^{ab},
    the product rule Sigma_k Sigma_l = -delta_kl + eps_klm Sigma_m per
    chirality, commutation across chiralities, and the trace table
    tr(Sigma+_k Sigma-_l) = 0, tr(Sigma_k Sigma_l) = -4 delta_kl.
    """
    report = {}
    g = METRIC
    for name, sigma, expect in (("plus", SIGMA_PLUS, -1j), ("minus", SIGMA_MINUS, 1j)):
        dual_dev = 0.0
        prod_dev = 0.0
        for k in range(3):
            lower = g @ sigma[k]  # both indices down
            upper = sigma[k] @ g  # both indices up
            dual = 0.5 * np.einsum("abcd,cd->ab", EPS4_LOWER, upper)
            dual_dev = max(dual_dev, float(np.max(np.abs(dual - expect * lower))))
            for l in range(3):
                prod = sigma[k] @ sigma[l]
                ref = -(k == l) * np.eye(4) + np.einsum(
                    "m,mab->ab", EPS3[k, l], sigma
                )
                prod_dev = max(prod_dev, float(np.max(np.abs(prod - ref))))
        report[f"duality_{name}"] = dual_dev
        report[f"product_{name}"] = prod_dev
    comm = 0.0
    trace = 0.0
    for k in range(3):
        for l in range(3):
            comm = max(
                comm,
                float(
                    np.max(
                        np.abs(
                            SIGMA_PLUS[k] @ SIGMA_MINUS[l]
                            - SIGMA_MINUS[l] @ SIGMA_PLUS[k]
                        )
                    )
                ),
            )
            trace = max(trace, abs(np.trace(SIGMA_PLUS[k] @ SIGMA_MINUS[l])))
            trace = max(
                trace,
                abs(np.trace(SIGMA_PLUS[k] @ SIGMA_PLUS[l]) + 4.0 * (k == l)),
                abs(np.trace(SIGMA_MINUS[k] @ SIGMA_MINUS[l]) + 4.0 * (k == l)),
            )
    report["cross_commutation"] = comm
    report["trace_table"] = trace
    return report
