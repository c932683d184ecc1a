"""Action functionals over simplices and lattice complexes.

Three layers: the length-only totals (deficit times area, and its exact
per-simplex decomposition), the chiral connection actions whose rotor
arguments enter through branch-resolved Arcsin terms, and the sector
bookkeeping that picks those branches for configurations near the flat
lattice background.
"""

from dataclasses import dataclass

import numpy as np

from .algebra import ChiralRotor, circ, compose, inverse, rotor_distance, star, to_adjoint
from .branchcut import arccosh_pp, arcsin_i0, area_sqrt, sqrt_pp
from .errors import (
    BranchAmbiguityError,
    SectorViolationError,
    ValidationError,
    ZeroAreaError,
)
from .geometry import FACE_PAIRS, face_area, face_chiral, hyperdihedral_angle

_PAIRS_0A = tuple((0, a) for a in range(1, 5))
_PAIRS_AB = tuple(p for p in FACE_PAIRS if p[0] != 0)


def regge_total(complex_):
    """Sum of deficit times area over all triangles of a complex."""
    return complex(sum(f.deficit * f.area for f in complex_.fans().values()))


def decompose_total(complex_):
    """Per-simplex reassembly: half the bisimplex action plus (2pi/N - pi)A."""
    acc = 0.0 + 0.0j
    for fan in complex_.fans().values():
        n = len(fan.angles)
        for a in fan.angles:
            acc += (0.5 * (2.0 * np.pi - 2.0 * a) + (2.0 * np.pi / n - np.pi)) * fan.area
    return complex(acc)


class BisimplexComplex:
    """Two copies of one simplex glued along every cell (N = 2 everywhere)."""

    def __init__(self, s):
        self.simplex = s
        self._cache = None

    def fans(self):
        if self._cache is None:
            from .lattice import TriangleFan

            self._cache = {}
            for pair in FACE_PAIRS:
                a = hyperdihedral_angle(self.simplex, pair)
                self._cache[pair] = TriangleFan(
                    pair, [(0, pair), (1, pair)], [a, a], face_area(self.simplex, pair)
                )
        return self._cache


@dataclass(frozen=True)
class BisimplexConnections:
    """One chiral rotor pair per 3-face; curvatures are their quotients."""

    plus: tuple
    minus: tuple

    def __post_init__(self):
        if len(self.plus) != 5 or len(self.minus) != 5:
            raise ValidationError("need five rotor pairs")

    def rotors(self, chirality):
        if chirality not in (+1, -1):
            raise ValidationError("chirality must be +1 or -1")
        return self.plus if chirality == +1 else self.minus

    def curvature(self, i, k, chirality):
        om = self.rotors(chirality)
        return compose(inverse(om[i]), om[k])


def identity_connections():
    ident = ChiralRotor(1.0, (0.0, 0.0, 0.0))
    return BisimplexConnections((ident,) * 5, (ident,) * 5)


def bianchi_check(conn_or_curv):
    """Max deviation of curvature transitivity over all index triples."""
    if isinstance(conn_or_curv, BisimplexConnections):
        curv = {
            (i, k, ch): conn_or_curv.curvature(i, k, ch)
            for ch in (+1, -1)
            for i in range(5)
            for k in range(5)
            if i != k
        }
    else:
        curv = dict(conn_or_curv)
    worst = 0.0
    idx = {(i, k) for (i, k, _) in curv}
    chis = {ch for (_, _, ch) in curv}
    for ch in chis:
        for i, k in idx:
            for l in range(5):
                if l in (i, k) or (k, l) not in idx or (i, l) not in idx:
                    continue
                lhs = compose(curv[(i, k, ch)], curv[(k, l, ch)])
                worst = max(worst, rotor_distance(lhs, curv[(i, l, ch)]))
    return worst


def combine_gamma(plus, minus, gamma):
    if gamma == 0:
        raise ValidationError("gamma must be nonzero")
    return (1.0 + 1j / gamma) * plus + (1.0 - 1j / gamma) * minus


@dataclass(frozen=True)
class ActionValue:
    plus: complex
    minus: complex
    gamma: float

    @property
    def total(self):
        return combine_gamma(self.plus, self.minus, self.gamma)


# ---------------------------------------------------------------------------
# branch sectors

_TOL_KIND = 1e-9


@dataclass(frozen=True)
class FaceSector:
    kind: str
    s: int
    eta_sign: int
    su2: tuple
    so3: tuple


@dataclass(frozen=True)
class BranchSector:
    faces: dict

    def __getitem__(self, pair):
        return self.faces[pair]


def _classify(pair, angle, strict):
    re, im = angle.real, angle.imag
    if abs(im) <= _TOL_KIND:
        s = 1 if re >= np.pi / 2.0 else -1
        offset = 0.0 if s == 1 else np.pi
        if np.pi / 4.0 - _TOL_KIND <= re <= 3.0 * np.pi / 4.0 + _TOL_KIND:
            so3 = (np.pi, -1)
        elif strict:
            raise SectorViolationError(
                f"face {pair}: real angle {re:.6f} outside [pi/4, 3pi/4]"
            )
        else:
            # doubled-angle branch continues past the window boundaries
            so3 = (2.0 * np.pi, 1) if re < np.pi / 4.0 else (0.0, 1)
        return FaceSector("real", s, 0, (offset, s), so3)
    if abs(re - np.pi / 2.0) <= _TOL_KIND:
        eta = 1 if im > 0.0 else -1
        return FaceSector("right", -eta, eta, None, (np.pi, -1))
    if abs(re) <= _TOL_KIND:
        eta = 1 if im > 0.0 else -1
        return FaceSector("imag", -1, eta, (np.pi, -1), (2.0 * np.pi, 1))
    raise SectorViolationError(f"face {pair}: angle {angle} fits no sector family")


def resolve_branch(s, strict=True):
    """Per-face branch data for a simplex near the flat lattice background.

    With strict=False, real angles outside the window get the continued
    doubled-angle branch instead of a sector violation; callers needing
    configurations past the boundary supply that sector explicitly.
    """
    faces = {}
    for pair in FACE_PAIRS:
        faces[pair] = _classify(pair, hyperdihedral_angle(s, pair), strict)
    return BranchSector(faces)


def _arcsin_su2(face, y, i0):
    if i0 is None:
        if abs(np.imag(y)) <= 1e-12 and abs(np.real(y)) > 1.0:
            raise BranchAmbiguityError(f"arcsin argument {y} on the cut")
        i0 = 1.0
    if face.kind == "right":
        return np.pi / 2.0 - 1j * face.eta_sign * arccosh_pp(y)
    offset, sign = face.su2
    return offset + sign * arcsin_i0(y, i0)


def _arcsin_so3(face, z, i0):
    if i0 is None:
        if abs(np.imag(z)) <= 1e-12 and abs(np.real(z)) > 1.0:
            raise BranchAmbiguityError(f"arcsin argument {z} on the cut")
        i0 = 1.0
    offset, sign = face.so3
    return offset + sign * arcsin_i0(z, i0)


def reconstruct_angles(s, rep="su2"):
    """Recover every face angle from the sine data through the sector branch."""
    sector = resolve_branch(s)
    out = {}
    for pair in FACE_PAIRS:
        alpha = hyperdihedral_angle(s, pair)
        face = sector[pair]
        if rep == "su2":
            out[pair] = np.pi - _arcsin_su2(face, np.sin(np.pi - alpha), 1.0)
        elif rep == "so3":
            out[pair] = np.pi - 0.5 * _arcsin_so3(face, np.sin(2.0 * np.pi - 2.0 * alpha), 1.0)
        else:
            raise ValidationError(f"unknown representation {rep!r}")
    return out


def branch_constant(kind, n):
    """Constant per-face coefficient in the per-simplex lattice assembly."""
    if kind in ("real", "right"):
        return np.pi / n - np.pi / 4.0
    if kind == "imag":
        return np.pi / n
    raise ValidationError(f"unknown sector kind {kind!r}")


# ---------------------------------------------------------------------------
# connection actions

def chiral_root(v2):
    """Square root of a chiral face square, same branch as the face area."""
    return area_sqrt(v2)


def _face_vectors(s, chirality, face_signs=None):
    side = 0 if chirality == +1 else 1
    table = {pair: vs[side] for pair, vs in face_chiral(s).items()}
    if face_signs:
        table = {pair: face_signs.get(pair, 1) * v for pair, v in table.items()}
    return table


def connection_action_su2(s, conn, chirality, sector=None, face_signs=None, i0=1.0):
    """Sum of sqrt(v^2) Arcsin(v o R / sqrt(v^2)) over all ten faces."""
    if sector is None:
        sector = resolve_branch(s)
    vecs = _face_vectors(s, chirality, face_signs)
    total = 0.0 + 0.0j
    for pair in FACE_PAIRS:
        v = vecs[pair]
        v2 = v @ v
        if abs(v2) < 1e-14:
            raise ZeroAreaError(f"face {pair} has zero chiral norm")
        root = chiral_root(v2)
        r = conn.curvature(pair[0], pair[1], chirality)
        y = circ(v, r) / root
        total += root * _arcsin_su2(sector[pair], y, i0)
    return complex(total)


def connection_action_so3(s, conn, chirality, sector=None, face_signs=None, i0=1.0):
    """Adjoint form: half-weight faces with doubled-angle star arguments."""
    if sector is None:
        sector = resolve_branch(s)
    vecs = _face_vectors(s, chirality, face_signs)
    total = 0.0 + 0.0j
    for pair in FACE_PAIRS:
        v = vecs[pair]
        v2 = v @ v
        if abs(v2) < 1e-14:
            raise ZeroAreaError(f"face {pair} has zero chiral norm")
        root = chiral_root(v2)
        r = conn.curvature(pair[0], pair[1], chirality)
        z = star(v, to_adjoint(r)) / root
        total += 0.5 * root * _arcsin_so3(sector[pair], z, i0)
    return complex(total)


def action_record(simplex_id, plus, minus, gamma, sector=None):
    """JSON-ready record of one evaluated simplex action."""
    total = combine_gamma(plus, minus, gamma)
    rec = {
        "simplex_id": simplex_id,
        "plus": [plus.real, plus.imag],
        "minus": [minus.real, minus.imag],
        "total": [total.real, total.imag],
    }
    if sector is not None:
        rec["sector"] = {
            "-".join(map(str, pair)): [face.kind, face.s] for pair, face in sector.faces.items()
        }
    return rec
