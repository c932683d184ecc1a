"""Flat 4-simplex geometry: edge vectors, face bivectors, dihedral angles.

A 4-simplex is stored through the four edge vectors from vertex 4 to
vertices 0..3.  Face bivectors are duals of edge wedges, so for every one
of the five tetrahedral boundary cells the four oriented face bivectors
sum to zero exactly.  Angles between the two cells meeting at a triangle
are computed as complex oriented wedges in the triangle's orthogonal
2-plane; spacelike wedges give real angles, mixed ones pi/2 + i eta,
timelike ones i eta.
"""

from dataclasses import dataclass

import numpy as np

from .algebra import EPS4_UPPER, METRIC, chiral_split_tensor, circ_tensor
from .branchcut import area_sqrt, sqrt_pp
from .errors import (
    DegenerateSimplexError,
    LightlikeFaceError,
    ZeroAreaError,
)

# eps^{ab}_{cd}: upper pair first, lower pair second
_EPS_UD = np.einsum("abef,ec,fd->abcd", EPS4_UPPER, METRIC, METRIC)

FACE_PAIRS = (
    (0, 1), (0, 2), (0, 3), (0, 4),
    (1, 2), (1, 3), (1, 4),
    (2, 3), (2, 4), (3, 4),
)

CROSS_PAIRS = FACE_PAIRS[4:]


def triangle_of(pair):
    return tuple(sorted(set(range(5)) - set(pair)))


def bivector_from_edges(l1, l2):
    """Dual bivector v^{ab} = (1/2) eps^{ab}_{cd} l1^c l2^d."""
    l1 = np.asarray(l1, dtype=complex)
    l2 = np.asarray(l2, dtype=complex)
    return 0.5 * np.einsum("abcd,c,d->ab", _EPS_UD, l1, l2)


@dataclass(frozen=True)
class Simplex4:
    """Edge vectors from vertex 4 to vertices 0..3, one per row."""

    edges: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=complex).reshape(4, 4)
        object.__setattr__(self, "edges", e)
        if abs(np.linalg.det(e)) < 1e-12:
            raise DegenerateSimplexError("edge vectors do not span 4 dimensions")

    @classmethod
    def from_vertices(cls, vertices):
        v = np.asarray(vertices, dtype=complex).reshape(5, 4)
        return cls(v[:4] - v[4])

    def vertex_positions(self):
        pos = np.zeros((5, 4), dtype=complex)
        pos[:4] = self.edges
        return pos


def face_bivectors(s):
    """All ten face bivectors keyed by the opposite vertex pair (i, k), i < k.

    Built from edges lying inside each triangle, which makes the closure
    sums over the five boundary tetrahedra vanish identically.
    """
    l0, l1, l2, l3 = s.edges
    table = {
        (0, 1): (l2, l3),
        (0, 2): (l3, l1),
        (0, 3): (l1, l2),
        (0, 4): (l2 - l3, l1 - l3),
        (1, 2): (l0, l3),
        (1, 3): (l2, l0),
        (1, 4): (l2 - l0, l3 - l0),
        (2, 3): (l0, l1),
        (2, 4): (l3 - l0, l1 - l0),
        (3, 4): (l1 - l0, l2 - l0),
    }
    return {pair: bivector_from_edges(a, b) for pair, (a, b) in table.items()}


def signed_bivector(bivs, i, k):
    """v_{ik} for an ordered pair, v_{ki} = -v_{ik}."""
    if i < k:
        return bivs[(i, k)]
    return -bivs[(k, i)]


def closure_defect(s):
    """Max |sum of the four face bivectors| over the five tetrahedra."""
    bivs = face_bivectors(s)
    worst = 0.0
    for a in range(5):
        total = np.zeros((4, 4), dtype=complex)
        for j in range(5):
            if j != a:
                total += signed_bivector(bivs, j, a)
        worst = max(worst, float(np.max(np.abs(total))))
    return worst


def face_area(s, pair):
    """sqrt of v.v: positive real for a spacelike triangle, -i|A| for a
    timelike one (see branchcut.area_sqrt for why the -i branch)."""
    v = face_bivectors(s)[pair]
    a = area_sqrt(circ_tensor(v, v))
    if abs(a) < 1e-12:
        raise ZeroAreaError(f"face {pair} has vanishing area")
    return a


def face_chiral(s):
    """Chiral 3-vector pair (plus, minus) for every face."""
    return {
        pair: chiral_split_tensor(v) for pair, v in face_bivectors(s).items()
    }


def _wedge_angle(x, y, gram):
    """Oriented complex angle from x to y in a 2d space with Gram matrix."""
    nx2 = np.einsum("a,ab,b->", x, gram, x)
    ny2 = np.einsum("a,ab,b->", y, gram, y)
    if min(abs(nx2), abs(ny2)) < 1e-14:
        raise LightlikeFaceError("wedge leg is lightlike")
    xh = x / sqrt_pp(nx2)
    yh = y / sqrt_pp(ny2)
    c = np.einsum("a,ab,b->", xh, gram, yh)
    s = (xh[0] * yh[1] - xh[1] * yh[0]) * sqrt_pp(np.linalg.det(gram))
    return complex(-1j * np.log(c + 1j * s))


def _perp_basis(t1, t2):
    """Two vectors spanning the metric-orthogonal complement of span(t1, t2)."""
    rows = np.stack([METRIC @ t1, METRIC @ t2])
    _, sv, vh = np.linalg.svd(rows)
    if sv[-1] < 1e-10 * sv[0]:
        raise ZeroAreaError("triangle is degenerate")
    return np.conj(vh[2]), np.conj(vh[3])


def _perp_coords(x, t1, t2, b1, b2):
    """Coordinates in (b1, b2) of the component of x orthogonal to (t1, t2)."""
    gram_t = np.array(
        [
            [t1 @ METRIC @ t1, t1 @ METRIC @ t2],
            [t2 @ METRIC @ t1, t2 @ METRIC @ t2],
        ]
    )
    rhs = np.array([t1 @ METRIC @ x, t2 @ METRIC @ x])
    coeff = np.linalg.solve(gram_t, rhs)
    xp = x - coeff[0] * t1 - coeff[1] * t2
    gram_b = np.array(
        [
            [b1 @ METRIC @ b1, b1 @ METRIC @ b2],
            [b2 @ METRIC @ b1, b2 @ METRIC @ b2],
        ]
    )
    rhs_b = np.array([b1 @ METRIC @ xp, b2 @ METRIC @ xp])
    return np.linalg.solve(gram_b, rhs_b), gram_b


def _orient(angle, tol=1e-12):
    if angle.real < -tol:
        return -angle
    if abs(angle.real) <= tol and angle.imag < 0.0:
        return -angle
    return angle


def hyperdihedral_angle(s, pair):
    """Angle between the two cells of s meeting at the triangle opposite pair.

    The wedge is split at the projected simplex centroid so each half stays
    inside the principal branch; the total is normalized to Re >= 0, with
    Im >= 0 breaking the tie for purely imaginary angles.
    """
    i, k = pair
    tri = triangle_of(pair)
    pos = s.vertex_positions()
    base = pos[tri[0]]
    t1 = pos[tri[1]] - base
    t2 = pos[tri[2]] - base
    b1, b2 = _perp_basis(t1, t2)
    centroid = pos.mean(axis=0)
    xa, gram = _perp_coords(pos[i] - base, t1, t2, b1, b2)
    xb, _ = _perp_coords(pos[k] - base, t1, t2, b1, b2)
    xc, _ = _perp_coords(centroid - base, t1, t2, b1, b2)
    angle = _wedge_angle(xa, xc, gram) + _wedge_angle(xc, xb, gram)
    return _orient(angle)


def regge_bisimplex(s):
    """Sum over faces of (2 pi - 2 angle) * area for a single 4-simplex."""
    total = 0.0 + 0.0j
    for pair in FACE_PAIRS:
        alpha = hyperdihedral_angle(s, pair)
        total += (2.0 * np.pi - 2.0 * alpha) * face_area(s, pair)
    return complex(total)


def regular_simplex4(edge=1.0):
    """Unit-edge regular Euclidean 4-simplex, imaginary time embedding.

    Every triangle is spacelike (area i sqrt(3)/4 per unit edge) and every
    cell pair meets at arccos(1/4).
    """
    r3, r6 = np.sqrt(3.0), np.sqrt(6.0)
    base = np.array(
        [
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.5, r3 / 2.0, 0.0],
            [0.5, r3 / 6.0, r6 / 3.0],
        ]
    )
    apex3 = base.mean(axis=0)
    verts = np.zeros((5, 4), dtype=complex)
    # vertex order: V0 = apex, V1..V3 = base tail, V4 = base origin
    verts[0, 1:] = apex3
    verts[0, 0] = 1j * np.sqrt(5.0 / 8.0)
    verts[1, 1:] = base[1]
    verts[2, 1:] = base[2]
    verts[3, 1:] = base[3]
    return Simplex4.from_vertices(verts * edge)


def spatial_steps(lam, scale=1.0):
    """Path steps e1, e2, e3 with e_i.e_i = scale^2, e_i.e_j = lam scale^2."""
    if not -0.5 < lam < 1.0:
        raise DegenerateSimplexError(f"lambda = {lam} outside (-1/2, 1)")
    gram = (1.0 - lam) * np.eye(3) + lam * np.ones((3, 3))
    return np.linalg.cholesky(gram) * scale


def canonical_simplex(lam, lapse=(0.1, 0.0, 0.0, 0.0), scale=1.0):
    """The distinguished lattice 4-simplex: lapse edge plus a spatial path.

    Edge (40) is the timelike lapse; vertices 1..3 continue from vertex 0
    along the three spatial steps, so l4a = lapse + e1 + ... + ea.
    """
    lapse = np.asarray(lapse, dtype=float)
    if lapse @ METRIC @ lapse >= 0.0:
        raise DegenerateSimplexError("lapse vector must be timelike")
    steps = spatial_steps(lam, scale)
    edges = np.zeros((4, 4), dtype=complex)
    edges[0] = lapse
    for a in range(1, 4):
        edges[a, 0] = lapse[0]
        edges[a, 1:] = lapse[1:] + steps[:a].sum(axis=0)
    return Simplex4(edges)


def dihedral_angles_3d(lam):
    """Six dihedral angles of the spatial path tetrahedron, keyed by edge.

    Vertices labeled 4, 1, 2, 3 along the path; the key is the sorted
    vertex pair of the edge the angle sits on.
    """
    steps = spatial_steps(lam)
    pos = {
        4: np.zeros(3),
        1: steps[0],
        2: steps[0] + steps[1],
        3: steps[0] + steps[1] + steps[2],
    }
    labels = (1, 2, 3, 4)
    angles = {}
    for a in labels:
        for b in labels:
            if a >= b:
                continue
            c, d = [x for x in labels if x not in (a, b)]
            axis = pos[b] - pos[a]
            axis = axis / np.linalg.norm(axis)
            ra = pos[c] - pos[a]
            rb = pos[d] - pos[a]
            ra = ra - (ra @ axis) * axis
            rb = rb - (rb @ axis) * axis
            cosang = (ra @ rb) / (np.linalg.norm(ra) * np.linalg.norm(rb))
            angles[(a, b)] = float(np.arccos(np.clip(cosang, -1.0, 1.0)))
    return angles
