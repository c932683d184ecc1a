"""Stationary rotor connections for a bisimplex and their certification.

The stationary point of the rotor action is built in closed form: the
rotor on the shared tetrahedron alpha turns by twice the complement of
the hyperdihedral angle about the face axis of the pair (0, alpha).
Axis orientations are not fixed by the geometry, so a short exhaustive
search picks the sign assignment that lands the action on the length
value.  Certification then checks the gap and a finite-difference
stationarity residual.
"""

from dataclasses import dataclass

import numpy as np

from .algebra import (
    ChiralRotor,
    compose,
    gauge_transform,
    identity_rotor,
    inverse,
    rotor_from_axis_angle,
)
from .action import (
    ActionValue,
    BisimplexConnections,
    chiral_root,
    connection_action_so3,
    connection_action_su2,
    resolve_branch,
)
from .errors import ValidationError
from .geometry import (
    CROSS_PAIRS,
    FACE_PAIRS,
    face_chiral,
    hyperdihedral_angle,
    regge_bisimplex,
)

_AXES = (np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0]))

_SIGN_CHOICES = tuple(
    (s1, s2, s3, s4)
    for s1 in (1, -1)
    for s2 in (1, -1)
    for s3 in (1, -1)
    for s4 in (1, -1)
)


def _action_for(s, conn, chirality, rep, sector, face_signs):
    if rep == "su2":
        return connection_action_su2(s, conn, chirality, sector=sector, face_signs=face_signs)
    if rep == "so3":
        return connection_action_so3(s, conn, chirality, sector=sector, face_signs=face_signs)
    raise ValidationError(f"unknown representation {rep!r}")


def _half_length_action(s):
    return 0.5 * regge_bisimplex(s)


def _chirality_candidate(s, chirality, angles, sector):
    """Best sign assignment for one chirality.

    Returns (rotors, face_signs, gap).  Axis signs on the four diagonal
    faces are searched exhaustively; each cross face then gets its own
    orientation flip, chosen to match the reconstructed sine.
    """
    side = 0 if chirality == 1 else 1
    chiral = face_chiral(s)
    vecs = {pair: chiral[pair][side] for pair in FACE_PAIRS}
    axes = {}
    for alpha in range(1, 5):
        v = vecs[(0, alpha)]
        axes[alpha] = v / chiral_root(v @ v)

    target = _half_length_action(s)
    best = None
    for signs in _SIGN_CHOICES:
        rot = [identity_rotor()]
        for alpha in range(1, 5):
            phi = 2.0 * np.pi - 2.0 * angles[(0, alpha)]
            rot.append(rotor_from_axis_angle(phi, signs[alpha - 1] * axes[alpha]))
        face_signs = {(0, alpha): signs[alpha - 1] for alpha in range(1, 5)}
        for pair in CROSS_PAIRS:
            a, b = pair
            r = compose(inverse(rot[a]), rot[b])
            v = vecs[pair]
            root = chiral_root(v @ v)
            y = (v @ np.asarray(r.u)) / root
            want = np.sin(np.pi - angles[pair])
            face_signs[pair] = 1 if abs(y - want) <= abs(-y - want) else -1
        conn = _one_sided(rot, chirality)
        value = _action_for(s, conn, chirality, "su2", sector, face_signs)
        gap = abs(value - target)
        if best is None or gap < best[2]:
            best = (tuple(rot[1:]), face_signs, gap)
    return best


def _one_sided(rot, chirality):
    ident = (identity_rotor(),) * 5
    if chirality == 1:
        return BisimplexConnections(plus=tuple(rot), minus=ident)
    return BisimplexConnections(plus=ident, minus=tuple(rot))


@dataclass(frozen=True)
class StationaryPoint:
    """Certified stationary connection with its diagnostics."""

    connections: BisimplexConnections
    face_signs: dict
    gap: dict
    residual: float


def stationary_curvatures(s, sector=None):
    """Closed-form stationary curvature rotors, one per chirality.

    Returns (curvatures, face_signs, gaps) where curvatures maps
    chirality to the four rotors R_1..R_4 and face_signs maps chirality
    to the per-face orientation flags the action evaluation needs.
    """
    if sector is None:
        sector = resolve_branch(s, strict=False)
    angles = {pair: hyperdihedral_angle(s, pair) for pair in FACE_PAIRS}
    curvatures = {}
    face_signs = {}
    gaps = {}
    for chirality in (1, -1):
        rot, fs, gap = _chirality_candidate(s, chirality, angles, sector)
        curvatures[chirality] = rot
        face_signs[chirality] = fs
        gaps[chirality] = gap
    return curvatures, face_signs, gaps


def connections_from_curvatures(curvatures):
    """Gauge-fixed connection with the base tetrahedron at the identity."""
    plus = (identity_rotor(),) + tuple(curvatures[1])
    minus = (identity_rotor(),) + tuple(curvatures[-1])
    return BisimplexConnections(plus=plus, minus=minus)


def _perturbed(conn, chirality, alpha, axis, h):
    bump = rotor_from_axis_angle(h, axis)
    rotors = list(conn.rotors(chirality))
    rotors[alpha] = compose(bump, rotors[alpha])
    if chirality == 1:
        return BisimplexConnections(plus=tuple(rotors), minus=conn.minus)
    return BisimplexConnections(plus=conn.plus, minus=tuple(rotors))


def stationarity_residual(s, conn, sector=None, face_signs=None, gamma=1.0,
                          rep="su2", step=1e-6):
    """Max |dS/dt| over rotor tangent directions, by central differences.

    The base rotor stays fixed (pure gauge); each of the other four is
    tilted along the three generator axes in each chirality, and the
    gamma-combined action is differenced.
    """
    if not 1e-6 <= step <= 1e-3:
        raise ValidationError("finite-difference step must lie in [1e-6, 1e-3]")
    if sector is None:
        sector = resolve_branch(s, strict=False)
    if face_signs is None:
        face_signs = {1: None, -1: None}

    def total(c):
        plus = _action_for(s, c, 1, rep, sector, face_signs[1])
        minus = _action_for(s, c, -1, rep, sector, face_signs[-1])
        return ActionValue(plus=plus, minus=minus, gamma=gamma).total

    worst = 0.0
    for chirality in (1, -1):
        for alpha in range(1, 5):
            for axis in _AXES:
                up = total(_perturbed(conn, chirality, alpha, axis, step))
                dn = total(_perturbed(conn, chirality, alpha, axis, -step))
                worst = max(worst, abs(up - dn) / (2.0 * step))
    return worst


def gauge_direction_residual(s, conn, sector=None, face_signs=None, gamma=1.0,
                             rep="su2", step=1e-3):
    """Central difference along a simultaneous gauge rotation of all rotors.

    Gauge invariance is exact, so the default step is the top of the allowed
    range: a larger step only shrinks the roundoff in the quotient.
    """
    if sector is None:
        sector = resolve_branch(s, strict=False)
    if face_signs is None:
        face_signs = {1: None, -1: None}

    def total(c):
        plus = _action_for(s, c, 1, rep, sector, face_signs[1])
        minus = _action_for(s, c, -1, rep, sector, face_signs[-1])
        return ActionValue(plus=plus, minus=minus, gamma=gamma).total

    axis = np.array([0.6, -0.64, 0.48])
    axis = axis / np.linalg.norm(axis)

    def moved(h):
        g = rotor_from_axis_angle(h, axis)
        plus = tuple(gauge_transform(om, g) for om in conn.plus)
        minus = tuple(gauge_transform(om, g) for om in conn.minus)
        return BisimplexConnections(plus=plus, minus=minus)

    up = total(moved(step))
    dn = total(moved(-step))
    return abs(up - dn) / (2.0 * step)


def _refine(s, conn, sector, face_signs, rep, max_iter=200):
    """Projected descent polish of a candidate connection.

    Never allowed to wander: refinement aborts if any rotor moves more
    than 1e-3 from the analytic candidate.
    """
    from .algebra import rotor_distance

    def split_actions(c):
        plus = _action_for(s, c, 1, rep, sector, face_signs[1])
        minus = _action_for(s, c, -1, rep, sector, face_signs[-1])
        return plus, minus

    target = _half_length_action(s)

    def score(c):
        p, m = split_actions(c)
        return abs(p - target) ** 2 + abs(m - target) ** 2

    start = conn
    cur = conn
    cur_score = score(cur)
    step = 1e-4
    iterations = 0
    while iterations < max_iter and step > 1e-12:
        iterations += 1
        improved = False
        for chirality in (1, -1):
            for alpha in range(1, 5):
                for axis in _AXES:
                    for sgn in (1.0, -1.0):
                        cand = _perturbed(cur, chirality, alpha, axis, sgn * step)
                        drift = max(
                            rotor_distance(a, b)
                            for a, b in zip(
                                cand.rotors(chirality), start.rotors(chirality)
                            )
                        )
                        if drift > 1e-3:
                            continue
                        cand_score = score(cand)
                        if cand_score < cur_score:
                            cur, cur_score = cand, cand_score
                            improved = True
        if not improved:
            step *= 0.5
    return cur, iterations


def stationary_point(s, sector=None, refine=False):
    """Full on-shell construction: search, assemble, measure."""
    if sector is None:
        sector = resolve_branch(s, strict=False)
    curvatures, face_signs, _ = stationary_curvatures(s, sector=sector)
    conn = connections_from_curvatures(curvatures)
    iterations = 0
    if refine:
        conn, iterations = _refine(s, conn, sector, face_signs, "su2")

    target = _half_length_action(s)
    gap = {}
    for rep in ("su2", "so3"):
        for chirality in (1, -1):
            value = _action_for(s, conn, chirality, rep, sector, face_signs[chirality])
            gap[(rep, chirality)] = abs(value - target)
    residual = stationarity_residual(s, conn, sector=sector, face_signs=face_signs)
    point = StationaryPoint(
        connections=conn, face_signs=face_signs, gap=gap, residual=residual
    )
    return point, iterations


def certify(s, simplex_id="simplex", gap_tol=1e-8, residual_tol=1e-5, refine=False):
    """Certification record for the stationary point of one bisimplex.

    Raises ValidationError when either bound fails, reporting every gap
    so a failed search is diagnosable.
    """
    point, iterations = stationary_point(s, refine=refine)
    worst_gap = max(point.gap.values())
    report = {
        "simplex_id": simplex_id,
        "rep": {
            rep: max(point.gap[(rep, 1)], point.gap[(rep, -1)]) for rep in ("su2", "so3")
        },
        "gap": worst_gap,
        "residual": point.residual,
        "signs": {
            str(ch): {str(pair): int(sg) for pair, sg in fs.items()}
            for ch, fs in point.face_signs.items()
        },
        "iterations": iterations,
    }
    if worst_gap > gap_tol or point.residual > residual_tol:
        raise ValidationError(
            f"stationary point failed certification: gaps {point.gap}, "
            f"residual {point.residual:.3e}"
        )
    return point, report
