import numpy as np
import pytest

from bisimplex.algebra import gauge_transform, identity_rotor, rotor_from_axis_angle
from bisimplex.action import (
    ActionValue,
    BisimplexComplex,
    BisimplexConnections,
    action_record,
    bianchi_check,
    branch_constant,
    chiral_root,
    combine_gamma,
    connection_action_so3,
    connection_action_su2,
    decompose_total,
    identity_connections,
    reconstruct_angles,
    regge_total,
    resolve_branch,
)
from bisimplex.errors import (
    BranchAmbiguityError,
    SectorViolationError,
    ValidationError,
    ZeroAreaError,
)
from bisimplex.geometry import (
    FACE_PAIRS,
    Simplex4,
    canonical_simplex,
    hyperdihedral_angle,
    regge_bisimplex,
)
from bisimplex.lattice import LatticeConfig, build_lattice, random_displacement

SHIFTED_LAPSE = (0.3, 0.04, 0.02, 0.01)


def perturbed_canonical(rng, lam=-1.0 / 3.0, amplitude=0.05):
    base = canonical_simplex(lam, lapse=SHIFTED_LAPSE)
    noise = 1.0 + amplitude * rng.uniform(-1.0, 1.0, size=base.edges.shape)
    return Simplex4(edges=base.edges * noise)


# ---------------------------------------------------------------------------
# length-only totals


def test_flat_lattice_total_vanishes():
    for lam in (-1.0 / 3.0, 0.0, 0.2):
        lat = build_lattice(LatticeConfig(lam))
        assert abs(regge_total(lat)) < 1e-8, lam


def test_decomposition_identity_on_perturbed_lattice():
    cfg = LatticeConfig(0.2)
    lat = build_lattice(cfg, displacement=random_displacement(cfg, amplitude=0.03, seed=11))
    total = regge_total(lat)
    assert abs(total) > 1e-4  # displacement really curves it
    assert abs(total - decompose_total(lat)) < 1e-10


def test_bisimplex_complex_matches_closed_form():
    s = canonical_simplex(-1.0 / 3.0, lapse=SHIFTED_LAPSE)
    assert abs(regge_total(BisimplexComplex(s)) - regge_bisimplex(s)) < 1e-12


# ---------------------------------------------------------------------------
# connections, Bianchi, gamma combination


def test_bianchi_identity_and_violation():
    assert bianchi_check(identity_connections()) == 0.0

    rng = np.random.default_rng(3)

    def rrot():
        ax = rng.normal(size=3)
        ax = ax / np.linalg.norm(ax)
        return rotor_from_axis_angle(rng.uniform(0.2, 2.5), ax)

    conn = BisimplexConnections(
        plus=tuple(rrot() for _ in range(5)), minus=tuple(rrot() for _ in range(5))
    )
    assert bianchi_check(conn) < 1e-13

    # tampering with one curvature must be caught
    curv = {
        (i, k, ch): conn.curvature(i, k, ch)
        for ch in (+1, -1)
        for i in range(5)
        for k in range(5)
        if i != k
    }
    curv[(1, 3, 1)] = rrot()
    assert bianchi_check(curv) > 1e-3


def test_combine_gamma():
    p = 0.7 + 0.2j
    assert abs(combine_gamma(p, np.conj(p), 1.0).imag) < 1e-15
    assert abs(combine_gamma(0.5, 0.5, np.inf) - 1.0) < 1e-15
    assert abs(ActionValue(plus=p, minus=p, gamma=2.0).total - combine_gamma(p, p, 2.0)) < 1e-15
    with pytest.raises(ValidationError):
        combine_gamma(1.0, 1.0, 0)


# ---------------------------------------------------------------------------
# branch sectors


def test_sector_kinds_on_lapse_shifted_simplex():
    s = canonical_simplex(-1.0 / 3.0, lapse=SHIFTED_LAPSE)
    sector = resolve_branch(s)
    kinds = {pair: sector[pair].kind for pair in FACE_PAIRS}
    assert kinds[(0, 4)] == "imag"
    for pair in ((0, 1), (0, 2), (0, 3), (1, 4), (2, 4), (3, 4)):
        assert kinds[pair] == "right", pair
    for pair in ((1, 2), (1, 3), (2, 3)):
        assert kinds[pair] == "real", pair


def test_sector_window_boundary_and_violation():
    # lambda = 0 puts one spatial angle exactly on the window edge pi/4
    s0 = canonical_simplex(0.0)
    assert abs(hyperdihedral_angle(s0, (2, 3)).real - np.pi / 4.0) < 1e-12
    resolve_branch(s0)  # boundary is inclusive

    # lambda = 0.2 pushes it genuinely outside
    s2 = canonical_simplex(0.2)
    with pytest.raises(SectorViolationError):
        resolve_branch(s2)
    sector = resolve_branch(s2, strict=False)
    assert sector[(2, 3)].so3 == (2.0 * np.pi, 1)


def test_reconstruct_angles_round_trip():
    rng = np.random.default_rng(17)
    for _ in range(100):
        s = perturbed_canonical(rng)
        direct = {pair: hyperdihedral_angle(s, pair) for pair in FACE_PAIRS}
        for rep in ("su2", "so3"):
            back = reconstruct_angles(s, rep=rep)
            worst = max(abs(back[pair] - direct[pair]) for pair in FACE_PAIRS)
            assert worst < 1e-8, (rep, worst)


def test_branch_constants():
    assert abs(branch_constant("real", 4) - (np.pi / 4.0 - np.pi / 4.0)) < 1e-15
    assert abs(branch_constant("right", 6) - (np.pi / 6.0 - np.pi / 4.0)) < 1e-15
    assert abs(branch_constant("imag", 6) - np.pi / 6.0) < 1e-15
    with pytest.raises(ValidationError):
        branch_constant("wrong", 4)


# ---------------------------------------------------------------------------
# connection actions


def test_identity_connection_gives_sector_offsets():
    s = canonical_simplex(-1.0 / 3.0, lapse=SHIFTED_LAPSE)
    sector = resolve_branch(s)
    conn = identity_connections()
    got = connection_action_su2(s, conn, +1, sector=sector)

    expect = 0.0 + 0.0j
    from bisimplex.geometry import face_chiral

    chiral = face_chiral(s)
    for pair in FACE_PAIRS:
        v = chiral[pair][0]
        root = chiral_root(v @ v)
        face = sector[pair]
        if face.kind == "right":
            # pi/2 - i*eta_sign*arccosh(0), arccosh(0) = i pi/2
            expect += root * (np.pi / 2.0 + face.eta_sign * np.pi / 2.0)
        else:
            expect += root * face.su2[0]
    assert abs(got - expect) < 1e-12


def test_connection_action_gauge_invariance():
    rng = np.random.default_rng(29)
    s = canonical_simplex(-1.0 / 3.0, lapse=SHIFTED_LAPSE)
    sector = resolve_branch(s)

    def rrot():
        ax = rng.normal(size=3)
        ax = ax / np.linalg.norm(ax)
        return rotor_from_axis_angle(rng.uniform(0.2, 2.0), ax)

    conn = BisimplexConnections(
        plus=tuple(rrot() for _ in range(5)), minus=tuple(rrot() for _ in range(5))
    )
    g = rrot()
    moved = BisimplexConnections(
        plus=tuple(gauge_transform(om, g) for om in conn.plus),
        minus=tuple(gauge_transform(om, g) for om in conn.minus),
    )
    for fn in (connection_action_su2, connection_action_so3):
        for ch in (+1, -1):
            a = fn(s, conn, ch, sector=sector)
            b = fn(s, moved, ch, sector=sector)
            assert abs(a - b) < 1e-12, (fn.__name__, ch)


def test_chiral_root_branch():
    assert chiral_root(4.0) == 2.0
    assert chiral_root(-4.0) == -2.0j
    # roundoff dust on the cut must not flip the branch
    assert chiral_root(-4.0 + 1e-17j) == -2.0j
    assert chiral_root(-4.0 - 1e-17j) == -2.0j
    # a genuinely complex square keeps the principal root
    z = chiral_root(-4.0 + 1e-3j)
    assert z.imag > 0.0 and abs(z * z - (-4.0 + 1e-3j)) < 1e-12


def test_on_cut_requires_explicit_prescription():
    s = canonical_simplex(-1.0 / 3.0, lapse=SHIFTED_LAPSE)
    from bisimplex.onshell import connections_from_curvatures, stationary_curvatures

    curv, fsgn, _ = stationary_curvatures(s)
    conn = connections_from_curvatures(curv)
    sector = resolve_branch(s)
    # boost-type faces put the arcsin argument on the cut |Re| > 1
    with pytest.raises(BranchAmbiguityError):
        connection_action_su2(s, conn, +1, sector=sector, face_signs=fsgn[1], i0=None)
    val = connection_action_su2(s, conn, +1, sector=sector, face_signs=fsgn[1], i0=1.0)
    assert np.isfinite(val.real) and np.isfinite(val.imag)


def test_zero_area_face_rejected():
    good = canonical_simplex(-1.0 / 3.0, lapse=SHIFTED_LAPSE)
    sector = resolve_branch(good)
    # the first two displacements span a light-like triangle: the edge
    # vectors stay independent but the face square vanishes
    edges = np.array(
        [
            [1.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [1.0, -1.0, 0.0, 0.0],
        ],
        dtype=complex,
    )
    bad = Simplex4(edges=edges)
    with pytest.raises(ZeroAreaError):
        connection_action_su2(bad, identity_connections(), +1, sector=sector)


def test_action_record_shape():
    s = canonical_simplex(-1.0 / 3.0, lapse=SHIFTED_LAPSE)
    sector = resolve_branch(s)
    rec = action_record("probe", 1.0 + 2.0j, 1.0 - 2.0j, 1.0, sector=sector)
    assert rec["simplex_id"] == "probe"
    assert rec["plus"] == [1.0, 2.0]
    assert rec["total"][1] == pytest.approx(0.0)
    assert rec["sector"]["0-4"][0] == "imag"
