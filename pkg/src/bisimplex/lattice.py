"""Periodic 4-cubic lattice cut into 24 path simplices per cube.

Each 4-cube is triangulated by the paths p0 -> p1 -> ... -> p4 that walk
its four axes in some order; vertex 4 of every simplex is the path start,
vertices 0..3 are the later path points.  Triangles and tetrahedra are
identified across cubes and across the periodic wrap by canonical keys,
and the deficit angle at a triangle is accumulated by walking the fan of
incident simplices through shared tetrahedra, so the boost parts of the
wedge angles cancel exactly on a flat background.
"""

import itertools
import json

import numpy as np

from .errors import ValidationError
from .geometry import (
    FACE_PAIRS,
    Simplex4,
    _perp_basis,
    _perp_coords,
    _wedge_angle,
    face_area,
    spatial_steps,
    triangle_of,
)
from .algebra import METRIC

AXIS_ORDERS = tuple(itertools.permutations(range(4)))


class LatticeConfig:
    """Shape of the periodic lattice: spatial Gram parameter, lapse, extents."""

    def __init__(self, lam, lapse=(0.1, 0.0, 0.0, 0.0), scale=1.0, extents=(2, 2, 2, 2)):
        self.lam = float(lam)
        self.lapse = tuple(float(c) for c in lapse)
        self.scale = float(scale)
        self.extents = tuple(int(e) for e in extents)
        if len(self.lapse) != 4:
            raise ValidationError("lapse must have 4 components")
        if len(self.extents) != 4 or min(self.extents) < 2:
            # wrap identification matches vertices by residue class; a
            # period of 1 would alias the two ends of a single edge
            raise ValidationError(f"extents must be >= 2, got {self.extents}")
        lap = np.asarray(self.lapse)
        if lap @ METRIC @ lap >= 0.0:
            raise ValidationError("lapse vector must be timelike")

    def basis(self):
        """Columns: lapse step, then the three spatial steps."""
        cols = np.zeros((4, 4))
        cols[:, 0] = self.lapse
        cols[1:, 1:] = spatial_steps(self.lam, self.scale).T
        return cols

    @classmethod
    def from_json(cls, text):
        raw = json.loads(text)
        known = {"lambda", "lapse", "scale", "extents"}
        extra = set(raw) - known
        if extra:
            raise ValidationError(f"unknown config keys: {sorted(extra)}")
        if "lambda" not in raw:
            raise ValidationError("config requires 'lambda'")
        kwargs = {"lam": raw["lambda"]}
        for key in ("lapse", "scale", "extents"):
            if key in raw:
                kwargs[key] = raw[key]
        return cls(**kwargs)

    def to_json(self):
        return json.dumps(
            {
                "lambda": self.lam,
                "lapse": list(self.lapse),
                "scale": self.scale,
                "extents": list(self.extents),
            }
        )


def _wrap(site, extents):
    return tuple(int(c) % e for c, e in zip(site, extents))


def _simplex_key_tuple(verts, extents):
    """Canonical key of a vertex set given as unwrapped integer rows."""
    best = None
    for pivot in verts:
        rest = sorted(tuple(int(c) for c in (v - pivot)) for v in verts if v is not pivot)
        cand = (_wrap(pivot, extents), tuple(rest))
        if best is None or cand < best:
            best = cand
    return best


class TriangleFan:
    """Ordered walk around one triangle with consistently signed angles."""

    def __init__(self, key, order, angles, area):
        self.key = key
        self.order = order
        self.angles = angles
        self.area = area

    @property
    def total(self):
        return sum(self.angles)

    @property
    def deficit(self):
        return 2.0 * np.pi - self.total


class LatticeComplex:
    def __init__(self, config, displacement=None):
        self.config = config
        self.basis = config.basis()
        self.displacement = dict(displacement) if displacement else {}
        self.simplex_verts = []
        self.simplices = []
        self._build()
        self._index_faces()
        self._fans = None

    def _position(self, site):
        x = self.basis @ np.asarray(site, dtype=float)
        disp = self.displacement.get(_wrap(site, self.config.extents))
        if disp is not None:
            x = x + np.asarray(disp, dtype=float)
        return x

    def _build(self):
        ranges = [range(e) for e in self.config.extents]
        for base in itertools.product(*ranges):
            for order in AXIS_ORDERS:
                path = [np.array(base, dtype=int)]
                for axis in order:
                    step = path[-1].copy()
                    step[axis] += 1
                    path.append(step)
                # vertex 4 is the path start; 0..3 are the later points
                verts = np.stack(path[1:] + path[:1])
                pos = np.stack([self._position(v) for v in verts])
                edges = (pos[:4] - pos[4]).astype(complex)
                self.simplex_verts.append(verts)
                self.simplices.append(Simplex4(edges))

    def _index_faces(self):
        ext = self.config.extents
        self.triangles = {}
        self._tetra_of = []
        for sidx, verts in enumerate(self.simplex_verts):
            rows = [verts[i] for i in range(5)]
            tets = {}
            for drop in range(5):
                kept = [rows[i] for i in range(5) if i != drop]
                tets[drop] = _simplex_key_tuple(kept, ext)
            self._tetra_of.append(tets)
            for pair in FACE_PAIRS:
                tri = [rows[i] for i in triangle_of(pair)]
                key = _simplex_key_tuple(tri, ext)
                self.triangles.setdefault(key, []).append((sidx, pair))

    def multiplicity(self, key):
        return len(self.triangles[key])

    def _walk_order(self, incidences):
        """Cycle through the incident simplices via shared tetrahedra."""
        doors = {}
        for j, (sidx, pair) in enumerate(incidences):
            for out in pair:
                # tetra opposite the *other* out-vertex contains this one
                other = pair[0] if out == pair[1] else pair[1]
                doors.setdefault(self._tetra_of[sidx][other], []).append(j)
        for key, ends in doors.items():
            if len(ends) != 2:
                raise ValidationError(f"tetrahedron {key} not shared by exactly 2 simplices")
        start_tet = self._tetra_of[incidences[0][0]][incidences[0][1][0]]
        order = []
        tets = []
        j, enter = 0, start_tet
        while True:
            order.append(j)
            sidx, pair = incidences[j]
            exits = [
                self._tetra_of[sidx][pair[0]],
                self._tetra_of[sidx][pair[1]],
            ]
            leave = exits[0] if exits[1] == enter else exits[1]
            tets.append(leave)
            nxt = [e for e in doors[leave] if e != j]
            j, enter = nxt[0], leave
            if j == 0 and enter == start_tet:
                break
        if sorted(order) != list(range(len(incidences))):
            raise ValidationError("triangle star is not a single cycle")
        return order, tets

    def _chart_offset(self, cur_s, cur_off, nxt_s, shared):
        """Translation putting nxt_s into the chart of cur_s across shared."""
        ext = self.config.extents
        drop_cur = next(d for d, t in self._tetra_of[cur_s].items() if t == shared)
        drop_nxt = next(d for d, t in self._tetra_of[nxt_s].items() if t == shared)
        cur_rows = {
            _wrap(v + cur_off, ext): v + cur_off
            for lbl, v in enumerate(self.simplex_verts[cur_s])
            if lbl != drop_cur
        }
        off = None
        for lbl, v in enumerate(self.simplex_verts[nxt_s]):
            if lbl == drop_nxt:
                continue
            cand = cur_rows[_wrap(v, ext)] - v
            if off is None:
                off = cand
            elif not np.array_equal(off, cand):
                raise ValidationError("inconsistent wrap offset in triangle star")
        return off

    def _fan(self, key):
        incidences = self.triangles[key]
        order, tets = self._walk_order(incidences)
        # frame offsets keep every vertex in the chart of the first simplex
        offsets = [np.zeros(4, dtype=int)]
        for step in range(len(order) - 1):
            cur, nxt = order[step], order[step + 1]
            offsets.append(
                self._chart_offset(incidences[cur][0], offsets[step], incidences[nxt][0], tets[step])
            )
        closing = self._chart_offset(
            incidences[order[-1]][0], offsets[-1], incidences[order[0]][0], tets[-1]
        )
        if np.any(closing):
            raise ValidationError("triangle star does not close under unwrapping")
        sample_s, sample_pair = incidences[order[0]]
        tri_labels = triangle_of(sample_pair)
        tri = [self.simplex_verts[sample_s][i] for i in tri_labels]
        p0 = self._position(tri[0])
        t1 = self._position(tri[1]) - p0
        t2 = self._position(tri[2]) - p0
        b1, b2 = _perp_basis(t1.astype(complex), t2.astype(complex))

        def ray(tet_key, step):
            # out-vertex of the shared tetra, in the accumulated chart
            sidx = incidences[order[step]][0]
            for drop, tkey in self._tetra_of[sidx].items():
                if tkey == tet_key:
                    pair = incidences[order[step]][1]
                    out = pair[0] if drop == pair[1] else pair[1]
                    w = self.simplex_verts[sidx][out] + offsets[step]
                    coords, gram = _perp_coords(
                        self._position(w) - p0,
                        t1.astype(complex),
                        t2.astype(complex),
                        b1,
                        b2,
                    )
                    return coords, gram
            raise ValidationError("shared tetrahedron missing from simplex")

        rays = []
        for step, tkey in enumerate(tets):
            rays.append(ray(tkey, step))
        gram = rays[0][1]
        angles_walk = []
        for step in range(len(order)):
            prev = rays[step - 1][0]
            cur = rays[step][0]
            angles_walk.append(_wedge_angle(prev, cur, gram))
        total = sum(angles_walk)
        if total.real < 0.0:
            angles_walk = [-a for a in angles_walk]
        # angle computed entering simplex order[step] belongs to it
        angles = [None] * len(incidences)
        for step, j in enumerate(order):
            angles[j] = angles_walk[step]
        area = face_area(self.simplices[sample_s], sample_pair)
        return TriangleFan(key, list(incidences), angles, area)

    def fans(self):
        if self._fans is None:
            self._fans = {key: self._fan(key) for key in self.triangles}
        return self._fans

    def triangle_class(self, key):
        """Edge content of a triangle: spatial, lapse, or diagonal."""
        _, diffs = key
        d1, d2 = (np.array(d) for d in diffs)
        edges = [d1, d2, d2 - d1]
        times = [int(e[0]) for e in edges]
        if all(t == 0 for t in times):
            return "spatial"
        if any(abs(t) == 1 and not np.any(e[1:]) for t, e in zip(times, edges)):
            return "lapse"
        return "diagonal"


def build_lattice(config, displacement=None):
    return LatticeComplex(config, displacement)


def random_displacement(config, amplitude=0.02, seed=0):
    """Per-site random shifts, periodic by construction."""
    rng = np.random.default_rng(seed)
    field = {}
    for site in itertools.product(*[range(e) for e in config.extents]):
        field[site] = amplitude * config.scale * rng.standard_normal(4)
    return field
