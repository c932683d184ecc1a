"""Command-line front end for the verification suites and data curves.

Commands print to stdout (or --output) and return 0 on success, 1 on a
numerical failure, 2 on invalid input.  Outputs are deterministic for a
fixed configuration: floats are printed with 17 significant digits and
every stochastic component derives its substreams from the single --seed
by fixed counters, so reruns are byte-identical.
"""

import argparse
import json
import sys

import numpy as np
from scipy.integrate import quad
from scipy.special import kv

from .action import (
    bianchi_check,
    connection_action_su2,
    decompose_total,
    regge_total,
    BisimplexConnections,
)
from .algebra import ChiralRotor, haar_density, sigma_identities_check
from .errors import ValidationError
from .geometry import (
    canonical_simplex,
    closure_defect,
    dihedral_angles_3d,
    regge_bisimplex,
    regular_simplex4,
)
from .lattice import LatticeConfig, build_lattice
from .onshell import certify, stationary_point
from .pathint import (
    bessel_k0,
    bessel_k1,
    fit_exponential_rate,
    model_integral,
    n0_so3_closed,
    n0_su2_closed,
    n_degenerate_mc,
)

# lapse with small shift components; a pure lapse puts several dihedral
# angles exactly on sector boundaries, which the certification treats as
# a different branch family
GENERIC_LAPSE = (0.3, 0.04, 0.02, 0.01)

COMMANDS = ("lattice-info", "onshell-verify", "suppression-curve",
            "degenerate-n", "selftest")

# smallest admissible eigenvalue of the spatial Gram matrix; the formal
# positivity window is -1/2 < lambda < 1 but the angle and fan assembly
# lose accuracy when the step basis is this close to collapse
GRAM_FLOOR = 0.05


def f17(x):
    return format(float(x), ".17g")


class RunConfig:
    """Validated bag of command parameters; flags override --config values."""

    FIELDS = ("gamma", "lam", "samples", "seed", "output", "format", "rep",
              "tolerance")
    DEFAULTS = {
        "gamma": 1.0,
        "lam": 0.0,
        "samples": 10000,
        "seed": 0,
        "output": None,
        "format": "csv",
        "rep": None,
        "tolerance": None,
    }

    def __init__(self, command, **kwargs):
        self.command = command
        for name in self.FIELDS:
            setattr(self, name, kwargs.pop(name, self.DEFAULTS[name]))
        self.extras = kwargs
        self.validate()

    def validate(self):
        if self.command not in COMMANDS:
            raise ValidationError(f"unknown command {self.command!r}")
        if not self.samples > 0:
            raise ValidationError(f"samples must be > 0, got {self.samples}")
        if self.gamma == 0:
            raise ValidationError("gamma must be nonzero")
        eig_low = min(1.0 - self.lam, 1.0 + 2.0 * self.lam)
        if eig_low < GRAM_FLOOR:
            raise ValidationError(
                f"lambda {self.lam} leaves the spatial Gram matrix with "
                f"smallest eigenvalue {eig_low:.3f} < {GRAM_FLOOR}"
            )
        if self.format not in ("csv", "json"):
            raise ValidationError(f"format must be csv or json, got "
                                  f"{self.format!r}")
        if self.rep not in (None, "su2", "so3"):
            raise ValidationError(f"rep must be su2 or so3, got {self.rep!r}")
        if self.tolerance is not None and not self.tolerance > 0.0:
            raise ValidationError("tolerance must be positive")


def _emit(text, output):
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# lattice-info


def cmd_lattice_info(cfg):
    lattice = build_lattice(LatticeConfig(cfg.lam))
    mult = {}
    for key in lattice.triangles:
        cls = lattice.triangle_class(key)
        n = lattice.multiplicity(key)
        mult.setdefault(cls, {})
        mult[cls][n] = mult[cls].get(n, 0) + 1
    angles = dihedral_angles_3d(cfg.lam)
    report = {
        "lambda": cfg.lam,
        "extents": list(lattice.config.extents),
        "simplices": len(lattice.simplices),
        "per_cell": len(lattice.simplices) // int(
            np.prod(lattice.config.extents)
        ),
        "triangles": len(lattice.triangles),
        "multiplicity": {
            cls: {str(n): c for n, c in sorted(table.items())}
            for cls, table in sorted(mult.items())
        },
        "dihedral_angles": {
            f"{a}-{b}": ang for (a, b), ang in sorted(angles.items())
        },
        "min_dihedral": min(angles.values()),
    }
    if cfg.format == "json":
        _emit(json.dumps(report, sort_keys=True, indent=2) + "\n", cfg.output)
        return 0
    lines = []
    for key in ("lambda", "extents", "simplices", "per_cell", "triangles"):
        lines.append(f"{key},{report[key]}")
    for cls, table in sorted(mult.items()):
        for n, c in sorted(table.items()):
            lines.append(f"multiplicity,{cls},{n},{c}")
    for label, ang in report["dihedral_angles"].items():
        lines.append(f"dihedral,{label},{f17(ang)}")
    lines.append(f"min_dihedral,{f17(report['min_dihedral'])}")
    _emit("\n".join(lines) + "\n", cfg.output)
    return 0


# ---------------------------------------------------------------------------
# onshell-verify


def _suite(cfg):
    yield "regular", regular_simplex4()
    for lam in (-1.0 / 3.0, 0.0, 0.2):
        yield f"canonical({lam:g})", canonical_simplex(lam,
                                                       lapse=GENERIC_LAPSE)


def cmd_onshell_verify(cfg):
    gap_tol = cfg.tolerance if cfg.tolerance is not None else 1e-8
    rows = []
    failed = False
    for simplex_id, s in _suite(cfg):
        try:
            _, report = certify(s, simplex_id=simplex_id, gap_tol=gap_tol)
            gap = (report["rep"][cfg.rep] if cfg.rep is not None
                   else report["gap"])
            ok = gap <= gap_tol
        except ValidationError as exc:
            rows.append({"simplex": simplex_id, "ok": False,
                         "error": str(exc)})
            failed = True
            continue
        rows.append({"simplex": simplex_id, "ok": bool(ok), "gap": gap,
                     "residual": report["residual"]})
        failed = failed or not ok
    if cfg.extras.get("inject_bad_sign"):
        s = regular_simplex4()
        point, _ = stationary_point(s)
        plus = list(point.connections.plus)
        bad = plus[2]
        plus[2] = ChiralRotor(-bad.w, -np.asarray(bad.u))
        conn = BisimplexConnections(tuple(plus), point.connections.minus)
        target = 0.5 * regge_bisimplex(s)
        value = connection_action_su2(s, conn, 1,
                                      face_signs=point.face_signs[1])
        gap = abs(value - target)
        rows.append({"simplex": "regular+flipped-sign", "ok": bool(gap <= gap_tol),
                     "gap": gap})
        failed = failed or gap > gap_tol
    if cfg.format == "json":
        text = json.dumps({"rows": rows, "ok": not failed}, sort_keys=True,
                          default=float, indent=2) + "\n"
    else:
        lines = ["simplex,ok,gap,residual"]
        for r in rows:
            lines.append(",".join([
                r["simplex"],
                "1" if r["ok"] else "0",
                f17(r["gap"]) if "gap" in r else "",
                f17(r["residual"]) if "residual" in r else "",
            ]))
        text = "\n".join(lines) + "\n"
    _emit(text, cfg.output)
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# suppression-curve


def cmd_suppression_curve(cfg):
    points = cfg.extras.get("points")
    points = 50 if points is None else int(points)
    if points < 2:
        raise ValidationError("need at least two curve points")
    v_abs = np.linspace(5.0, 20.0, points)
    cols = {}
    for region, sign in (("spacelike", -1.0), ("timelike", 1.0)):
        squares = sign * v_abs ** 2
        cols[f"su2_{region}"] = [
            n0_su2_closed(v2, cfg.gamma, chirality=1) for v2 in squares
        ]
        cols[f"so3_{region}"] = [
            n0_so3_closed(v2, cfg.gamma) for v2 in squares
        ]
    slopes = {}
    for name, vals in cols.items():
        power = 1.5 if name.startswith("su2") else 3.0
        slopes[name] = fit_exponential_rate(v_abs, vals, power=power)
    if cfg.format == "json":
        payload = {
            "gamma": cfg.gamma,
            "v_abs": [float(v) for v in v_abs],
            "curves": {
                name: [[val.real, val.imag] for val in vals]
                for name, vals in sorted(cols.items())
            },
            "slopes": {k: slopes[k] for k in sorted(slopes)},
        }
        _emit(json.dumps(payload, sort_keys=True, indent=2) + "\n",
              cfg.output)
        return 0
    names = ("su2_spacelike", "su2_timelike", "so3_spacelike",
             "so3_timelike")
    header = "v_abs," + ",".join(f"{n}_re,{n}_im" for n in names)
    lines = [header]
    for i, v in enumerate(v_abs):
        row = [f17(v)]
        for n in names:
            val = cols[n][i]
            row.append(f17(val.real))
            row.append(f17(val.imag))
        lines.append(",".join(row))
    trailer = {"gamma": cfg.gamma,
               "slopes": {k: slopes[k] for k in sorted(slopes)}}
    lines.append("# " + json.dumps(trailer, sort_keys=True))
    _emit("\n".join(lines) + "\n", cfg.output)
    return 0


# ---------------------------------------------------------------------------
# degenerate-n


def equifacial_source():
    """Unit-area closure-satisfying triangle quadruple (regular tetrahedron
    face normals scaled to unit norm)."""
    s8 = np.sqrt(8.0) / 3.0
    s2 = np.sqrt(2.0) / 3.0
    s23 = np.sqrt(2.0 / 3.0)
    v1 = np.array([s8, 0.0, -1.0 / 3.0])
    v2 = np.array([-s2, s23, -1.0 / 3.0])
    v3 = np.array([-s2, -s23, -1.0 / 3.0])
    return np.array([v1, v2, v3, v1 + v2 + v3])


def cmd_degenerate_n(cfg):
    scale = cfg.extras.get("area_scale")
    scale = 1.0 if scale is None else float(scale)
    violate = float(cfg.extras.get("violate", 0.0))
    if not scale > 0.0:
        raise ValidationError("area scale must be positive")
    vecs = equifacial_source() * scale
    vecs[3] = vecs[3] * (1.0 + violate)
    est = n_degenerate_mc(vecs, gamma=cfg.gamma, n_samples=cfg.samples,
                          seed=cfg.seed, warn_rtol=cfg.tolerance)
    payload = {
        "command": "degenerate-n",
        "gamma": cfg.gamma,
        "area_scale": scale,
        "violate": violate,
        "n_samples": est.n_samples,
        "seed": est.seed,
        "mean_re": est.mean.real,
        "mean_im": est.mean.imag,
        "stderr": est.stderr,
        "rel_stderr": est.stderr / abs(est.mean),
    }
    _emit(json.dumps(payload, sort_keys=True, indent=2) + "\n", cfg.output)
    return 0


# ---------------------------------------------------------------------------
# selftest


def _haar_normalization_defect():
    out, _ = quad(lambda p: haar_density([p, 0.0, 0.0]) * 4.0 * np.pi * p * p,
                  0.0, 2.0 * np.pi, epsabs=0.0, epsrel=1e-12)
    return abs(out - 1.0)


def _selftest_checks():
    yield ("sigma-identities", 1e-10,
           lambda: max(sigma_identities_check().values()))
    yield ("haar-normalization", 1e-10, _haar_normalization_defect)
    yield ("closure", 1e-12, lambda: max(
        closure_defect(regular_simplex4()),
        closure_defect(canonical_simplex(0.0, lapse=GENERIC_LAPSE)),
    ))

    def bianchi():
        point, _ = stationary_point(regular_simplex4())
        return bianchi_check(point.connections)

    yield ("bianchi", 1e-10, bianchi)

    def flat_lattice():
        lattice = build_lattice(LatticeConfig(0.0))
        total = regge_total(lattice)
        deco = decompose_total(lattice)
        return abs(total), abs(total - deco)

    def flat_holder(store={}):
        if not store:
            store["vals"] = flat_lattice()
        return store["vals"]

    yield ("flat-action-zero", 1e-8, lambda: flat_holder()[0])
    yield ("action-decomposition", 1e-10, lambda: flat_holder()[1])
    yield ("bessel-model", 1e-8,
           lambda: abs(model_integral(1.0) / (2.0 * bessel_k0(1.0)) - 1.0))
    yield ("bessel-library", 1e-9, lambda: max(
        abs(bessel_k0(l) / kv(0, l) - 1.0) for l in (0.5, 1.0, 5.0)
    ) + max(
        abs(bessel_k1(l) / kv(1, l) - 1.0) for l in (0.5, 1.0, 5.0)
    ))


def cmd_selftest(cfg):
    results = []
    for name, def_tol, fn in _selftest_checks():
        tol = cfg.tolerance if cfg.tolerance is not None else def_tol
        value = float(fn())
        results.append({"name": name, "value": value, "tolerance": tol,
                        "ok": bool(value <= tol)})
    ok = all(r["ok"] for r in results)
    as_json = cfg.format == "json" or cfg.extras.get("json")
    if as_json:
        text = json.dumps({"checks": results, "ok": ok}, sort_keys=True,
                          indent=2) + "\n"
    else:
        lines = []
        for r in results:
            mark = "ok" if r["ok"] else "FAIL"
            lines.append(f"{mark:4s} {r['name']:20s} {f17(r['value'])} "
                         f"<= {f17(r['tolerance'])}")
        lines.append("selftest " + ("passed" if ok else "FAILED"))
        text = "\n".join(lines) + "\n"
    _emit(text, cfg.output)
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# argument plumbing


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="bisimplex",
        description="verification suites and data curves for the rotor "
                    "connection representation",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--gamma", type=float, default=None)
        p.add_argument("--lambda", dest="lam", type=float, default=None)
        p.add_argument("--samples", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--output", default=None)
        p.add_argument("--format", choices=("csv", "json"), default=None)
        p.add_argument("--rep", choices=("su2", "so3"), default=None)
        p.add_argument("--tolerance", type=float, default=None)
        p.add_argument("--config", default=None)
        if name == "onshell-verify":
            p.add_argument("--inject-bad-sign", action="store_true")
        if name == "suppression-curve":
            p.add_argument("--points", type=int, default=None)
        if name == "degenerate-n":
            p.add_argument("--area-scale", type=float, default=None)
            p.add_argument("--violate", type=float, default=None)
        if name == "selftest":
            p.add_argument("--json", action="store_true")
    return parser


def _load_config_file(path):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read config file: {exc}")
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config file is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        raise ValidationError("config file must hold a JSON object")
    alias = {"lambda": "lam"}
    known = set(RunConfig.DEFAULTS) | set(alias)
    extra = set(raw) - known
    if extra:
        raise ValidationError(f"unknown config keys: {sorted(extra)}")
    return {alias.get(k, k): v for k, v in raw.items()}


def build_config(argv=None):
    args = vars(_build_parser().parse_args(argv))
    command = args.pop("command")
    file_vals = {}
    if args.get("config"):
        file_vals = _load_config_file(args["config"])
    args.pop("config", None)
    merged = {}
    for name in RunConfig.FIELDS:
        flag = args.pop(name, None)
        if flag is not None:
            merged[name] = flag
        elif name in file_vals:
            merged[name] = file_vals[name]
    # remaining entries are command-specific extras
    merged.update({k: v for k, v in args.items() if v is not None})
    return RunConfig(command, **merged)


DISPATCH = {
    "lattice-info": cmd_lattice_info,
    "onshell-verify": cmd_onshell_verify,
    "suppression-curve": cmd_suppression_curve,
    "degenerate-n": cmd_degenerate_n,
    "selftest": cmd_selftest,
}


def main(argv=None):
    try:
        cfg = build_config(argv)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return DISPATCH[cfg.command](cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
