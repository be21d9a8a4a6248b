"""Run configuration: a TOML document with fixed sections.

Every diagnostic names the offending field and, where the document allows it,
the line it was found on.  See the README for the full schema.
"""

import re
import sys as _sys
from dataclasses import asdict, dataclass, field, fields, replace

if _sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
import tomli_w

from .errors import AdmissibilityError, ConfigError
from .model import DislocationSystem, Material, geometry_from_spec, validate_system

BACKENDS = ("auto", "analytic", "fem")


@dataclass(frozen=True)
class EnergyOptions:
    R: float = 0.0  # 0 selects the default cut radius
    eps_ladder: tuple = ()


@dataclass(frozen=True)
class ForceOptions:
    R: float = 0.0  # 0 selects the default contour radius
    max_discrepancy: float = 1e-4


@dataclass(frozen=True)
class FlowOptions:
    dt: float = 0.01
    max_steps: int = 200
    force_tol: float = 1e-8
    margin: float = 0.5
    mobility: tuple = ()


@dataclass(frozen=True)
class VerifyOptions:
    suites: tuple = ("all",)
    seed: int = 0


@dataclass(frozen=True)
class RunConfig:
    mu: float = 1.0
    lam: float = 1.0
    geometry: str = "disk"
    vertices: tuple = ()
    system_id: str = "system"
    epsilon0: float = 0.05
    dislocations: tuple = ()  # of (x, y, b)
    backend: str = "auto"
    resolution: float = 0.05
    threads: int = 1
    out_dir: str = "."
    energy: EnergyOptions = field(default_factory=EnergyOptions)
    forces: ForceOptions = field(default_factory=ForceOptions)
    flow: FlowOptions = field(default_factory=FlowOptions)
    verify: VerifyOptions = field(default_factory=VerifyOptions)

    @property
    def material(self):
        return Material(self.mu, self.lam)

    @property
    def geom(self):
        return geometry_from_spec(self.geometry, self.vertices or None)

    @property
    def system(self):
        pos = [(x, y) for x, y, _ in self.dislocations]
        b = [d[2] for d in self.dislocations]
        return DislocationSystem.from_arrays(pos, b, self.epsilon0)


# ---------------------------------------------------------------------------
# line lookup


def _key_lines(text):
    """Map ``section.key``, ``section`` and ``section[n]`` to 1-based lines."""
    out = {}
    section = ""
    counts = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        m = re.match(r"^\[\[\s*([\w.\-]+)\s*\]\]$", line)
        if m:
            name = m.group(1)
            idx = counts.get(name, 0)
            counts[name] = idx + 1
            section = f"{name}[{idx}]"
            out.setdefault(section, no)
            continue
        m = re.match(r"^\[\s*([\w.\-]+)\s*\]$", line)
        if m:
            section = m.group(1)
            out.setdefault(section, no)
            continue
        m = re.match(r"^([\w\-]+)\s*=", line)
        if m:
            out.setdefault(f"{section}.{m.group(1)}" if section else m.group(1), no)
    return out


def _inline_element_lines(text, key):
    """Lines of the ``{...}`` elements of an inline array assigned to ``key``."""
    res = []
    depth = 0
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if depth == 0:
            m = re.match(rf"^\s*{re.escape(key)}\s*=\s*(\[.*)$", line)
            if not m:
                continue
            line = m.group(1)
        res.extend([no] * line.count("{"))
        depth += line.count("[") - line.count("]")
        if depth <= 0:
            depth = 0
    return res


class _Ctx:
    def __init__(self, text, path):
        self.text = text
        self.path = path
        self.lines = _key_lines(text)

    def where(self, *keys):
        for k in keys:
            if k in self.lines:
                return f"{self.path}:{self.lines[k]}: "
        return f"{self.path}: "

    def fail(self, msg, *keys):
        raise ConfigError(self.where(*keys) + msg)


def _num(ctx, table, key, section, default, kind=float, positive=False, minimum=None):
    full = f"{section}.{key}"
    if key not in table:
        return default
    val = table[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        ctx.fail(f"field '{full}' must be a number, got {val!r}", full)
    if kind is int and not float(val).is_integer():
        ctx.fail(f"field '{full}' must be an integer, got {val!r}", full)
    val = kind(val)
    if positive and not val > 0:
        ctx.fail(f"field '{full}' must be positive, got {val!r}", full)
    if minimum is not None and val < minimum:
        ctx.fail(f"field '{full}' must be >= {minimum}, got {val!r}", full)
    return val


def _table(ctx, doc, name):
    val = doc.get(name, {})
    if not isinstance(val, dict):
        ctx.fail(f"'{name}' must be a table", name)
    return val


def _unknown(ctx, table, section, allowed):
    for k in table:
        if k not in allowed:
            full = f"{section}.{k}" if section else k
            ctx.fail(f"unknown field '{full}' (expected one of: {', '.join(sorted(allowed))})",
                     full, section)


SECTIONS = {"material", "geometry", "system", "solver", "energy", "forces", "flow", "verify",
            "output"}


def parse_config(text, path="<config>", check_admissible=True):
    """Parse a TOML document into a :class:`RunConfig`."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML: {exc}") from None
    ctx = _Ctx(text, path)
    _unknown(ctx, doc, "", SECTIONS)

    mat = _table(ctx, doc, "material")
    _unknown(ctx, mat, "material", {"mu", "lambda"})
    mu = _num(ctx, mat, "mu", "material", 1.0, positive=True)
    lam = _num(ctx, mat, "lambda", "material", 1.0, positive=True)

    geo = _table(ctx, doc, "geometry")
    _unknown(ctx, geo, "geometry", {"type", "vertices"})
    kind = geo.get("type", "disk")
    if kind not in ("disk", "polygon"):
        ctx.fail(f"field 'geometry.type' must be 'disk' or 'polygon', got {kind!r}",
                 "geometry.type")
    verts = ()
    if kind == "polygon":
        if "vertices" not in geo:
            ctx.fail("field 'geometry.vertices' is required for a polygon", "geometry")
        try:
            verts = tuple((float(a), float(b)) for a, b in geo["vertices"])
        except (TypeError, ValueError):
            ctx.fail("field 'geometry.vertices' must be a list of [x, y] pairs",
                     "geometry.vertices")
        try:
            geometry_from_spec("polygon", verts)
        except ValueError as exc:
            ctx.fail(f"field 'geometry.vertices': {exc}", "geometry.vertices")

    sysd = _table(ctx, doc, "system")
    _unknown(ctx, sysd, "system", {"id", "epsilon0", "dislocations"})
    sid = str(sysd.get("id", "system"))
    eps0 = _num(ctx, sysd, "epsilon0", "system", 0.05, positive=True)
    raw = sysd.get("dislocations", [])
    if not isinstance(raw, list):
        ctx.fail("field 'system.dislocations' must be an array of tables", "system.dislocations")
    inline = _inline_element_lines(text, "dislocations")
    dis = []
    for i, d in enumerate(raw):
        keys = (f"system.dislocations[{i}]", "system.dislocations", "system")
        loc = f"{path}:{inline[i]}: " if i < len(inline) and keys[0] not in ctx.lines else None
        if not isinstance(d, dict):
            ctx.fail(f"system.dislocations[{i}] must be a table with x, y, b", *keys)
        for k in ("x", "y", "b"):
            if k not in d:
                msg = f"system.dislocations[{i}]: missing field '{k}'"
                if loc:
                    raise ConfigError(loc + msg)
                ctx.fail(msg, *keys)
            v = d[k]
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                msg = f"system.dislocations[{i}].{k} must be a number, got {v!r}"
                if loc:
                    raise ConfigError(loc + msg)
                ctx.fail(msg, *keys)
        extra = set(d) - {"x", "y", "b"}
        if extra:
            ctx.fail(f"system.dislocations[{i}]: unknown field(s) {sorted(extra)}", *keys)
        if d["b"] == 0:
            msg = f"system.dislocations[{i}].b must be nonzero"
            if loc:
                raise ConfigError(loc + msg)
            ctx.fail(msg, *keys)
        dis.append((float(d["x"]), float(d["y"]), float(d["b"])))

    sol = _table(ctx, doc, "solver")
    _unknown(ctx, sol, "solver", {"backend", "resolution"})
    backend = sol.get("backend", "auto")
    if backend not in BACKENDS:
        ctx.fail(f"field 'solver.backend' must be one of {BACKENDS}, got {backend!r}",
                 "solver.backend")
    res = _num(ctx, sol, "resolution", "solver", 0.05, positive=True)

    en = _table(ctx, doc, "energy")
    _unknown(ctx, en, "energy", {"R", "eps_ladder"})
    ladder = en.get("eps_ladder", [])
    if not isinstance(ladder, list) or not all(
            isinstance(e, (int, float)) and not isinstance(e, bool) and e > 0 for e in ladder):
        ctx.fail("field 'energy.eps_ladder' must be a list of positive numbers", "energy.eps_ladder")
    energy = EnergyOptions(_num(ctx, en, "R", "energy", 0.0, minimum=0.0),
                           tuple(float(e) for e in ladder))

    fo = _table(ctx, doc, "forces")
    _unknown(ctx, fo, "forces", {"R", "max_discrepancy"})
    forces = ForceOptions(_num(ctx, fo, "R", "forces", 0.0, minimum=0.0),
                          _num(ctx, fo, "max_discrepancy", "forces", 1e-4, positive=True))

    fl = _table(ctx, doc, "flow")
    _unknown(ctx, fl, "flow", {"dt", "max_steps", "force_tol", "margin", "mobility"})
    mob = fl.get("mobility", [])
    if isinstance(mob, (int, float)) and not isinstance(mob, bool):
        mob = [mob]
    if not isinstance(mob, list) or not all(isinstance(m, (int, float)) and m > 0 for m in mob):
        ctx.fail("field 'flow.mobility' must be a positive number or list of them", "flow.mobility")
    if len(mob) not in (0, 1, len(dis)):
        ctx.fail(f"field 'flow.mobility' needs 1 or {len(dis)} entries, got {len(mob)}",
                 "flow.mobility")
    flow = FlowOptions(_num(ctx, fl, "dt", "flow", 0.01, positive=True),
                       _num(ctx, fl, "max_steps", "flow", 200, kind=int, minimum=0),
                       _num(ctx, fl, "force_tol", "flow", 1e-8, minimum=0.0),
                       _num(ctx, fl, "margin", "flow", 0.5, minimum=0.0),
                       tuple(float(m) for m in mob))

    ve = _table(ctx, doc, "verify")
    _unknown(ctx, ve, "verify", {"suites", "seed"})
    suites = ve.get("suites", ["all"])
    if isinstance(suites, str):
        suites = [suites]
    if not isinstance(suites, list) or not all(isinstance(s, str) for s in suites):
        ctx.fail("field 'verify.suites' must be a list of suite names", "verify.suites")
    verify = VerifyOptions(tuple(suites), _num(ctx, ve, "seed", "verify", 0, kind=int, minimum=0))

    out = _table(ctx, doc, "output")
    _unknown(ctx, out, "output", {"dir", "threads"})
    out_dir = str(out.get("dir", "."))
    threads = _num(ctx, out, "threads", "output", 1, kind=int, minimum=1)

    cfg = RunConfig(mu, lam, kind, verts, sid, eps0, tuple(dis), backend, res, threads, out_dir,
                    energy, forces, flow, verify)
    if check_admissible and dis:
        try:
            validate_system(cfg.geom, cfg.system, cfg.material)
        except AdmissibilityError as exc:
            ctx.fail(f"system is not admissible: {exc} (largest admissible epsilon0: "
                     f"{exc.max_epsilon0:.6g})", "system.epsilon0", "system")
    return cfg


def load_config(path, check_admissible=True):
    try:
        with open(path, "rb") as fh:
            text = fh.read().decode("utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise ConfigError(f"{path}: config is not valid UTF-8") from None
    return parse_config(text, str(path), check_admissible)


def to_document(cfg):
    """Canonical nested mapping of ``cfg`` (the inverse of :func:`parse_config`)."""
    geo = {"type": cfg.geometry}
    if cfg.geometry == "polygon":
        geo["vertices"] = [list(v) for v in cfg.vertices]
    doc = {
        "material": {"mu": cfg.mu, "lambda": cfg.lam},
        "geometry": geo,
        "system": {"id": cfg.system_id, "epsilon0": cfg.epsilon0,
                   "dislocations": [{"x": x, "y": y, "b": b} for x, y, b in cfg.dislocations]},
        "solver": {"backend": cfg.backend, "resolution": cfg.resolution},
        "energy": {"R": cfg.energy.R, "eps_ladder": list(cfg.energy.eps_ladder)},
        "forces": asdict(cfg.forces),
        "flow": {**asdict(cfg.flow), "mobility": list(cfg.flow.mobility)},
        "verify": {"suites": list(cfg.verify.suites), "seed": cfg.verify.seed},
        "output": {"dir": cfg.out_dir, "threads": cfg.threads},
    }
    return doc


def dump_config(cfg):
    return tomli_w.dumps(to_document(cfg))


def with_overrides(cfg, **kw):
    names = {f.name for f in fields(cfg)}
    return replace(cfg, **{k: v for k, v in kw.items() if k in names and v is not None})
