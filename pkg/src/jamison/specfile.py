"""Problem spec files (TOML) and their validation.

A spec names a group, a sequence in it, a task and the budgets for that
task. Example::

    task = "verdict"
    seed = 0

    [group]
    free_rank = 1
    torsion = []

    [sequence]
    family = "double_exp base=2"

Elements of a finitely generated group are written as flat integer lists
(free coordinates, then torsion residues); on Z^oo they are tables mapping
coordinate index strings to values. Characters are ``[[characters]]``
entries with ``angles`` (strings "p/q" or floats) and ``torsion`` residues.
"""

from __future__ import annotations

import re
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Any

import tomli
import tomli_w

from .characters import Character
from .errors import ParseError, ValidationError
from .groups import COUNTABLE, GroupDescriptor, GroupElement
from .sequences import (
    AllElements,
    CanonicalBasis,
    DoubleExponential,
    ExplicitList,
    Geometric,
    Polynomial,
    SequenceSpec,
)

TASKS = ("verdict", "epsilon", "weight", "repnorm", "tree", "oracle")
FAMILIES = {
    "explicit": ExplicitList,
    "geometric": Geometric,
    "double_exp": DoubleExponential,
    "polynomial": Polynomial,
    "all": AllElements,
    "canonical_basis": CanonicalBasis,
}
_FAMILY_KEYS = {
    "explicit": ("terms", "exhaustive"),
    "geometric": ("c", "ratio"),
    "double_exp": ("base",),
    "polynomial": ("coeffs",),
    "all": (),
    "canonical_basis": ("start",),
}
_SEQUENCE_KEYS = ("family", "prefix", "coordinate", "name")


@dataclass
class Policy:
    """Budgets. Every integer budget must be positive."""

    K: int = 64  # sequence truncation for empirical quantities
    eps_levels: int = 6
    q_max: int = 200
    max_bits: int = 4096
    grid: int = 3000
    grid_max: int = 2**20
    max_cells: int = 20_000_000
    delta: float = 1e-3
    bound_K: int | None = None
    lower_bound: bool = True  # epsilon task: also try the grid lower bound
    N: int = 30  # weight-table levels
    radius: int | None = None  # weight-table box radius; default from N
    exact: bool | None = None
    window: int | None = None  # number of Z^oo coordinates in the box
    shifts: int = 8  # translation norms for k <= shifts
    m_max: int = 200
    subinvariance: int = 6
    J: int = 2  # renorming levels
    p_max: int = 20  # translations rho(g_p) checked for p < p_max
    M: float = 3.0  # power bound for eigencharacter separation
    depth: int = 4  # character-tree depth
    moduli: tuple[int, ...] = ()  # oracle task: residue orbits to print
    samples: int = 20_000

    def __post_init__(self):
        self.moduli = tuple(self.moduli)
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in ("exact", "lower_bound"):
                if v is not None and not isinstance(v, bool):
                    raise ValidationError("must be a boolean", f"policy.{f.name}")
                continue
            if f.name == "moduli":
                if any(not isinstance(q, int) or q < 1 for q in v):
                    raise ValidationError("moduli must be positive integers", "policy.moduli")
                continue
            if v is None:
                continue
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ValidationError(f"expected a number, got {v!r}", f"policy.{f.name}")
            if f.name in ("delta", "M"):
                if not v > 0:
                    raise ValidationError("must be positive", f"policy.{f.name}")
            elif not isinstance(v, int) or v < 1:
                raise ValidationError("must be a positive integer", f"policy.{f.name}")
        if self.M < 1:
            raise ValidationError("power bound must be >= 1", "policy.M")


@dataclass
class ProblemSpec:
    group: GroupDescriptor
    sequence: SequenceSpec
    task: str = "verdict"
    policy: Policy = field(default_factory=Policy)
    seed: int = 0
    characters: tuple[Character, ...] = ()
    coefficients: tuple[complex, ...] = ()  # repnorm: the combination sum c_i chi_i
    points: tuple[GroupElement, ...] = ()  # repnorm: elements h for the word-length bound

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValidationError(f"unknown task {self.task!r}; expected one of {', '.join(TASKS)}", "task")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ValidationError("seed must be a nonnegative integer", "seed")
        if self.coefficients and len(self.coefficients) != len(self.characters):
            raise ValidationError("one coefficient per character", "characters")
        b = self.sequence.body
        if self.task == "tree":
            if isinstance(b, AllElements) or self.group.is_finite:
                raise ValidationError("tree needs a sequence that is not separating (no small witnesses here)", "task")
            if isinstance(b, ExplicitList):
                raise ValidationError("tree needs a sequence with a residue oracle; explicit lists are finite", "task")
        if self.task == "repnorm" and not self.characters:
            raise ValidationError("repnorm needs at least one character", "characters")
        if self.task == "weight" and self.group.countable and self.policy.window is None:
            raise ValidationError("weight tables on Z^oo need policy.window", "policy.window")


# ------------------------------------------------------------------ parsing


def _line_of(text: str, key: str, section: str | None = None) -> int | None:
    """Best-effort line number of ``key = ...`` (inside ``[section]`` if given)."""
    current = None
    pat = re.compile(rf"^\s*{re.escape(key)}\s*=")
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("["):
            current = s.strip("[]").strip()
            if section and current == section and key == "":
                return n
            continue
        if pat.match(line) and (section is None or current == section):
            return n
    return None


def _element(G: GroupDescriptor, v: Any, where: str) -> GroupElement:
    try:
        if isinstance(v, dict):
            return G.element({int(k): int(x) for k, x in v.items()})
        if isinstance(v, int) and not isinstance(v, bool):
            v = [v]
        if not isinstance(v, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in v):
            raise ValidationError(f"expected an integer list, got {v!r}")
        return G.from_flat(v)
    except (ValidationError, ValueError) as e:
        raise ValidationError(str(e).split("] ", 1)[-1], where) from None


def _element_out(G: GroupDescriptor, x: GroupElement) -> Any:
    if G.countable:
        return {str(i): v for i, v in x.free}
    return [x.coord(i) for i in range(G.rank)] + list(x.torsion)


def _angle(v: Any, where: str) -> Fraction | float:
    if isinstance(v, str):
        try:
            return Fraction(v.strip())
        except (ValueError, ZeroDivisionError):
            raise ValidationError(f"bad angle {v!r}", where) from None
    if isinstance(v, int) and not isinstance(v, bool):
        return Fraction(v)
    if isinstance(v, float):
        return v
    raise ValidationError(f"bad angle {v!r}", where)


def _angle_out(a) -> Any:
    return f"{a.numerator}/{a.denominator}" if isinstance(a, Fraction) else a


def _group(d: dict) -> GroupDescriptor:
    unknown = set(d) - {"free_rank", "torsion"}
    if unknown:
        raise ValidationError(f"unknown key {sorted(unknown)[0]!r}", f"group.{sorted(unknown)[0]}")
    rank = d.get("free_rank", 1)
    if isinstance(rank, str) and rank.lower() in ("countable", "infinite", "oo"):
        rank = COUNTABLE
    tors = d.get("torsion", [])
    if not isinstance(tors, list):
        raise ValidationError("torsion must be a list of orders", "group.torsion")
    try:
        return GroupDescriptor(rank, tuple(tors))
    except ValidationError as e:
        key = "torsion" if e.field == "torsion_orders" else "free_rank"
        raise ValidationError(str(e).split("] ", 1)[-1], f"group.{key}") from None


def _family_string(s: str) -> dict:
    """'double_exp base=2' -> {'family': 'double_exp', 'base': 2}."""
    parts = s.split()
    if not parts:
        raise ValidationError("empty family", "sequence.family")
    out: dict[str, Any] = {"family": parts[0]}
    for p in parts[1:]:
        if "=" not in p:
            raise ValidationError(f"expected key=value, got {p!r}", "sequence.family")
        k, v = p.split("=", 1)
        out[k] = [int(x) for x in v.split(",")] if "," in v else int(v)
    return out


def _sequence(G: GroupDescriptor, d: dict | str) -> SequenceSpec:
    if isinstance(d, str):
        d = _family_string(d)
    d = dict(d)
    fam = d.get("family")
    if isinstance(fam, str) and " " in fam.strip():
        extra = _family_string(fam)
        d.update(extra)
        fam = extra["family"]
    if fam not in FAMILIES:
        raise ValidationError(f"unknown family {fam!r}; expected one of {', '.join(FAMILIES)}", "sequence.family")
    allowed = set(_SEQUENCE_KEYS) | set(_FAMILY_KEYS[fam])
    for k in d:
        if k not in allowed:
            raise ValidationError(f"key {k!r} does not apply to family {fam!r}", f"sequence.{k}")
    args = {k: d[k] for k in _FAMILY_KEYS[fam] if k in d}
    if fam == "explicit":
        if "terms" not in args:
            raise ValidationError("explicit sequence needs terms", "sequence.terms")
        args["terms"] = tuple(_element(G, t, f"sequence.terms[{i}]") for i, t in enumerate(args["terms"]))
    if fam == "polynomial" and "coeffs" in args:
        c = args["coeffs"]
        args["coeffs"] = tuple(c) if isinstance(c, list) else (c,)
    for k, v in args.items():
        if k not in ("terms", "coeffs", "exhaustive") and (not isinstance(v, int) or isinstance(v, bool)):
            raise ValidationError(f"expected an integer, got {v!r}", f"sequence.{k}")
    body = FAMILIES[fam](**args)
    prefix = tuple(_element(G, t, f"sequence.prefix[{i}]") for i, t in enumerate(d.get("prefix", [])))
    return SequenceSpec(G, body, prefix, int(d.get("coordinate", 0)), d.get("name"))


def _character(G: GroupDescriptor, d: dict, i: int) -> tuple[Character, complex | None]:
    where = f"characters[{i}]"
    for k in d:
        if k not in ("angles", "torsion", "coefficient"):
            raise ValidationError(f"unknown character key {k!r}", f"{where}.{k}")
    ang = d.get("angles", [])
    if isinstance(ang, dict):
        angles = {int(k): _angle(v, f"{where}.angles") for k, v in ang.items()}
    elif isinstance(ang, list):
        angles = [_angle(v, f"{where}.angles") for v in ang]
    else:
        raise ValidationError("angles must be a list or table", f"{where}.angles")
    try:
        chi = Character.of(G, angles, d.get("torsion", []))
    except ValidationError as e:
        raise ValidationError(str(e), where) from None
    c = d.get("coefficient")
    if c is not None:
        if isinstance(c, list) and len(c) == 2:
            c = complex(c[0], c[1])
        elif isinstance(c, (int, float)) and not isinstance(c, bool):
            c = complex(c)
        else:
            raise ValidationError("coefficient must be a number or [re, im]", f"{where}.coefficient")
    return chi, c


def spec_from_dict(d: dict) -> ProblemSpec:
    known = {"task", "seed", "group", "sequence", "policy", "characters", "points"}
    for k in d:
        if k not in known:
            raise ValidationError(f"unknown top-level key {k!r}", k)
    if "group" not in d:
        raise ValidationError("missing [group] section", "group")
    if "sequence" not in d:
        raise ValidationError("missing [sequence] section", "sequence")
    G = _group(d["group"])
    seq = _sequence(G, d["sequence"])
    pol = d.get("policy", {})
    names = {f.name for f in fields(Policy)}
    for k in pol:
        if k not in names:
            raise ValidationError(f"unknown policy key {k!r}", f"policy.{k}")
    policy = Policy(**pol)
    chars, coefs = [], []
    for i, c in enumerate(d.get("characters", [])):
        chi, co = _character(G, c, i)
        chars.append(chi)
        coefs.append(co)
    if any(c is not None for c in coefs):
        if any(c is None for c in coefs):
            raise ValidationError("give a coefficient for every character or none", "characters")
    else:
        coefs = []
    points = tuple(_element(G, p, f"points[{i}]") for i, p in enumerate(d.get("points", [])))
    return ProblemSpec(G, seq, d.get("task", "verdict"), policy, d.get("seed", 0), tuple(chars), tuple(coefs), points)


def parse_spec_text(text: str) -> ProblemSpec:
    try:
        d = tomli.loads(text)
    except tomli.TOMLDecodeError as e:
        m = re.search(r"line (\d+)", str(e))
        raise ParseError(str(e), None, int(m.group(1)) if m else None) from None
    try:
        return spec_from_dict(d)
    except ValidationError as e:
        if e.line is not None or not e.field:
            raise
        parts = e.field.split(".")
        key = re.sub(r"\[\d+\]$", "", parts[-1])
        section = parts[0] if len(parts) > 1 else None
        line = _line_of(text, key, section) or (_line_of(text, key) if section else None)
        if line is None and section:
            line = _line_of(text, "", section)
        raise ValidationError(str(e).split("] ", 1)[-1], e.field, line) from None


def parse_spec(path: str | Path) -> ProblemSpec:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        raise ParseError(f"spec file is not UTF-8: {e}") from None
    return parse_spec_text(text)


# ------------------------------------------------------------------ emission


def spec_to_dict(spec: ProblemSpec) -> dict:
    G, s = spec.group, spec.sequence
    b = s.body
    seq: dict[str, Any] = {"family": b.family}
    if isinstance(b, ExplicitList):
        seq["terms"] = [_element_out(G, t) for t in b.terms]
        seq["exhaustive"] = b.exhaustive
    elif isinstance(b, Polynomial):
        seq["coeffs"] = list(b.coeffs)
    else:
        seq.update({k: v for k, v in asdict(b).items()})
    if s.prefix:
        seq["prefix"] = [_element_out(G, t) for t in s.prefix]
    if s.coordinate:
        seq["coordinate"] = s.coordinate
    if s.name:
        seq["name"] = s.name
    pol = {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(spec.policy).items() if v is not None}
    out: dict[str, Any] = {
        "task": spec.task,
        "seed": spec.seed,
        "group": {"free_rank": "countable" if G.countable else G.free_rank, "torsion": list(G.torsion_orders)},
        "sequence": seq,
        "policy": pol,
    }
    if spec.characters:
        chars = []
        for i, chi in enumerate(spec.characters):
            if G.countable:
                c: dict[str, Any] = {"angles": {str(j): _angle_out(a) for j, a in chi.angles}}
            else:
                c = {"angles": [_angle_out(chi.angle(j)) for j in range(G.rank)]}
            if G.torsion_orders:
                c["torsion"] = list(chi.torsion)
            if spec.coefficients:
                z = spec.coefficients[i]
                c["coefficient"] = [z.real, z.imag]
            chars.append(c)
        out["characters"] = chars
    if spec.points:
        out["points"] = [_element_out(G, p) for p in spec.points]
    return out


def emit_spec(spec: ProblemSpec) -> str:
    return tomli_w.dumps(spec_to_dict(spec))
