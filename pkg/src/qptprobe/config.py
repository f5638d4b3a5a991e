"""Line-oriented sweep configuration files.

Example::

    # two-spin XY model driven radially at theta = pi/4
    [model]
    sites = 2

    [curve]
    delta = lambda * sin(pi/4)
    h = lambda * cos(pi/4)

    [grid]
    min = 0.5
    max = 1.5
    points = 101

    [measures]
    names = coherence_l1, geometric_coherence:trace

Sections and keys (``*`` = required):

- ``model``: ``sites``\\*, ``kind`` (``xy_two_spin`` when sites = 2,
  otherwise ``xy_chain``), ``boundary`` (``periodic``)
- ``curve``: ``delta``\\*, ``h``\\*, ``beta`` (``zero-temperature``),
  ``degeneracy_tol``
- ``grid``: ``min``\\*, ``max``\\*, ``points``\\*, ``steps`` (``0.01, 0.005, 0.0025``)
- ``measures``: ``names``\\* (``tag`` or ``tag:distance``), ``distances``
  (``trace``), ``split`` (``1 2 | 3 4``)
- ``bases``: ``names`` (``computational``), ``matrix.<label>`` (rows
  separated by ``;``, entries by ``,``, Python complex literals)
- ``output``: ``dir``, ``parallelism``
"""

import math

import numpy as np

from .errors import ConfigError, ExpressionError
from .expr import Expression
from .model import ModelSpec, CurveSpec
from .states import IncoherentBasis
from .sweep import DEFAULT_STEPS, MeasureSpec, SweepConfig

SCHEMA = {
    "model": {"sites", "kind", "boundary"},
    "curve": {"delta", "h", "beta", "degeneracy_tol"},
    "grid": {"min", "max", "points", "steps"},
    "measures": {"names", "distances", "split"},
    "bases": {"names"},
    "output": {"dir", "parallelism"},
}
REQUIRED = {
    "model": ("sites",),
    "curve": ("delta", "h"),
    "grid": ("min", "max", "points"),
    "measures": ("names",),
}


def _read_sections(text):
    """``{section: {key: (value, line)}}``; rejects unknown sections and keys."""
    sections = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw.strip()!r}", line=lineno)
            current = line[1:-1].strip()
            if current not in SCHEMA:
                raise ConfigError(f"unknown section {current!r}", current, line=lineno)
            if current in sections:
                raise ConfigError("duplicate section", current, line=lineno)
            sections[current] = {}
            continue
        if "=" not in line:
            raise ConfigError(f"expected key = value, got {raw.strip()!r}", current, line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if current is None:
            raise ConfigError("key outside any section", None, key, lineno)
        allowed = key in SCHEMA[current] or (current == "bases" and key.startswith("matrix."))
        if not allowed:
            raise ConfigError("unknown key", current, key, lineno)
        if key in sections[current]:
            raise ConfigError("duplicate key", current, key, lineno)
        sections[current][key] = (value, lineno)
    for section, keys in REQUIRED.items():
        for key in keys:
            if key not in sections.get(section, {}):
                raise ConfigError("missing required key", section, key)
    return sections


class _Reader:
    def __init__(self, sections):
        self.sections = sections

    def raw(self, section, key, default=None):
        entry = self.sections.get(section, {}).get(key)
        return default if entry is None else entry[0]

    def line(self, section, key):
        entry = self.sections.get(section, {}).get(key)
        return None if entry is None else entry[1]

    def error(self, message, section, key):
        return ConfigError(message, section, key, self.line(section, key))

    def number(self, section, key, default=None, cast=float):
        text = self.raw(section, key)
        if text is None:
            return default
        try:
            if cast is float:
                expr = Expression(text)
                if "lambda" in expr.canonical:
                    raise ValueError("lambda is not allowed here")
                value = expr(0.0)
            else:
                value = cast(text)
        except (ValueError, ExpressionError) as exc:
            raise self.error(f"not a valid number: {text!r}", section, key) from exc
        if cast is float and not math.isfinite(value):
            raise self.error(f"not a finite number: {text!r}", section, key)
        return value

    def listing(self, section, key, default=()):
        text = self.raw(section, key)
        if text is None:
            return tuple(default)
        return tuple(item.strip() for item in text.split(",") if item.strip())


def _parse_matrix(reader, key):
    text = reader.raw("bases", key)
    try:
        rows = [[complex(x.strip().replace(" ", "")) for x in row.split(",")] for row in text.split(";") if row.strip()]
        m = np.array(rows, dtype=complex)
        return IncoherentBasis(m, "explicit:" + key.split(".", 1)[1])
    except ValueError as exc:
        raise reader.error(f"invalid basis matrix: {exc}", "bases", key) from exc


def _parse_split(reader):
    text = reader.raw("measures", "split")
    if text is None:
        return None
    parts = text.split("|")
    try:
        if len(parts) != 2:
            raise ValueError("need exactly one '|'")
        return tuple(tuple(int(s) for s in p.split()) for p in parts)
    except ValueError as exc:
        raise reader.error(f"invalid split {text!r}", "measures", "split") from exc


def parse_config(text):
    """Parse and validate a configuration document into a SweepConfig."""
    r = _Reader(_read_sections(text))
    sites = r.number("model", "sites", cast=int)
    kind = r.raw("model", "kind", "xy_two_spin" if sites == 2 else "xy_chain")
    try:
        model = ModelSpec(kind, sites, r.raw("model", "boundary", "periodic"))
    except ValueError as exc:
        raise r.error(str(exc), "model", "kind") from exc

    exprs = {}
    for key in ("delta", "h", "beta"):
        text = r.raw("curve", key)
        if text is None or (key == "beta" and text == "zero-temperature"):
            continue
        try:
            exprs[key] = Expression(text)
        except ExpressionError as exc:
            raise r.error(str(exc), "curve", key) from exc
    curve = CurveSpec(exprs["delta"], exprs["h"], exprs.get("beta", "zero-temperature"))

    steps = DEFAULT_STEPS
    if r.raw("grid", "steps") is not None:
        try:
            steps = tuple(float(s) for s in r.listing("grid", "steps"))
        except ValueError as exc:
            raise r.error("steps must be numbers", "grid", "steps") from exc

    split = _parse_split(r)
    measures = []
    for item in r.listing("measures", "names"):
        tag, _, dist = item.partition(":")
        measures.append(MeasureSpec(tag.strip(), dist.strip() or None, split if tag == "geometric_entanglement" else None))
        if tag == "geometric_coherence" and not dist:
            raise r.error("geometric_coherence needs a distance, e.g. geometric_coherence:trace", "measures", "names")

    bases = list(r.listing("bases", "names", ("computational",)))
    for key in sorted(r.sections.get("bases", {})):
        if key.startswith("matrix."):
            bases.append(_parse_matrix(r, key))

    kwargs = dict(
        model=model,
        curve=curve,
        lam_min=r.number("grid", "min"),
        lam_max=r.number("grid", "max"),
        points=r.number("grid", "points", cast=int),
        measures=tuple(measures),
        steps=steps,
        bases=tuple(bases),
        distances=r.listing("measures", "distances", ("trace",)),
        degeneracy_tol=r.number("curve", "degeneracy_tol", 1e-9),
        parallelism=r.number("output", "parallelism", 1, cast=int),
        out_dir=r.raw("output", "dir", "qptprobe-out"),
    )
    try:
        return SweepConfig(**kwargs)
    except ConfigError as exc:
        line = r.line(exc.section, exc.key)
        if line is None:  # defaulted key: point at the section instead
            line = min((ln for _, ln in r.sections.get(exc.section, {}).values()), default=None)
        raise ConfigError(str(exc).rsplit(" (", 1)[0], exc.section, exc.key, line) from None
