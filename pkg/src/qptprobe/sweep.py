"""Parameter sweeps: measure profiles over a lambda grid, candidate
critical points, their classification and the CSV/JSON outputs.
"""

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cache import content_key
from .errors import ConfigError, QPTError
from .measures import COHERENCE_TAGS, DISTANCE_KINDS, MEASURE_TAGS, MeasureKind, distance
from .model import CurveSpec, ModelSpec, magnetization, parity_operator
from .numeric import DEGENERACY_TOL
from .probe import (
    berry_phase,
    classify_divergence,
    evaluate_measure,
    half_magnetization,
    line_element_rate,
    line_element_second,
    measure_susceptibility,
    order_parameter_expectation,
    parity_fourier_basis,
    second_susceptibility,
    theorem3_basis,
)
from .states import IncoherentBasis, StatePath

DEFAULT_STEPS = (1e-2, 5e-3, 2.5e-3)
FIXED_BASES = ("computational", "bell_type_2q")
AUTO_BASES = ("theorem3_auto", "parity_fourier_auto")
CSV_HEADER = ("lambda", "delta", "h", "beta", "measure", "value", "d1", "d2", "flags")
JUMP_FACTOR = 1.5  # a jump must exceed both neighbours by this factor
JUMP_FLOOR = 1e-8
BISECT_TOL = 1e-12


@dataclass(frozen=True)
class MeasureSpec:
    """A measure as written in a config; coherence-type ones get bases later."""

    tag: str
    distance: str | None = None
    split: tuple | None = None

    @property
    def coherence_type(self):
        return self.tag in COHERENCE_TAGS

    def bind(self, basis=None):
        return MeasureKind(self.tag, basis if self.coherence_type else None, self.distance, self.split)


@dataclass(frozen=True)
class SweepConfig:
    model: ModelSpec
    curve: CurveSpec
    lam_min: float
    lam_max: float
    points: int
    measures: tuple
    steps: tuple = DEFAULT_STEPS
    bases: tuple = ("computational",)
    distances: tuple = ("trace",)
    degeneracy_tol: float = DEGENERACY_TOL
    parallelism: int = 1
    out_dir: str = "qptprobe-out"

    def __post_init__(self):
        if not self.measures:
            raise ConfigError("at least one measure is required", "measures", "names")
        if self.points < 3:
            raise ConfigError("grid needs at least 3 points", "grid", "points")
        if not self.lam_min < self.lam_max:
            raise ConfigError("grid min must be below max", "grid", "min")
        if len(self.steps) < 3:
            raise ConfigError("need at least 3 refinement steps", "grid", "steps")
        if any(b >= a for a, b in zip(self.steps, self.steps[1:])) or self.steps[-1] <= 0:
            raise ConfigError("refinement steps must be positive and strictly decreasing", "grid", "steps")
        if self.steps[0] > self.spacing * (1 + 1e-12):
            raise ConfigError("refinement steps must not exceed the grid spacing", "grid", "steps")
        for kind in self.distances:
            if kind not in DISTANCE_KINDS:
                raise ConfigError(f"unknown distance {kind!r}", "measures", "distances")
        if not self.distances:
            raise ConfigError("at least one distance is required", "measures", "distances")
        for m in self.measures:
            if m.tag not in MEASURE_TAGS:
                raise ConfigError(f"unknown measure {m.tag!r}", "measures", "names")
            if m.tag == "geometric_discord_2q" and self.model.dim != 4:
                raise ConfigError("geometric_discord_2q needs a two-qubit model", "measures", "names")
        for b in self.bases:
            if isinstance(b, IncoherentBasis):
                if b.dim != self.model.dim:
                    raise ConfigError(f"basis {b.label} has dimension {b.dim}", "bases", b.label)
            elif b not in FIXED_BASES + AUTO_BASES:
                raise ConfigError(f"unknown basis {b!r}", "bases", "names")
            elif b == "bell_type_2q" and self.model.dim != 4:
                raise ConfigError("bell_type_2q needs a two-qubit model", "bases", "names")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be positive", "output", "parallelism")

    @property
    def spacing(self):
        return (self.lam_max - self.lam_min) / (self.points - 1)

    def grid(self):
        return np.linspace(self.lam_min, self.lam_max, self.points)

    def path(self):
        return StatePath(self.model, self.curve, self.degeneracy_tol)

    def canonical(self):
        """Everything that affects computed values, as plain JSON data."""
        return {
            "model": {"kind": self.model.kind, "sites": self.model.n_sites, "boundary": self.model.boundary},
            "curve": self.curve.canonical(),
            "degeneracy_tol": repr(self.degeneracy_tol),
        }


@dataclass(frozen=True)
class ResultRow:
    lam: float
    delta: float
    h: float
    beta: float
    measure: str
    value: float
    d1: float
    d2: float
    flags: tuple = ()


@dataclass
class CriticalPointRecord:
    lam: float
    classification: str
    detecting: tuple
    berry_jump: float | None = None
    berry_jump_integrated: float | None = None
    order_parameter_jump: float | None = None
    parity_flip: bool = False
    evidence: dict = field(default_factory=dict)
    bases: dict = field(default_factory=dict)


@dataclass
class SweepResult:
    rows: list
    criticals: list
    notes: list
    cache_stats: dict | None = None


def _basis_digest(basis):
    return hashlib.sha256(basis.digest_bytes()).hexdigest()


def cache_key(config, lam, step, measure):
    """Content hash of every input that determines one row."""
    payload = {
        "config": config.canonical(),
        "lambda": repr(float(lam)),
        "step": repr(float(step)),
        "measure": {
            "tag": measure.tag,
            "distance": measure.distance,
            "split": None if measure.split is None else [list(s) for s in measure.split],
            "basis": None if measure.basis is None else [measure.basis.label, _basis_digest(measure.basis)],
        },
    }
    return content_key(payload)


def _resolve_fixed_bases(config):
    out = []
    for b in config.bases:
        if isinstance(b, IncoherentBasis):
            out.append(b)
        elif b == "computational":
            out.append(IncoherentBasis.computational(config.model.dim))
        elif b == "bell_type_2q":
            out.append(IncoherentBasis.bell_type_2q())
    return out


def fixed_measures(config):
    """Measures whose basis is known before the sweep starts."""
    bases = _resolve_fixed_bases(config)
    out = []
    for spec in config.measures:
        if spec.coherence_type:
            out.extend(spec.bind(b) for b in bases)
        else:
            out.append(spec.bind())
    return out


def _error_token(exc):
    return f"error={type(exc).__name__}"


def evaluate_row(config, path, lam, measure, step):
    """Value and central differences of one measure at one grid point."""
    flags = set()
    try:
        lo, mid, hi = path.at(lam - step), path.at(lam), path.at(lam + step)
    except QPTError as exc:
        return {"value": math.nan, "d1": math.nan, "d2": math.nan, "flags": [_error_token(exc)]}
    if lo.crossing or mid.crossing or hi.crossing:
        flags.add("crossing")
    try:
        v_lo, v_mid, v_hi = (evaluate_measure(measure, p) for p in (lo, mid, hi))
    except QPTError as exc:
        flags.add(_error_token(exc))
        v_lo = v_mid = v_hi = math.nan
    if measure.requires_pure and mid.psi is None:
        flags.add("undefined")
    d1 = (v_hi - v_lo) / (2 * step)
    d2 = (v_hi - 2 * v_mid + v_lo) / step**2
    if "undefined" not in flags and not any(t.startswith("error=") for t in flags):
        if not (math.isfinite(d1) and math.isfinite(d2) and math.isfinite(v_mid)):
            flags.add("overflow")
    return {"value": v_mid, "d1": d1, "d2": d2, "flags": sorted(flags)}


def _profile(config, path, grid, measures, cache, pool):
    """Rows for ``measures`` over ``grid``; deterministic regardless of pool size."""
    step = config.steps[-1]

    def task(lam):
        out = []
        for m in measures:
            key = cache_key(config, lam, step, m) if cache is not None else None
            data = cache.get(key) if cache is not None else None
            if data is None:
                data = evaluate_row(config, path, lam, m, step)
                if cache is not None:
                    cache.put(key, data)
            out.append((m, data))
        return lam, out

    results = list(pool.map(task, grid)) if pool is not None else [task(lam) for lam in grid]
    rows = []
    for lam, items in results:
        delta, h, beta = _curve_point(path, lam)
        for m, data in items:
            rows.append(
                ResultRow(
                    float(lam), delta, h, beta, m.name, float(data["value"]),
                    float(data["d1"]), float(data["d2"]), tuple(data["flags"]),
                )
            )
    return rows


def _curve_point(path, lam):
    try:
        p = path.at(lam)
        return p.delta, p.h, p.beta
    except QPTError:
        return math.nan, math.nan, math.nan


def _stand_out(values, floor=JUMP_FLOOR):
    """Indices whose magnitude exceeds both neighbours by JUMP_FACTOR."""
    v = np.abs(np.asarray(values, dtype=float))
    out = []
    for i in range(v.size):
        if not (math.isfinite(v[i]) and v[i] > floor):
            continue
        left = v[i - 1] if i > 0 else 0.0
        right = v[i + 1] if i + 1 < v.size else 0.0
        if v[i] > JUMP_FACTOR * left and v[i] > JUMP_FACTOR * right:
            out.append(i)
    return out


def _bisect_jump(path, a, b, kind):
    """Shrink [a, b] towards the state discontinuity inside it."""
    while b - a > BISECT_TOL * max(1.0, abs(a)):
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        pa, pm, pb = path.at(a), path.at(m), path.at(b)
        if distance(pa.state, pm.state, kind) >= distance(pm.state, pb.state, kind):
            b = m
        else:
            a = m
    return 0.5 * (a + b)


def _parity(path, lam, diag):
    p = path.at(lam)
    return float(np.real(np.vdot(p.psi, diag * p.psi)))


def _bisect_parity(path, a, b, diag, sign_a):
    while b - a > BISECT_TOL * max(1.0, abs(a)):
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        if np.sign(_parity(path, m, diag)) == sign_a:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def line_element_candidates(config, path, grid):
    kind = config.distances[0]
    try:
        chords = [distance(path.at(a).state, path.at(b).state, kind) for a, b in zip(grid, grid[1:])]
    except QPTError:
        return []
    return [(_bisect_jump(path, grid[i], grid[i + 1], kind), "line_element") for i in _stand_out(chords)]


def parity_candidates(config, path, grid):
    if not config.curve.zero_temperature:
        return []
    diag = np.diag(parity_operator(config.model.n_sites)).real
    out = []
    prev = None
    for lam in grid:
        try:
            point = path.at(lam)
        except QPTError:
            prev = None
            continue
        if point.crossing:
            continue
        s = np.sign(_parity(path, lam, diag))
        if prev is not None and s != prev[1] and s != 0 and prev[1] != 0:
            out.append((_bisect_parity(path, prev[0], lam, diag, prev[1]), "parity"))
        prev = (lam, s)
    return out


def measure_candidates(config, path, grid, rows_by_measure):
    out = []
    for name, rows in sorted(rows_by_measure.items()):
        values = np.array([r.value for r in rows])
        if not np.all(np.isfinite(values)):
            continue
        jumps = np.diff(values)
        for i in _stand_out(jumps):
            out.append((0.5 * (grid[i] + grid[i + 1]), "measure"))
        kinks = values[2:] - 2 * values[1:-1] + values[:-2]
        for i in _stand_out(kinks):
            out.append((float(grid[i + 1]), "measure"))
    return out


_SOURCE_PRIORITY = {"parity": 0, "line_element": 1, "measure": 2}


def merge_candidates(candidates, spacing):
    """Cluster candidates closer than one grid spacing; keep the most precise location."""
    merged = []
    for lam, source in sorted(candidates, key=lambda c: (c[0], _SOURCE_PRIORITY[c[1]])):
        if merged and lam - merged[-1]["last"] <= spacing:
            cluster = merged[-1]
            cluster["last"] = lam
            cluster["sources"].add(source)
            if _SOURCE_PRIORITY[source] < _SOURCE_PRIORITY[cluster["source"]]:
                cluster["lam"], cluster["source"] = lam, source
        else:
            merged.append({"lam": lam, "last": lam, "source": source, "sources": {source}})
    return [(c["lam"], c["sources"]) for c in merged]


def _report_dict(report):
    return {
        "classification": report.classification,
        "ratios": [float(r) for r in report.ratios],
        "second_ratios": [float(r) for r in report.second_ratios],
        "first": [float(e.value) for e in report.estimates],
        "second": [float(e.value) for e in report.second_estimates],
    }


def classify_line_element(path, lam, steps, kind):
    first = [line_element_rate(path, lam - s / 2, s, kind) for s in steps]
    second = [line_element_second(path, lam, s, kind) for s in steps]
    return classify_divergence(first, second, lam)


def classify_measure(measure, path, lam, steps):
    first = [measure_susceptibility(measure, path, lam, s) for s in steps]
    second = [second_susceptibility(measure, path, lam, s) for s in steps]
    return classify_divergence(first, second, lam)


def _auto_measures(config, basis):
    return [spec.bind(basis) for spec in config.measures if spec.coherence_type]


def _finite_or_none(x):
    return float(x) if x is not None and math.isfinite(x) else None


def _examine(config, path, lam_c, sources, fixed, notes):
    """Classify every signal at one candidate; returns the record and new measures."""
    steps = config.steps
    s_min = steps[-1]
    detecting = []
    evidence = {}
    extra = []
    bases = {}
    try:
        for kind in config.distances:
            rep = classify_line_element(path, lam_c, steps, kind)
            evidence[f"line_element:{kind}"] = _report_dict(rep)
            if rep.classification != "finite":
                detecting.append((f"line_element:{kind}", rep.classification))
        line_divergent = any(name.startswith("line_element") and c == "divergent" for name, c in detecting)
        for m in fixed:
            rep = classify_measure(m, path, lam_c, steps)
            evidence[m.name] = _report_dict(rep)
            if rep.classification != "finite":
                detecting.append((m.name, rep.classification))
        before, after = path.at(lam_c - s_min), path.at(lam_c + s_min)
    except QPTError as exc:
        notes.append(f"candidate {lam_c!r}: {type(exc).__name__}: {exc}")
        return None, []
    zero_t = before.psi is not None and after.psi is not None
    parity_flip = False
    if zero_t:
        diag = np.diag(parity_operator(config.model.n_sites)).real
        pa = float(np.real(np.vdot(before.psi, diag * before.psi)))
        pb = float(np.real(np.vdot(after.psi, diag * after.psi)))
        parity_flip = abs(abs(pa) - 1) < 1e-8 and abs(abs(pb) - 1) < 1e-8 and pa * pb < 0
    auto = []
    if zero_t and "theorem3_auto" in config.bases and line_divergent:
        try:
            auto.append(("theorem3_auto", theorem3_basis(before.psi, after.psi)))
        except QPTError as exc:
            notes.append(f"theorem3_auto at {lam_c!r}: {type(exc).__name__}")
    if zero_t and "parity_fourier_auto" in config.bases and parity_flip:
        try:
            auto.append(("parity_fourier_auto", parity_fourier_basis(config.model.n_sites, before.psi, after.psi)))
        except QPTError as exc:
            notes.append(f"parity_fourier_auto at {lam_c!r}: {type(exc).__name__}")
    for label, basis in auto:
        named = IncoherentBasis(basis.matrix, f"{label}@{lam_c:.10g}")
        bases[label] = {"label": named.label, "construction": basis.label, "digest": _basis_digest(named)}
        for m in _auto_measures(config, named):
            rep = classify_measure(m, path, lam_c, steps)
            evidence[m.name] = _report_dict(rep)
            if rep.classification != "finite":
                detecting.append((m.name, rep.classification))
            extra.append(m)
    if not detecting:
        return None, extra
    labels = {c for _, c in detecting}
    record = CriticalPointRecord(
        lam=float(lam_c),
        classification="divergent" if "divergent" in labels else "cusp",
        detecting=tuple(sorted(name for name, _ in detecting)),
        parity_flip=bool(parity_flip),
        evidence=evidence,
        bases=bases,
    )
    record.evidence["sources"] = sorted(sources)
    if zero_t:
        n = config.model.n_sites
        o = half_magnetization(n)
        try:
            b0, b1 = berry_phase(before.psi, o), berry_phase(after.psi, o)
            record.berry_jump = b1.analytic - b0.analytic
            record.berry_jump_integrated = b1.integrated - b0.integrated
        except QPTError as exc:
            notes.append(f"berry phase at {lam_c!r}: {type(exc).__name__}")
        mz = magnetization(n)
        record.order_parameter_jump = order_parameter_expectation(after.psi, mz) - order_parameter_expectation(
            before.psi, mz
        )
    return record, extra


def run_sweep(config, cache=None):
    """Evaluate every configured measure on the grid and locate critical points.

    Rows are ordered by lambda, then measure name. Numeric failures are
    recorded as row flags and never abort the sweep.
    """
    path = config.path()
    grid = config.grid()
    notes = []
    fixed = fixed_measures(config)
    pool = ThreadPoolExecutor(config.parallelism) if config.parallelism > 1 else None
    try:
        rows = _profile(config, path, grid, fixed, cache, pool)
        by_measure = {}
        for r in rows:
            by_measure.setdefault(r.measure, []).append(r)
        candidates = (
            line_element_candidates(config, path, grid)
            + parity_candidates(config, path, grid)
            + measure_candidates(config, path, grid, by_measure)
        )
        criticals = []
        extra = []
        for lam_c, sources in merge_candidates(candidates, config.spacing):
            record, more = _examine(config, path, lam_c, sources, fixed, notes)
            extra.extend(more)
            if record is not None:
                criticals.append(record)
        if extra:
            rows += _profile(config, path, grid, extra, cache, pool)
    finally:
        if pool is not None:
            pool.shutdown()
    rows.sort(key=lambda r: (r.lam, r.measure))
    return SweepResult(rows, criticals, notes, cache.stats() if cache is not None else None)


def _fmt(x):
    return f"{x:.12g}"


def emit_csv(rows):
    """CSV bytes: fixed header, 12 significant digits, ``;``-joined flags."""
    if not rows:
        raise ValueError("no rows to write")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(
            [_fmt(r.lam), _fmt(r.delta), _fmt(r.h), _fmt(r.beta), r.measure,
             _fmt(r.value), _fmt(r.d1), _fmt(r.d2), ";".join(r.flags)]
        )
    return buf.getvalue().encode("utf-8")


def parse_csv(data):
    """Inverse of :func:`emit_csv` (values as floats, flags as tuples)."""
    reader = csv.DictReader(io.StringIO(data.decode("utf-8")))
    out = []
    for rec in reader:
        row = {k: float(rec[k]) for k in ("lambda", "delta", "h", "beta", "value", "d1", "d2")}
        row["measure"] = rec["measure"]
        row["flags"] = tuple(t for t in rec["flags"].split(";") if t)
        out.append(row)
    return out


def report_document(criticals, config, notes=()):
    def record(c):
        return {
            "lambda_c": c.lam,
            "classification": c.classification,
            "detecting": list(c.detecting),
            "berry_jump": _finite_or_none(c.berry_jump),
            "berry_jump_integrated": _finite_or_none(c.berry_jump_integrated),
            "order_parameter_jump": _finite_or_none(c.order_parameter_jump),
            "parity_flip": c.parity_flip,
            "bases": c.bases,
            "evidence": _jsonable(c.evidence),
        }

    return {
        "config": {
            **config.canonical(),
            "grid": {"min": config.lam_min, "max": config.lam_max, "points": config.points},
            "steps": list(config.steps),
            "measures": sorted({m.name for m in fixed_measures(config)}),
            "bases": [b.label if isinstance(b, IncoherentBasis) else b for b in config.bases],
            "distances": list(config.distances),
        },
        "critical_points": [record(c) for c in criticals],
        "notes": list(notes),
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def emit_report(criticals, config, notes=()):
    """JSON bytes with sorted keys."""
    doc = _jsonable(report_document(criticals, config, notes))
    return (json.dumps(doc, sort_keys=True, indent=2) + "\n").encode("utf-8")
