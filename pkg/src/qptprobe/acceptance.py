"""Acceptance checks against the closed-form results for the XY models.

Each ``check_*`` function returns a :class:`Check`; ``run_all`` runs them
in order. Used by the test suite and by ``qptprobe selftest``.
"""

import dataclasses
import math
import tempfile
import time

import numpy as np

from .cache import ResultCache
from .config import parse_config
from .measures import (
    DISTANCE_KINDS,
    MeasureKind,
    coherence_l1,
    distance,
    geometric_coherence,
    geometric_discord_2q,
)
from .model import CurveSpec, ModelSpec, build_xy_two_spin, parity_operator
from .numeric import hermitian_eig
from .probe import (
    berry_phase,
    bound_pair,
    classify_divergence,
    compatible_distance,
    evaluate_measure,
    half_magnetization,
    measure_susceptibility,
    order_parameter_expectation,
    parity_fourier_basis,
    theorem3_basis,
)
from .states import IncoherentBasis, StatePath, gibbs_state, ground_state, product_state
from .sweep import MeasureSpec, SweepConfig, emit_csv, parity_candidates, run_sweep

STEPS = (1e-2, 5e-3, 2.5e-3)
SEED = 20240531


@dataclasses.dataclass
class Check:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number:2d}: {self.title} ({self.detail}; {self.seconds:.2f}s)"


def g_minus():
    return (product_state("01") + product_state("10")) / math.sqrt(2)


def g_plus(theta):
    return math.cos(theta / 2) * product_state("00") + math.sin(theta / 2) * product_state("11")


def radial_path(theta, beta="zero-temperature"):
    return StatePath(ModelSpec(), CurveSpec.radial(theta, beta=beta))


def zsum(n=2):
    return 2 * half_magnetization(n)


def check_spectrum(rng):
    worst = 0.0
    for _ in range(100):
        delta, h = rng.uniform(-2, 2, size=2)
        r = math.hypot(delta, h)
        w = hermitian_eig(build_xy_two_spin(delta, h)).eigenvalues
        worst = max(worst, float(np.max(np.abs(w - np.sort([-1.0, -r, r, 1.0])))))
    return worst <= 1e-10, f"max eigenvalue error {worst:.1e}"


def check_ground_state(rng):
    worst = 0.0
    count = 0
    while count < 100:
        delta, h = rng.uniform(-2, 2, size=2)
        r = math.hypot(delta, h)
        if abs(r - 1) < 1e-3:
            continue
        psi = ground_state(build_xy_two_spin(delta, h)).state
        expected = g_minus() if r < 1 else g_plus(math.atan2(delta, h))
        worst = max(worst, float(np.max(np.abs(psi - expected))))
        count += 1
    return worst <= 1e-10, f"max amplitude error {worst:.1e} over {count} points"


def check_coherence_values(rng):
    errs = [abs(coherence_l1(g_minus()) - 1.0)]
    for theta in rng.uniform(-math.pi, math.pi, size=20):
        errs.append(abs(coherence_l1(g_plus(theta)) - abs(math.sin(theta))))
    bell = IncoherentBasis.bell_type_2q()
    for delta in (1.2, 1.5, 2.0):
        psi = ground_state(build_xy_two_spin(delta, 0.0)).state
        errs.append(abs(coherence_l1(psi, bell) - 1.0))
    for delta in (0.2, 0.5, 0.9):
        psi = ground_state(build_xy_two_spin(delta, 0.0)).state
        errs.append(abs(coherence_l1(psi, bell)))
    worst = max(errs)
    return worst <= 1e-10, f"max error {worst:.1e}"


def check_gcs_divergence(rng):
    path = radial_path(math.pi / 3)
    m = MeasureKind("coherence_l1", IncoherentBasis.computational(4))
    est = [measure_susceptibility(m, path, 1.0, s) for s in STEPS]
    rep = classify_divergence(est)
    ok = rep.classification == "divergent" and all(1.8 <= r <= 2.2 for r in rep.ratios)
    return ok, f"ratios {[round(r, 6) for r in rep.ratios]}, {rep.classification}"


def check_entanglement_blindness(rng):
    path = StatePath(ModelSpec(), CurveSpec("lambda", "0"))
    ent = MeasureKind("geometric_entanglement")
    values = [evaluate_measure(ent, path.at(lam)) for lam in (0.5, 0.9, 0.99, 1.01, 1.1, 1.5)]
    value_err = max(abs(v - 0.5) for v in values)
    chis = [abs(measure_susceptibility(ent, path, 1.0, s).value) for s in STEPS]
    basis = theorem3_basis(path.at(1 - STEPS[-1]).psi, path.at(1 + STEPS[-1]).psi)
    labels = {}
    for name, b in (("step_basis", basis), ("bell", IncoherentBasis.bell_type_2q())):
        m = MeasureKind("coherence_l1", b)
        labels[name] = classify_divergence([measure_susceptibility(m, path, 1.0, s) for s in STEPS]).classification
    ok = value_err <= 1e-10 and max(chis) <= 1.0 and labels["step_basis"] == "divergent" and labels["bell"] == "divergent"
    return ok, f"|E-0.5| {value_err:.1e}, max|chi_E| {max(chis):.1e}, coherence {labels}"


def _berry(psi):
    return berry_phase(psi, half_magnetization(2))


def check_berry_phase(rng):
    agree = 0.0
    states = [g_minus()] + [g_plus(t) for t in rng.uniform(-math.pi, math.pi, size=8)]
    for psi in states:
        res = _berry(psi)
        agree = max(agree, abs(res.analytic - res.integrated))
    jumps = {}
    for theta in (math.pi / 4, math.pi / 2):
        path = radial_path(theta)
        before, after = _berry(path.at(1 - STEPS[-1]).psi), _berry(path.at(1 + STEPS[-1]).psi)
        jumps[theta] = (after.analytic - before.analytic, after.integrated - before.integrated)
    j4 = jumps[math.pi / 4]
    err4 = max(abs(abs(j) - 2 * math.pi * math.cos(math.pi / 4)) for j in j4)
    j2 = max(abs(j) for j in jumps[math.pi / 2])
    ok = agree <= 1e-8 and err4 <= 1e-6 and j2 <= 1e-10
    return ok, f"analytic-vs-Simpson {agree:.1e}, |jump(pi/4)| error {err4:.1e}, |jump(pi/2)| {j2:.1e}"


def check_order_parameter(rng):
    z = zsum()
    at_minus = abs(order_parameter_expectation(g_minus(), z))
    thetas = (math.pi / 6, math.pi / 4, math.pi / 3)
    jumps = []
    for theta in thetas:
        path = radial_path(theta)
        jumps.append(
            order_parameter_expectation(path.at(1 + STEPS[-1]).psi, z)
            - order_parameter_expectation(path.at(1 - STEPS[-1]).psi, z)
        )
    ratio_err = max(
        abs(jumps[i] / jumps[0] - math.cos(thetas[i]) / math.cos(thetas[0])) for i in range(1, len(thetas))
    )
    ok = at_minus <= 1e-12 and min(abs(j) for j in jumps) > 1e-3 and ratio_err <= 1e-6
    return ok, f"<g-|Z1+Z2|g-> {at_minus:.1e}, jumps {[round(j, 6) for j in jumps]}, ratio error {ratio_err:.1e}"


def check_parity_flip(rng):
    details = []
    ok = True
    for n in (4, 6, 8):
        config = SweepConfig(
            ModelSpec("xy_chain", n), CurveSpec("0.6", "lambda"), 0.72, 0.88, 17, (MeasureSpec("coherence_l1"),)
        )
        path = config.path()
        flips = [lam for lam, _ in parity_candidates(config, path, config.grid())]
        if len(flips) != 1:
            ok = False
            details.append(f"N={n}: {len(flips)} flips")
            continue
        h_star = flips[0]
        before, after = path.at(h_star - STEPS[-1]).psi, path.at(h_star + STEPS[-1]).psi
        basis = parity_fourier_basis(n, before, after)
        c0, c1 = coherence_l1(before, basis), coherence_l1(after, basis)
        m = MeasureKind("coherence_l1", basis)
        label = classify_divergence([measure_susceptibility(m, path, h_star, s) for s in STEPS]).classification
        diag = np.diag(parity_operator(n)).real
        signs = [np.sign(np.vdot(p, diag * p).real) for p in (before, after)]
        good = abs(h_star - 0.8) <= 1e-3 and c0 < 1e-8 and c1 > 0.1 and label == "divergent" and signs[0] != signs[1]
        ok = ok and good
        details.append(f"N={n}: h*={h_star:.9f} C {c0:.1e}->{c1:.3g} {label}")
    return ok, "; ".join(details)


def _random_density(rng, d, rank=None):
    k = d if rank is None else rank
    g = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def _random_pure(rng, d):
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def bound_random_triples(rng, count=500):
    """Worst ``lhs - rhs`` over random (state pair, measure, distance) triples."""
    worst = -math.inf
    for i in range(count):
        choice = i % 5
        if choice == 4:
            m = MeasureKind("geometric_entanglement")
            a, b = _random_pure(rng, 4), _random_pure(rng, 4)
        else:
            d = int(rng.integers(2, 5))
            basis = IncoherentBasis.computational(d)
            m = MeasureKind("coherence_l1", basis) if choice == 3 else MeasureKind(
                "geometric_coherence", basis, DISTANCE_KINDS[choice]
            )
            pure = rng.random() < 0.5
            a = _random_pure(rng, d) if pure else _random_density(rng, d)
            b = _random_pure(rng, d) if pure else _random_density(rng, d)
        lhs, rhs = bound_pair(m, a, b)
        worst = max(worst, lhs - rhs)
    return worst


def bound_sweep_pairs(result, config):
    """Worst ``lhs - rhs`` over consecutive grid points of a finished sweep."""
    path = config.path()
    by_measure = {}
    for row in result.rows:
        by_measure.setdefault(row.measure, []).append(row)
    kinds = {}
    for spec in config.measures:
        for m in ([spec.bind(IncoherentBasis.computational(config.model.dim))] if spec.coherence_type else [spec.bind()]):
            kinds[m.tag + (f":{m.distance}" if m.distance else "")] = compatible_distance(m)
    worst = -math.inf
    count = 0
    for name, rows in by_measure.items():
        kind = kinds.get(name.split("[")[0])
        if kind is None:
            continue
        for r0, r1 in zip(rows, rows[1:]):
            if r0.flags or r1.flags:
                continue
            rhs = distance(path.at(r0.lam).state, path.at(r1.lam).state, kind)
            worst = max(worst, abs(r1.value - r0.value) - rhs)
            count += 1
    return worst, count


def check_distance_bound(rng):
    worst_random = bound_random_triples(rng)
    measures = (
        MeasureSpec("coherence_l1"),
        MeasureSpec("geometric_coherence", "trace"),
        MeasureSpec("geometric_coherence", "l1_entrywise"),
        MeasureSpec("geometric_coherence", "hilbert_schmidt"),
        MeasureSpec("geometric_entanglement"),
    )
    worst_sweep = -math.inf
    total = 0
    for curve, lo, hi in ((CurveSpec.radial(math.pi / 4), 0.5, 1.5), (CurveSpec("0.5", "lambda"), 0.0, 1.5)):
        config = SweepConfig(ModelSpec(), curve, lo, hi, 31, measures, steps=STEPS, bases=("computational", "bell_type_2q"))
        w, n = bound_sweep_pairs(run_sweep(config), config)
        worst_sweep = max(worst_sweep, w)
        total += n
    ok = worst_random <= 1e-10 and worst_sweep <= 1e-10
    return ok, f"max(lhs-rhs) random {worst_random:.1e}, sweep {worst_sweep:.1e} over {total} pairs"


def check_optimizer_oracles(rng):
    worst_hs = 0.0
    for _ in range(20):
        rho = _random_density(rng, 3)
        closed = geometric_coherence(rho, kind="hilbert_schmidt")
        numeric = geometric_coherence(rho, kind="hilbert_schmidt", method="minimize", start=np.full(3, 1 / 3))
        worst_hs = max(worst_hs, abs(closed - numeric))
    worst_discord = 0.0
    for i in range(20):
        rho = _random_density(rng, 4, rank=1 + i % 4)
        worst_discord = max(
            worst_discord,
            abs(geometric_discord_2q(rho) - geometric_discord_2q(rho, method="search")),
        )
    ok = worst_hs <= 1e-6 and worst_discord <= 1e-4
    return ok, f"HS closed vs minimizer {worst_hs:.1e}, discord closed vs search {worst_discord:.1e}"


def _all_measures():
    out = [MeasureKind("geometric_discord_2q")]
    for basis in (IncoherentBasis.computational(4), IncoherentBasis.bell_type_2q()):
        out.append(MeasureKind("coherence_l1", basis))
        out.append(MeasureKind("coherence_relative_entropy", basis))
        out.extend(MeasureKind("geometric_coherence", basis, k) for k in DISTANCE_KINDS)
    return out


def check_finite_temperature(rng):
    worst = 0.0
    for theta in (math.pi / 6, math.pi / 3):
        for r in (0.5, 1.5):
            h_mat = build_xy_two_spin(r * math.sin(theta), r * math.cos(theta))
            psi = ground_state(h_mat).state
            rho = gibbs_state(h_mat, 50.0)
            for m in _all_measures():
                worst = max(worst, abs(m(rho) - m(psi)))
    hot = gibbs_state(build_xy_two_spin(0.3, 0.7), 0.0)
    coherent = [m for m in _all_measures() if m.basis is not None]
    vanish = max(abs(m(hot)) for m in coherent)
    ok = worst <= 1e-6 and vanish <= 1e-12
    return ok, f"max |beta=50 - ground| {worst:.1e}, max coherence at beta=0 {vanish:.1e}"


DETERMINISM_CONFIG = """\
[model]
sites = 2

[curve]
delta = lambda * sin(pi/4)
h = lambda * cos(pi/4)

[grid]
min = 0.5
max = 1.5
points = 41

[measures]
names = coherence_l1, coherence_relative_entropy, geometric_coherence:trace, geometric_entanglement

[bases]
names = computational, bell_type_2q, theorem3_auto
"""


def check_determinism(rng):
    config = parse_config(DETERMINISM_CONFIG)
    plain = emit_csv(run_sweep(config).rows)
    with tempfile.TemporaryDirectory() as tmp:
        cache = ResultCache(tmp)
        cold = emit_csv(run_sweep(config, cache).rows)
        warm_cache = ResultCache(tmp)
        parallel = dataclasses.replace(config, parallelism=4)
        warm = emit_csv(run_sweep(parallel, warm_cache).rows)
        stats = warm_cache.stats()
    ok = plain == cold == warm and stats["misses"] == 0 and stats["hits"] > 0
    return ok, f"{len(plain)} bytes, warm cache hits {stats['hits']} misses {stats['misses']}"


CRITERIA = (
    (1, "two-spin spectrum", check_spectrum),
    (2, "ground-state selection", check_ground_state),
    (3, "coherence values", check_coherence_values),
    (4, "GCS divergence at r=1", check_gcs_divergence),
    (5, "entanglement blindness at h=0", check_entanglement_blindness),
    (6, "Berry phase", check_berry_phase),
    (7, "order parameter", check_order_parameter),
    (8, "N-spin parity flip", check_parity_flip),
    (9, "distance bound on measure changes", check_distance_bound),
    (10, "optimizer-oracle agreement", check_optimizer_oracles),
    (11, "finite temperature", check_finite_temperature),
    (12, "determinism", check_determinism),
)


def run_check(number):
    for n, title, func in CRITERIA:
        if n == number:
            rng = np.random.default_rng(SEED + n)
            start = time.perf_counter()
            try:
                ok, detail = func(rng)
            except Exception as exc:  # a crash is a failed criterion, reported not raised
                ok, detail = False, f"{type(exc).__name__}: {exc}"
            return Check(n, title, bool(ok), detail, time.perf_counter() - start)
    raise KeyError(number)


def run_all():
    return [run_check(n) for n, _, _ in CRITERIA]
