"""End-to-end acceptance checks, shared by the ``verify`` subcommand and the test suite."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import expm

from . import lattice as lc
from .groups import haar_k, k_matrix, kak_coordinates, torus_element
from .io import dumps_json
from .montecarlo import (
    OrbitalMeasureSpec,
    chunk_rng,
    convolution_consistency_check,
    functional_equation_check,
    pairing_estimate,
    pairing_reference,
    within_sigmas,
)
from .sobolev import sobolev_partial_sums
from .spherical import decay_exponent_fit, spherical_values

__all__ = [
    "CriterionResult",
    "AcceptanceReport",
    "CRITERIA",
    "run_acceptance",
    "random_regular_points",
    "spin_matrix_coefficient",
]

MC_SAMPLES = 100_000


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: dict
    elapsed: float = field(default=0.0, compare=False)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number}. {self.title}: {self.detail.get('summary', '')}"

    def to_dict(self) -> dict:
        return {"number": self.number, "title": self.title, "passed": self.passed, "detail": self.detail}


@dataclass
class AcceptanceReport:
    seed: int
    results: list[CriterionResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_json(self) -> str:
        return dumps_json({"seed": self.seed, "passed": self.passed, "criteria": [r.to_dict() for r in self.results]})

    def table(self) -> str:
        return "\n".join(r.line() for r in self.results)


def random_regular_points(rng: np.random.Generator, q: int, count: int, margin: float = 0.05) -> list[tuple[float, ...]]:
    pts = []
    for _ in range(count):
        t = np.sort(rng.uniform(margin, math.pi / 2 - margin, q))[::-1]
        pts.append(tuple(float(v) for v in t))
    return pts


def _config_seed(seed: int, label: str, idx: int) -> int:
    return int(chunk_rng(seed, f"seed/{label}", idx).integers(0, 2**63))


def spin_matrix_coefficient(j2: int, mz2: int, t: float) -> float:
    """<e_mz, exp(2 i t J_x) e_mz> in the spin j = j2/2 representation."""
    dim = j2 + 1
    ms = np.array([j2 / 2 - i for i in range(dim)])
    jplus = np.zeros((dim, dim))
    for i in range(1, dim):
        m = ms[i]
        jplus[i - 1, i] = math.sqrt((j2 / 2 - m) * (j2 / 2 + m + 1))
    jx = (jplus + jplus.T) / 2
    u = expm(2j * t * jx)
    idx = int(round(j2 / 2 - mz2 / 2))
    return u[idx, idx]


def criterion_su2(seed: int, workers: int) -> CriterionResult:
    space = lc.make_space(1, 1)
    ts = np.linspace(0, math.pi / 2, 22)[1:-1]
    worst = 0.0
    for l in (0, 1, 2):
        for m in range(6):
            w = lc.SphericalWeight(l, (m,))
            ours = spherical_values(space, w, ts[:, None])
            ref = np.array([spin_matrix_coefficient(2 * m + l, -l, t) for t in ts])
            worst = max(worst, float(np.abs(ours - ref).max()))
    ok = worst <= 1e-8
    return CriterionResult(1, "SU(2) matrix-coefficient oracle", ok, {"max_abs_error": worst, "tolerance": 1e-8, "summary": f"max |err| = {worst:.2e} (tol 1e-8)"})


def _fe_configs():
    combos = []
    for p, q in ((2, 1), (2, 2)):
        space = lc.make_space(p, q)
        for l in (0, 1, 2):
            for w in lc.enumerate_weights(space, l, 3):
                combos.append((space, l, w))
    return [combos[i % len(combos)] for i in range(60)]


def criterion_functional_equation(seed: int, workers: int, samples: int = MC_SAMPLES) -> CriterionResult:
    rows = []
    for idx, (space, l, w) in enumerate(_fe_configs()):
        rng = chunk_rng(seed, "fe-points", idx)
        u1, u2 = random_regular_points(rng, space.q, 2)
        res = functional_equation_check(space, l, w, u1, u2, samples, _config_seed(seed, "fe", idx), workers)
        rows.append({"p": space.p, "q": space.q, "l": l, "m": list(w.m), "sigmas": res.sigmas, "passed": res.passed})
    frac = sum(r["passed"] for r in rows) / len(rows)
    ok = frac >= 0.95
    return CriterionResult(2, "K-integral functional equation", ok, {"pass_fraction": frac, "configurations": rows, "summary": f"{frac:.1%} of {len(rows)} within 4 sigma (need 95%)"})


def criterion_pairing(seed: int, workers: int, samples: int = MC_SAMPLES) -> CriterionResult:
    space = lc.make_space(2, 1)
    rows = []
    idx = 0
    for r in (1, 2, 3):
        for l in (0, 1):
            for w in lc.enumerate_weights(space, l, 3):
                pts = random_regular_points(chunk_rng(seed, "pairing-points", idx), 1, r)
                spec = OrbitalMeasureSpec(l, pts)
                est = pairing_estimate(spec, space, w, samples, _config_seed(seed, "pairing", idx), workers)
                ref = pairing_reference(spec, space, w)
                ok = within_sigmas(est.value - ref, est.stderr)
                rows.append({"r": r, "l": l, "m": list(w.m), "estimate": est.value, "stderr": est.stderr, "reference": ref, "passed": ok})
                idx += 1
    frac = sum(r["passed"] for r in rows) / len(rows)
    return CriterionResult(3, "Fourier-trace pairing identity", frac >= 0.95, {"pass_fraction": frac, "configurations": rows, "summary": f"{frac:.1%} of {len(rows)} within 4 sigma (need 95%)"})


def criterion_consistency(seed: int, workers: int, samples: int = MC_SAMPLES) -> CriterionResult:
    space = lc.make_space(2, 1)
    rows = []
    idx = 0
    for r in (2, 3):
        for w in lc.enumerate_weights(space, 1, 3):
            pts = random_regular_points(chunk_rng(seed, "consistency-points", idx), 1, r)
            rep = convolution_consistency_check(OrbitalMeasureSpec(1, pts), space, w, samples, _config_seed(seed, "consistency", idx), workers)
            rows.append({"r": r, "m": list(w.m), "difference": rep.difference, "combined_stderr": rep.combined_stderr, "passed": rep.agree})
            idx += 1
    ok = all(r["passed"] for r in rows)
    return CriterionResult(4, "joint vs composed convolution sampling", ok, {"configurations": rows, "summary": f"{sum(r['passed'] for r in rows)}/{len(rows)} agree within 4 combined sigma"})


def criterion_dimension(seed: int, workers: int) -> CriterionResult:
    integral = True
    bound_failures = []
    for p, q in ((2, 1), (2, 2), (3, 2), (3, 1)):
        space = lc.make_space(p, q)
        for l in range(-3, 4):
            for w in lc.enumerate_weights(space, l, 10):
                d = lc.dimension(space, w, exact=True)
                integral &= d.denominator == 1 and d > 0
                if d > lc.dimension_bound(space, w):
                    bound_failures.append({"p": p, "q": q, "l": l, "m": list(w.m), "d": int(d), "bound": lc.dimension_bound(space, w)})
    s11 = lc.make_space(1, 1)
    su2 = all(lc.dimension(s11, lc.SphericalWeight(l, (m,))) == 2 * m + abs(l) + 1 for m in range(11) for l in range(-3, 4))
    ok = integral and su2 and not bound_failures
    summary = f"integral={integral}, (1,1) closed form={su2}, bound violations={len(bound_failures)}"
    by_l = sorted({abs(f["l"]) for f in bound_failures})
    return CriterionResult(5, "dimension formula and dimension bound", ok, {
        "positive_integers": integral,
        "su2_closed_form": su2,
        "bound_violations": len(bound_failures),
        "bound_violation_abs_l": by_l,
        "first_violations": bound_failures[:5],
        "summary": summary,
    })


def criterion_decay(seed: int, workers: int) -> CriterionResult:
    rows = []
    ok = True
    for (p, q), t, limit in (((2, 1), 0.7, -1.5 + 0.15), ((1, 1), 0.7, -0.5 + 0.1)):
        fit = decay_exponent_fit(lc.make_space(p, q), 0, (t,), list(range(20, 201, 5)))
        good = fit.per_axis_slope <= limit
        ok &= good
        rows.append({"p": p, "q": q, "t": t, "per_axis_slope": fit.per_axis_slope, "limit": limit, "residual": fit.residual, "passed": good})
    return CriterionResult(6, "spherical-function decay exponent", ok, {"fits": rows, "summary": ", ".join(f"({r['p']},{r['q']}) slope {r['per_axis_slope']:.3f} <= {r['limit']:.2f}" for r in rows)})


def criterion_thresholds(seed: int, workers: int) -> CriterionResult:
    table = {(1, 1, 1): 8, (2, 1, 1): 5, (2, 2, 2): 14}
    got = {k: lc.smoothness_threshold(lc.make_space(k[0], k[1]), k[2]) for k in table}
    table_ok = got == table
    space = lc.make_space(2, 1)
    nu, eps = 1, 0.01
    s = nu + ((space.p + space.q) ** 2 - 1) / 2 + eps
    pts = random_regular_points(chunk_rng(seed, "sobolev-points", 0), 1, 5)
    spec = OrbitalMeasureSpec(0, pts)
    rep = sobolev_partial_sums(space, spec, s, 300, workers=workers)
    ratio = rep.tail_bound / rep.partial_sums[-1]
    ok = table_ok and rep.converged
    return CriterionResult(7, "smoothness thresholds and Sobolev tail certificate", ok, {
        "threshold_table": [[*k, v] for k, v in got.items()],
        "threshold_table_ok": table_ok,
        "s": s,
        "cutoff": rep.cutoff,
        "partial_sum": rep.partial_sums[-1],
        "partial_sum_at_100": rep.partial_sums[100],
        "tail_bound": rep.tail_bound,
        "tail_ratio": ratio,
        "tail_exponent": rep.tail_exponent,
        "certified": rep.converged,
        "summary": f"table ok={table_ok}; tail/sum = {ratio:.3g} at cutoff 300 (need < 1e-3)",
    })


def criterion_kak(seed: int, workers: int) -> CriterionResult:
    worst_trip = worst_bi = 0.0
    for idx, (p, q) in enumerate(((2, 1), (2, 2), (3, 2))):
        space = lc.make_space(p, q)
        rng = chunk_rng(seed, "kak", idx)
        t = -np.sort(-rng.uniform(0, math.pi / 2, (1000, q)), axis=1)
        g = torus_element(space, t)
        worst_trip = max(worst_trip, float(np.abs(kak_coordinates(space, g) - t).max()))
        a1, b1 = haar_k(space, rng, 1000)
        a2, b2 = haar_k(space, rng, 1000)
        sandwich = k_matrix(a1, b1) @ g @ k_matrix(a2, b2)
        worst_bi = max(worst_bi, float(np.abs(kak_coordinates(space, sandwich) - t).max()))
    ok = worst_trip <= 1e-10 and worst_bi <= 1e-9
    return CriterionResult(8, "KAK coordinate round trip and K-bi-invariance", ok, {"round_trip_error": worst_trip, "bi_invariance_error": worst_bi, "summary": f"round trip {worst_trip:.1e} (tol 1e-10), sandwich {worst_bi:.1e} (tol 1e-9)"})


def criterion_reproducibility(seed: int, workers: int) -> CriterionResult:
    """Re-runs a reduced pairing sweep at 1 and 4 workers and compares serialized bytes."""
    def probe(nworkers):
        space = lc.make_space(2, 1)
        out = []
        for idx, r in enumerate((1, 2)):
            pts = random_regular_points(chunk_rng(seed, "repro-points", idx), 1, r)
            w = lc.SphericalWeight(1, (2,))
            est = pairing_estimate(OrbitalMeasureSpec(1, pts), space, w, 20_000, _config_seed(seed, "repro", idx), nworkers)
            out.append(est.to_dict())
        return dumps_json(out)

    a, b = probe(1), probe(4)
    return CriterionResult(9, "worker-count reproducibility", a == b, {"identical": a == b, "summary": "byte-identical at 1 and 4 workers" if a == b else "outputs differ"})


CRITERIA: dict[int, Callable[[int, int], CriterionResult]] = {
    1: criterion_su2,
    2: criterion_functional_equation,
    3: criterion_pairing,
    4: criterion_consistency,
    5: criterion_dimension,
    6: criterion_decay,
    7: criterion_thresholds,
    8: criterion_kak,
    9: criterion_reproducibility,
}


def run_acceptance(seed: int = 7, workers: int = 1, only=None, progress: Callable[[CriterionResult], None] | None = None) -> AcceptanceReport:
    results = []
    for number, fn in CRITERIA.items():
        if only and number not in only:
            continue
        start = time.perf_counter()
        res = fn(seed, workers)
        res.elapsed = time.perf_counter() - start
        results.append(res)
        if progress:
            progress(res)
    return AcceptanceReport(seed, results)
