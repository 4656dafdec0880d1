"""Reproduction of the acceptance criteria, one function per criterion.

Each function takes the run seed and returns a :class:`CriterionResult`
holding named numeric checks.  Results contain no timings, so the
serialised output of a run depends only on the code and the seed;
wall-clock times are measured by :func:`run_all` and reported separately.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .clifford import build_clifford
from .conformal import (ALEDescriptor, _reflection_form, compactify, estimate_ale_order, pullback_oracle)
from .curvature import curvature_arrays
from .groups import enumerate_spin_lifts, make_cyclic_subgroup, weyl_fixed_subspaces
from .metrics import Domain, eguchi_hanson, eguchi_hanson_bolt_chart, flat_metric, quotient_annulus
from .spinors import (FrameField, covariant_derivatives, dirac_derivative_check, dirac_field,
                      extend_to_puncture, flat_twistor_field, growth_exponent, holonomy, inverted_spinor_field,
                      parallel_spinor_on_EH, rectangle_loop, twistor_residual, twistor_zero_locus)
from .volume import check_monotone, check_zero_sum_bound, psi_table

DEFAULT_SEED = 0x5EED


@dataclass
class Check:
    name: str
    value: object
    limit: str
    passed: bool

    def as_dict(self) -> dict:
        return {"name": self.name, "value": _plain(self.value), "limit": self.limit, "passed": bool(self.passed)}


@dataclass
class CriterionResult:
    number: int
    title: str
    time_limit: float
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, value, limit, passed):
        self.checks.append(Check(name, value, limit, bool(passed)))

    def as_dict(self) -> dict:
        return {"criterion": self.number, "title": self.title, "passed": self.passed,
                "checks": [c.as_dict() for c in self.checks]}


def _plain(v):
    if isinstance(v, (np.floating, float)):
        return float(f"{float(v):.12g}")
    if isinstance(v, (np.integer, int, bool, np.bool_)):
        return v.item() if hasattr(v, "item") else v
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_plain(x) for x in v]
    return v


# ---------------------------------------------------------------------------


def criterion_1(seed: int) -> CriterionResult:
    res = CriterionResult(1, "spin-lift counts", 1.0)
    odd = {m: len(enumerate_spin_lifts(make_cyclic_subgroup(2, m))) for m in (1, 3, 5, 7, 9)}
    even = {m: len(enumerate_spin_lifts(make_cyclic_subgroup(2, m))) for m in (2, 4, 6, 8)}
    pm = len(enumerate_spin_lifts(make_cyclic_subgroup(4, 2, (1, 1))))
    res.add("Z_m in SO(2), odd m: number of lifts", list(odd.values()), "== 2 each", all(v == 2 for v in odd.values()))
    res.add("Z_m in SO(2), odd m: a lift exists", list(odd.values()), ">= 1 each", all(v >= 1 for v in odd.values()))
    res.add("Z_m in SO(2), even m: number of lifts", list(even.values()), "== 0 each",
            all(v == 0 for v in even.values()))
    res.add("{+-1} in SO(4): number of lifts", pm, "== 2", pm == 2)
    return res


def criterion_2(seed: int) -> CriterionResult:
    res = CriterionResult(2, "Weyl fixed spaces of the lifts of {+-1}", 1.0)
    dims = [weyl_fixed_subspaces(L) for L in enumerate_spin_lifts(make_cyclic_subgroup(4, 2, (1, 1)))]
    res.add("(dim Fix Sigma+, dim Fix Sigma-) per lift", [list(d) for d in dims], "exactly one nonzero",
            len(dims) > 0 and all((d[0] > 0) != (d[1] > 0) for d in dims))
    return res


def criterion_3(seed: int) -> CriterionResult:
    res = CriterionResult(3, "Clifford identities", 1.0)
    for n in (2, 4, 6):
        rep = build_clifford(n)
        res.add(f"n={n} anticommutation defect", rep.anticommutation_defect(), "== 0", rep.anticommutation_defect() == 0)
        res.add(f"n={n} chirality defect", rep.chirality_defect(), "== 0", rep.chirality_defect() == 0)
    return res


def criterion_4(seed: int) -> CriterionResult:
    res = CriterionResult(4, "Eguchi-Hanson Ricci-flatness", 30.0)
    a = 1.0
    g = eguchi_hanson(a)
    rng = np.random.default_rng(seed)
    y = rng.normal(size=(100, 4))
    r = rng.uniform(1.1 * a, 10 * a, size=100)
    y *= (r / np.linalg.norm(y, axis=1))[:, None]
    _, _, Rup, Ric, _ = curvature_arrays(g, y)
    worst = float(np.max(np.abs(Ric)))
    res.add("max |Ric| over 100 points", worst, "<= 1e-6", worst <= 1e-6)
    res.add("max |Riemann| (nonflat control)", float(np.max(np.abs(Rup))), "> 1e-3", np.max(np.abs(Rup)) > 1e-3)
    return res


def criterion_5(seed: int) -> CriterionResult:
    res = CriterionResult(5, "ALE order of Eguchi-Hanson", 30.0)
    d = estimate_ale_order(eguchi_hanson(1.0), np.geomspace(4.0, 64.0, 5), seed=seed)
    res.add("tau_hat over radii 4a..64a", d.tau, "4.0 +- 0.2", abs(d.tau - 4.0) <= 0.2)
    res.add("mu_hat", d.mu, "reported", True)
    return res


def criterion_6(seed: int) -> CriterionResult:
    res = CriterionResult(6, "inversion formula against conformal pullback", 10.0)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(1000):
        z = rng.normal(size=4)
        z *= rng.uniform(0.01, 1.0) / np.linalg.norm(z)
        A = rng.normal(size=(4, 4))
        h = 0.25 * (A + A.T)
        disp = np.eye(4) + _reflection_form(h, z)
        worst = max(worst, float(np.max(np.abs(disp - pullback_oracle(np.eye(4) + h, z)))))
    res.add("max deviation over 1000 (h, z)", worst, "<= 1e-10", worst <= 1e-10)
    return res


def criterion_7(seed: int) -> CriterionResult:
    res = CriterionResult(7, "compactified Eguchi-Hanson regularity", 60.0)
    _, rep = compactify(eguchi_hanson(1.0), ALEDescriptor(4.0, 3, 4.0), levels=range(3, 9), seed=seed)
    e0 = rep.exponents[0]
    res.add("exponent of |gbar - I| on |z| = 2^-3..2^-8 / R", e0, "4 +- 0.3", abs(e0 - 4.0) <= 0.3)
    res.add("bounded derivatives, orders 0..3", rep.bounded[:4], "all bounded", all(rep.bounded[:4]))
    res.add("derivative exponents", rep.exponents, "reported", True)
    res.add("verdict", rep.verdict, "C^3 claimed", rep.order == 3)
    return res


def criterion_8(seed: int) -> CriterionResult:
    res = CriterionResult(8, "flat twistor family", 10.0)
    rng = np.random.default_rng(seed)
    g = flat_metric(4)
    F = FrameField(g)
    phi0 = rng.normal(size=4) + 1j * rng.normal(size=4)
    psi0 = rng.normal(size=4) + 1j * rng.normal(size=4)
    f = flat_twistor_field(phi0, psi0)
    worst = max(float(np.max(np.abs(twistor_residual(g, F, f, rng.normal(size=4), rng.normal(size=4)))))
                for _ in range(100))
    res.add("twistor residual at 100 random (p, X)", worst, "<= 1e-9", worst <= 1e-9)
    H = holonomy(g, rectangle_loop(rng.normal(size=4), 0, 2, 0.5), F, kind="twistor")
    hol = float(np.max(np.abs(H - np.eye(8))))
    res.add("loop holonomy of nabla^E minus Id", hol, "<= 1e-9", hol <= 1e-9)
    eq2 = max(float(np.max(np.abs(dirac_derivative_check(g, F, f, rng.normal(size=4), rng.normal(size=4)))))
              for _ in range(10))
    res.add("derivative-of-Dirac identity residual", eq2, "<= 1e-8", eq2 <= 1e-8)
    return res


def criterion_9(seed: int) -> CriterionResult:
    res = CriterionResult(9, "zero isolation and growth", 10.0)
    rng = np.random.default_rng(seed)
    rep = build_clifford(4)
    psi0 = rng.normal(size=4) + 1j * rng.normal(size=4)
    x0 = rng.uniform(-1.5, 1.5, size=4)
    f = flat_twistor_field(rep.clifford_mult(x0) @ psi0 / 4, psi0)
    zeros = twistor_zero_locus(f, (-2.0, 2.0), 4)
    res.add("zeros found in [-2, 2]^4", len(zeros), "== 1", len(zeros) == 1)
    if zeros:
        err = float(np.linalg.norm(zeros[0].point - x0))
        res.add("distance to the closed-form zero", err, "<= 1e-6", err <= 1e-6)
        res.add("zero certified isolated (D phi != 0)", zeros[0].isolated, "true", zeros[0].isolated)
        k = growth_exponent(f, zeros[0].point, seed=seed)
        res.add("growth exponent of |phi| against distance", k, "1.00 +- 0.05", abs(k - 1.0) <= 0.05)
    return res


def criterion_10(seed: int) -> CriterionResult:
    res = CriterionResult(10, "Eguchi-Hanson parallel spinors", 120.0)
    g = eguchi_hanson(1.0)
    P = parallel_spinor_on_EH(g, expected=None)
    res.add("holonomy fixed-space dimension", P.dimension, "== 2", P.dimension == 2)
    res.add("chirality of the fixed space", P.chirality, "reported", True)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(6):
        y = rng.normal(size=4)
        y *= rng.uniform(1.3, 6.0) / np.linalg.norm(y)
        _, nab, _ = covariant_derivatives(g, P.field.frame, P.field, y)
        worst = max(worst, float(np.max(np.abs(nab))))
    res.add("max |nabla phi| at random points (transport residual)", worst, "<= 1e-5", worst <= 1e-5)
    return res


def _ray_distance(chart, z, nodes: int = 16) -> float:
    """``gbar``-length of the straight segment from the origin to ``z``."""
    t, w = np.polynomial.legendre.leggauss(nodes)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    pts = t[:, None] * z[None]
    G = chart.metric(pts)
    return float(np.sum(w * np.sqrt(np.einsum("i,kij,j->k", z, G, z))))


def criterion_11(seed: int) -> CriterionResult:
    res = CriterionResult(11, "compactified Eguchi-Hanson twistor spinor", 180.0)
    R = 4.0
    g = eguchi_hanson(1.0)
    chart, _ = compactify(g, ALEDescriptor(4.0, 3, R), seed=seed)
    P = parallel_spinor_on_EH(g)
    phi = inverted_spinor_field(g, chart, lambda Y: P.field(Y)[..., 0])
    F = FrameField(chart)
    rng = np.random.default_rng(seed)
    worst = 0.0
    ratios = {}
    for lev in (3, 4):
        vals = []
        for _ in range(4):
            u = rng.normal(size=4)
            z = u / np.linalg.norm(u) * 2.0 ** -lev / R
            worst = max(worst, float(np.max(np.abs(twistor_residual(g=chart, frame=F, field=phi, p=z,
                                                                     X=rng.normal(size=4))))))
            vals.append(np.linalg.norm(phi(z)) / _ray_distance(chart, z))
        ratios[lev] = vals
    res.add("twistor residual under rho^-4 g", worst, "<= 1e-4", worst <= 1e-4)
    allr = np.concatenate(list(ratios.values()))
    spread = float((allr.max() - allr.min()) / allr.mean())
    res.add("relative spread of |phi|/dist(., p_inf) over two annuli", spread, "<= 0.05", spread <= 0.05)
    psi = dirac_field(chart, F, phi)
    ext = extend_to_puncture(chart, lambda x: np.concatenate([phi(x), psi(x)[0]]), np.zeros(4), 2.0 ** -3 / R, F,
                             raise_on_failure=False)
    res.add("extension certificate spread", ext.spread, "<= 1e-5", ext.spread <= 1e-5)
    phin = float(np.linalg.norm(ext.phi))
    psin = float(np.linalg.norm(ext.psi))
    res.add("|phi(p_inf)|", phin, "<= 1e-6", phin <= 1e-6)
    res.add("|psi(p_inf)|", psin, ">= 1e-3", psin >= 1e-3)
    return res


def criterion_12(seed: int, samples: int = 4096) -> CriterionResult:
    res = CriterionResult(12, "volume ratios", 300.0)
    flat = quotient_annulus(flat_metric(4), make_cyclic_subgroup(4, 2, (1, 1)))
    tf = psi_table(flat, np.zeros(4), np.geomspace(0.25, 4.0, 8), samples=samples, seed=seed)
    dev = np.abs(tf.psi - 0.5) / np.maximum(tf.stderr, 1e-300)
    res.add("flat R^4/Z_2: max |psi - 0.5| / stderr over 8 radii", float(dev.max()), "<= 2", dev.max() <= 2)
    eh = eguchi_hanson_bolt_chart(1.0)
    radii = np.array([0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 20.0, 50.0])
    te = psi_table(eh, np.zeros(4), radii, samples=samples, seed=seed)
    mono = check_monotone(te)
    res.add("Eguchi-Hanson psi values", te.psi, "reported", True)
    res.add("psi non-increasing within 2 stderr", mono["monotone"], "true", mono["monotone"])
    small = np.abs(te.psi[:2] - 1.0)
    res.add("|psi - 1| at r = 0.1a, 0.2a", small, "<= 0.02", np.all(small <= 0.02))
    big = abs(te.psi[-1] - 0.5)
    res.add("|psi - 0.5| at r = 50a", big, "<= 0.03", big <= 0.03)
    configs = [[1], [2], [1, 1], [1, 2], [1, 3, 3], [2, 2], [2, 3], [3, 3, 3]]
    verdicts = [check_zero_sum_bound(c)["admissible"] for c in configs]
    smooth_unique = all(not v for c, v in zip(configs, verdicts) if 1 in c and len(c) > 1) \
        and all(v for c, v in zip(configs, verdicts) if c == [1])
    res.add("zero-sum admissibility of test configurations", verdicts, "a smooth zero is unique", smooth_unique)
    return res


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5, 6: criterion_6,
            7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10, 11: criterion_11,
            12: criterion_12}


def run_all(seed: int = DEFAULT_SEED, only=None, report=None) -> tuple[list[CriterionResult], dict]:
    """Run criteria 1..12; returns results and wall-clock seconds per criterion."""
    results, times = [], {}
    for k, fn in CRITERIA.items():
        if only and k not in only:
            continue
        t0 = time.perf_counter()
        r = fn(seed)
        times[k] = time.perf_counter() - t0
        results.append(r)
        if report is not None:
            report(r, times[k])
    return results, times
