"""Parsers for the group, metric, radii and spinor strings used on the command line.

Groups
    ``cyclic:m`` (in SO(2) with ``--dim 2``, else SO(4) with embedding
    ``(1,1)``), ``cyclic:m:k1,k2``, ``binary-dihedral:k``,
    ``binary-tetrahedral``, ``binary-octahedral``, ``binary-icosahedral``,
    or a path to a JSON file holding a list of row-major matrices.

Metrics
    ``flat:n``, ``sphere:n:R``, ``eguchi-hanson:a``,
    ``eguchi-hanson-bolt:a``, ``synthetic:n:tau``,
    ``quotient:<metric>:<group>``, ``rescale:<metric>:<factor>`` with
    factor ``rho2``, ``inv-rho2`` or ``sphere-factor`` (the result is
    ``factor^-2`` times the base metric).
"""

from __future__ import annotations

import json
import os

import numpy as np

from .groups import FiniteRotationGroup, GroupError, from_matrices, make_binary_polyhedral, make_cyclic_subgroup
from .metrics import (MetricChart, conformal_rescale, eguchi_hanson, eguchi_hanson_bolt_chart, flat_metric,
                      power_of_radius, quotient_annulus, round_sphere_chart, sphere_factor,
                      synthetic_decay_chart)


class SpecError(ValueError):
    """A malformed specification string."""


def _num(text: str, kind=float):
    try:
        return kind(text)
    except (TypeError, ValueError):
        raise SpecError(f"expected a number, got {text!r}") from None


def parse_group(spec: str, dim: int = 4) -> FiniteRotationGroup:
    spec = spec.strip()
    if not spec:
        raise SpecError("empty group spec")
    if spec.endswith(".json") or os.path.sep in spec:
        try:
            with open(spec) as fh:
                mats = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise SpecError(f"cannot read group file {spec!r}: {exc}") from None
        try:
            return from_matrices([np.asarray(m, float) for m in mats], name=os.path.basename(spec))
        except GroupError as exc:
            raise SpecError(str(exc)) from None
    parts = spec.split(":")
    head = parts[0]
    try:
        if head == "cyclic":
            if len(parts) not in (2, 3):
                raise SpecError(f"cyclic spec is cyclic:m[:k1,k2], got {spec!r}")
            m = _num(parts[1], int)
            if len(parts) == 3:
                ks = parts[2].split(",")
                if len(ks) != 2:
                    raise SpecError(f"embedding must be k1,k2 in {spec!r}")
                if dim != 4:
                    raise SpecError("an embedding k1,k2 needs dimension 4")
                return make_cyclic_subgroup(4, m, (_num(ks[0], int), _num(ks[1], int)))
            return make_cyclic_subgroup(dim, m)
        if head == "binary-dihedral":
            if len(parts) != 2:
                raise SpecError("binary-dihedral spec is binary-dihedral:k")
            return make_binary_polyhedral("dihedral", _num(parts[1], int))
        if head in ("binary-tetrahedral", "binary-octahedral", "binary-icosahedral") and len(parts) == 1:
            return make_binary_polyhedral(head.split("-")[1])
    except GroupError as exc:
        raise SpecError(str(exc)) from None
    raise SpecError(f"unknown group spec {spec!r}")


_FACTORS = {
    "rho2": lambda: power_of_radius(2.0),
    "inv-rho2": lambda: power_of_radius(-2.0),
    "sphere-factor": lambda: sphere_factor(1.0),
}


def parse_metric(spec: str) -> MetricChart:
    spec = spec.strip()
    parts = spec.split(":")
    head = parts[0]
    if head == "flat" and len(parts) == 2:
        return flat_metric(_num(parts[1], int))
    if head == "sphere" and len(parts) == 3:
        return round_sphere_chart(_num(parts[1], int), _num(parts[2]))
    if head == "eguchi-hanson" and len(parts) == 2:
        return eguchi_hanson(_positive(parts[1]))
    if head == "eguchi-hanson-bolt" and len(parts) == 2:
        return eguchi_hanson_bolt_chart(_positive(parts[1]))
    if head == "synthetic" and len(parts) == 3:
        return synthetic_decay_chart(_num(parts[1], int), _positive(parts[2]))
    if head == "quotient" and len(parts) >= 3:
        rest = parts[1:]
        for cut in range(1, len(rest)):
            try:
                base = parse_metric(":".join(rest[:cut]))
                G = parse_group(":".join(rest[cut:]), base.n)
            except SpecError:
                continue
            try:
                return quotient_annulus(base, G)
            except (GroupError, ValueError) as exc:
                raise SpecError(str(exc)) from None
        raise SpecError(f"cannot split {spec!r} into a metric and a group")
    if head == "rescale" and len(parts) >= 3:
        factor = parts[-1]
        if factor not in _FACTORS:
            raise SpecError(f"unknown conformal factor {factor!r}; use one of {sorted(_FACTORS)}")
        return conformal_rescale(parse_metric(":".join(parts[1:-1])), _FACTORS[factor]())
    raise SpecError(f"unknown metric spec {spec!r}")


def _positive(text):
    v = _num(text)
    if not v > 0:
        raise SpecError(f"expected a positive number, got {text!r}")
    return v


def parse_radii(spec: str) -> np.ndarray:
    """``r0:r1:count:log`` or ``r0:r1:count:lin``."""
    parts = spec.split(":")
    if len(parts) != 4 or parts[3] not in ("log", "lin"):
        raise SpecError(f"radii spec is r0:r1:count:log|lin, got {spec!r}")
    r0, r1, count = _num(parts[0]), _num(parts[1]), _num(parts[2], int)
    if not (0 < r0 < r1) or count < 1:
        raise SpecError("radii need 0 < r0 < r1 and count >= 1")
    return np.geomspace(r0, r1, count) if parts[3] == "log" else np.linspace(r0, r1, count)


def parse_point(spec: str, n: int | None = None) -> np.ndarray:
    try:
        p = np.array([float(v) for v in spec.split(",")])
    except ValueError:
        raise SpecError(f"point must be comma-separated numbers, got {spec!r}") from None
    if n is not None and len(p) != n:
        raise SpecError(f"point has {len(p)} coordinates, chart has {n}")
    return p


def parse_box(spec: str) -> tuple[float, float]:
    parts = spec.split(":")
    if len(parts) != 2:
        raise SpecError(f"box spec is lo:hi, got {spec!r}")
    lo, hi = _num(parts[0]), _num(parts[1])
    if not lo < hi:
        raise SpecError("box needs lo < hi")
    return lo, hi


def parse_levels(spec: str) -> range:
    parts = spec.split(":")
    if len(parts) != 2:
        raise SpecError(f"levels spec is j0:j1, got {spec!r}")
    j0, j1 = _num(parts[0], int), _num(parts[1], int)
    if not 0 <= j0 < j1:
        raise SpecError("levels need 0 <= j0 < j1")
    return range(j0, j1 + 1)


def spinor_from_json(obj) -> tuple[np.ndarray, np.ndarray | None]:
    """Accept ``[[re, im], ...]`` or ``{"spinor": [...], "point": [...]}``."""
    point = None
    if isinstance(obj, dict):
        point = obj.get("point")
        obj = obj.get("spinor")
    try:
        arr = np.asarray(obj, float)
    except (TypeError, ValueError):
        raise SpecError("spinor must be an array of [re, im] pairs") from None
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] not in (2, 4, 8):
        raise SpecError("spinor must be an array of 2, 4 or 8 [re, im] pairs")
    return arr[:, 0] + 1j * arr[:, 1], None if point is None else np.asarray(point, float)


def spinor_to_json(v) -> list:
    return [[float(np.real(c)), float(np.imag(c))] for c in np.asarray(v)]


def load_spinor(path: str) -> tuple[np.ndarray, np.ndarray | None]:
    try:
        with open(path) as fh:
            return spinor_from_json(json.load(fh))
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecError(f"cannot read spinor file {path!r}: {exc}") from None
