"""
Serialization - Shared JSON schemas for matrices, regions, certificates and reports.

Matrices are ``{"kind", "dims", "entries"}`` with ``entries`` row-major lists
of ``[re, im]`` pairs. Regions are a tagged union on ``"kind"``. Floats are
written with 12 significant digits; decoders reject unknown fields and report
the JSON path of the offending value.
"""

import json
import logging
from dataclasses import asdict, fields
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .bell import BellConfiguration, BellVerdict, SurveyResult
from .commoncause import CommonCauseCertificate, FeasibilityReport, SearchResult
from .config_manager import ToleranceConfig
from .errors import CcpnetError, SchemaError
from .minkowski import (
    BLCOf,
    CommonPastOf,
    ComplementOf,
    CompletionOf,
    Difference,
    DoubleCone,
    EmptyRegion,
    Event,
    GeometryVerdict,
    Intersection,
    Localization,
    Region,
    TimeSlab,
    Union,
    Wedge,
)
from .qprob import Operator, Projection, State, TensorSpace

logger = logging.getLogger(__name__)

MATRIX_KINDS = ("operator", "projection", "state")


def round_float(x: float) -> float:
    """Round to 12 significant digits."""
    x = float(x)
    if not np.isfinite(x):
        return x
    return float(f"{x:.12g}")


def to_jsonable(value: Any) -> Any:
    """Recursively round floats and convert numpy scalars and tuples."""
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return round_float(value)
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, frozenset, set)):
        items = sorted(value) if isinstance(value, (frozenset, set)) else value
        return [to_jsonable(v) for v in items]
    return value


def dumps(data: Any) -> str:
    """Canonical JSON text: sorted keys, rounded floats, trailing newline."""
    return json.dumps(to_jsonable(data), indent=2, sort_keys=True) + "\n"


def load_json(path: Path) -> Any:
    """
    Read a JSON file.

    Raises:
        SchemaError: If the file cannot be read or parsed (with the line number)
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise SchemaError(f"Cannot read {path}: {e}")
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"Invalid JSON in {path}: {e.msg}", line=e.lineno)


# Field checking

def require_object(data: Any, path: str) -> Mapping[str, Any]:
    if not isinstance(data, Mapping):
        raise SchemaError(f"Expected an object, got {type(data).__name__}", path)
    return data


def check_fields(data: Mapping[str, Any], required: Iterable[str], optional: Iterable[str], path: str) -> None:
    required = set(required)
    allowed = required | set(optional)
    for key in data:
        if key not in allowed:
            raise SchemaError(f"Unknown field '{key}'", f"{path}.{key}")
    for key in sorted(required):
        if key not in data:
            raise SchemaError(f"Missing field '{key}'", path)


def as_number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"Expected a number, got {value!r}", path)
    return float(value)


def as_int_list(value: Any, path: str) -> List[int]:
    if not isinstance(value, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
        raise SchemaError("Expected a list of integers", path)
    return list(value)


# Matrices

def encode_matrix(matrix: np.ndarray, dims: Sequence[int], kind: str = "operator") -> Dict[str, Any]:
    m = np.asarray(matrix, dtype=complex)
    return {
        "kind": kind,
        "dims": [int(d) for d in dims],
        "entries": [[[round_float(z.real), round_float(z.imag)] for z in row] for row in m],
    }


def encode_operator(x) -> Dict[str, Any]:
    if isinstance(x, Projection):
        return encode_matrix(x.matrix, x.space.factor_dims, "projection")
    if isinstance(x, State):
        return encode_matrix(x.rho, x.space.factor_dims, "state")
    return encode_matrix(x.entries, x.space.factor_dims, "operator")


def decode_matrix(data: Any, path: str = "$",
                  kind: Optional[str] = None) -> Tuple[TensorSpace, np.ndarray]:
    """
    Decode the shared matrix format.

    Args:
        data: Parsed JSON value
        path: JSON path used in error messages
        kind: Expected kind tag, if any

    Returns:
        Tuple of (space, complex matrix)
    """
    obj = require_object(data, path)
    check_fields(obj, ("dims", "entries"), ("kind",), path)
    found = obj.get("kind", kind or "operator")
    if found not in MATRIX_KINDS:
        raise SchemaError(f"Unknown matrix kind '{found}'", f"{path}.kind")
    if kind is not None and found != kind:
        raise SchemaError(f"Expected a {kind}, got a {found}", f"{path}.kind")
    dims = as_int_list(obj["dims"], f"{path}.dims")
    try:
        space = TensorSpace(tuple(dims))
    except CcpnetError as e:
        raise SchemaError(str(e), f"{path}.dims")
    n = space.total_dim
    rows = obj["entries"]
    if not isinstance(rows, list) or len(rows) != n:
        raise SchemaError(f"Expected {n} rows", f"{path}.entries")
    matrix = np.zeros((n, n), dtype=complex)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            raise SchemaError(f"Expected {n} entries", f"{path}.entries[{i}]")
        for j, entry in enumerate(row):
            where = f"{path}.entries[{i}][{j}]"
            if not isinstance(entry, list) or len(entry) != 2:
                raise SchemaError("Expected a [re, im] pair", where)
            matrix[i, j] = complex(as_number(entry[0], where), as_number(entry[1], where))
    return space, matrix


def _wrap(build: Callable[[], Any], path: str) -> Any:
    try:
        return build()
    except SchemaError:
        raise
    except (CcpnetError, ValueError) as e:
        raise SchemaError(f"{type(e).__name__}: {e}", path)


def decode_state(data: Any, path: str = "$", tol: Optional[ToleranceConfig] = None) -> State:
    space, matrix = decode_matrix(data, path, "state")
    return _wrap(lambda: State.from_matrix(space, matrix, tol), path)


def decode_projection(data: Any, path: str = "$", tol: Optional[ToleranceConfig] = None) -> Projection:
    space, matrix = decode_matrix(data, path, "projection")
    return _wrap(lambda: Projection.from_matrix(space, matrix, tol=tol), path)


def decode_operator(data: Any, path: str = "$") -> Operator:
    space, matrix = decode_matrix(data, path, "operator")
    return _wrap(lambda: Operator(space, matrix), path)


# Regions

_INNER_KINDS = {
    "blc": BLCOf,
    "complement": ComplementOf,
    "completion": CompletionOf,
    "common_past": CommonPastOf,
}


def encode_region(region: Region) -> Dict[str, Any]:
    if isinstance(region, DoubleCone):
        return {"kind": "double_cone", "bottom": list(region.bottom.coords), "top": list(region.top.coords)}
    if isinstance(region, Wedge):
        return {
            "kind": "wedge",
            "right": region.right,
            "lorentz": [list(row) for row in region.lorentz],
            "translation": list(region.translation),
        }
    if isinstance(region, TimeSlab):
        return {"kind": "time_slab", "t_min": region.t_min, "t_max": region.t_max,
                "spatial_dim": region.spatial_dim}
    if isinstance(region, EmptyRegion):
        return {"kind": "empty", "spatial_dim": region.spatial_dim}
    if isinstance(region, Union):
        return {"kind": "union", "parts": [encode_region(p) for p in region.parts]}
    if isinstance(region, Intersection):
        return {"kind": "intersection", "parts": [encode_region(p) for p in region.parts]}
    if isinstance(region, Difference):
        return {"kind": "difference", "base": encode_region(region.base), "removed": encode_region(region.removed)}
    for kind, cls in _INNER_KINDS.items():
        if type(region) is cls:
            return {"kind": kind, "inner": encode_region(region.inner)}
    raise SchemaError(f"No JSON form for region type {type(region).__name__}")


def _event(value: Any, path: str) -> Event:
    if not isinstance(value, list):
        raise SchemaError("Expected a coordinate list", path)
    coords = [as_number(v, f"{path}[{i}]") for i, v in enumerate(value)]
    return _wrap(lambda: Event(tuple(coords)), path)


def decode_region(data: Any, path: str = "$") -> Region:
    """Decode the region tagged union."""
    obj = require_object(data, path)
    kind = obj.get("kind")
    if kind == "double_cone":
        check_fields(obj, ("kind", "bottom", "top"), (), path)
        bottom, top = _event(obj["bottom"], f"{path}.bottom"), _event(obj["top"], f"{path}.top")
        return _wrap(lambda: DoubleCone(bottom, top), path)
    if kind == "wedge":
        check_fields(obj, ("kind", "right", "lorentz", "translation"), (), path)
        if not isinstance(obj["right"], bool):
            raise SchemaError("Expected a boolean", f"{path}.right")
        rows = obj["lorentz"]
        if not isinstance(rows, list):
            raise SchemaError("Expected a matrix", f"{path}.lorentz")
        lorentz = tuple(
            tuple(as_number(v, f"{path}.lorentz[{i}][{j}]") for j, v in enumerate(row if isinstance(row, list) else []))
            for i, row in enumerate(rows)
        )
        translation = tuple(_event(obj["translation"], f"{path}.translation").coords)
        return _wrap(lambda: Wedge(obj["right"], lorentz, translation), path)
    if kind == "time_slab":
        check_fields(obj, ("kind", "t_min", "t_max"), ("spatial_dim",), path)
        t_min, t_max = as_number(obj["t_min"], f"{path}.t_min"), as_number(obj["t_max"], f"{path}.t_max")
        return _wrap(lambda: TimeSlab(t_min, t_max, int(obj.get("spatial_dim", 1))), path)
    if kind == "empty":
        check_fields(obj, ("kind",), ("spatial_dim",), path)
        return EmptyRegion(obj.get("spatial_dim"))
    if kind in ("union", "intersection"):
        check_fields(obj, ("kind", "parts"), (), path)
        if not isinstance(obj["parts"], list) or not obj["parts"]:
            raise SchemaError("Expected a nonempty list of regions", f"{path}.parts")
        parts = [decode_region(p, f"{path}.parts[{i}]") for i, p in enumerate(obj["parts"])]
        combine = Union.of if kind == "union" else Intersection.of
        return _wrap(lambda: combine(*parts), path)
    if kind == "difference":
        check_fields(obj, ("kind", "base", "removed"), (), path)
        base = decode_region(obj["base"], f"{path}.base")
        removed = decode_region(obj["removed"], f"{path}.removed")
        return _wrap(lambda: Difference(base, removed), path)
    if kind in _INNER_KINDS:
        check_fields(obj, ("kind", "inner"), (), path)
        inner = decode_region(obj["inner"], f"{path}.inner")
        return _wrap(lambda: _INNER_KINDS[kind](inner), path)
    raise SchemaError(f"Unknown region kind {kind!r}", f"{path}.kind")


# Results

def encode_tolerances(tol: ToleranceConfig) -> Dict[str, float]:
    return asdict(tol)


def decode_tolerances(data: Any, path: str = "$") -> ToleranceConfig:
    obj = require_object(data, path)
    known = [f.name for f in fields(ToleranceConfig)]
    check_fields(obj, (), known, path)
    return _wrap(lambda: ToleranceConfig().with_overrides(
        {k: as_number(v, f"{path}.{k}") for k, v in obj.items()}), path)


def encode_certificate(cert: CommonCauseCertificate) -> Dict[str, Any]:
    return {
        "C": encode_operator(cert.C),
        "residual_screen_C": cert.residual_screen_C,
        "residual_screen_Cperp": cert.residual_screen_Cperp,
        "margin_A": cert.margin_A,
        "margin_B": cert.margin_B,
        "commutation_residuals": list(cert.commutation_residuals),
        "valid": cert.valid,
        "tolerances": encode_tolerances(cert.tolerances),
        "localization": cert.localization,
    }


_CERTIFICATE_NUMBERS = ("residual_screen_C", "residual_screen_Cperp", "margin_A", "margin_B")


def decode_certificate(data: Any, path: str = "$") -> CommonCauseCertificate:
    obj = require_object(data, path)
    check_fields(obj, ("C", *_CERTIFICATE_NUMBERS, "commutation_residuals", "valid", "tolerances"),
                  ("localization",), path)
    numbers = {k: as_number(obj[k], f"{path}.{k}") for k in _CERTIFICATE_NUMBERS}
    residuals = obj["commutation_residuals"]
    if not isinstance(residuals, list) or len(residuals) != 2:
        raise SchemaError("Expected two commutator norms", f"{path}.commutation_residuals")
    if not isinstance(obj["valid"], bool):
        raise SchemaError("Expected a boolean", f"{path}.valid")
    localization = obj.get("localization")
    if localization is not None and not isinstance(localization, Mapping):
        raise SchemaError("Expected an object or null", f"{path}.localization")
    tolerances = decode_tolerances(obj["tolerances"], f"{path}.tolerances")
    return CommonCauseCertificate(
        C=decode_projection(obj["C"], f"{path}.C", tolerances),
        commutation_residuals=tuple(as_number(v, f"{path}.commutation_residuals[{i}]")
                                    for i, v in enumerate(residuals)),
        valid=obj["valid"],
        tolerances=tolerances,
        localization=dict(localization) if localization is not None else None,
        **numbers,
    )


def encode_feasibility(report: FeasibilityReport) -> Dict[str, Any]:
    return {
        "rank_intervals": [{"rank": k, "low": lo, "high": hi} for k, lo, hi in report.rank_intervals],
        "feasible": report.feasible,
        "chosen_rank": report.chosen_rank,
        "target": report.target,
        "total": report.total,
    }


def encode_search_result(result: SearchResult) -> Dict[str, Any]:
    return {
        "certificate": encode_certificate(result.certificate),
        "merit": result.merit,
        "rank": result.rank,
        "evaluated": result.evaluated,
        "complete": result.complete,
    }


def encode_bell_configuration(config: BellConfiguration, space: TensorSpace) -> Dict[str, Any]:
    d1 = [space.factor_dims[s] for s in config.sites_1]
    d2 = [space.factor_dims[s] for s in config.sites_2]
    return {
        "sites_1": list(config.sites_1),
        "sites_2": list(config.sites_2),
        "X1": encode_matrix(config.X1, d1),
        "X2": encode_matrix(config.X2, d1),
        "Y1": encode_matrix(config.Y1, d2),
        "Y2": encode_matrix(config.Y2, d2),
        "value": config.value,
    }


def encode_bell_verdict(verdict: BellVerdict, config: Optional[BellConfiguration] = None,
                        space: Optional[TensorSpace] = None) -> Dict[str, Any]:
    data = {f.name: getattr(verdict, f.name) for f in fields(verdict) if f.name != "configuration"}
    data["history"] = list(verdict.history)
    config = config or verdict.configuration
    if config is not None and space is not None:
        data["configuration"] = encode_bell_configuration(config, space)
    return data


def encode_survey(result: SurveyResult) -> Dict[str, Any]:
    return {"fraction": result.fraction, "rows": [asdict(row) for row in result.rows]}


def encode_geometry_verdict(verdict: GeometryVerdict) -> Dict[str, Any]:
    return asdict(verdict)


def encode_localization(loc: Localization) -> Dict[str, Any]:
    return {
        "region": encode_region(loc.region),
        "t0": loc.t0,
        "epsilon": loc.epsilon,
        "cross_sections": [list(s) for s in loc.cross_sections],
        "branch_sections": [list(s) for s in loc.branch_sections],
        "checks": dict(loc.checks),
        "subset_verdict": encode_geometry_verdict(loc.subset_verdict) if loc.subset_verdict else None,
    }


def encode_demo_report(report) -> Dict[str, Any]:
    """JSON form of a localnet.DemoReport."""
    return {
        "n_sites": report.n_sites,
        "valid": report.valid,
        "seed": report.seed,
        "algebra": report.algebra,
        "canonical_value": report.canonical_value,
        "regions": {name: encode_region(r) for name, r in report.regions.items()},
        "bases": {name: list(b) for name, b in report.bases.items()},
        "A": encode_operator(report.a),
        "B": encode_operator(report.b),
        "certificate": encode_certificate(report.certificate),
        "localization": encode_localization(report.localization),
        "checks": [asdict(c) for c in report.checks],
        "alternative_localizations": dict(report.alternative_localizations),
        "tolerances": encode_tolerances(report.tolerances),
    }
