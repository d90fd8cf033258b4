"""Tests for the shared JSON schemas."""

import json

import numpy as np
import pytest

from ccpnet.commoncause import verify_common_cause
from ccpnet.config_manager import ToleranceConfig
from ccpnet.errors import SchemaError
from ccpnet.minkowski import (
    BLCOf,
    Difference,
    DoubleCone,
    Event,
    TimeSlab,
    Union,
    Wedge,
)
from ccpnet.serialization import (
    decode_certificate,
    decode_projection,
    decode_region,
    decode_state,
    decode_tolerances,
    dumps,
    encode_certificate,
    encode_operator,
    encode_region,
    load_json,
    round_float,
)


def test_round_float():
    assert round_float(0.1 + 0.2) == 0.3
    assert round_float(1 / 3) == 0.333333333333


def test_dumps_is_canonical():
    text = dumps({"b": 0.1 + 0.2, "a": (1, 2), "c": {3, 1}})
    assert text.endswith("\n")
    assert json.loads(text) == {"a": [1, 2], "b": 0.3, "c": [1, 3]}
    assert text.index('"a"') < text.index('"b"')


def test_load_json_reports_line(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "state": \n}\n')
    with pytest.raises(SchemaError) as excinfo:
        load_json(path)
    assert excinfo.value.line == 3


class TestMatrices:
    def test_state_roundtrip(self, singlet):
        decoded = decode_state(encode_operator(singlet))
        assert decoded.space.factor_dims == (2, 2)
        assert np.allclose(decoded.rho, singlet.rho, atol=1e-12)

    def test_kind_mismatch(self, five_atom):
        with pytest.raises(SchemaError) as excinfo:
            decode_state(encode_operator(five_atom["A"]), "$.state")
        assert excinfo.value.path == "$.state.kind"

    def test_unknown_field(self):
        data = {"kind": "state", "dims": [1], "entries": [[[1, 0]]], "extra": 1}
        with pytest.raises(SchemaError) as excinfo:
            decode_state(data)
        assert excinfo.value.path == "$.extra"

    def test_row_count(self):
        with pytest.raises(SchemaError) as excinfo:
            decode_state({"kind": "state", "dims": [2], "entries": [[[1, 0], [0, 0]]]})
        assert excinfo.value.path == "$.entries"

    def test_entry_shape(self):
        with pytest.raises(SchemaError) as excinfo:
            decode_state({"dims": [2], "entries": [[[1, 0], [0, 0]], [[0, 0], [0]]]})
        assert excinfo.value.path == "$.entries[1][1]"

    def test_invalid_state_becomes_schema_error(self):
        with pytest.raises(SchemaError, match="InvalidState"):
            decode_state({"dims": [2], "entries": [[[0.5, 0], [0, 0]], [[0, 0], [0.2, 0]]]})

    def test_invalid_projection(self):
        with pytest.raises(SchemaError, match="InvalidProjection"):
            decode_projection({"dims": [2], "entries": [[[0.5, 0], [0, 0]], [[0, 0], [1, 0]]]})

    def test_state_tolerance_reaches_validation(self):
        half = 0.5 + 5e-9
        data = {"kind": "state", "dims": [2], "entries": [[[half, 0], [0, 0]], [[0, 0], [half, 0]]]}
        with pytest.raises(SchemaError, match="InvalidState"):
            decode_state(data)
        decoded = decode_state(data, "$", ToleranceConfig(tol_trace=1e-6))
        assert np.trace(decoded.rho).real == pytest.approx(1.0, abs=1e-7)

    def test_projection_tolerance_reaches_validation(self):
        data = {"kind": "projection", "dims": [2], "entries": [[[1 + 1e-7, 0], [0, 0]], [[0, 0], [0, 0]]]}
        with pytest.raises(SchemaError, match="InvalidProjection"):
            decode_projection(data)
        assert decode_projection(data, "$", ToleranceConfig(tol_idem=1e-6)).rank == 1


class TestRegions:
    @pytest.mark.parametrize(
        "region",
        [
            DoubleCone.centered(0, 1),
            Wedge.standard(right=False, apex=Event.at(1, 2), rapidity=0.3),
            TimeSlab(-5, -3),
            Difference(BLCOf(DoubleCone.centered(0, 1)), DoubleCone.centered(0, 1)),
            Union.of(DoubleCone.centered(0, 1), DoubleCone.centered(0, 4)),
        ],
    )
    def test_roundtrip_membership(self, region):
        decoded = decode_region(json.loads(dumps(encode_region(region))))
        points = np.random.default_rng(0).uniform(-6, 6, size=(2000, 2))
        assert np.array_equal(decoded.mask(points), region.mask(points))

    def test_unknown_kind(self):
        with pytest.raises(SchemaError) as excinfo:
            decode_region({"kind": "sphere"})
        assert excinfo.value.path == "$.kind"

    def test_nested_path(self):
        data = {"kind": "union", "parts": [encode_region(DoubleCone.centered(0, 1)), {"kind": "double_cone",
                                                                                       "bottom": [0, 0],
                                                                                       "top": [1, 5]}]}
        with pytest.raises(SchemaError) as excinfo:
            decode_region(data)
        assert excinfo.value.path == "$.parts[1]"

    def test_non_lorentz_wedge(self):
        data = {"kind": "wedge", "right": True, "lorentz": [[1, 0], [0, 2]], "translation": [0, 0]}
        with pytest.raises(SchemaError, match="MalformedRegion"):
            decode_region(data)


class TestCertificates:
    def test_roundtrip(self, five_atom):
        cert = verify_common_cause(five_atom["phi"], five_atom["A"], five_atom["B"], five_atom["C"])
        cert = cert.with_localization({"algebra": "full", "sites": [0]})
        decoded = decode_certificate(json.loads(dumps(encode_certificate(cert))))
        assert decoded.valid
        assert decoded.margin_A == pytest.approx(cert.margin_A)
        assert decoded.localization == {"algebra": "full", "sites": [0]}
        assert decoded.tolerances == cert.tolerances
        assert np.allclose(decoded.C.matrix, cert.C.matrix)

    def test_tolerances_reject_unknown(self):
        with pytest.raises(SchemaError):
            decode_tolerances({"tol_wobble": 1e-3})
