import json

import numpy as np
import pytest
from pydantic import ValidationError

from src.middleware.error_handler import (
    EXIT_ACCEPTANCE,
    EXIT_COMPUTATION,
    EXIT_USAGE,
    AcceptanceFailure,
    ArtifactIOError,
    ConvergenceError,
    ErrorCode,
    ErrorHandler,
    InternalError,
    InvalidConfigError,
    InvalidInputError,
    LabError,
    ResolutionCapError,
    SolverBreakdownError,
    UsageError,
    WindowTooSmallError,
    format_validation_errors,
)
from src.models.config import RunConfig


class TestLabErrors:
    """Tests for the exception hierarchy."""

    def test_to_dict(self):
        """Errors serialize to a code/message/details/timestamp payload."""
        error = InvalidInputError("alpha", "alpha out of [0,1)")
        payload = error.to_dict()["error"]
        assert payload["code"] == "INVALID_INPUT"
        assert payload["message"] == "Invalid parameter 'alpha': alpha out of [0,1)"
        assert payload["details"] == {"parameter_name": "alpha", "reason": "alpha out of [0,1)"}
        assert payload["timestamp"].endswith("Z")
        json.dumps(error.to_dict())

    @pytest.mark.parametrize("error,status", [
        (UsageError("bad flag"), EXIT_USAGE),
        (InvalidConfigError(["alpha: alpha out of [0,1)"]), EXIT_USAGE),
        (ResolutionCapError(30.0, 25.6), EXIT_COMPUTATION),
        (ConvergenceError("sigma_min", 500), EXIT_COMPUTATION),
        (AcceptanceFailure(["dissipativity"]), EXIT_ACCEPTANCE),
    ])
    def test_exit_status(self, error, status):
        """Usage, computation and acceptance failures map to distinct statuses."""
        assert error.exit_status == status

    def test_input_errors_are_value_errors(self):
        """Argument errors can be caught as ValueError."""
        assert isinstance(InvalidInputError("x", "bad"), ValueError)
        assert isinstance(WindowTooSmallError((1.0, 2.0), 3, 10), ValueError)

    def test_cap_message_names_cap(self):
        """The resolution error carries the cap value."""
        error = ResolutionCapError(30.0, 25.6)
        assert "omega_cap=25.6" in error.message
        assert error.omega_cap == 25.6

    def test_convergence_shift(self):
        """Eigen-iteration failures report the offending shift."""
        error = ConvergenceError("shift-invert eigensolver", -1, shift=5j)
        assert "shift=5j" in error.message
        assert error.details["shift"] == "5j"

    def test_config_error_joins_messages(self):
        """Every violation appears in the message."""
        error = InvalidConfigError(["a: one", "b: two"])
        assert error.message == "a: one; b: two"
        assert error.errors == ["a: one", "b: two"]


class TestFormatValidationErrors:
    """Tests for flattening pydantic errors."""

    def test_field_messages(self):
        """Each error becomes field: message without the pydantic prefix."""
        with pytest.raises(ValidationError) as excinfo:
            RunConfig(alpha=1.5, n_elements=5)
        messages = format_validation_errors(excinfo.value)
        assert "alpha: alpha out of [0,1)" in messages
        assert "n_elements: n_elements must be even" in messages


class TestErrorHandler:
    """Tests for the central handler."""

    @pytest.fixture
    def handler(self):
        """Handler without debug output."""
        return ErrorHandler()

    def test_lab_error_passthrough(self, handler):
        """LabErrors keep their status and payload."""
        error = UsageError("missing required field: alpha")
        status, payload = handler.handle_error(error)
        assert status == EXIT_USAGE
        assert payload["error"]["message"] == "missing required field: alpha"

    @pytest.mark.parametrize("error,expected", [
        (np.linalg.LinAlgError("not positive definite"), SolverBreakdownError),
        (PermissionError(13, "Permission denied", "out/energy.csv"), ArtifactIOError),
        (KeyError("boom"), InternalError),
    ])
    def test_translate(self, handler, error, expected):
        """Foreign exceptions map onto the hierarchy."""
        assert isinstance(handler.translate(error), expected)

    def test_translate_validation_error(self, handler):
        """pydantic errors become invalid configuration."""
        with pytest.raises(ValidationError) as excinfo:
            RunConfig(alpha=2.0)
        translated = handler.translate(excinfo.value)
        assert isinstance(translated, InvalidConfigError)
        assert translated.exit_status == EXIT_USAGE

    def test_io_error_names_path(self, handler):
        """Artifact errors include the path."""
        translated = handler.translate(PermissionError(13, "Permission denied", "out/energy.csv"))
        assert translated.code is ErrorCode.ARTIFACT_IO
        assert "out/energy.csv" in translated.message

    def test_internal_error_status(self, handler):
        """Unexpected errors exit as computation failures."""
        status, payload = handler.handle_error(RuntimeError("unexpected"))
        assert status == EXIT_COMPUTATION
        assert payload["error"]["code"] == "INTERNAL_ERROR"
        assert "RuntimeError: unexpected" in payload["error"]["message"]

    def test_debug_adds_traceback(self):
        """Debug mode attaches the original exception."""
        try:
            raise RuntimeError("unexpected")
        except RuntimeError as e:
            _, payload = ErrorHandler(debug=True).handle_error(e)
        details = payload["error"]["details"]
        assert details["exception_type"] == "RuntimeError"
        assert "Traceback" in details["traceback"]

    def test_logs_error(self, handler, caplog):
        """Handled errors are logged with their code."""
        with caplog.at_level("ERROR"):
            handler.handle_error(UsageError("bad flag"), {"command": "simulate"})
        assert any("USAGE_ERROR: bad flag" in r.getMessage() for r in caplog.records)

    def test_base_class(self):
        """All lab errors share the LabError base."""
        assert issubclass(AcceptanceFailure, LabError)
