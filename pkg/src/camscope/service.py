"""HTTP/JSON API over a loaded model and dataset.

Per-class matrices are computed once at startup and cached; drill-down
filters re-slice the cached rows, so no request ever re-runs the network.
Read endpoints are side-effect free; sessions are the only mutable state and
are volatile (exportable via GET /api/sessions/{id}).

Every error body has the shape {"code": ..., "message": ...}; each module
error maps to exactly one code (see ERROR_STATUS).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .aggregate import (
    AGGREGATION_METHODS,
    VARIABILITY_METHODS,
    CamMatrix,
    build_aggregated_cam,
)
from .cam import cams_for_predictions
from .dataset import DatasetBundle
from .errors import (
    CamscopeError,
    ContractViolationError,
    EmptyClassError,
    EmptyInputError,
    EmptySelectionError,
    NumericError,
    UnknownMethodError,
)
from .model import CamNet
from .session import (
    DEFAULT_HISTOGRAM_BINS,
    Session,
    annotate,
    apply_filter,
    histogram,
    pop_filter,
    subglobal_cam,
)

ERROR_STATUS = {
    ContractViolationError: 400,
    UnknownMethodError: 400,
    EmptyInputError: 400,
    EmptySelectionError: 422,
    EmptyClassError: 404,
    NumericError: 500,
}


class ApiError(Exception):
    """Service-level error carrying the documented error body."""

    def __init__(self, http_status, code, message):
        super().__init__(message)
        self.http_status = http_status
        self.code = code
        self.message = message


class FilterBody(BaseModel):
    feature_index: int
    lo: float
    hi: float


class SessionBody(BaseModel):
    class_index: int


class AnnotationBody(BaseModel):
    status: str | None = None


@dataclass
class ServiceState:
    """Everything derived from the model + dataset at startup."""

    net: CamNet
    bundle: DatasetBundle
    matrices: dict = field(default_factory=dict)  # class_index -> CamMatrix
    cams: dict = field(default_factory=dict)  # sample_id -> LocalCam
    sessions: dict = field(default_factory=dict)
    _session_counter: int = 0

    def next_session_id(self):
        self._session_counter += 1
        return f"s{self._session_counter}"


def build_state(net: CamNet, bundle: DatasetBundle) -> ServiceState:
    """Predict every bundle sample once and group the maps by predicted class."""
    cams = cams_for_predictions(net, bundle.x, bundle.sample_ids)
    by_class = {}
    for cam in cams:
        by_class.setdefault(cam.class_index, []).append(cam)
    matrices = {}
    for class_index in sorted(by_class):
        members = by_class[class_index]
        matrices[class_index] = CamMatrix(
            class_index=class_index,
            sample_ids=[c.sample_id for c in members],
            values=[c.normalized for c in members],
        )
    return ServiceState(
        net=net,
        bundle=bundle,
        matrices=matrices,
        cams={c.sample_id: c for c in cams},
    )


def class_name(state: ServiceState, class_index):
    names = state.bundle.class_names
    return names[class_index] if 0 <= class_index < len(names) else f"class-{class_index}"


def create_app(state: ServiceState | None = None, ui_dir=None) -> FastAPI:
    app = FastAPI(title="camscope", docs_url=None, redoc_url=None)

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.http_status,
            content={"code": exc.code, "message": exc.message},
        )

    @app.exception_handler(CamscopeError)
    async def _module_error(request: Request, exc: CamscopeError):
        status = ERROR_STATUS.get(type(exc), 500)
        return JSONResponse(status_code=status, content={"code": exc.code, "message": str(exc)})

    @app.exception_handler(IndexError)
    async def _index_error(request: Request, exc: IndexError):
        return JSONResponse(status_code=404, content={"code": "not-found", "message": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"code": "invalid-request", "message": str(exc.errors())},
        )

    def require_state() -> ServiceState:
        if state is None:
            raise ApiError(409, "no-model", "no model/dataset loaded")
        return state

    def get_matrix(class_index) -> CamMatrix:
        st = require_state()
        matrix = st.matrices.get(class_index)
        if matrix is None:
            raise ApiError(404, "not-found", f"no samples predicted as class {class_index}")
        return matrix

    def get_session(session_id) -> Session:
        st = require_state()
        session = st.sessions.get(session_id)
        if session is None:
            raise ApiError(404, "not-found", f"unknown session {session_id!r}")
        return session

    def check_methods(agg, var):
        if agg not in AGGREGATION_METHODS:
            raise UnknownMethodError(f"unknown aggregation method {agg!r}")
        if var not in VARIABILITY_METHODS:
            raise UnknownMethodError(f"unknown variability method {var!r}")

    def session_state(session_id, session: Session):
        return {"session_id": session_id, **session.to_dict()}

    @app.get("/api/classes")
    def list_classes():
        st = require_state()
        return [
            {
                "class_index": idx,
                "name": class_name(st, idx),
                "n_samples": st.matrices[idx].n_samples,
            }
            for idx in sorted(st.matrices)
        ]

    @app.get("/api/classes/{class_index}/cam")
    def class_cam(class_index: int, agg: str = "mean", var: str = "entropy"):
        check_methods(agg, var)
        matrix = get_matrix(class_index)
        return build_aggregated_cam(matrix, agg, var).to_dict()

    @app.get("/api/classes/{class_index}/features/{feature_index}/histogram")
    def class_histogram(
        class_index: int,
        feature_index: int,
        session: str | None = None,
        bins: int = DEFAULT_HISTOGRAM_BINS,
    ):
        matrix = get_matrix(class_index)
        if session is not None:
            sess = get_session(session)
            if sess.class_index != class_index:
                raise ApiError(
                    400,
                    "contract-violation",
                    f"session {session!r} belongs to class {sess.class_index}, not {class_index}",
                )
        else:
            sess = Session(matrix)
        return histogram(sess, feature_index, bins).to_dict()

    @app.post("/api/sessions", status_code=201)
    def create_session(body: SessionBody):
        st = require_state()
        matrix = get_matrix(body.class_index)
        session_id = st.next_session_id()
        st.sessions[session_id] = Session(matrix)
        return session_state(session_id, st.sessions[session_id])

    @app.get("/api/sessions/{session_id}")
    def export_session(session_id: str):
        return session_state(session_id, get_session(session_id))

    @app.post("/api/sessions/{session_id}/filters")
    def push_filter(session_id: str, body: FilterBody):
        session = get_session(session_id)
        apply_filter(session, body.feature_index, body.lo, body.hi)
        return session_state(session_id, session)

    @app.delete("/api/sessions/{session_id}/filters/last")
    def drop_last_filter(session_id: str):
        session = get_session(session_id)
        pop_filter(session)
        return session_state(session_id, session)

    @app.get("/api/sessions/{session_id}/cam")
    def session_cam(session_id: str, agg: str = "mean", var: str = "entropy"):
        check_methods(agg, var)
        session = get_session(session_id)
        return subglobal_cam(session, agg, var).to_dict()

    @app.put("/api/sessions/{session_id}/annotations/{feature_index}")
    def put_annotation(session_id: str, feature_index: int, body: AnnotationBody):
        session = get_session(session_id)
        annotate(session, feature_index, body.status)
        return session_state(session_id, session)

    @app.get("/api/samples/{sample_id}/cam")
    def sample_cam(sample_id: str):
        st = require_state()
        cam = st.cams.get(sample_id)
        if cam is None:
            raise ApiError(404, "not-found", f"unknown sample {sample_id!r}")
        return cam.to_dict()

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


# ---------------------------------------------------------------------------
# response schemas (JSON Schema; also the test fixtures for the API contract)
# ---------------------------------------------------------------------------

_NUMBER_ARRAY = {"type": "array", "items": {"type": "number"}}

CLASS_LIST_SCHEMA = {
    "type": "array",
    "items": {
        "type": "object",
        "required": ["class_index", "name", "n_samples"],
        "properties": {
            "class_index": {"type": "integer"},
            "name": {"type": "string"},
            "n_samples": {"type": "integer", "minimum": 1},
        },
        "additionalProperties": False,
    },
}

AGGREGATED_CAM_SCHEMA = {
    "type": "object",
    "required": ["class_index", "n_samples", "agg_method", "var_method", "impact", "variability"],
    "properties": {
        "class_index": {"type": "integer"},
        "n_samples": {"type": "integer", "minimum": 1},
        "agg_method": {"enum": list(AGGREGATION_METHODS)},
        "var_method": {"enum": list(VARIABILITY_METHODS)},
        "impact": {**_NUMBER_ARRAY, "items": {"type": "number", "minimum": -1, "maximum": 1}},
        "variability": {**_NUMBER_ARRAY, "items": {"type": "number", "minimum": 0, "maximum": 1}},
    },
    "additionalProperties": False,
}

HISTOGRAM_SCHEMA = {
    "type": "object",
    "required": ["feature_index", "bin_edges", "counts"],
    "properties": {
        "feature_index": {"type": "integer"},
        "bin_edges": _NUMBER_ARRAY,
        "counts": {"type": "array", "items": {"type": "integer", "minimum": 0}},
    },
    "additionalProperties": False,
}

LOCAL_CAM_SCHEMA = {
    "type": "object",
    "required": ["sample_id", "class_index", "raw", "normalized", "zero"],
    "properties": {
        "sample_id": {"type": "string"},
        "class_index": {"type": "integer"},
        "raw": _NUMBER_ARRAY,
        "normalized": {**_NUMBER_ARRAY, "items": {"type": "number", "minimum": -1, "maximum": 1}},
        "zero": {"type": "boolean"},
    },
    "additionalProperties": False,
}

SESSION_SCHEMA = {
    "type": "object",
    "required": ["session_id", "class_index", "filters", "active_ids", "annotations"],
    "properties": {
        "session_id": {"type": "string"},
        "class_index": {"type": "integer"},
        "filters": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["feature_index", "lo", "hi"],
                "properties": {
                    "feature_index": {"type": "integer"},
                    "lo": {"type": "number"},
                    "hi": {"type": "number"},
                },
                "additionalProperties": False,
            },
        },
        "active_ids": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "annotations": {
            "type": "object",
            "additionalProperties": {"enum": ["interesting", "irrelevant"]},
        },
    },
    "additionalProperties": False,
}

API_ERROR_SCHEMA = {
    "type": "object",
    "required": ["code", "message"],
    "properties": {"code": {"type": "string"}, "message": {"type": "string"}},
    "additionalProperties": False,
}
