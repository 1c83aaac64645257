"""HTTP suggestion service: model registry, prediction endpoints, draft log.

The registry is a directory of versioned model files; the newest file per
method (or an explicit config selection) is active. A snapshot of loaded
models is immutable and swapped atomically on reload, so in-flight
requests never see a half-loaded state. Accepted claim drafts are appended
to a line-delimited log that is itself valid training input.
"""

from __future__ import annotations

import contextlib
import datetime
import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Literal, Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import apriori as apriori_mod
from . import bayes as bayes_mod
from . import nn
from .codes import InvalidCodeError, normalize_cpt, normalize_icd
from .dataset import make_claim
from .evaluate import apriori_suggester, bayes_suggester, nn_suggester
from .rules import AgeGenderRule, filter_predictions, load_rules

METHODS = ("nn", "bayes", "apriori")
MODEL_SUFFIXES = {".nnm": "nn", ".bayes": "bayes", ".apriori": "apriori"}


@dataclass
class ServiceConfig:
    registry_dir: Path
    store_path: Path
    rules_path: Optional[Path] = None
    default_k: int = 3
    default_method: str = "nn"
    port: int = 8000
    active: dict[str, str] = field(default_factory=dict)  # method -> file name override

    @classmethod
    def from_file(cls, path) -> "ServiceConfig":
        """Key = value lines; keys: port, registry_dir, rules_path, store_path,
        default_k, default_method, active_nn, active_bayes, active_apriori."""
        values: dict[str, str] = {}
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}: line {line_no}: expected key = value")
                key, value = (part.strip() for part in line.split("=", 1))
                values[key] = value
        if "registry_dir" not in values or "store_path" not in values:
            raise ValueError(f"{path}: registry_dir and store_path are required")
        active = {}
        for method in METHODS:
            if f"active_{method}" in values:
                active[method] = values[f"active_{method}"]
        return cls(
            registry_dir=Path(values["registry_dir"]),
            store_path=Path(values["store_path"]),
            rules_path=Path(values["rules_path"]) if values.get("rules_path") else None,
            default_k=int(values.get("default_k", 3)),
            default_method=values.get("default_method", "nn"),
            port=int(values.get("port", 8000)),
            active=active,
        )


@dataclass
class LoadedModel:
    method: str
    version: str
    file: str
    suggest: Callable  # (claim, k) -> ranked [(cpt, score)]
    label_count: int
    known_provider: Optional[Callable[[str], bool]] = None


@dataclass
class Snapshot:
    models: dict[str, LoadedModel]
    rules: dict[str, AgeGenderRule]


def scan_registry(registry_dir: Path) -> list[dict]:
    entries = []
    for path in sorted(Path(registry_dir).iterdir()):
        method = MODEL_SUFFIXES.get(path.suffix)
        if method is None or not path.is_file():
            continue
        entries.append(
            {
                "method": method,
                "file": path.name,
                "path": path,
                "mtime": path.stat().st_mtime,
                "version": f"{path.stem}@{int(path.stat().st_mtime)}",
            }
        )
    return entries


def _load_one(entry: dict) -> LoadedModel:
    method, path = entry["method"], entry["path"]
    if method == "nn":
        model = nn.load_model(path)
        vocabs = model.vocabs
        return LoadedModel(
            method="nn",
            version=entry["version"],
            file=entry["file"],
            suggest=nn_suggester(model),
            label_count=model.label_count,
            known_provider=lambda p, _idx=vocabs.provider_index: p in _idx,
        )
    if method == "bayes":
        model = bayes_mod.load_bayes(path)
        return LoadedModel(
            method="bayes",
            version=entry["version"],
            file=entry["file"],
            suggest=bayes_suggester(model),
            label_count=model.label_count,
        )
    ruleset = apriori_mod.load_rules(path)
    return LoadedModel(
        method="apriori",
        version=entry["version"],
        file=entry["file"],
        suggest=apriori_suggester(ruleset),
        label_count=len(apriori_mod.consequent_codes(ruleset)),
    )


class ModelHolder:
    """Atomically swappable snapshot of loaded models and filter rules."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self._lock = threading.Lock()
        self._snapshot: Optional[Snapshot] = None

    def get(self) -> Optional[Snapshot]:
        return self._snapshot

    def reload(self) -> Snapshot:
        entries = scan_registry(self.config.registry_dir)
        chosen: dict[str, dict] = {}
        for entry in entries:
            method = entry["method"]
            override = self.config.active.get(method)
            if override is not None:
                if entry["file"] == override:
                    chosen[method] = entry
            elif method not in chosen or entry["mtime"] > chosen[method]["mtime"]:
                chosen[method] = entry
        if not chosen:
            raise FileNotFoundError(f"no model files in {self.config.registry_dir}")
        models = {method: _load_one(entry) for method, entry in chosen.items()}
        rules = load_rules(self.config.rules_path) if self.config.rules_path else {}
        snapshot = Snapshot(models=models, rules=rules)
        with self._lock:
            self._snapshot = snapshot
        return snapshot


class DraftStore:
    """Append-only line log of accepted drafts; records are valid claim lines."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, record: dict) -> None:
        line = json.dumps(record, sort_keys=True) + "\n"
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line)
                fh.flush()


class SuggestIn(BaseModel):
    provider_id: str
    age: int = Field(ge=0, le=120)
    gender: Literal["M", "F"]
    icds: list[str] = Field(min_length=1, max_length=12)
    k: Optional[int] = Field(default=None, ge=1, le=50)
    method: Optional[Literal["nn", "bayes", "apriori"]] = None


class SuggestionOut(BaseModel):
    cpt: str
    score: float
    filtered_count: int  # higher-ranked raw candidates removed by the rules filter


class SuggestOut(BaseModel):
    suggestions: list[SuggestionOut]
    model_version: str
    warnings: list[str]


class AcceptedCode(BaseModel):
    cpt: str
    score: Optional[float] = None


class DraftIn(BaseModel):
    provider_id: str
    age: int = Field(ge=0, le=120)
    gender: Literal["M", "F"]
    icds: list[str] = Field(min_length=1, max_length=12)
    accepted: list[AcceptedCode] = Field(min_length=1)
    method: Optional[str] = None


def _error(status: int, message: str, fields: Optional[dict] = None) -> JSONResponse:
    body = {"error": message}
    if fields:
        body["fields"] = fields
    return JSONResponse(status_code=status, content=body)


def create_app(config: ServiceConfig, preload: bool = True) -> FastAPI:
    holder = ModelHolder(config)
    store = DraftStore(config.store_path)

    @contextlib.asynccontextmanager
    async def lifespan(_app: FastAPI):
        if preload:
            try:
                holder.reload()
            except FileNotFoundError:
                pass  # stay in "loading" state; health reports 503
        yield

    app = FastAPI(title="cptcoder suggestion service", lifespan=lifespan)
    # the coder-assistant client is served from a separate origin
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.holder = holder
    app.state.store = store

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        fields = {}
        for err in exc.errors():
            loc = ".".join(str(p) for p in err["loc"] if p != "body")
            fields[loc or "body"] = err["msg"]
        return _error(400, "invalid request", fields)

    @app.get("/v1/health")
    def health():
        snapshot = holder.get()
        if snapshot is None:
            return _error(503, "no model loaded yet")
        return {"status": "ok", "methods": sorted(snapshot.models)}

    @app.get("/v1/models")
    def models():
        snapshot = holder.get()
        active = {m.file for m in snapshot.models.values()} if snapshot else set()
        listing = [
            {
                "method": e["method"],
                "file": e["file"],
                "version": e["version"],
                "active": e["file"] in active,
            }
            for e in scan_registry(config.registry_dir)
        ]
        return {"models": listing, "default_method": config.default_method}

    @app.post("/v1/suggest", response_model=SuggestOut)
    def suggest(body: SuggestIn):
        snapshot = holder.get()
        if snapshot is None:
            return _error(503, "no model loaded yet")
        method = body.method or config.default_method
        loaded = snapshot.models.get(method)
        if loaded is None:
            return _error(503, f"no {method} model in the registry")
        try:
            icds = [normalize_icd(raw) for raw in body.icds]
        except InvalidCodeError as exc:
            return _error(400, "invalid request", {"icds": str(exc)})
        k = body.k or config.default_k
        warnings: list[str] = []
        if loaded.known_provider is not None and not loaded.known_provider(body.provider_id):
            warnings.append(
                f"provider {body.provider_id!r} not seen in training; using the fallback row"
            )
        claim = make_claim(
            claim_id="query",
            provider_id=body.provider_id,
            age=body.age,
            gender=body.gender,
            icds=icds,
            cpts=[],
            allow_empty_cpts=True,
        )
        raw = loaded.suggest(claim, 2 * k)
        kept = filter_predictions(raw, body.age, body.gender, snapshot.rules)
        if len(kept) < k and len(raw) == 2 * k:
            # filter depleted the list; re-query once with a deeper ranking
            raw = loaded.suggest(claim, 4 * k)
            kept = filter_predictions(raw, body.age, body.gender, snapshot.rules)
        raw_rank = {cpt: i for i, (cpt, _) in enumerate(raw)}
        suggestions = [
            SuggestionOut(cpt=cpt, score=score, filtered_count=raw_rank[cpt] - i)
            for i, (cpt, score) in enumerate(kept[:k])
        ]
        return SuggestOut(
            suggestions=suggestions, model_version=loaded.version, warnings=warnings
        )

    @app.post("/v1/claims")
    def submit_claim(body: DraftIn):
        snapshot = holder.get()
        if snapshot is None:
            return _error(503, "no model loaded yet")
        try:
            icds = [normalize_icd(raw) for raw in body.icds]
            accepted = [(normalize_cpt(a.cpt), a.score) for a in body.accepted]
        except InvalidCodeError as exc:
            return _error(400, "invalid code", {"detail": str(exc)})
        violations = [
            cpt
            for cpt, _ in accepted
            if cpt in snapshot.rules and not snapshot.rules[cpt].allows(body.age, body.gender)
        ]
        if violations:
            return _error(
                400,
                "accepted codes violate age/gender rules",
                {"accepted": ", ".join(sorted(violations))},
            )
        draft_id = uuid.uuid4().hex
        record = {
            "claim_id": draft_id,
            "provider_id": body.provider_id,
            "age": body.age,
            "gender": body.gender,
            "icds": sorted({c.text for c in icds}),
            "cpts": sorted({cpt for cpt, _ in accepted}),
            "draft": {
                "submitted_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
                "method": body.method,
                "scores": {cpt: score for cpt, score in accepted if score is not None},
            },
        }
        store.append(record)
        return {"draft_id": draft_id}

    @app.post("/v1/admin/reload")
    def reload_models():
        try:
            snapshot = holder.reload()
        except FileNotFoundError as exc:
            return _error(503, str(exc))
        return {"model_version": {m: lm.version for m, lm in snapshot.models.items()}}

    return app


def run_server(config: ServiceConfig, host: str = "127.0.0.1") -> None:
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host=host, port=config.port, log_level="info")
