"""HTTP service wrapping the experiment runner.

The service is stateless: a run request carries the raw config text plus
overrides, and the response carries the rendered artifacts back to the
caller, which decides where to write them. Config problems come back as
422 with one diagnostic per line; a run that hits non-finite numbers
comes back as 500 with the abort diagnostic.
"""

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .config import ConfigError, ExperimentConfig, load_config
from .experiment import SummarySchemaError, compare_summaries, run_experiment
from .trainer import TrainingAborted


class RunRequest(BaseModel):
    config_text: str = ""
    overrides: list[str] = Field(default_factory=list)


class RunResponse(BaseModel):
    metrics_csv: str
    summary_json: str
    manifest: str
    out_dir: str


class CompareRequest(BaseModel):
    summaries: list[dict]


class CompareResponse(BaseModel):
    table: str
    warnings: list[str] = Field(default_factory=list)


def create_app() -> FastAPI:
    app = FastAPI(title="conflictmask service", version="0.1.0")

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/config/defaults")
    def config_defaults():
        cfg = load_config("")
        return {"config": cfg.effective_dict()}

    @app.post("/runs", response_model=RunResponse)
    def runs(request: RunRequest):
        try:
            cfg: ExperimentConfig = load_config(request.config_text, request.overrides)
        except ConfigError as exc:
            raise HTTPException(status_code=422, detail={"errors": exc.diagnostics})
        try:
            result = run_experiment(cfg)
        except TrainingAborted as exc:
            raise HTTPException(status_code=500, detail=str(exc))
        return RunResponse(
            metrics_csv=result.metrics_csv,
            summary_json=result.summary_json,
            manifest=result.manifest,
            out_dir=cfg.out_dir,
        )

    @app.post("/compare", response_model=CompareResponse)
    def compare(request: CompareRequest):
        try:
            table, warnings = compare_summaries(request.summaries)
        except SummarySchemaError as exc:
            raise HTTPException(status_code=422, detail={"errors": [str(exc)]})
        return CompareResponse(table=table, warnings=warnings)

    return app


app = create_app()
