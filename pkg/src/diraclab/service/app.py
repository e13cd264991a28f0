"""FastAPI application exposing the verification campaigns.

POST /run/{command} executes one campaign with flat settings from the body
and writes its report bundle to the configured output directory; the response
mirrors the CLI exit-code contract so thin clients only relay it.
"""

from fastapi import FastAPI

from .. import __version__
from ..campaigns import run_campaign, emit_outcome
from ..config import (
    COMMANDS,
    ZERO_MODE_ACTIONS,
    ConfigError,
    build_config,
    config_hash,
)
from .models import (
    CheckModel,
    CommandsResponse,
    HealthResponse,
    RunRequest,
    RunResponse,
)


def create_app() -> FastAPI:
    app = FastAPI(title="diraclab service", version=__version__)

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.get("/commands", response_model=CommandsResponse)
    def commands() -> CommandsResponse:
        return CommandsResponse(
            commands=list(COMMANDS), zero_mode_actions=list(ZERO_MODE_ACTIONS)
        )

    @app.post("/run/{command}", response_model=RunResponse)
    def run(command: str, request: RunRequest) -> RunResponse:
        try:
            cfg = build_config(dict(request.settings))
            outcome = run_campaign(command, request.action, cfg)
        except ConfigError as err:
            return RunResponse(
                command=command,
                action=request.action,
                exit_code=2,
                passed=False,
                message=str(err),
            )
        outputs = emit_outcome(outcome, cfg, cfg.out)
        return RunResponse(
            command=command,
            action=outcome.action,
            exit_code=0 if outcome.passed else 1,
            passed=outcome.passed,
            config_hash=config_hash(outcome.command, outcome.action, cfg),
            out_dir=cfg.out,
            outputs=outputs,
            checks=[CheckModel(**c.to_dict()) for c in outcome.checks],
            report=outcome.report_payload(),
        )

    return app


app = create_app()
