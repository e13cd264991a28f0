"""Request and response schemas for the campaign service."""

from typing import Dict, List, Optional, Union

from pydantic import BaseModel, Field

Scalar = Union[bool, int, float, str]


class RunRequest(BaseModel):
    """One campaign run: flat settings plus an optional zero-mode action."""

    action: Optional[str] = None
    settings: Dict[str, Scalar] = Field(default_factory=dict)


class CheckModel(BaseModel):
    name: str
    value: float
    bound: float
    passed: bool
    comparison: str


class RunResponse(BaseModel):
    """Outcome of a campaign run; exit_code follows the CLI contract
    (0 all checks passed, 1 a check failed, 2 configuration error)."""

    command: str
    action: Optional[str] = None
    exit_code: int
    passed: bool
    message: str = ""
    config_hash: Optional[str] = None
    out_dir: Optional[str] = None
    outputs: List[str] = Field(default_factory=list)
    checks: List[CheckModel] = Field(default_factory=list)
    report: Dict[str, object] = Field(default_factory=dict)


class HealthResponse(BaseModel):
    status: str
    version: str


class CommandsResponse(BaseModel):
    commands: List[str]
    zero_mode_actions: List[str]
