"""Wire schemas for the /v1 HTTP API.

Unknown fields are rejected (mapped to 400 by the app's validation
handler).  The health response uses the hyphenated `checkpoint-id` key on
the wire.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class EncodeRequest(_Strict):
    source: str


class EncodeResponse(_Strict):
    tokens: list[str]
    gamma: list[float]


class GenerateRequest(_Strict):
    source: str
    mask: list[int] | None = None
    mode: str = "greedy"
    samples: int = 1
    seed: int = 0
    temperature: float = 1.0
    beam_width: int = 5


class GenerateResponse(_Strict):
    texts: list[str]
    scores: list[float]
    mask: list[int]


class SampleMasksRequest(_Strict):
    source: str
    k: int = 50
    seed: int = 0


class SampleMasksResponse(_Strict):
    masks: list[list[int]]


class PosteriorRequest(_Strict):
    source: str
    target: str


class PosteriorResponse(_Strict):
    q: list[float]
    best_mask: list[int]


class HealthResponse(_Strict):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    status: str
    checkpoint_id: str = Field(alias="checkpoint-id")


class ErrorBody(_Strict):
    code: str
    message: str
