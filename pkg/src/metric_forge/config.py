"""Run configuration documents (one JSON document per CLI run)."""
from __future__ import annotations

from typing import Any, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

FORMAT_VERSION = 1


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class NamedSpec(_Strict):
    name: str
    params: dict[str, Any] = Field(default_factory=dict)


class MeasureSpec(_Strict):
    kind: Literal["discrete", "grid", "sampler"]
    atoms: Optional[list[tuple[Any, float]]] = None
    interval: Optional[tuple[float, float]] = None
    nodes: Optional[int] = None
    rule: Literal["simpson", "trapezoid"] = "simpson"
    name: Optional[str] = None
    params: dict[str, Any] = Field(default_factory=dict)
    seed: Optional[int] = None

    @model_validator(mode="after")
    def _fields_for_kind(self):
        if self.kind == "discrete" and not self.atoms:
            raise ValueError("discrete measure needs 'atoms'")
        if self.kind == "grid" and (self.interval is None or self.nodes is None):
            raise ValueError("grid measure needs 'interval' and 'nodes'")
        if self.kind == "sampler":
            if not self.name:
                raise ValueError("sampler measure needs 'name'")
            if self.seed is None:
                raise ValueError("sampler measure needs a 'seed' (reproducibility)")
        return self

    def as_json(self) -> dict:
        if self.kind == "discrete":
            return {"kind": "discrete", "atoms": [list(a) for a in self.atoms]}
        if self.kind == "grid":
            return {"kind": "grid", "interval": list(self.interval), "nodes": self.nodes, "rule": self.rule}
        return {"kind": "sampler", "name": self.name, "params": self.params, "seed": self.seed}


class SignedMeasureSpec(_Strict):
    points: list[Any]
    q: list[float]
    h: list[float]


Points = list[Union[float, list[float]]]


class _Common(_Strict):
    version: Literal[1] = FORMAT_VERSION
    seed: Optional[int] = Field(default=None, ge=0)
    tolerance: float = Field(default=1e-10, ge=0)
    points: Optional[Points] = None
    points_file: Optional[str] = None


class CheckConfig(_Common):
    kernel: NamedSpec = Field(default_factory=lambda: NamedSpec(name="squared_difference"))
    m: int = 2
    strict: bool = False
    strong: list[SignedMeasureSpec] = Field(default_factory=list)
    trials: int = Field(default=1000, ge=1)


class InduceConfig(_Common):
    family: NamedSpec
    measure: MeasureSpec
    base: NamedSpec = Field(default_factory=lambda: NamedSpec(name="squared_difference"))
    mc_samples: int = Field(default=10_000, ge=2)
    quotient: bool = False
    support_count: int = Field(default=256, ge=1)
    triple_trials: int = Field(default=200, ge=0)
    separation_tolerance: float = Field(default=1e-12, ge=0)


class EmbedConfig(_Common):
    matrix: Optional[list[list[float]]] = None
    matrix_file: Optional[str] = None
    labels: Optional[list[str]] = None
    induce: Optional[InduceConfig] = None
    tol_rel: float = Field(default=1e-9, gt=0)


class RandomPoints(_Strict):
    count: int = Field(ge=2)
    dim: int = Field(ge=1)
    low: float = -1.0
    high: float = 1.0


class DemoConfig(_Common):
    family: NamedSpec = Field(default_factory=lambda: NamedSpec(name="coordinates"))
    measure: MeasureSpec = Field(
        default_factory=lambda: MeasureSpec(kind="discrete", atoms=[(0, 0.5), (1, 0.5)]))
    random_points: Optional[RandomPoints] = None
    mc_samples: int = Field(default=10_000, ge=2)
    tol_rel: float = Field(default=1e-9, gt=0)


CONFIGS = {
    "check-ndk": CheckConfig,
    "check-m": CheckConfig,
    "induce": InduceConfig,
    "embed": EmbedConfig,
    "demo-example1": DemoConfig,
}
