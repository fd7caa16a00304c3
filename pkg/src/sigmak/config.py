"""Run configuration, schema validation and deterministic report serialization."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources

import jsonschema
import numpy as np

from .errors import DomainError

REPORT_SCHEMA = "sigmak.report/1"
SOLVER_COMMANDS = {"reduce", "solve"}
IDENTITY_COMMANDS = {"identities"}


def load_schema() -> dict:
    with resources.files("sigmak").joinpath("schemas/run_config.schema.json").open() as fh:
        return json.load(fh)


@dataclass
class RunConfig:
    command: str
    n: int | None = None
    k: int | None = None
    seed: int = 0
    workers: int = 1
    N: int = 256
    tol: float = 1e-8
    h: float = 0.1
    refine: int = 2
    K: str | None = None
    output: str | None = None
    field_output: str | None = None
    params: dict = field(default_factory=dict)

    @classmethod
    def from_file(cls, path, command: str) -> "RunConfig":
        with open(path) as fh:
            data = json.load(fh)
        validate_dict(data)
        data.pop("schema_version", None)
        data["command"] = data.get("command", command)
        return cls(**data)

    def validate(self) -> "RunConfig":
        data = {k: v for k, v in asdict(self).items() if v is not None}
        validate_dict(data)
        n, k = self.n, self.k
        if n is not None and k is not None:
            if self.command in SOLVER_COMMANDS and not (n <= 2 * k and k <= n):
                raise DomainError("solver paths need n/2 <= k <= n", n=n, k=k)
            if self.command in IDENTITY_COMMANDS and not (1 <= k and 2 * k <= n):
                raise DomainError("identity paths need 1 <= k <= n/2", n=n, k=k)
        return self


def validate_dict(data: dict):
    try:
        jsonschema.validate(data, load_schema())
    except jsonschema.ValidationError as exc:
        raise DomainError(f"invalid configuration: {exc.message}", path=list(exc.absolute_path)) from exc


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        # 15 significant digits keeps reports stable across BLAS summation orders
        return float(f"{x:.15g}")
    return obj


def dumps_report(command: str, config: RunConfig | None, result: dict, status: str = "ok") -> str:
    """Versioned JSON report with sorted keys and pinned float formatting."""
    doc = {
        "schema": REPORT_SCHEMA,
        "command": command,
        "status": status,
        "config": asdict(config) if config is not None else None,
        "result": result,
    }
    return json.dumps(_clean(doc), sort_keys=True, indent=2)
