"""Serializable evaluation report."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from .exceptions import ReportVersionError

REPORT_VERSION = 1


@dataclass
class EvalReport:
    """Metrics comparing a real table to a synthetic one.

    Any section may be ``None`` when the producing command did not compute it
    (a sensitivity run has no ``dif_corr``, for instance).
    """

    per_column_wd: dict | None = None
    mean_wd: float | None = None
    dif_corr: float | None = None
    ml_utility: dict | None = None
    sensitivity: dict | None = None
    config: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)
    version: int = REPORT_VERSION

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        names = {f.name for f in fields(cls)}
        missing = sorted(names - set(d))
        if missing:
            raise ReportVersionError(f"report is missing fields {missing}; not a version {REPORT_VERSION} report")
        if d["version"] != REPORT_VERSION:
            raise ReportVersionError(f"report version {d['version']} != {REPORT_VERSION}")
        return cls(**{k: d[k] for k in names})

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        return cls.from_dict(json.loads(text))
