"""Exact sewing, pseudo-traces and transport of conformal blocks."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

from . import _core
from ._core import (
    DomainEscape,
    ModeMismatch,
    ScenarioError,
    Series,
    StepUnderflow,
    TruncationOverflow,
)

__all__ = [
    "DomainEscape",
    "ModeMismatch",
    "Report",
    "ScenarioError",
    "Series",
    "StepUnderflow",
    "TruncationOverflow",
    "character",
    "coefficients",
    "deformed_circle",
    "flow_integrate",
    "load_scenario",
    "run",
    "templates",
    "winding_number",
]

__version__ = "0.1.0"


def _number(pair):
    re, im = (Fraction(x) for x in pair)
    return re if im == 0 else complex(re, im)


def coefficients(series: Series) -> dict:
    """Map (exponents, log powers) to coefficients; exact series give Fractions."""
    out = {}
    for exps, logs, c in series.terms():
        key = (tuple(_number(e) for e in exps), tuple(logs))
        out[key] = _number(c) if isinstance(c, tuple) else c
    return out


@dataclass
class Report:
    summary: dict
    artifacts: dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.summary["status"] == "pass"

    @property
    def checks(self) -> list[dict]:
        return self.summary["checks"]

    def series(self, stem: str = "coefficients") -> Series:
        if stem + ".json" not in self.artifacts:
            raise KeyError(f"no JSON artifact '{stem}'; run with out_format='json'")
        return Series.from_json(self.artifacts[stem + ".json"])

    def write(self, directory: str | os.PathLike) -> Path:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        for name, text in self.artifacts.items():
            (d / name).write_text(text)
        (d / "summary.json").write_text(json.dumps(self.summary, indent=2) + "\n")
        return d


def load_scenario(path: str | os.PathLike) -> dict:
    return json.loads(_core.load_scenario(str(path)))


def run(
    scenario: Mapping[str, Any] | str | os.PathLike,
    *,
    seed: int | None = None,
    mode: str | None = None,
    out_format: str = "csv",
) -> Report:
    """Run a scenario given as a dict, a file path or a bundled template name."""
    if isinstance(scenario, Mapping):
        text, fmt = json.dumps(scenario), "json"
    else:
        bundled = {t["name"]: t for t in _core.templates()}
        name = str(scenario)
        if name in bundled and not Path(name).exists():
            text, fmt = bundled[name]["text"], bundled[name]["format"]
        else:
            text, fmt = json.dumps(load_scenario(scenario)), "json"
    summary, arts = _core.run_scenario(text, fmt, seed, mode, out_format)
    return Report(json.loads(summary), dict(arts))


def templates() -> list[dict]:
    return [dict(t) for t in _core.templates()]


def character(cutoff: int, mu: str | int = 0, *, geometry: str = "two_point", insertion: Any = "vacuum") -> Series:
    """Sewn character of the Fock module of momentum mu through q^cutoff."""
    rep = run(
        {
            "kind": "character",
            "cutoff": cutoff,
            "geometry": geometry,
            "insertion": insertion,
            "module": {"type": "heisenberg", "mu": str(mu), "cutoff": cutoff},
        },
        out_format="json",
    )
    if not rep.passed:
        raise RuntimeError(f"character run failed: {rep.checks}")
    return rep.series()


def _spec(h: Mapping[int, Any] | list, **opts) -> str:
    if isinstance(h, Mapping):
        hs = [{"k": int(k), "q_coeffs": [[complex(c).real, complex(c).imag] for c in (v if isinstance(v, (list, tuple)) else [v])]}
              for k, v in h.items()]
    else:
        hs = list(h)
    return json.dumps({"h": hs, **opts})


def flow_integrate(h, z: complex, q: complex, **opts) -> complex:
    """Endpoint of the flow of sum_k h_k(q) z^k d/dz from z, out to q."""
    return _core.flow_integrate(_spec(h, **opts), complex(z), complex(q))


def deformed_circle(h, radius: float, q: complex, samples: int, **opts) -> list[complex]:
    return _core.deformed_circle(_spec(h, **opts), radius, complex(q), samples)


def winding_number(curve, point: complex, tol: float = 1e-9) -> int:
    return _core.winding_number([complex(z) for z in curve], complex(point), tol)
