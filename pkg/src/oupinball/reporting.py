"""Report records shared by the bound catalogue, isoperimetry and estimators.

A BoundReport is one evaluated inequality: which side it bounds, its numeric
value, whether its validity condition held for the given instance, and whether
the constant in front is pinned ("explicit") or a named free parameter that no
catalogued derivation fixes.  Non-explicit reports never enter the certified
envelope.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, asdict

__all__ = [
    "BoundReport",
    "BoundCatalogue",
    "CrossCheckReport",
    "Verdict",
    "format_float",
    "rows_to_csv",
    "to_json",
]

UPPER = "upper"
LOWER = "lower"

# what the number bounds: the Poincare constant of the domain measure, of the
# measure restricted to a shell, an exit-rate threshold, or a conjectural line
Q_POINCARE = "poincare"
Q_SHELL = "shell_poincare"
Q_EXIT_RATE = "exit_rate"
Q_CONJECTURE = "conjecture"


@dataclass(frozen=True)
class BoundReport:
    side: str
    value: float
    applicable: bool
    condition: str
    anchor: str
    explicit: bool
    quantity: str = Q_POINCARE
    free_constant: str | None = None
    constant_value: float = 1.0

    def __post_init__(self):
        if self.side not in (UPPER, LOWER):
            raise ValueError(f"side must be 'upper' or 'lower', got {self.side!r}")
        if self.applicable and self.explicit and self.quantity == Q_POINCARE:
            if not (self.value > 0):
                raise ValueError(
                    f"applicable explicit bound must be positive, got {self.value!r} "
                    f"({self.anchor})"
                )

    def certifiable(self):
        """Usable in the explicit envelope for the Poincare constant."""
        return (self.applicable and self.explicit and self.quantity == Q_POINCARE
                and math.isfinite(self.value))


@dataclass
class BoundCatalogue:
    reports: list
    best_explicit_lower: float | None = None
    best_explicit_upper: float | None = None
    ordering_finding: str | None = None

    @classmethod
    def from_reports(cls, reports):
        lowers = [r.value for r in reports if r.certifiable() and r.side == LOWER]
        uppers = [r.value for r in reports if r.certifiable() and r.side == UPPER]
        best_lo = max(lowers) if lowers else None
        best_up = min(uppers) if uppers else None
        finding = None
        if best_lo is not None and best_up is not None and best_lo > best_up:
            finding = (f"certified lower {best_lo!r} exceeds certified upper "
                       f"{best_up!r}; the envelope is inconsistent")
        return cls(list(reports), best_lo, best_up, finding)

    def rows(self):
        cols = ["anchor", "side", "value", "applicable", "explicit", "quantity",
                "free_constant", "constant_value", "condition"]
        data = [[getattr(r, c) for c in cols] for r in self.reports]
        return cols, data


@dataclass
class Verdict:
    name: str
    status: str        # PASS | FAIL | FINDING
    detail: str
    numbers: dict = field(default_factory=dict)


@dataclass
class CrossCheckReport:
    spec: dict
    catalogue: BoundCatalogue | None = None
    spectral: dict | None = None
    mc_rows: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)

    def to_dict(self):
        out = {"spec": self.spec, "mc_rows": self.mc_rows,
               "verdicts": [asdict(v) for v in self.verdicts]}
        if self.catalogue is not None:
            cols, data = self.catalogue.rows()
            out["bounds"] = [dict(zip(cols, row)) for row in data]
            out["best_explicit_lower"] = self.catalogue.best_explicit_lower
            out["best_explicit_upper"] = self.catalogue.best_explicit_upper
            out["ordering_finding"] = self.catalogue.ordering_finding
        if self.spectral is not None:
            out["spectral"] = self.spectral
        return out


# --------------------------------------------------------------------------
# deterministic serialization (17 significant digits, RFC 4180 CSV)
# --------------------------------------------------------------------------

def format_float(x):
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.17g}"
    return str(x)


def rows_to_csv(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


class _ReportEncoder(json.JSONEncoder):
    def default(self, o):
        import numpy as np
        if isinstance(o, np.bool_):
            return bool(o)
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        if hasattr(o, "to_dict"):
            return o.to_dict()
        if hasattr(o, "__dict__"):
            return o.__dict__
        return super().default(o)


def to_json(obj):
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    def _clean(x):
        if isinstance(x, float) and (math.isinf(x) or math.isnan(x)):
            return format_float(x)
        if isinstance(x, dict):
            return {k: _clean(v) for k, v in x.items()}
        if isinstance(x, (list, tuple)):
            return [_clean(v) for v in x]
        return x
    raw = json.loads(json.dumps(obj, cls=_ReportEncoder))
    return json.dumps(_clean(raw), sort_keys=True, indent=2) + "\n"
