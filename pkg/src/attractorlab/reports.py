"""Certificate and report containers, plus deterministic JSON serialization.

Every check in the laboratory produces a :class:`CertificateReport`.  A report
never passes on margin alone: ``passed`` requires the margin to clear the
estimated discretization slack, so refinement can only move a verdict from
inconclusive to conclusive, never silently flip it.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional


@dataclass
class CertificateReport:
    """Outcome of one certification run.

    Attributes
    ----------
    prop : str
        Property identifier, e.g. ``"LP1"`` or ``"spectrum"``.
    passed : bool
        True only if the margin exceeds the slack and all sub-checks hold.
    margin : float
        Signed distance to failure in the property's natural units.
    params : dict
        Resolution / horizon / tolerance values the run used.
    slack : float
        Estimated discretization error of the margin.
    provenance : list of str
        Constants consumed and the module that certified them.
    reason : str, optional
        Set when failing or inconclusive; names the violated condition.
    details : dict
        Free-form numeric payload (witnesses, per-piece margins, ...).
    """

    prop: str
    passed: bool
    margin: float
    params: Dict[str, Any] = field(default_factory=dict)
    slack: float = 0.0
    provenance: List[str] = field(default_factory=list)
    reason: Optional[str] = None
    details: Dict[str, Any] = field(default_factory=dict)

    def as_dict(self):
        return _plain(dataclasses.asdict(self))


def conclude(prop, margin, slack, params=None, provenance=None, extra_pass=True,
             reason=None, details=None):
    """Build a report with the margin-vs-slack verdict applied uniformly."""
    passed = bool(extra_pass) and (margin > slack)
    if not passed and reason is None:
        reason = ("InsufficientResolution: margin within slack"
                  if extra_pass and 0.0 < margin <= slack else "margin nonpositive"
                  if extra_pass else "sub-check failed")
    return CertificateReport(
        prop=prop, passed=passed, margin=float(margin), slack=float(slack),
        params=dict(params or {}), provenance=list(provenance or []),
        reason=None if passed else reason, details=dict(details or {}))


def _plain(obj):
    """Recursively convert numpy scalars/arrays so json.dumps is stable."""
    import numpy as np

    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float):
        return obj
    return obj


def dump_report(payload, path):
    """Write a report dict as canonical JSON (sorted keys, repr floats).

    Identical payloads serialize byte-identically, which is what the
    reproducibility certificate compares.
    """
    text = json.dumps(_plain(payload), sort_keys=True, indent=2)
    with open(path, "w") as fh:
        fh.write(text + "\n")
    return text
