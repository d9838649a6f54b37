"""JSON serialization of calibration tables.

Floats are written as full-precision decimal strings (shortest
round-trip repr), so a save/load cycle reproduces the table bit for
bit.  The document is versioned; unknown versions are rejected.
"""

from __future__ import annotations

import json

from .errors import FormatError

FORMAT_VERSION = 1

_FLOAT_FIELDS = ("mu_rep", "mu_rad", "mu_mom", "sd_rep", "sd_rad", "sd_mom", "sd_numerator")


def table_to_json(table) -> str:
    doc = {
        "format_version": FORMAT_VERSION,
        "n": table.n,
        "dim": table.dim,
        "cfg": table.cfg.to_dict(),
        "reps": table.reps,
        "seed": table.seed,
        "loss_path": table.loss_path,
    }
    for name in _FLOAT_FIELDS:
        doc[name] = repr(getattr(table, name))
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def table_from_json(text: str):
    from .calibration import CalibrationTable
    from .pairwise import KernelConfig

    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"calibration table is not valid JSON: {exc}") from exc
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported calibration table format_version {version!r}")
    try:
        return CalibrationTable(
            n=int(doc["n"]),
            dim=int(doc["dim"]),
            cfg=KernelConfig.from_dict(doc["cfg"]),
            reps=int(doc["reps"]),
            seed=int(doc["seed"]),
            loss_path=doc["loss_path"],
            **{name: float(doc[name]) for name in _FLOAT_FIELDS},
        )
    except (KeyError, ValueError) as exc:
        raise FormatError(f"calibration table is missing or has malformed fields: {exc}") from exc
