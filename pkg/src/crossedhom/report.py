"""Report assembly and deterministic JSON serialization."""

from __future__ import annotations

import json
from fractions import Fraction
from typing import List, Optional

from . import __version__

REPORT_SCHEMA = 1
ENGINE = {"name": "crossedhom", "version": __version__}


def _default(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (set, frozenset)):
        return sorted(obj, key=repr)
    if hasattr(obj, "to_json"):
        return obj.to_json()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def normalize(value):
    """Round-trip through JSON so computed and cached values are the same objects.

    Dict keys become strings and tuples become lists; this is what makes a
    cache hit indistinguishable from a fresh computation."""
    return json.loads(json.dumps(value, default=_default, sort_keys=True, ensure_ascii=False))


def dumps(report: dict) -> str:
    return json.dumps(report, default=_default, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def verification_entries(results: List[dict]) -> List[dict]:
    """Every pass/fail entry produced by verify and spectral requests, in order."""
    out = []
    for res in results:
        if res.get("status") != "ok":
            continue
        if res["kind"] == "verify":
            out.extend(res["entries"])
        elif res["kind"] == "spectral":
            out.extend(_spectral_entries(res["table"]))
    return out


_SPECTRAL_CHECKS = ("e0_check", "e1_check", "d1_equals_delta", "e2_check", "d2_zero")


def _spectral_entries(table):
    out = []
    for cell in table:
        for key in _SPECTRAL_CHECKS:
            for e in cell.get(key, []):
                if "pass" not in e:
                    continue
                coords = {c: e[c] for c in ("k", "p", "w", "class") if c in e}
                entry = {"suite": "spectral", "check": e.get("check") or e.get("relation") or key,
                         "model": cell.get("model"), "coords": coords, "pass": e["pass"]}
                if not e["pass"]:
                    entry["witness"] = e.get("witness") or {k: v for k, v in e.items() if k != "pass"}
                out.append(entry)
    return out


def build_report(command: dict, config_echo: Optional[dict], window: dict, results: List[dict],
                 extra_entries: List[dict] = (), timing: Optional[dict] = None) -> dict:
    entries = verification_entries(results) + list(extra_entries)
    failed = [e for e in entries if not e["pass"]]
    report = {
        "schema": REPORT_SCHEMA,
        "engine": dict(ENGINE),
        "command": dict(command),
        "config": config_echo,
        "window": window,
        "results": results,
        "verification": {"entries": entries, "passed": len(entries) - len(failed), "failed": len(failed)},
    }
    if timing is not None:
        report["timing"] = timing
    return report


def failure_lines(report: dict) -> List[str]:
    out = []
    for e in report["verification"]["entries"]:
        if not e["pass"]:
            coords = ", ".join(f"{k}={v}" for k, v in sorted(e.get("coords", {}).items()))
            out.append(f"FAIL {e['suite']}/{e['check']} model={e.get('model')} {coords}"
                       f" witness={json.dumps(e.get('witness'), sort_keys=True, ensure_ascii=False)}")
    return out
