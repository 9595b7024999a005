"""Scenario files: a versioned JSON description of punctures, fluxes and
optional lattice/screen/walk settings.

Example::

    {
     "version": 1,
     "rank": 1,
     "punctures": [[4.5, 2.5]],
     "basepoint": [-2.0, 3.0],
     "group": "U1",
     "fluxes": [[1.0]],
     "lattice": {"spacing": 1.0, "origin": [0, 0]},
     "screen": {"start": [8, -10], "end": [8, 10], "points": 11},
     "walks": {"source": [0, 0], "steps": 24, "samples": 1048576}
    }

Flux coefficients are taken in the basis of :func:`liegroups.basis`.
Unknown keys are rejected at every level.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import liegroups as lg
from .geometry import PunctureLayoutError, punctures_from_points
from .holonomy import FluxScenario
from .propagator import DEFAULT_MAX_WORD_LENGTH, DEFAULT_SHARD_SIZE, Lattice, WalkEnsemble, screen_line
from .serialize import FormatError, dumps, read_json

SCENARIO_VERSION = 1

_TOP = {"version", "rank", "punctures", "basepoint", "group", "fluxes", "lattice", "screen", "walks"}
_LATTICE = {"spacing", "origin"}
_SCREEN = {"start", "end", "points"}
_WALKS = {"source", "steps", "samples", "max_word_length", "excision_margin", "reference", "shard_size", "seed"}


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    scenario: FluxScenario
    lattice: Lattice
    screen: dict | None
    walks: dict | None

    def screen_points(self) -> np.ndarray:
        if self.screen is None:
            raise FormatError("scenario has no 'screen' section")
        return screen_line(self.screen["start"], self.screen["end"], int(self.screen["points"]))

    def ensemble(self, seed: int | None = None, default_seed: int = 0, **overrides) -> WalkEnsemble:
        """Walk ensemble from the ``walks`` section.  Seed precedence:
        ``seed`` argument, then the file's ``seed``, then ``default_seed``."""
        if self.walks is None:
            raise FormatError("scenario has no 'walks' section")
        w = {**self.walks, **{k: v for k, v in overrides.items() if v is not None}}
        if seed is None:
            seed = w.get("seed", default_seed)
        return WalkEnsemble(
            self.scenario,
            tuple(w["source"]),
            int(w["steps"]),
            int(w["samples"]),
            seed=int(seed),
            lattice=self.lattice,
            max_word_length=int(w.get("max_word_length", DEFAULT_MAX_WORD_LENGTH)),
            excision_margin=w.get("excision_margin"),
            reference=tuple(tuple(p) for p in w.get("reference", ())),
            shard_size=int(w.get("shard_size", DEFAULT_SHARD_SIZE)),
        )


def _reject_unknown(doc: dict, allowed: set, where: str) -> None:
    if not isinstance(doc, dict):
        raise FormatError(f"{where} must be an object")
    extra = sorted(set(doc) - allowed)
    if extra:
        raise FormatError(f"unknown field(s) in {where}: {', '.join(extra)}")


def _point(v, what: str) -> tuple[float, float]:
    try:
        x, y = v
        return float(x), float(y)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{what} must be [x, y]") from exc


def parse_scenario(doc: dict) -> ScenarioConfig:
    _reject_unknown(doc, _TOP, "scenario")
    if doc.get("version") != SCENARIO_VERSION:
        raise FormatError(f"unsupported scenario version {doc.get('version')!r}")
    for key in ("rank", "punctures", "basepoint", "group", "fluxes"):
        if key not in doc:
            raise FormatError(f"scenario is missing {key!r}")
    tag = doc["group"]
    if tag not in lg.TAGS:
        raise FormatError(f"unknown group {tag!r}; expected one of {', '.join(lg.TAGS)}")
    rank = doc["rank"]
    if not isinstance(rank, int) or rank < 0:
        raise FormatError("rank must be a non-negative integer")
    pts = [_point(p, "puncture") for p in doc["punctures"]]
    nb = len(lg.basis(tag))
    fluxes = []
    for coeffs in doc["fluxes"]:
        if not isinstance(coeffs, list) or len(coeffs) != nb:
            raise FormatError(f"each {tag} flux needs {nb} coefficient(s)")
        fluxes.append(lg.algebra_from_coeffs(tag, [float(c) for c in coeffs]))
    try:
        scenario = FluxScenario(rank, tuple(punctures_from_points(pts)), _point(doc["basepoint"], "basepoint"), tag, tuple(fluxes))
    except (PunctureLayoutError, lg.GroupError, ValueError) as exc:
        raise FormatError(f"invalid scenario: {exc}") from exc

    lattice = Lattice()
    if "lattice" in doc:
        _reject_unknown(doc["lattice"], _LATTICE, "lattice")
        lat = doc["lattice"]
        lattice = Lattice(float(lat.get("spacing", 1.0)), _point(lat.get("origin", (0.0, 0.0)), "lattice origin"))
    screen = None
    if "screen" in doc:
        _reject_unknown(doc["screen"], _SCREEN, "screen")
        screen = dict(doc["screen"])
        if set(screen) != _SCREEN:
            raise FormatError("screen needs start, end and points")
    walks = None
    if "walks" in doc:
        _reject_unknown(doc["walks"], _WALKS, "walks")
        walks = dict(doc["walks"])
        for key in ("source", "steps", "samples"):
            if key not in walks:
                raise FormatError(f"walks section is missing {key!r}")
    return ScenarioConfig(scenario, lattice, screen, walks)


def load_scenario(path) -> ScenarioConfig:
    return parse_scenario(read_json(path))


def scenario_document(
    punctures,
    fluxes,
    group: str = "U1",
    basepoint=(0.0, 10.0),
    lattice: dict | None = None,
    screen: dict | None = None,
    walks: dict | None = None,
) -> dict:
    """Build a scenario document from plain lists (the inverse of loading)."""
    doc = {
        "version": SCENARIO_VERSION,
        "rank": len(punctures),
        "punctures": [list(map(float, p)) for p in punctures],
        "basepoint": list(map(float, basepoint)),
        "group": group,
        "fluxes": [list(map(float, f)) for f in fluxes],
    }
    for key, val in (("lattice", lattice), ("screen", screen), ("walks", walks)):
        if val is not None:
            doc[key] = val
    return doc


def write_scenario(path, doc: dict) -> None:
    parse_scenario(doc)
    with open(path, "w") as fh:
        fh.write(dumps(doc))
