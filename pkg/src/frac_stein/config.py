"""JSON experiment configuration: schema validation and spec construction.

A configuration document is ``{"experiments": [...]}`` where every entry
carries ``model, estimator, energy, grid, drift|intensity, stein, reps, seed``.
Validation is strict: unknown keys are rejected with their full path, and
domain violations quote the constraint that failed.
"""

from __future__ import annotations

import json
from typing import Any

import numpy as np

from .energies import EnergySpec, MeasureSpec
from .montecarlo import ExperimentSpec
from .processes import DriftSpec, IntensitySpec, TimeGrid, uniform_grid
from .stein import SteinConfig

__all__ = ["ConfigError", "load_config", "validate_config", "build_experiments"]


class ConfigError(ValueError):
    """Invalid configuration; ``messages`` lists every violation found."""

    def __init__(self, messages):
        self.messages = list(messages)
        super().__init__("\n".join(self.messages))


def load_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            return json.load(handle)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"config is not valid JSON: {exc}"]) from exc


class _Checker:
    def __init__(self):
        self.errors: list[str] = []

    def fail(self, path: str, message: str):
        self.errors.append(f"{path}: {message}")

    def known_keys(self, obj: dict, path: str, allowed):
        for key in obj:
            if key not in allowed:
                self.fail(f"{path}.{key}" if path else key, "unknown key")

    def require(self, obj: dict, path: str, key: str):
        if key not in obj:
            self.fail(path, f"missing required key '{key}'")
            return None
        return obj[key]

    def number(self, value, path: str, constraint: str, check) -> bool:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            self.fail(path, "must be a number")
            return False
        if not check(value):
            self.fail(path, f"must satisfy {constraint}")
            return False
        return True

    def integer(self, value, path: str, constraint: str, check) -> bool:
        if not isinstance(value, int) or isinstance(value, bool):
            self.fail(path, "must be an integer")
            return False
        if not check(value):
            self.fail(path, f"must satisfy {constraint}")
            return False
        return True


_DRIFT_KEYS = {
    "zero": {"kind"},
    "constant": {"kind", "rate"},
    "linear": {"kind", "slope"},
    "sine": {"kind", "amplitude", "frequency"},
}


def _check_drift(chk: _Checker, obj: Any, path: str):
    if not isinstance(obj, dict):
        chk.fail(path, "must be an object")
        return
    kind = obj.get("kind")
    if kind not in _DRIFT_KEYS:
        chk.fail(f"{path}.kind", "must be one of zero, constant, linear, sine")
        return
    chk.known_keys(obj, path, _DRIFT_KEYS[kind])
    if kind == "constant" and "rate" in obj:
        chk.number(obj["rate"], f"{path}.rate", "finite number", np.isfinite)
    if kind == "linear" and "slope" in obj:
        chk.number(obj["slope"], f"{path}.slope", "finite number", np.isfinite)
    if kind == "sine":
        if "frequency" in obj:
            chk.number(obj["frequency"], f"{path}.frequency", "frequency > 0", lambda v: v > 0)
        if "amplitude" in obj:
            chk.number(obj["amplitude"], f"{path}.amplitude", "finite number", np.isfinite)


def _check_intensity(chk: _Checker, obj: Any, path: str):
    if not isinstance(obj, dict):
        chk.fail(path, "must be an object")
        return
    kind = obj.get("kind")
    if kind not in ("deterministic", "random-scaled"):
        chk.fail(f"{path}.kind", "must be one of deterministic, random-scaled")
        return
    allowed = {"kind", "rate", "max_rate"}
    if kind == "random-scaled":
        allowed.add("multiplier")
    chk.known_keys(obj, path, allowed)
    rate = chk.require(obj, path, "rate")
    if rate is not None:
        chk.number(rate, f"{path}.rate", "rate >= 0", lambda v: v >= 0)
    if "max_rate" in obj:
        chk.number(obj["max_rate"], f"{path}.max_rate", "max_rate >= 0", lambda v: v >= 0)
    if kind == "random-scaled":
        mult = chk.require(obj, path, "multiplier")
        if isinstance(mult, dict):
            chk.known_keys(mult, f"{path}.multiplier", {"shape", "scale"})
            for key in ("shape", "scale"):
                value = chk.require(mult, f"{path}.multiplier", key)
                if value is not None:
                    chk.number(value, f"{path}.multiplier.{key}", f"{key} > 0", lambda v: v > 0)
        elif mult is not None:
            chk.fail(f"{path}.multiplier", "must be an object")


def _check_measure(chk: _Checker, obj: Any, path: str):
    if not isinstance(obj, dict):
        chk.fail(path, "must be an object")
        return
    kind = obj.get("kind")
    if kind not in ("lebesgue", "discrete"):
        chk.fail(f"{path}.kind", "must be one of lebesgue, discrete")
        return
    chk.known_keys(obj, path, {"kind", "atoms"} if kind == "discrete" else {"kind"})
    if kind == "discrete":
        atoms = chk.require(obj, path, "atoms")
        if not isinstance(atoms, list) or not atoms:
            chk.fail(f"{path}.atoms", "must be a nonempty list of [time, weight] pairs")
            return
        for i, atom in enumerate(atoms):
            if (
                not isinstance(atom, list)
                or len(atom) != 2
                or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in atom)
            ):
                chk.fail(f"{path}.atoms[{i}]", "must be a [time, weight] pair")
            elif atom[0] < 0 or atom[1] < 0:
                chk.fail(f"{path}.atoms[{i}]", "must satisfy time >= 0 and weight >= 0")


def _check_energy(chk: _Checker, obj: Any, path: str):
    if not isinstance(obj, dict):
        chk.fail(path, "must be an object")
        return
    kind = obj.get("kind")
    if kind not in ("l2", "h1", "wfrac"):
        chk.fail(f"{path}.kind", "must be one of l2, h1, wfrac")
        return
    allowed = {"kind"}
    if kind == "l2":
        allowed.add("mu")
    if kind == "wfrac":
        allowed |= {"alpha", "p", "regime"}
    chk.known_keys(obj, path, allowed)
    if kind == "l2" and "mu" in obj:
        _check_measure(chk, obj["mu"], f"{path}.mu")
    if kind == "wfrac":
        alpha = chk.require(obj, path, "alpha")
        if alpha is not None:
            chk.number(alpha, f"{path}.alpha", "0 < alpha < 1", lambda v: 0 < v < 1)
        p = obj.get("p", 2.0)
        chk.number(p, f"{path}.p", "p > 1", lambda v: v > 1)
        regime = obj.get("regime", "piecewise-constant")
        if regime not in ("piecewise-constant", "piecewise-linear"):
            chk.fail(f"{path}.regime", "must be piecewise-constant or piecewise-linear")
        elif (
            regime == "piecewise-constant"
            and isinstance(alpha, (int, float))
            and isinstance(p, (int, float))
            and not alpha < 1.0 / p
        ):
            chk.fail(f"{path}.alpha", "piecewise-constant regime requires alpha < 1/p")


def _check_experiment(chk: _Checker, obj: Any, path: str):
    if not isinstance(obj, dict):
        chk.fail(path, "must be an object")
        return
    chk.known_keys(
        obj,
        path,
        {"name", "model", "estimator", "energy", "grid", "drift", "intensity", "stein", "reps", "seed"},
    )
    model = chk.require(obj, path, "model")
    if model not in ("gaussian", "cox"):
        chk.fail(f"{path}.model", "must be one of gaussian, cox")
        model = None
    estimator = obj.get("estimator", "identity")
    if estimator not in ("identity", "stein"):
        chk.fail(f"{path}.estimator", "must be one of identity, stein")
    if "name" in obj and not isinstance(obj["name"], str):
        chk.fail(f"{path}.name", "must be a string")
    energy = chk.require(obj, path, "energy")
    if energy is not None:
        _check_energy(chk, energy, f"{path}.energy")
    grid = chk.require(obj, path, "grid")
    if isinstance(grid, dict):
        chk.known_keys(grid, f"{path}.grid", {"T", "m"})
        horizon = chk.require(grid, f"{path}.grid", "T")
        if horizon is not None:
            chk.number(horizon, f"{path}.grid.T", "T > 0", lambda v: v > 0)
        cells = chk.require(grid, f"{path}.grid", "m")
        if cells is not None:
            chk.integer(cells, f"{path}.grid.m", "m >= 2", lambda v: v >= 2)
    elif grid is not None:
        chk.fail(f"{path}.grid", "must be an object")
    reps = chk.require(obj, path, "reps")
    if reps is not None:
        chk.integer(reps, f"{path}.reps", "reps >= 100", lambda v: v >= 100)
    seed = chk.require(obj, path, "seed")
    if seed is not None:
        chk.integer(seed, f"{path}.seed", "seed >= 0", lambda v: v >= 0)

    if model == "gaussian":
        if "intensity" in obj:
            chk.fail(f"{path}.intensity", "not allowed for the gaussian model")
        _check_drift(chk, obj.get("drift", {"kind": "zero"}), f"{path}.drift")
    elif model == "cox":
        if "drift" in obj:
            chk.fail(f"{path}.drift", "not allowed for the cox model")
        if estimator == "stein":
            chk.fail(f"{path}.estimator", "the stein estimator requires the gaussian model")
        intensity = chk.require(obj, path, "intensity")
        if intensity is not None:
            _check_intensity(chk, intensity, f"{path}.intensity")

    if estimator == "stein":
        stein_obj = chk.require(obj, path, "stein")
        if isinstance(stein_obj, dict):
            chk.known_keys(stein_obj, f"{path}.stein", {"n", "a", "alpha"})
            n = chk.require(stein_obj, f"{path}.stein", "n")
            ok_n = n is not None and chk.integer(n, f"{path}.stein.n", "n >= 3", lambda v: v >= 3)
            a = chk.require(stein_obj, f"{path}.stein", "a")
            if a is not None and ok_n:
                chk.number(
                    a, f"{path}.stein.a", "1 - n/2 < a < 0", lambda v: 1 - n / 2 < v < 0
                )
            alpha = chk.require(stein_obj, f"{path}.stein", "alpha")
            if alpha is not None:
                chk.number(alpha, f"{path}.stein.alpha", "0 < alpha < 1/2", lambda v: 0 < v < 0.5)
            if (
                ok_n
                and isinstance(grid, dict)
                and isinstance(grid.get("m"), int)
                and grid["m"] % n != 0
            ):
                chk.fail(f"{path}.stein.n", "must satisfy m % n == 0 (coarse nodes on the grid)")
        elif stein_obj is not None:
            chk.fail(f"{path}.stein", "must be an object")
    elif "stein" in obj:
        chk.fail(f"{path}.stein", "only allowed with the stein estimator")


def validate_config(document: Any) -> None:
    """Raise :class:`ConfigError` listing every violation in the document."""
    chk = _Checker()
    if not isinstance(document, dict):
        raise ConfigError(["config root must be an object"])
    chk.known_keys(document, "", {"experiments"})
    experiments = document.get("experiments")
    if not isinstance(experiments, list) or not experiments:
        chk.fail("experiments", "must be a nonempty list")
    else:
        for i, entry in enumerate(experiments):
            _check_experiment(chk, entry, f"experiments[{i}]")
    if chk.errors:
        raise ConfigError(chk.errors)


def _drift_from(obj: dict) -> DriftSpec:
    kind = obj["kind"]
    if kind == "zero":
        return DriftSpec.zero()
    if kind == "constant":
        return DriftSpec.constant_rate(float(obj.get("rate", 1.0)))
    if kind == "linear":
        return DriftSpec.linear_rate(float(obj.get("slope", 1.0)))
    return DriftSpec.sine(
        amplitude=float(obj.get("amplitude", 1.0)),
        frequency=float(obj.get("frequency", np.pi)),
    )


def _intensity_from(obj: dict) -> IntensitySpec:
    base = DriftSpec.constant_rate(float(obj["rate"]))
    kwargs = {}
    if obj["kind"] == "random-scaled":
        kwargs["multiplier_shape"] = float(obj["multiplier"]["shape"])
        kwargs["multiplier_scale"] = float(obj["multiplier"]["scale"])
    if "max_rate" in obj:
        kwargs["max_base_rate"] = float(obj["max_rate"])
    return IntensitySpec(base, **kwargs)


def _energy_from(obj: dict) -> EnergySpec:
    kind = obj["kind"]
    if kind == "l2":
        mu = obj.get("mu", {"kind": "lebesgue"})
        measure = (
            MeasureSpec.lebesgue()
            if mu["kind"] == "lebesgue"
            else MeasureSpec.discrete(mu["atoms"])
        )
        return EnergySpec("l2", measure=measure)
    if kind == "h1":
        return EnergySpec("h1")
    return EnergySpec(
        "wfrac",
        alpha=float(obj["alpha"]),
        p=float(obj.get("p", 2.0)),
        regime=obj.get("regime", "piecewise-constant"),
    )


def build_experiments(document: dict) -> list[tuple[dict, ExperimentSpec]]:
    """Validate and convert a config document into runnable experiment specs."""
    validate_config(document)
    built = []
    for i, entry in enumerate(document["experiments"]):
        grid = uniform_grid(float(entry["grid"]["T"]), int(entry["grid"]["m"]))
        stein_cfg = None
        if entry.get("estimator", "identity") == "stein":
            stein_cfg = SteinConfig.uniform(
                grid.horizon,
                int(entry["stein"]["n"]),
                float(entry["stein"]["a"]),
                float(entry["stein"]["alpha"]),
            )
        spec = ExperimentSpec(
            model=entry["model"],
            grid=grid,
            energy=_energy_from(entry["energy"]),
            replications=int(entry["reps"]),
            seed=int(entry["seed"]),
            drift=(
                _drift_from(entry.get("drift", {"kind": "zero"}))
                if entry["model"] == "gaussian"
                else None
            ),
            intensity=_intensity_from(entry["intensity"]) if entry["model"] == "cox" else None,
            estimator=entry.get("estimator", "identity"),
            stein=stein_cfg,
            label=entry.get("name", f"experiment{i}"),
        )
        built.append((entry, spec))
    return built
