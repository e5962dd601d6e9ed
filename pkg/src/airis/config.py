"""Experiment configuration: JSON loading, validation and defaults.

Powers are given in dBm in the file and converted to watts here only.
A manifest written by a previous run is accepted as a config too.
"""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .cffp import CffpVariant
from .model import Scenario, dbm_to_watt
from .pa_beta import RegressionConfig


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


ALGORITHMS = (
    "max_snr_pa",
    "max_ar_cffp",
    "fixed_beta",
    "passive_irs",
    "random_phase",
    "no_irs",
)

DEFAULT_ALGORITHMS = [
    "max_snr_pa",
    "max_ar_cffp",
    "fixed_beta_0.8",
    "fixed_beta_0.99",
    "fixed_beta_0.5",
    "passive_irs",
    "random_phase",
    "no_irs",
]

SCENARIO_DEFAULTS = {
    "m_antennas": 2,
    "n_elements": 128,
    "p_max_dbm": 30.0,
    "sigma2_irs_dbm": -100.0,
    "sigma2_user_dbm": -100.0,
    "bs_pos": [0.0, 30.0, 0.0],
    "irs_pos": [50.0, 0.0, 10.0],
    "user_pos": [25.0, 30.0, 0.0],
    "alpha_bi": 2.1,
    "alpha_iu": 2.1,
    "alpha_bu": 4.0,
    "pl0_db": -30.0,
}

# option name -> (type, default) per algorithm family
ALGO_OPTIONS = {
    "max_snr_pa": {"eps": (float, 1e-3), "max_iters": (int, 100), "xi": (float, 1e-6), "max_inner": (int, 50)},
    "max_ar_cffp": {"variant": (str, "paper_faithful"), "zeta": (float, 1e-3), "max_iters": (int, 200)},
    "fixed_beta": {"beta": (float, None), "eps": (float, 1e-3), "max_iters": (int, 100), "xi": (float, 1e-6),
                   "max_inner": (int, 50)},
    "passive_irs": {"iters": (int, 3)},
    "random_phase": {"rounds": (int, 3)},
    "no_irs": {},
}

SWEEP_AXES = ("none", "n_elements", "p_max_dbm")
TOP_KEYS = {"scenario", "algorithms", "sweep", "seeds", "regression", "convergence_n", "fit_beta_seed", "output_dir"}


@dataclass(frozen=True)
class AlgorithmSpec:
    family: str
    options: dict = field(default_factory=dict)

    @property
    def id(self) -> str:
        if self.family == "fixed_beta":
            return f"fixed_beta_{self.options['beta']:g}"
        return self.family

    @property
    def variant(self) -> str:
        return self.options.get("variant", "") if self.family == "max_ar_cffp" else ""


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: dict
    algorithms: tuple
    sweep_axis: str = "none"
    sweep_values: tuple = ()
    seed_count: int = 50
    base_seed: int = 0
    regression: RegressionConfig = RegressionConfig()
    convergence_n: tuple = (32, 128)
    fit_beta_seed: int = 0
    output_dir: str = "out"

    def scenario_fields_at(self, axis_value=None, **overrides) -> dict:
        """Scenario block in config units with the sweep point and overrides applied."""
        s = dict(self.scenario)
        if axis_value is not None and self.sweep_axis != "none":
            s[self.sweep_axis] = axis_value
        s.update(overrides)
        return s

    def scenario_at(self, axis_value=None, **overrides) -> Scenario:
        """Scenario in watts, with the sweep axis set to ``axis_value`` if given."""
        s = self.scenario_fields_at(axis_value, **overrides)
        return Scenario(
            m_antennas=int(s["m_antennas"]),
            n_elements=int(s["n_elements"]),
            p_max=dbm_to_watt(s["p_max_dbm"]),
            sigma2_irs=dbm_to_watt(s["sigma2_irs_dbm"]),
            sigma2_user=dbm_to_watt(s["sigma2_user_dbm"]),
            bs_pos=tuple(s["bs_pos"]),
            irs_pos=tuple(s["irs_pos"]),
            user_pos=tuple(s["user_pos"]),
            alpha_bi=s["alpha_bi"],
            alpha_iu=s["alpha_iu"],
            alpha_bu=s["alpha_bu"],
            pl0_db=s["pl0_db"],
        )

    def points(self) -> list:
        """Sweep values, or ``[None]`` without a sweep."""
        return list(self.sweep_values) if self.sweep_axis != "none" else [None]

    @property
    def seeds(self) -> list:
        return [self.base_seed + i for i in range(self.seed_count)]

    def to_dict(self) -> dict:
        return {
            "scenario": dict(self.scenario),
            "algorithms": [{"id": a.family, **a.options} for a in self.algorithms],
            "sweep": {"axis": self.sweep_axis, "values": list(self.sweep_values)},
            "seeds": {"count": self.seed_count, "base": self.base_seed},
            "regression": {"j_samples": self.regression.j_samples, "q_order": self.regression.q_order},
            "convergence_n": list(self.convergence_n),
            "fit_beta_seed": self.fit_beta_seed,
            "output_dir": self.output_dir,
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    def with_overrides(self, **changes) -> "ExperimentConfig":
        d = self.to_dict()
        for key, value in changes.items():
            if value is None:
                continue
            if key == "seed_count":
                d["seeds"]["count"] = value
            elif key == "base_seed":
                d["seeds"]["base"] = value
            elif key == "output_dir":
                d["output_dir"] = str(value)
            else:
                raise KeyError(key)
        return parse_config(d)


def _expect(cond: bool, where: str, msg: str) -> None:
    if not cond:
        raise ConfigError(f"{where}: {msg}")


def _number(value, where, kind=float):
    ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    if kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    _expect(ok, where, f"expected {kind.__name__}, got {json.dumps(value)}")
    return kind(value)


def _unknown(d: dict, allowed, where: str) -> None:
    extra = sorted(set(d) - set(allowed))
    _expect(not extra, where, f"unknown key(s) {extra}")


def _parse_algorithm(item, where: str) -> AlgorithmSpec:
    if isinstance(item, str):
        if item.startswith("fixed_beta_"):
            try:
                beta = float(item[len("fixed_beta_"):])
            except ValueError:
                raise ConfigError(f"{where}: bad fixed-beta id {item!r}") from None
            item = {"id": "fixed_beta", "beta": beta}
        else:
            item = {"id": item}
    _expect(isinstance(item, dict), where, "expected a string or an object")
    family = item.get("id")
    _expect(family in ALGORITHMS, f"{where}.id", f"unknown algorithm {family!r}; choose from {list(ALGORITHMS)}")
    spec = ALGO_OPTIONS[family]
    _unknown(item, {"id", *spec}, where)
    opts = {}
    for name, (kind, default) in spec.items():
        if name in item:
            if kind is str:
                _expect(isinstance(item[name], str), f"{where}.{name}", "expected a string")
                opts[name] = item[name]
            else:
                opts[name] = _number(item[name], f"{where}.{name}", kind)
        elif default is None:
            raise ConfigError(f"{where}.{name}: required")
        else:
            opts[name] = default
    if family == "fixed_beta":
        _expect(0.0 < opts["beta"] < 1.0, f"{where}.beta", "must be in (0, 1)")
    if family == "max_ar_cffp":
        try:
            opts["variant"] = CffpVariant.parse(opts["variant"]).value
        except ValueError:
            raise ConfigError(
                f"{where}.variant: unknown variant {opts['variant']!r}; "
                f"choose from {[v.value for v in CffpVariant]}"
            ) from None
    for name in ("max_iters", "max_inner", "iters", "rounds"):
        if name in opts:
            _expect(opts[name] >= 1, f"{where}.{name}", "must be >= 1")
    for name in ("eps", "zeta", "xi"):
        if name in opts:
            _expect(opts[name] > 0, f"{where}.{name}", "must be > 0")
    return AlgorithmSpec(family, opts)


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate a decoded JSON document and fill in defaults."""
    _expect(isinstance(doc, dict), "config", "top level must be an object")
    if "config_hash" in doc and "config" in doc:  # a manifest
        doc = doc["config"]
    _unknown(doc, TOP_KEYS, "config")

    scn_in = doc.get("scenario", {})
    _expect(isinstance(scn_in, dict), "scenario", "expected an object")
    _unknown(scn_in, SCENARIO_DEFAULTS, "scenario")
    scn = copy.deepcopy(SCENARIO_DEFAULTS)
    for key, value in scn_in.items():
        where = f"scenario.{key}"
        if key.endswith("_pos"):
            _expect(isinstance(value, list) and len(value) == 3, where, "expected a list of 3 numbers")
            scn[key] = [_number(x, f"{where}[{i}]") for i, x in enumerate(value)]
        elif key in ("m_antennas", "n_elements"):
            scn[key] = _number(value, where, int)
        else:
            scn[key] = _number(value, where)

    algos_in = doc.get("algorithms", DEFAULT_ALGORITHMS)
    _expect(isinstance(algos_in, list) and algos_in, "algorithms", "expected a non-empty list")
    algos = tuple(_parse_algorithm(a, f"algorithms[{i}]") for i, a in enumerate(algos_in))
    ids = [(a.id, a.variant) for a in algos]
    dup = sorted({"/".join(filter(None, i)) for i in ids if ids.count(i) > 1})
    _expect(not dup, "algorithms", f"duplicate algorithm ids {dup}")

    sweep = doc.get("sweep", {"axis": "none"})
    _expect(isinstance(sweep, dict), "sweep", "expected an object")
    _unknown(sweep, {"axis", "values"}, "sweep")
    axis = sweep.get("axis", "none")
    _expect(axis in SWEEP_AXES, "sweep.axis", f"expected one of {list(SWEEP_AXES)}")
    values = sweep.get("values", [])
    _expect(isinstance(values, list), "sweep.values", "expected a list")
    kind = int if axis == "n_elements" else float
    values = tuple(_number(v, f"sweep.values[{i}]", kind) for i, v in enumerate(values))
    if axis != "none":
        _expect(len(values) > 0, "sweep.values", f"axis {axis!r} needs at least one value")

    seeds = doc.get("seeds", {})
    _expect(isinstance(seeds, dict), "seeds", "expected an object")
    _unknown(seeds, {"count", "base"}, "seeds")
    count = _number(seeds.get("count", 50), "seeds.count", int)
    base = _number(seeds.get("base", 0), "seeds.base", int)
    _expect(count >= 1, "seeds.count", "must be >= 1")
    _expect(0 <= base and base + count <= 2**64, "seeds.base", "seeds must fit in 64 bits")

    reg_in = doc.get("regression", {})
    _expect(isinstance(reg_in, dict), "regression", "expected an object")
    _unknown(reg_in, {"j_samples", "q_order"}, "regression")
    try:
        reg = RegressionConfig(
            q_order=_number(reg_in.get("q_order", 3), "regression.q_order", int),
            j_samples=_number(reg_in.get("j_samples", 201), "regression.j_samples", int),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"regression: {exc}") from None

    conv = doc.get("convergence_n", [32, 128])
    _expect(isinstance(conv, list) and conv, "convergence_n", "expected a non-empty list")
    conv = tuple(_number(v, f"convergence_n[{i}]", int) for i, v in enumerate(conv))

    out = doc.get("output_dir", "out")
    _expect(isinstance(out, str) and out, "output_dir", "expected a non-empty string")

    cfg = ExperimentConfig(
        scenario=scn,
        algorithms=algos,
        sweep_axis=axis,
        sweep_values=values,
        seed_count=count,
        base_seed=base,
        regression=reg,
        convergence_n=conv,
        fit_beta_seed=_number(doc.get("fit_beta_seed", 0), "fit_beta_seed", int),
        output_dir=out,
    )
    try:
        for point in cfg.points():
            cfg.scenario_at(point)
    except ValueError as exc:
        raise ConfigError(f"scenario: {exc}") from None
    return cfg


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return parse_config(doc)


def default_config() -> ExperimentConfig:
    return parse_config({})
