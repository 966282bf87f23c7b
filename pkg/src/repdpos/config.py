"""Declarative scenario and experiment configuration.

Experiment specs are YAML key/value trees; every section maps onto a
frozen dataclass with desk-scale defaults.  Desk scale compresses the
full-scale setup (200 vehicles / 400 RSUs / one month) to 60 vehicles /
40 candidates / 60 simulated minutes so the whole suite runs in seconds;
weight parameters keep their full-scale values while the time horizons
(recent/window) and interaction rate are compressed accordingly.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Mapping

import yaml

from repdpos.contracts import ContractParams
from repdpos.mobility import Bbox
from repdpos.opinions import ReputationWeights, TslParams

SCHEMES = ("mwsl", "tsl", "none")
VARIANTS = ("mwsl_standby", "mwsl_no_standby", "tsl_no_standby")

TABLES = (
    "reputation_timeseries",
    "detection_rate",
    "correct_block_probability",
    "verifier_utilities",
    "profit_vs_types",
    "contract_menu",
    "ledger_dump",
    "event_dump",
)

KINDS = ("simulation", "verification_sweep", "contract")

TABLES_BY_KIND = {
    "simulation": {
        "reputation_timeseries", "detection_rate", "ledger_dump", "event_dump",
        "contract_menu",
    },
    "verification_sweep": {"correct_block_probability"},
    "contract": {"verifier_utilities", "profit_vs_types", "contract_menu"},
}

DESK_BBOX = Bbox(37.74, 37.77, -122.46, -122.42)


class ConfigError(ValueError):
    pass


def _take(data: Mapping[str, Any], cls, section: str) -> dict:
    allowed = {f.name for f in fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(
            f"unknown key(s) {sorted(unknown)} in section {section!r}; "
            f"allowed: {sorted(allowed)}"
        )
    return dict(data)


@dataclass(frozen=True, slots=True)
class ThresholdConfig:
    """TA admission threshold and malicious-detection threshold (0 = off)."""

    ta_admission: float = 0.0
    detection: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.ta_admission <= 1.0 and 0.0 <= self.detection <= 1.0):
            raise ConfigError("thresholds must be in [0, 1]")


@dataclass(frozen=True, slots=True)
class AttackConfig:
    """Collusion attack roster.

    ``malicious_candidates`` RSUs turn malicious at ``onset_round`` after
    an honest warm-up; each partners with ``colluders_per_candidate``
    vehicles from a shared compromised pool.  Compromised vehicles upload
    fake full-belief opinions for their partners and, with
    ``ballot_collusion``, rank them first while padding their ballots
    with the weakest other candidates.
    """

    malicious_candidates: int = 0
    onset_round: int = 5
    colluders_per_candidate: int = 10
    compromised_vehicles: int = 0
    ballot_collusion: bool = True
    fake_positive_opinions: bool = True
    corruption_probability: float = 1.0

    def __post_init__(self) -> None:
        if min(self.malicious_candidates, self.onset_round,
               self.colluders_per_candidate, self.compromised_vehicles) < 0:
            raise ConfigError("attack counts must be nonnegative")
        if not 0.0 <= self.corruption_probability <= 1.0:
            raise ConfigError("corruption_probability must be in [0, 1]")


@dataclass(frozen=True, slots=True)
class MobilityConfig:
    bbox: tuple[float, float, float, float] = tuple(DESK_BBOX)
    home_range_m: float | None = 850.0
    step_s: float = 10.0
    speed_range_kmh: tuple[float, float] = (50.0, 150.0)
    radius_range_m: tuple[float, float] = (300.0, 500.0)
    link_quality_range: tuple[float, float] = (0.6, 1.0)
    fire_probability: float | None = 0.75
    weekly_target: tuple[float, float] = (50.0, 200.0)
    trace_dir: str | None = None

    def to_bbox(self) -> Bbox:
        return Bbox(*self.bbox).validate()


@dataclass(frozen=True, slots=True)
class ContractSection:
    """Contract engine wiring inside the consensus simulation."""

    enabled: bool = True
    types: int = 10
    standby_fraction: float = 1.0
    standby_cap: int | None = None
    params: ContractParams = field(default_factory=ContractParams)

    def __post_init__(self) -> None:
        if self.types < 1:
            raise ConfigError("need at least one contract type")
        if not 0.0 <= self.standby_fraction <= 1.0:
            raise ConfigError("standby_fraction must be in [0, 1]")


@dataclass(frozen=True, slots=True)
class ScenarioConfig:
    vehicles: int = 60
    candidates: int = 40
    rounds: int = 60
    k: int = 9
    y: int = 21
    seed: int = 1
    scheme: str = "mwsl"
    standby_verification: bool = False
    round_seconds: float = 60.0
    max_age_rounds: int = 10
    neutral_prior: float = 0.5
    none_slope: float = 0.002
    weights: ReputationWeights = field(
        default_factory=lambda: ReputationWeights(recent_horizon=180.0, window=3600.0)
    )
    tsl: TslParams = field(default_factory=TslParams)
    thresholds: ThresholdConfig = field(default_factory=ThresholdConfig)
    attack: AttackConfig = field(default_factory=AttackConfig)
    mobility: MobilityConfig = field(default_factory=MobilityConfig)
    contract: ContractSection = field(default_factory=ContractSection)

    def validate(self) -> "ScenarioConfig":
        problems = []
        if self.vehicles < 1:
            problems.append("need at least one vehicle")
        if self.rounds < 0:
            problems.append("rounds must be nonnegative")
        if self.k % 2 == 0:
            problems.append(f"k must be odd, got {self.k}")
        if not self.k < self.y <= self.candidates:
            problems.append(
                f"need k < y <= candidates, got k={self.k}, y={self.y}, "
                f"candidates={self.candidates}"
            )
        if self.seed < 0:
            problems.append("seed must be nonnegative")
        if self.scheme not in SCHEMES:
            problems.append(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.scheme == "none":
            problems.append("the no-reputation baseline cannot drive selection")
        if self.round_seconds <= 0:
            problems.append("round_seconds must be positive")
        if self.max_age_rounds < 0:
            problems.append("max_age_rounds must be nonnegative")
        if not 0.0 <= self.neutral_prior <= 1.0:
            problems.append("neutral_prior must be in [0, 1]")
        if self.attack.malicious_candidates > self.candidates:
            problems.append("more malicious candidates than candidates")
        if self.attack.compromised_vehicles > self.vehicles:
            problems.append("more compromised vehicles than vehicles")
        if problems:
            raise ConfigError("; ".join(problems))
        return self


@dataclass(frozen=True, slots=True)
class VerificationSweep:
    thresholds: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5)
    variants: tuple[str, ...] = VARIANTS

    def __post_init__(self) -> None:
        for v in self.variants:
            if v not in VARIANTS:
                raise ConfigError(f"unknown variant {v!r}; allowed: {VARIANTS}")
        for t in self.thresholds:
            if not 0.0 <= t <= 1.0:
                raise ConfigError("sweep thresholds must be in [0, 1]")


@dataclass(frozen=True, slots=True)
class ContractExperiment:
    params: ContractParams = field(default_factory=ContractParams)
    types: int = 10
    type_range: tuple[float, float] = (0.1, 1.0)
    q_sweep: tuple[int, ...] = (2, 4, 6, 8, 10)
    verifiers_per_type: int | None = 4

    def __post_init__(self) -> None:
        if self.types < 1 or any(q < 1 for q in self.q_sweep):
            raise ConfigError("type counts must be positive")
        lo, hi = self.type_range
        if not 0 < lo < hi:
            raise ConfigError("type_range must be ascending and positive")

    def uniform_profile(self, q: int):
        from repdpos.contracts import VerifierTypeProfile

        lo, hi = self.type_range
        if q == 1:
            return VerifierTypeProfile.uniform([hi])
        return VerifierTypeProfile.uniform(
            [lo + (hi - lo) * i / (q - 1) for i in range(q)]
        )


@dataclass(frozen=True, slots=True)
class ExperimentSpec:
    name: str
    kind: str = "simulation"
    seed: int = 1
    outputs: tuple[str, ...] = ()
    scenario: ScenarioConfig | None = None
    sweep: VerificationSweep | None = None
    contract: ContractExperiment | None = None

    def validate(self) -> "ExperimentSpec":
        if not self.name:
            raise ConfigError("experiment needs a name")
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not self.outputs:
            raise ConfigError("experiment requests no output tables")
        for table in self.outputs:
            if table not in TABLES:
                raise ConfigError(f"unknown table {table!r}; registry: {TABLES}")
            if table not in TABLES_BY_KIND[self.kind]:
                raise ConfigError(
                    f"table {table!r} is not produced by kind {self.kind!r}"
                )
        if self.kind in ("simulation", "verification_sweep"):
            if self.scenario is None:
                raise ConfigError(f"kind {self.kind!r} needs a scenario section")
            self.scenario.validate()
        if self.kind == "contract" and self.contract is None:
            raise ConfigError("kind 'contract' needs a contract section")
        return self


def _pair(value, name) -> tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"{name} must be a two-element list")
    return (float(value[0]), float(value[1]))


def scenario_from_dict(data: Mapping[str, Any]) -> ScenarioConfig:
    data = _take(data, ScenarioConfig, "scenario")
    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        if key == "weights":
            kwargs[key] = ReputationWeights(**_take(value, ReputationWeights, "weights"))
        elif key == "tsl":
            kwargs[key] = TslParams(**_take(value, TslParams, "tsl"))
        elif key == "thresholds":
            kwargs[key] = ThresholdConfig(**_take(value, ThresholdConfig, "thresholds"))
        elif key == "attack":
            kwargs[key] = AttackConfig(**_take(value, AttackConfig, "attack"))
        elif key == "mobility":
            raw = _take(value, MobilityConfig, "mobility")
            for pair_key in ("speed_range_kmh", "radius_range_m",
                             "link_quality_range", "weekly_target"):
                if pair_key in raw:
                    raw[pair_key] = _pair(raw[pair_key], pair_key)
            if "bbox" in raw:
                box = raw["bbox"]
                if not isinstance(box, (list, tuple)) or len(box) != 4:
                    raise ConfigError("bbox must be [lat_min, lat_max, lon_min, lon_max]")
                raw["bbox"] = tuple(float(v) for v in box)
            kwargs[key] = MobilityConfig(**raw)
        elif key == "contract":
            raw = _take(value, ContractSection, "contract")
            if "params" in raw:
                raw["params"] = ContractParams(
                    **_take(raw["params"], ContractParams, "contract.params")
                )
            kwargs[key] = ContractSection(**raw)
        else:
            kwargs[key] = value
    return ScenarioConfig(**kwargs)


def spec_from_dict(data: Mapping[str, Any]) -> ExperimentSpec:
    data = _take(data, ExperimentSpec, "experiment")
    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        if key == "scenario":
            kwargs[key] = scenario_from_dict(value)
        elif key == "sweep":
            raw = _take(value, VerificationSweep, "sweep")
            if "thresholds" in raw:
                raw["thresholds"] = tuple(float(t) for t in raw["thresholds"])
            if "variants" in raw:
                raw["variants"] = tuple(raw["variants"])
            kwargs[key] = VerificationSweep(**raw)
        elif key == "contract":
            raw = _take(value, ContractExperiment, "contract")
            if "params" in raw:
                raw["params"] = ContractParams(
                    **_take(raw["params"], ContractParams, "contract.params")
                )
            if "q_sweep" in raw:
                raw["q_sweep"] = tuple(int(q) for q in raw["q_sweep"])
            if "type_range" in raw:
                raw["type_range"] = _pair(raw["type_range"], "type_range")
            kwargs[key] = ContractExperiment(**raw)
        elif key == "outputs":
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    return ExperimentSpec(**kwargs).validate()


def load_spec(path: str) -> ExperimentSpec:
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ConfigError(f"spec file {path!r} must hold a mapping")
    return spec_from_dict(data)


def canonical_dict(spec: ExperimentSpec) -> dict:
    """JSON-safe nested dict with stable content for hashing/echoing."""

    def clean(value):
        if isinstance(value, dict):
            return {k: clean(v) for k, v in sorted(value.items())}
        if isinstance(value, (list, tuple)):
            return [clean(v) for v in value]
        return value

    return clean(asdict(spec))


def config_hash(spec: ExperimentSpec) -> str:
    payload = json.dumps(canonical_dict(spec), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]
