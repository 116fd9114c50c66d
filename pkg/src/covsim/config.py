"""Scenario configuration: TOML schema, dot-path overrides, object builders."""

from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .environment import BasisSet, DensityField, Domain
from .network import NetworkGraph
from .ranking import KNOWN_DECAY, UNKNOWN_WARMUP, LambdaSchedule
from .validation import ValidationError


class ConfigError(ValueError):
    """A scenario file or override is malformed; the message names the key."""


def _build(cls, section: dict, where: str):
    """Instantiate a config dataclass from a dict, rejecting unknown keys."""
    known = {f.name for f in fields(cls)}
    for key in section:
        if key not in known:
            raise ConfigError(f"unknown key '{where}.{key}'")
    return cls(**section)


@dataclass
class DomainConfig:
    lower: list = field(default_factory=lambda: [0.0, 0.0])
    upper: list = field(default_factory=lambda: [1.0, 1.0])
    grid_resolution: int = 100


@dataclass
class BasisConfig:
    grid: list = field(default_factory=lambda: [5, 5])
    sigma: float = 0.1
    rho_trunc: float = 0.2


@dataclass
class DensityConfig:
    default_coeff: float = 0.0
    coeffs: dict | list = field(default_factory=dict)


@dataclass
class AgentsConfig:
    n: int = 14
    initial_positions: list | None = None
    seed: int = 0


@dataclass
class EngineConfig:
    method: str = "proposed"  # proposed | lloyd
    env_mode: str = "known"  # known | unknown
    epsilon: float = 0.1
    dt: float = 0.01
    max_steps: int = 1400
    out_of_domain: str = "clamp"  # clamp | error


@dataclass
class ConvergenceConfig:
    enabled: bool = True
    threshold_pct: float = 0.1
    window: int = 10


@dataclass
class ScheduleConfig:
    mode: str = KNOWN_DECAY
    lambda_s: float = 4.0
    lambda_f: float = 0.2
    alpha: float = 40.0
    warmup_lambda_0: float = 0.05
    warmup_growth: float = 1.005
    switch_threshold_pct: float = 1.0
    switch_window: int = 100


@dataclass
class EstimatorConfig:
    gamma: float = 0.14
    zeta: float = 0.01
    a_min: float = 0.0
    a_hat_init: float | list = 400.0
    w_r: float = 180.0
    tau_w: float = 6.0
    gamma_gain: float | list = 1.0


@dataclass
class NetworkConfig:
    topology: str = "complete"  # complete | ring | custom
    weight: float = 1.0
    weights: list | None = None  # explicit matrix for topology = custom


@dataclass
class LloydConfig:
    gain: str | float = "auto"


@dataclass
class ScenarioConfig:
    name: str = "scenario"
    domain: DomainConfig = field(default_factory=DomainConfig)
    basis: BasisConfig = field(default_factory=BasisConfig)
    density: DensityConfig = field(default_factory=DensityConfig)
    agents: AgentsConfig = field(default_factory=AgentsConfig)
    engine: EngineConfig = field(default_factory=EngineConfig)
    convergence: ConvergenceConfig = field(default_factory=ConvergenceConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    lloyd: LloydConfig = field(default_factory=LloydConfig)

    _SECTIONS = {
        "domain": DomainConfig,
        "basis": BasisConfig,
        "density": DensityConfig,
        "agents": AgentsConfig,
        "engine": EngineConfig,
        "convergence": ConvergenceConfig,
        "schedule": ScheduleConfig,
        "estimator": EstimatorConfig,
        "network": NetworkConfig,
        "lloyd": LloydConfig,
    }

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        cfg = cls()
        for key, value in raw.items():
            if key == "name":
                cfg.name = str(value)
            elif key in cls._SECTIONS:
                if not isinstance(value, dict):
                    raise ConfigError(f"section '{key}' must be a table")
                setattr(cfg, key, _build(cls._SECTIONS[key], value, key))
            else:
                raise ConfigError(f"unknown key '{key}'")
        cfg.validate()
        return cfg

    def validate(self):
        eng = self.engine
        if eng.method not in ("proposed", "lloyd"):
            raise ConfigError(f"engine.method must be proposed|lloyd, got '{eng.method}'")
        if eng.env_mode not in ("known", "unknown"):
            raise ConfigError(f"engine.env_mode must be known|unknown, got '{eng.env_mode}'")
        if eng.dt <= 0:
            raise ConfigError("engine.dt must be positive")
        if eng.max_steps < 0:
            raise ConfigError("engine.max_steps must be nonnegative")
        if eng.out_of_domain not in ("clamp", "error"):
            raise ConfigError("engine.out_of_domain must be clamp|error")
        if self.agents.n < 1:
            raise ConfigError("agents.n must be at least 1")
        if self.schedule.mode not in (KNOWN_DECAY, UNKNOWN_WARMUP):
            raise ConfigError(f"schedule.mode must be {KNOWN_DECAY}|{UNKNOWN_WARMUP}")
        if eng.env_mode == "unknown" and self.schedule.mode != UNKNOWN_WARMUP:
            raise ConfigError("unknown env_mode requires schedule.mode = unknown-warmup")

    # -- builders ----------------------------------------------------------

    def build_domain(self) -> Domain:
        d = self.domain
        return Domain(np.array(d.lower, float), np.array(d.upper, float),
                      d.grid_resolution)

    def build_basis(self) -> BasisSet:
        b = self.basis
        d = self.domain
        return BasisSet.grid_layout(shape=b.grid, lower=d.lower, upper=d.upper,
                                    sigma=b.sigma, rho_trunc=b.rho_trunc)

    def coefficient_vector(self, m: int) -> np.ndarray:
        """Dense coefficient vector from either a dense list or a sparse
        {index: value} map with 1-based indices."""
        spec = self.density.coeffs
        if isinstance(spec, list):
            coeffs = np.asarray(spec, dtype=float)
            if coeffs.shape != (m,):
                raise ConfigError(
                    f"density.coeffs has {coeffs.size} entries, basis has {m}")
            return coeffs
        coeffs = np.full(m, float(self.density.default_coeff))
        for key, value in spec.items():
            try:
                j = int(key)
            except (TypeError, ValueError):
                raise ConfigError(f"density.coeffs key '{key}' is not an index") from None
            if not 1 <= j <= m:
                raise ConfigError(f"density.coeffs index {j} outside 1..{m}")
            coeffs[j - 1] = float(value)
        return coeffs

    def build_density(self) -> DensityField:
        domain = self.build_domain()
        basis = self.build_basis()
        return DensityField(domain, basis, self.coefficient_vector(basis.size))

    def build_schedule(self) -> LambdaSchedule:
        s = self.schedule
        return LambdaSchedule(
            mode=s.mode, lambda_s=s.lambda_s, lambda_f=s.lambda_f, alpha=s.alpha,
            warmup_lambda_0=s.warmup_lambda_0, warmup_growth=s.warmup_growth,
            switch_threshold_pct=s.switch_threshold_pct,
        )

    def build_network(self) -> NetworkGraph:
        net = self.network
        n = self.agents.n
        if net.topology == "complete":
            graph = NetworkGraph.complete(n, net.weight)
        elif net.topology == "ring":
            graph = NetworkGraph.ring(n, net.weight)
        elif net.topology == "custom":
            if net.weights is None:
                raise ConfigError("network.weights required for topology = custom")
            graph = NetworkGraph(np.asarray(net.weights, dtype=float))
            if graph.n != n:
                raise ConfigError("network.weights size does not match agents.n")
        else:
            raise ConfigError(f"unknown network.topology '{net.topology}'")
        if not graph.is_connected():
            raise ConfigError("communication graph must be connected")
        return graph

    def initial_positions(self, domain: Domain, seed=None) -> np.ndarray:
        a = self.agents
        if a.initial_positions is not None:
            P = np.asarray(a.initial_positions, dtype=float)
            if P.shape != (a.n, 2):
                raise ConfigError(
                    f"agents.initial_positions must be ({a.n}, 2), got {P.shape}")
            if not np.all((P >= domain.lower) & (P <= domain.upper)):
                raise ConfigError("agents.initial_positions outside the domain")
            return P
        rng = np.random.default_rng(a.seed if seed is None else seed)
        return domain.lower + rng.random((a.n, 2)) * (domain.upper - domain.lower)


def parse_override(text: str):
    """Split a 'dot.path=value' override; the value parses as a TOML literal
    and falls back to a bare string."""
    if "=" not in text:
        raise ConfigError(f"override '{text}' is not of the form key.path=value")
    path, raw = text.split("=", 1)
    path = path.strip()
    if not path:
        raise ConfigError(f"override '{text}' has an empty key path")
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return path, value


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply 'dot.path=value' strings onto the raw config dict."""
    for text in overrides:
        path, value = parse_override(text)
        keys = path.split(".")
        node = raw
        for key in keys[:-1]:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override path '{path}' crosses a scalar key")
        node[keys[-1]] = value
    return raw


def load_raw(source) -> dict:
    """Raw dict from a scenario file path or a shipped scenario name."""
    path = Path(source)
    if path.exists():
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    candidate = resources.files("covsim.scenarios").joinpath(f"{source}.toml")
    if candidate.is_file():
        return tomllib.loads(candidate.read_text())
    raise ConfigError(f"scenario '{source}' is neither a file nor a shipped scenario")


def load_scenario(source, overrides=()) -> ScenarioConfig:
    raw = apply_overrides(load_raw(source), overrides)
    return ScenarioConfig.from_dict(raw)


def shipped_scenarios() -> list[str]:
    return sorted(
        p.name[: -len(".toml")]
        for p in resources.files("covsim.scenarios").iterdir()
        if p.name.endswith(".toml")
    )
