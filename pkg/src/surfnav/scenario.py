"""Scenario files: parsing, defaults, validation, and serialization.

Scenarios are TOML documents with the sections [surface], [swarm],
[estimator], [run], [initial], and [output].  ``load_scenario`` fills
defaults, validates every constraint, and returns a fully resolved
``Scenario``; ``scenario_to_toml`` writes the exact same document back, so
a run manifest is itself a loadable scenario.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .engine import SimulationState
from .errors import ScenarioError
from .surfaces import make_surface
from .swarm import (
    ConsensusConfig,
    EstimatorMode,
    SwarmConfig,
    TargetState,
    complete_adjacency,
    ring_adjacency,
    validate_initial_separation,
)

__all__ = [
    "Scenario",
    "load_scenario",
    "scenario_from_dict",
    "scenario_to_toml",
    "validate_scenario",
    "write_scenario",
    "build_model",
    "build_config",
    "build_initial_state",
]

MAX_SAMPLING_ATTEMPTS = 10000


@dataclass
class Scenario:
    """Fully resolved run description; every field has a concrete value
    except the optional explicit initial conditions."""

    surface: str = "torus"
    surface_params: list = field(default_factory=lambda: [6.0, 2.0])
    n_robots: int = 22
    sensing_radius: float = 0.6
    safe_radius: float = 0.4
    gain_k: object = 0.6
    gain_c: object = 3.0
    m_tail: list = field(default_factory=lambda: [-1.0, 1.0])
    estimator_mode: str = "broadcast"
    consensus_gamma: float = 5.0
    consensus_graph: object = "ring"
    consensus_leaders: list = field(default_factory=lambda: [0])
    duration: float = 30.0
    dt: float = 1e-3
    record_every: int = 10
    seed: int = 0
    target_start: list = field(default_factory=lambda: [0.0, 0.0])
    position_mode: str = "offset"
    position_box: list = field(
        default_factory=lambda: [[-2.0, 2.0], [-2.0, 2.0], [-2.0, 2.0]]
    )
    omega_box: list = field(default_factory=lambda: [[-3.0, 3.0], [-3.0, 3.0]])
    min_separation: float = None
    initial_positions: list = None
    initial_omega: list = None
    initial_omega_hat: list = None
    output_dir: str = "out"


_SECTIONS = {
    "surface": {"name": "surface", "params": "surface_params"},
    "swarm": {
        "robots": "n_robots",
        "sensing_radius": "sensing_radius",
        "safe_radius": "safe_radius",
        "gain_k": "gain_k",
        "gain_c": "gain_c",
        "m_tail": "m_tail",
    },
    "estimator": {
        "mode": "estimator_mode",
        "gamma": "consensus_gamma",
        "graph": "consensus_graph",
        "leaders": "consensus_leaders",
    },
    "run": {
        "duration": "duration",
        "dt": "dt",
        "record_every": "record_every",
    },
    "initial": {
        "seed": "seed",
        "target": "target_start",
        "position_mode": "position_mode",
        "position_box": "position_box",
        "omega_box": "omega_box",
        "min_separation": "min_separation",
        "positions": "initial_positions",
        "omega": "initial_omega",
        "omega_hat": "initial_omega_hat",
    },
    "output": {"directory": "output_dir"},
}


def scenario_from_dict(doc, origin="<dict>"):
    """Build a Scenario from a parsed TOML document, filling defaults."""
    values = {}
    for section, mapping in _SECTIONS.items():
        body = doc.get(section, {})
        if not isinstance(body, dict):
            raise ScenarioError(f"{origin}: [{section}] must be a table")
        for key, payload in body.items():
            if key not in mapping:
                raise ScenarioError(f"{origin}: unknown key [{section}].{key}")
            values[mapping[key]] = payload
    for section in doc:
        if section not in _SECTIONS:
            raise ScenarioError(f"{origin}: unknown section [{section}]")
    scenario = Scenario(**values)
    validate_scenario(scenario, origin=origin)
    return scenario


def load_scenario(path):
    """Parse, default-fill, and validate a scenario file."""
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        raise ScenarioError(f"scenario file not found: {path}") from None
    except OSError as err:
        raise ScenarioError(f"cannot read scenario {path}: {err}") from None
    except tomllib.TOMLDecodeError as err:
        raise ScenarioError(f"{path}: parse error: {err}") from None
    return scenario_from_dict(doc, origin=str(path))


def _require(condition, origin, message):
    if not condition:
        raise ScenarioError(f"{origin}: {message}")


def _as_box(raw, length, origin, label):
    box = np.asarray(raw, dtype=float)
    _require(box.shape == (length, 2), origin,
             f"{label} must list {length} [low, high] pairs")
    _require(bool(np.all(box[:, 0] < box[:, 1])), origin,
             f"every {label} interval needs low < high")
    return box


def validate_scenario(scenario, origin="scenario"):
    """Check every constraint; raises ScenarioError naming the violation."""
    try:
        model = make_surface(scenario.surface, scenario.surface_params)
    except ScenarioError as err:
        raise ScenarioError(f"{origin}: {err}") from None
    dim = model.dim_ambient

    _require(int(scenario.n_robots) >= 1, origin, "robots must be a positive integer")
    scenario.n_robots = int(scenario.n_robots)
    _require(
        0.0 < float(scenario.safe_radius) < float(scenario.sensing_radius),
        origin,
        "sensing_radius must exceed safe_radius, both positive",
    )
    _require(float(scenario.duration) >= 0.0, origin, "duration must be nonnegative")
    _require(float(scenario.dt) > 0.0, origin, "dt must be positive")
    _require(int(scenario.record_every) >= 1, origin,
             "record_every must be a positive integer")
    scenario.record_every = int(scenario.record_every)
    _require(int(scenario.seed) >= 0, origin, "seed must be a nonnegative integer")
    scenario.seed = int(scenario.seed)

    m_tail = np.asarray(scenario.m_tail, dtype=float)
    _require(m_tail.shape == (2,), origin, "m_tail must have exactly two entries")
    _require(bool(np.all(m_tail != 0.0)), origin, "m_tail entries must be nonzero")

    k = np.asarray(scenario.gain_k, dtype=float)
    _require(k.ndim <= 2, origin, "gain_k must be a scalar, a vector, or per-robot rows")
    if k.ndim == 1:
        _require(k.shape == (dim,), origin,
                 f"a gain_k vector must have {dim} components")
    if k.ndim == 2:
        _require(k.shape == (scenario.n_robots, dim), origin,
                 "per-robot gain_k must have one row of length "
                 f"{dim} per robot")
    _require(bool(np.all(k > 0.0)), origin, "gain_k entries must be positive")

    c = np.asarray(scenario.gain_c, dtype=float)
    _require(c.ndim <= 1, origin, "gain_c must be a scalar or one value per robot")
    if c.ndim == 1:
        _require(c.shape == (scenario.n_robots,), origin,
                 "per-robot gain_c must have one value per robot")
    _require(bool(np.all(c > 0.0)), origin, "gain_c entries must be positive")

    mode = str(scenario.estimator_mode)
    _require(mode in ("broadcast", "consensus"), origin,
             "estimator mode must be 'broadcast' or 'consensus'")
    if mode == "consensus":
        _require(float(scenario.consensus_gamma) > 0.0, origin,
                 "consensus gamma must be positive")
        leaders = list(scenario.consensus_leaders)
        _require(len(leaders) >= 1, origin, "consensus needs at least one leader")
        for idx in leaders:
            _require(0 <= int(idx) < scenario.n_robots, origin,
                     f"leader index {idx} is out of range")
        graph = scenario.consensus_graph
        if isinstance(graph, str):
            _require(graph in ("ring", "complete"), origin,
                     "graph must be 'ring', 'complete', or an edge list")
        else:
            for edge in graph:
                _require(
                    len(edge) == 2
                    and 0 <= int(edge[0]) < scenario.n_robots
                    and 0 <= int(edge[1]) < scenario.n_robots
                    and int(edge[0]) != int(edge[1]),
                    origin,
                    f"bad communication edge {edge}",
                )
        # builds and therefore connectivity-checks the graph
        build_config(scenario, model, origin=origin)

    target = np.asarray(scenario.target_start, dtype=float)
    _require(target.shape == (2,), origin, "initial target must be a 2-vector")

    explicit = [scenario.initial_positions, scenario.initial_omega]
    if any(item is not None for item in explicit):
        _require(all(item is not None for item in explicit), origin,
                 "explicit initial conditions need both positions and omega")
        pos = np.asarray(scenario.initial_positions, dtype=float)
        _require(pos.shape == (scenario.n_robots, dim), origin,
                 f"positions must be {scenario.n_robots} rows of {dim} values")
        omega = np.asarray(scenario.initial_omega, dtype=float)
        _require(omega.shape == (scenario.n_robots, 2), origin,
                 f"omega must be {scenario.n_robots} rows of 2 values")
        if scenario.initial_omega_hat is not None:
            hat = np.asarray(scenario.initial_omega_hat, dtype=float)
            _require(hat.shape == (scenario.n_robots, 2), origin,
                     f"omega_hat must be {scenario.n_robots} rows of 2 values")
        try:
            validate_initial_separation(omega, float(scenario.safe_radius))
        except ScenarioError as err:
            raise ScenarioError(f"{origin}: {err}") from None
    else:
        _require(scenario.initial_omega_hat is None, origin,
                 "omega_hat requires explicit positions and omega")
        _require(str(scenario.position_mode) in ("offset", "absolute"), origin,
                 "position_mode must be 'offset' or 'absolute'")
        _as_box(scenario.position_box, dim, origin, "position_box")
        _as_box(scenario.omega_box, 2, origin, "omega_box")
        if scenario.min_separation is not None:
            _require(
                float(scenario.min_separation) >= float(scenario.safe_radius),
                origin,
                "min_separation cannot be below the safe radius",
            )

    return scenario


def build_model(scenario):
    """Surface model named by the scenario."""
    return make_surface(scenario.surface, scenario.surface_params)


def _adjacency_from(scenario, origin):
    graph = scenario.consensus_graph
    if isinstance(graph, str):
        if graph == "ring":
            return ring_adjacency(scenario.n_robots)
        if graph == "complete":
            return complete_adjacency(scenario.n_robots)
        raise ScenarioError(f"{origin}: unknown graph {graph!r}")
    adjacency = np.zeros((scenario.n_robots, scenario.n_robots), dtype=float)
    for edge in graph:
        i, k = int(edge[0]), int(edge[1])
        adjacency[i, k] = 1.0
        adjacency[k, i] = 1.0
    return adjacency


def build_config(scenario, model, origin="scenario"):
    """Swarm configuration (gains broadcast per robot, estimator wired up)."""
    count = scenario.n_robots
    dim = model.dim_ambient
    k = np.asarray(scenario.gain_k, dtype=float)
    if k.ndim == 0:
        k = np.full((count, dim), float(k))
    elif k.ndim == 1:
        k = np.tile(k, (count, 1))
    c = np.asarray(scenario.gain_c, dtype=float)
    if c.ndim == 0:
        c = np.full(count, float(c))
    mode = EstimatorMode(scenario.estimator_mode)
    consensus = None
    if mode is EstimatorMode.CONSENSUS:
        try:
            consensus = ConsensusConfig(
                gamma=float(scenario.consensus_gamma),
                adjacency=_adjacency_from(scenario, origin),
                leaders=[int(i) for i in scenario.consensus_leaders],
            )
        except ScenarioError as err:
            raise ScenarioError(f"{origin}: {err}") from None
    return SwarmConfig(
        n_robots=count,
        sensing_radius=float(scenario.sensing_radius),
        safe_radius=float(scenario.safe_radius),
        k=k,
        c=c,
        m_tail=(float(scenario.m_tail[0]), float(scenario.m_tail[1])),
        estimator_mode=mode,
        consensus=consensus,
    )


def build_initial_state(scenario, model, config):
    """Initial swarm state, explicit or drawn from the scenario's boxes.

    Random draws use the scenario seed and whole-configuration rejection
    sampling until every pair of virtual coordinates clears the sampling
    margin (min_separation, default midway between the safe and sensing
    radii), so identical scenarios always produce identical states.  The
    margin keeps the initial repulsion weights of order one; starts barely
    above the safe radius are valid but integrate poorly at practical
    step sizes.

    In the default "offset" position mode each robot starts at its own
    addressed surface point plus a draw from position_box, which bounds
    the initial surface error by the box half-width; "absolute" mode draws
    positions directly from position_box.
    """
    count = scenario.n_robots
    dim = model.dim_ambient
    target = TargetState.for_surface(
        dim, (float(scenario.m_tail[0]), float(scenario.m_tail[1])),
        np.asarray(scenario.target_start, dtype=float),
    )
    if scenario.initial_omega is not None:
        omega = np.asarray(scenario.initial_omega, dtype=float)
        x = np.asarray(scenario.initial_positions, dtype=float)
        if scenario.initial_omega_hat is not None:
            omega_hat = np.asarray(scenario.initial_omega_hat, dtype=float)
        elif config.estimator_mode is EstimatorMode.BROADCAST:
            omega_hat = np.tile(target.omega_star, (count, 1))
        else:
            omega_hat = omega.copy()
    else:
        rng = np.random.default_rng(scenario.seed)
        omega_box = np.asarray(scenario.omega_box, dtype=float)
        position_box = np.asarray(scenario.position_box, dtype=float)
        margin = scenario.min_separation
        if margin is None:
            margin = 0.5 * (config.safe_radius + config.sensing_radius)
        margin = float(margin)
        omega = None
        for _ in range(MAX_SAMPLING_ATTEMPTS):
            draw = rng.uniform(omega_box[:, 0], omega_box[:, 1], size=(count, 2))
            if count == 1 or _min_pairwise(draw) > margin:
                omega = draw
                break
        if omega is None:
            raise ScenarioError(
                "could not draw initial virtual coordinates clearing"
                f" min_separation={margin:g} after {MAX_SAMPLING_ATTEMPTS}"
                " attempts; enlarge omega_box or reduce the robot count"
            )
        offsets = rng.uniform(position_box[:, 0], position_box[:, 1],
                              size=(count, dim))
        if scenario.position_mode == "offset":
            x = model.eval(omega) + offsets
        else:
            x = offsets
        if config.estimator_mode is EstimatorMode.BROADCAST:
            omega_hat = np.tile(target.omega_star, (count, 1))
        else:
            omega_hat = omega.copy()
    validate_initial_separation(omega, config.safe_radius)
    return SimulationState(time=0.0, x=x, omega=omega, omega_hat=omega_hat,
                           target=target)


def _min_pairwise(points):
    diff = points[:, None, :] - points[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    return float(dist[~np.eye(len(points), dtype=bool)].min())


def _toml_scalar(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        out = repr(float(value))
        return out if ("." in out or "e" in out or "inf" in out) else out + ".0"
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, (list, tuple, np.ndarray)):
        inner = ", ".join(_toml_scalar(item) for item in value)
        return f"[{inner}]"
    raise TypeError(f"cannot serialize {value!r} to TOML")


def scenario_to_toml(scenario):
    """Serialize a resolved scenario; the result loads back identically."""
    reverse = {
        attr: (section, key)
        for section, mapping in _SECTIONS.items()
        for key, attr in mapping.items()
    }
    order = [f.name for f in fields(Scenario)]
    lines = []
    current = None
    for attr in order:
        value = getattr(scenario, attr)
        if value is None:
            continue
        section, key = reverse[attr]
        if section != current:
            if lines:
                lines.append("")
            lines.append(f"[{section}]")
            current = section
        lines.append(f"{key} = {_toml_scalar(value)}")
    return "\n".join(lines) + "\n"


def write_scenario(scenario, path, header=()):
    """Write a scenario (optionally with comment header lines) to a file."""
    text = "".join(f"# {line}\n" for line in header) + scenario_to_toml(scenario)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return path
