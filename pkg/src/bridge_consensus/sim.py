"""Scenario files, validation, the synchronous-round runner and CSV traces."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import yaml

from . import bridge
from .bridge import Estimate, InfoPair, PriorWeight
from .consensus import disagreement
from .errors import IoFailure, NotPositiveDefinite, ParseError, ValidationError
from .graph import (
    GraphSchedule,
    Topology,
    WeightKind,
    WeightPolicy,
    is_balanced,
    psi,
    union_strongly_connected,
)

BUNDLED = ("fig1", "fig3")


@dataclass(frozen=True)
class Scenario:
    """Everything needed to reproduce one run.

    ``values`` holds one optional tuple per node; entries for non-participants
    are kept for reference and never enter the protocol.
    """

    schedule: GraphSchedule
    values: tuple[Optional[tuple[float, ...]], ...]
    participation: tuple[bool, ...]
    tol: float
    max_rounds: int
    m: int = 1
    prior: Optional[PriorWeight] = None
    policy: WeightPolicy = field(default_factory=WeightPolicy)
    record_every: int = 1

    def __post_init__(self):
        values = tuple(None if v is None else tuple(float(c) for c in np.atleast_1d(v)) for v in self.values)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "participation", tuple(bool(p) for p in self.participation))
        if self.prior is None:
            object.__setattr__(self, "prior", PriorWeight.identity(self.m))

    @property
    def n(self) -> int:
        return self.schedule.n

    @property
    def participants(self) -> list[int]:
        return [i + 1 for i, p in enumerate(self.participation) if p]


@dataclass(frozen=True)
class Finding:
    level: str  # "error" or "warning"
    code: str
    message: str

    def __str__(self):
        return f"{self.level}: {self.code}: {self.message}"


def validate(s: Scenario) -> list[Finding]:
    """Check a scenario; errors make it unrunnable, warnings flag missing convergence guarantees."""
    out: list[Finding] = []

    def error(code, msg):
        out.append(Finding("error", code, msg))

    n = s.n
    if len(s.values) != n or len(s.participation) != n:
        error("DimensionMismatch", f"{n} nodes but {len(s.values)} values and {len(s.participation)} participation flags")
    if not any(s.participation):
        error("NoParticipants", "no node is participating")
    for i, (v, p) in enumerate(zip(s.values, s.participation), start=1):
        if v is None:
            if p:
                error("MissingValue", f"participating node {i} has no value")
        elif len(v) != s.m:
            error("DimensionMismatch", f"value of node {i} has dimension {len(v)}, expected m={s.m}")
    if s.prior.m != s.m:
        error("DimensionMismatch", f"C is {s.prior.m}x{s.prior.m}, expected m={s.m}")
    if s.policy.kind is WeightKind.METROPOLIS:
        for k, (t, _) in enumerate(s.schedule.frames):
            if not t.undirected:
                error("MetropolisOnDirected", f"frame {k} is directed; Metropolis weights need undirected frames")
    if not s.tol > 0:
        error("InvalidParameter", f"tol must be positive, got {s.tol}")
    if s.max_rounds < 1:
        error("InvalidParameter", f"max_rounds must be >= 1, got {s.max_rounds}")
    if s.record_every < 1:
        error("InvalidParameter", f"record_every must be >= 1, got {s.record_every}")

    for k, (t, _) in enumerate(s.schedule.frames):
        if not is_balanced(t):
            out.append(Finding("warning", "Unbalanced", f"frame {k} is not balanced; the participating average is not guaranteed"))
    # Periodic: any window of one period covers every frame. Otherwise the
    # last frame persists forever and alone decides the long-run windows.
    sched = s.schedule
    if sched.periodic:
        connected = union_strongly_connected(sched, 0, sched.period - 1)
    else:
        connected = union_strongly_connected(sched, sched.period, 0)
    if not connected:
        out.append(Finding(
            "warning",
            "NotStronglyConnected",
            "no window of at most one schedule period has a strongly connected edge union",
        ))
    return out


def errors_of(findings: Sequence[Finding]) -> list[Finding]:
    return [f for f in findings if f.level == "error"]


@dataclass(frozen=True)
class TraceRow:
    round: int
    node: int
    estimate: Optional[tuple[float, ...]]
    info_mass: float
    disagreement: float


@dataclass
class Trace:
    m: int
    rows: list[TraceRow] = field(default_factory=list)

    def rounds(self) -> list[int]:
        return sorted({r.round for r in self.rows})

    def at(self, tau: int) -> list[TraceRow]:
        return [r for r in self.rows if r.round == tau]


@dataclass(frozen=True)
class RunResult:
    converged: bool
    rounds: int
    final_estimates: tuple[Estimate, ...]
    target: np.ndarray
    max_error: float  # inf while any node is Undefined


def estimate_disagreement(estimates: Sequence[Estimate]) -> float:
    """Disagreement among Defined estimates; NaN with fewer than two of them."""
    mus = [e.mu for e in estimates if e.defined]
    if len(mus) < 2:
        return math.nan
    return disagreement(mus)


def _record(trace: Trace, tau: int, pairs: list[InfoPair], estimates: list[Estimate], d: float, prior: PriorWeight):
    for i, (p, e) in enumerate(zip(pairs, estimates), start=1):
        mu = None if e.mu is None else tuple(float(c) for c in e.mu)
        trace.rows.append(TraceRow(tau, i, mu, bridge.info_mass(p, prior), d))


def run_scenario(s: Scenario, eps_pd: float = bridge.DEFAULT_EPS_PD) -> tuple[RunResult, Trace]:
    """Initialize in information space and run bridge rounds until the estimates agree.

    Stops once every node's estimate is Defined and their disagreement is at
    most ``s.tol``, or after ``s.max_rounds`` rounds. Rounds that are multiples
    of ``record_every`` are traced, and so is the final round.
    """
    findings = validate(s)
    if errors_of(findings):
        raise ValidationError(findings)

    pairs = bridge.init_information(
        [None if v is None else np.array(v) for v in s.values], s.participation, s.prior
    )
    target = bridge.participating_average([None if v is None else np.array(v) for v in s.values], s.participation)
    trace = Trace(s.m)
    tau = 0
    while True:
        estimates = [bridge.extract_estimate(p, eps_pd) for p in pairs]
        d = estimate_disagreement(estimates)
        all_defined = all(e.defined for e in estimates)
        done = all_defined and (s.n == 1 or d <= s.tol)
        last = done or tau >= s.max_rounds
        if tau % s.record_every == 0 or last:
            _record(trace, tau, pairs, estimates, d, s.prior)
        if last:
            break
        pairs = bridge.bridge_step(pairs, psi(s.schedule.topology_at(tau), s.policy))
        tau += 1

    if all_defined:
        max_error = max(float(np.linalg.norm(e.mu - target)) for e in estimates)
    else:
        max_error = math.inf
    return RunResult(done, tau, tuple(estimates), target, max_error), trace


def fmt_float(x: float) -> str:
    """17 significant digits; integral values keep a trailing ``.0``; NaN becomes empty."""
    if math.isnan(x):
        return ""
    s = format(x, ".17g")
    if s.lstrip("-").isdigit():
        s += ".0"
    return s


def trace_header(m: int) -> list[str]:
    return ["round", "node"] + [f"estimate_{k}" for k in range(1, m + 1)] + ["info_mass", "disagreement"]


def write_trace(t: Trace, destination) -> None:
    """Write ``t`` as CSV to a path or an open text stream."""
    rows = [trace_header(t.m)]
    for r in t.rows:
        est = [""] * t.m if r.estimate is None else [fmt_float(c) for c in r.estimate]
        rows.append([str(r.round), str(r.node)] + est + [fmt_float(r.info_mass), fmt_float(r.disagreement)])
    if hasattr(destination, "write"):
        csv.writer(destination, lineterminator="\n").writerows(rows)
        return
    try:
        with open(destination, "w", encoding="utf-8", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows)
    except OSError as exc:
        raise IoFailure(f"cannot write trace to {destination}: {exc}") from exc


# --- scenario files -------------------------------------------------------

_TOP_FIELDS = {"n", "m", "frames", "periodic", "values", "participation", "C", "policy", "tol", "max_rounds", "record_every"}
_REQUIRED = ("n", "frames", "values", "participation", "tol", "max_rounds")
_FRAME_FIELDS = {"edges", "undirected", "duration"}
_POLICY_FIELDS = {"kind", "d_margin"}
_POLICY_NAMES = {"uniformdegree": WeightKind.UNIFORM_DEGREE, "metropolis": WeightKind.METROPOLIS}


def _key_lines(text: str) -> dict[str, int]:
    """1-based line of each top-level key, for error messages."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError:
        return {}
    if not isinstance(root, yaml.MappingNode):
        return {}
    return {k.value: k.start_mark.line + 1 for k, _ in root.value if isinstance(k, yaml.ScalarNode)}


def _int(x, name, lines, top) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise ParseError(f"expected an integer, got {x!r}", name, lines.get(top))
    return x


def _real(x, name, lines, top) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ParseError(f"expected a number, got {x!r}", name, lines.get(top))
    return float(x)


def _bool(x, name, lines, top) -> bool:
    if not isinstance(x, bool):
        raise ParseError(f"expected true/false, got {x!r}", name, lines.get(top))
    return x


def _list(x, name, lines, top) -> list:
    if not isinstance(x, list):
        raise ParseError(f"expected a list, got {type(x).__name__}", name, lines.get(top))
    return x


def _parse_policy(raw, lines) -> WeightPolicy:
    if isinstance(raw, str):
        raw = {"kind": raw}
    if not isinstance(raw, dict):
        raise ParseError("expected a kind name or {kind, d_margin}", "policy", lines.get("policy"))
    unknown = set(raw) - _POLICY_FIELDS
    if unknown:
        raise ParseError(f"unknown field(s) {sorted(unknown)}", "policy", lines.get("policy"))
    kind_name = str(raw.get("kind", "uniform_degree"))
    kind = _POLICY_NAMES.get(kind_name.lower().replace("_", "").replace("-", ""))
    if kind is None:
        raise ParseError(f"unknown weight policy {kind_name!r}", "policy.kind", lines.get("policy"))
    d_margin = _int(raw.get("d_margin", 1), "policy.d_margin", lines, "policy")
    if d_margin < 0:
        raise ParseError("d_margin must be >= 0", "policy.d_margin", lines.get("policy"))
    return WeightPolicy(kind, d_margin)


def _parse_frames(raw, n, lines) -> list[tuple[Topology, int]]:
    frames = []
    for k, fr in enumerate(_list(raw, "frames", lines, "frames")):
        name = f"frames[{k}]"
        if not isinstance(fr, dict):
            raise ParseError("expected a mapping", name, lines.get("frames"))
        unknown = set(fr) - _FRAME_FIELDS
        if unknown:
            raise ParseError(f"unknown field(s) {sorted(unknown)}", name, lines.get("frames"))
        if "edges" not in fr:
            raise ParseError("missing required field", f"{name}.edges", lines.get("frames"))
        edges = []
        for e, pair in enumerate(_list(fr["edges"], f"{name}.edges", lines, "frames")):
            if not (isinstance(pair, list) and len(pair) == 2):
                raise ParseError(f"expected [from, to], got {pair!r}", f"{name}.edges[{e}]", lines.get("frames"))
            edges.append(tuple(_int(p, f"{name}.edges[{e}]", lines, "frames") for p in pair))
        undirected = _bool(fr.get("undirected", False), f"{name}.undirected", lines, "frames")
        duration = _int(fr.get("duration", 1), f"{name}.duration", lines, "frames")
        if duration < 1:
            raise ParseError("duration must be >= 1", f"{name}.duration", lines.get("frames"))
        try:
            topo = Topology.from_edges(n, edges, undirected)
        except ValueError as exc:
            raise ParseError(str(exc), f"{name}.edges", lines.get("frames")) from None
        frames.append((topo, duration))
    if not frames:
        raise ParseError("at least one frame is required", "frames", lines.get("frames"))
    return frames


def _parse_values(raw, lines) -> list:
    out = []
    for k, v in enumerate(_list(raw, "values", lines, "values")):
        name = f"values[{k}]"
        if v is None:
            out.append(None)
        elif isinstance(v, list):
            out.append(tuple(_real(c, name, lines, "values") for c in v))
        else:
            out.append((_real(v, name, lines, "values"),))
    return out


def parse_scenario(text: str) -> Scenario:
    """Build a Scenario from scenario-file text (YAML; JSON is accepted as a subset)."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ParseError(f"malformed scenario text: {getattr(exc, 'problem', None) or exc}",
                         line=None if mark is None else mark.line + 1) from None
    if not isinstance(raw, dict):
        raise ParseError("scenario must be a mapping of fields")
    lines = _key_lines(text)
    unknown = set(raw) - _TOP_FIELDS
    if unknown:
        bad = sorted(unknown, key=str)[0]
        raise ParseError(f"unknown field(s) {sorted(map(str, unknown))}", str(bad), lines.get(bad))
    for name in _REQUIRED:
        if name not in raw:
            raise ParseError("missing required field", name)

    n = _int(raw["n"], "n", lines, "n")
    if n < 1:
        raise ParseError("n must be >= 1", "n", lines.get("n"))
    m = _int(raw.get("m", 1), "m", lines, "m")
    if m < 1:
        raise ParseError("m must be >= 1", "m", lines.get("m"))
    frames = _parse_frames(raw["frames"], n, lines)
    periodic = _bool(raw.get("periodic", False), "periodic", lines, "periodic")
    values = _parse_values(raw["values"], lines)
    participation = [
        _bool(p, f"participation[{k}]", lines, "participation")
        for k, p in enumerate(_list(raw["participation"], "participation", lines, "participation"))
    ]
    if raw.get("C") is None:
        prior = PriorWeight.identity(m)
    else:
        try:
            prior = PriorWeight(np.array(raw["C"], dtype=float))
        except (ValueError, TypeError, NotPositiveDefinite) as exc:
            raise ParseError(str(exc), "C", lines.get("C")) from None
    policy = _parse_policy(raw["policy"], lines) if raw.get("policy") is not None else WeightPolicy()
    return Scenario(
        schedule=GraphSchedule(tuple(frames), periodic),
        values=tuple(values),
        participation=tuple(participation),
        tol=_real(raw["tol"], "tol", lines, "tol"),
        max_rounds=_int(raw["max_rounds"], "max_rounds", lines, "max_rounds"),
        m=m,
        prior=prior,
        policy=policy,
        record_every=_int(raw.get("record_every", 1), "record_every", lines, "record_every"),
    )


def load_scenario(source, check: bool = True) -> Scenario:
    """Read a scenario from a path or an open text stream.

    With ``check`` the result goes through ``validate`` and any error finding
    raises ValidationError.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        try:
            text = Path(source).read_text(encoding="utf-8")
        except OSError as exc:
            raise IoFailure(f"cannot read scenario {source}: {exc}") from exc
    s = parse_scenario(text)
    if check:
        findings = validate(s)
        if errors_of(findings):
            raise ValidationError(findings)
    return s


def scenario_to_dict(s: Scenario) -> dict:
    return {
        "n": s.n,
        "m": s.m,
        "frames": [
            {"edges": [list(e) for e in t.sorted_edges()], "undirected": t.undirected, "duration": d}
            for t, d in s.schedule.frames
        ],
        "periodic": s.schedule.periodic,
        "values": [None if v is None else list(v) for v in s.values],
        "participation": list(s.participation),
        "C": s.prior.C.tolist(),
        "policy": {"kind": s.policy.kind.value, "d_margin": s.policy.d_margin},
        "tol": s.tol,
        "max_rounds": s.max_rounds,
        "record_every": s.record_every,
    }


def dump_scenario(s: Scenario, destination=None) -> str:
    text = yaml.safe_dump(scenario_to_dict(s), sort_keys=False, default_flow_style=None)
    if destination is not None:
        if hasattr(destination, "write"):
            destination.write(text)
        else:
            Path(destination).write_text(text, encoding="utf-8")
    return text


def bundled_scenario(name: str) -> Scenario:
    """One of the scenarios shipped with the package (``fig1`` or ``fig3``)."""
    if name not in BUNDLED:
        raise KeyError(f"unknown bundled scenario {name!r}; choose from {', '.join(BUNDLED)}")
    text = resources.files(__package__).joinpath("scenarios", f"{name}.yaml").read_text(encoding="utf-8")
    return load_scenario(io.StringIO(text))

