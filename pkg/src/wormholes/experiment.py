"""Run experiment files and render deterministic reports."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from importlib import resources

from .analysis import distance_bounded, entropy_scan
from .config import ConfigError, ExperimentConfig, Line, parse_config
from .defects import DefectEngine, DefectError
from .frame import FrameError, LogicalAction
from .lattice import build
from .protocols import ProtocolError, needle_measure

BUNDLED = ("braid_cnot", "needle_cz", "stitch_cx", "twist_flip")


class ExperimentError(RuntimeError):
    pass


# ---- gate table ------------------------------------------------------------------

def _mat(rows: str) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(int(ch) for ch in row) for row in rows.split())


# Rows are images of X1..Xm, Z1..Zm over the same basis.
GATES_1 = {"I": _mat("10 01"), "H": _mat("01 10"), "S": _mat("11 01")}
GATES_2 = {
    "I": _mat("1000 0100 0010 0001"),
    "CZ": _mat("1001 0110 0010 0001"),
    "CNOT": _mat("1100 0100 0010 0011"),
    "SWAP": _mat("0100 1000 0001 0010"),
}


def involved_qubits(action: LogicalAction) -> list[int]:
    k, m = action.k, action.matrix
    out = set()
    for q in range(k):
        for row in (q, k + q):
            unit = tuple(1 if j == row else 0 for j in range(2 * k))
            if m[row] != unit:
                out.add(q)
                out.update(j % k for j, bit in enumerate(m[row]) if bit)
    return sorted(out)


def restrict(action: LogicalAction, qubits: list[int]) -> tuple[tuple[int, ...], ...]:
    k = action.k
    idx = list(qubits) + [k + q for q in qubits]
    return tuple(tuple(action.matrix[r][c] for c in idx) for r in idx)


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple[str, ...]
    matrix: tuple[tuple[int, ...], ...] = ()

    def __str__(self) -> str:
        if self.name.startswith("unrecognized"):
            return self.name
        if not self.qubits:
            return self.name
        sep = " -> " if self.name in ("CNOT", "CX") else ", "
        return f"{self.name}({sep.join(self.qubits)})"


def identify_gate(action: LogicalAction, labels: list[str]) -> Gate:
    """Name a logical action by its symplectic matrix on the qubits it touches.

    For CNOT the qubits are listed control first.  A controlled-X that
    involves a wormhole qubit (label starting with ``W``) is reported as CX.
    """
    qs = involved_qubits(action)
    sub = restrict(action, qs)
    names = [labels[q] for q in qs]
    if not qs:
        return Gate("I", ())
    if len(qs) == 1:
        for name, mat in GATES_1.items():
            if sub == mat:
                return Gate(name, tuple(names), sub)
    if len(qs) == 2:
        for order in ((0, 1), (1, 0)):
            perm = [order[0], order[1], 2 + order[0], 2 + order[1]]
            view = tuple(tuple(sub[r][c] for c in perm) for r in perm)
            for name, mat in GATES_2.items():
                if view == mat:
                    if name == "CNOT" and any(n.startswith("W") for n in names):
                        name = "CX"
                    return Gate(name, tuple(names[i] for i in order), sub)
    text = "/".join("".join(str(v) for v in row) for row in sub)
    return Gate(f"unrecognized: {text}", tuple(names), sub)


# ---- running ---------------------------------------------------------------------

@dataclass
class Outcome:
    config: ExperimentConfig
    script: list[str] = field(default_factory=list)
    gates: list[tuple[int, str, Gate]] = field(default_factory=list)
    actions: list[LogicalAction] = field(default_factory=list)
    sections: list[tuple[str, list[str]]] = field(default_factory=list)
    checks: list[tuple[bool, str]] = field(default_factory=list)
    engine: DefectEngine | None = None

    @property
    def passed(self) -> bool:
        return all(ok for ok, _ in self.checks)


def _distance_line(engine, w_max: int):
    d = distance_bounded(engine.frame, w_max)
    return d, f"d = {d} (searched up to weight {w_max})"


def _kv(rest: list[str], key: str, default=None):
    for tok in rest:
        if tok.startswith(key + "="):
            return tok.split("=", 1)[1]
    return default


def run_experiment(config: ExperimentConfig, source=None) -> Outcome:
    """Execute ``config`` step by step.  ``source`` overrides the forced +1 used by deformations."""
    lat, frame = build(config.L, config.layout)
    engine = DefectEngine(lat, frame, 1 if source is None else source)
    rng = random.Random(config.seed)
    out = Outcome(config, engine=engine)
    last_distance = None
    last_transport: list[str] | None = None
    for step, line in enumerate(config.lines, start=1):
        a = line.args
        try:
            if line.verb == "analyze":
                kind = a["kind"]
                if kind == "logical_action":
                    rows = [f"[{i}] {txt}: {g}" for i, txt, g in out.gates] or ["(no gate steps)"]
                    out.sections.append(("logical action", rows))
                elif kind == "distance":
                    w = int(_kv(a["rest"], "wmax", "4"))
                    last_distance, row = _distance_line(engine, w)
                    out.sections.append(("distance", [row]))
                elif kind == "entropy":
                    shapes = _kv(a["rest"], "shapes", "1x3,2x2,1x4,2x3,1x5,2x4")
                    pairs = [tuple(int(v) for v in s.split("x")) for s in shapes.split(",")]
                    rows = entropy_scan(config.L, pairs, config.layout)
                    out.sections.append(("entropy", [r.line() for r in rows]))
                elif kind == "transport":
                    charge, start, mouths = _transport_args(a["rest"], line)
                    _op, exc = engine.transport_anyon(charge, start, mouths)
                    last_transport = [e.charge for e in exc]
                    rows = [f"{charge} from {start} via {','.join(mouths)}:"]
                    rows += [f"  {e.charge} at {e.label}" for e in exc]
                    out.sections.append(("transport", rows))
                elif kind == "dump":
                    out.sections.append(("frame", engine.frame.dump().splitlines()))
                continue
            if line.verb == "expect":
                out.checks.append(_expect(line, engine, out, last_distance, last_transport))
                continue
            out.script.append(_apply(line, engine, out, rng))
        except (DefectError, ProtocolError) as e:
            raise ExperimentError(f"step {step} (line {line.number}): {e}") from e
        except FrameError as e:
            raise ExperimentError(f"step {step} (line {line.number}): {e}\n{engine.frame.dump()}") from e
    return out


def _transport_args(rest, line: Line):
    # e from (r,c) via W1.mouthA[,W2.mouthB]
    try:
        charge = rest[0]
        i = rest.index("from")
        j = rest.index("via")
        cell = "".join(rest[i + 1:j]).strip("()").split(",")
        return charge, (int(cell[0]), int(cell[1])), rest[j + 1].split(",")
    except (ValueError, IndexError):
        raise ConfigError(line.number, 1, "expected: analyze transport e|m from (r,c) via W1.mouthA") from None


def _apply(line: Line, engine: DefectEngine, out: Outcome, rng: random.Random) -> str:
    a, v = line.args, line.verb
    text = line.text()
    if v == "puncture":
        pid = engine.create_puncture(a["region"], a["type"])
        return f"{text} -> {pid}"
    if v == "twistline":
        return f"{text} -> {engine.create_twist_line(a['start'], a['end'])}"
    if v == "wormhole":
        wid = engine.create_wormhole(a["mouth_a"], a["mouth_b"], a["pairing"], a["sink"])
        return f"{text} -> {wid}"
    _known(engine, a["id"], line)
    if v == "move":
        engine.move_puncture(a["id"], a["direction"])
    elif v == "walk":
        engine.walk(a["id"], a["cell"])
    elif v in ("braid", "stitch"):
        labels = list(engine.labels)
        if v == "braid":
            action = engine.braid(a["id"], a["target"])
        else:
            action = engine.stitch(a["id"], a["wormhole"], a["sink"])
        out.actions.append(action)
        out.gates.append((len(out.script) + 1, text, identify_gate(action, labels)))
    elif v == "measure":
        src = a["outcome"] if a["outcome"] is not None else rng
        res = needle_measure(engine, a["id"], a["basis"], src)
        return f"{text} -> {res:+d}"
    return text


def _known(engine: DefectEngine, did: str, line: Line) -> None:
    if did not in engine.defects.ids():
        raise ConfigError(line.number, line.text().find(did) + 1, f"undeclared defect id {did!r}")


def _expect(line: Line, engine: DefectEngine, out: Outcome, last_distance, last_transport):
    what, rest = line.args["what"], line.args["rest"]
    text = line.text()
    if what == "gate":
        got = out.gates[-1][2].name if out.gates else "none"
        return got == rest[0], f"{text} (got {got})"
    if what == "type":
        p = engine.defects.punctures.get(rest[0])
        got = p.type if p is not None else "missing"
        return got == rest[1], f"{text} (got {got})"
    if what == "k":
        return engine.frame.k == int(rest[0]), f"{text} (got {engine.frame.k})"
    if what == "distance":
        got = last_distance.value if last_distance is not None else None
        return got == int(rest[0]), f"{text} (got {got})"
    if what == "transport":
        got = ",".join(last_transport or [])
        return got == rest[0], f"{text} (got {got or 'none'})"
    raise ConfigError(line.number, 8, f"unknown expectation {what!r}")


# ---- reports -----------------------------------------------------------------------

def render_report(out: Outcome) -> str:
    cfg, eng = out.config, out.engine
    lines = [f"experiment {cfg.name or '-'}",
             f"lattice {cfg.layout} L={cfg.L} n={eng.lat.n} seed={cfg.seed}",
             "", "script:"]
    lines += [f"  [{i}] {s}" for i, s in enumerate(out.script, start=1)] or ["  (empty)"]
    lines += ["", "defects:"]
    defects = []
    for pid, p in sorted(eng.defects.punctures.items()):
        defects.append(f"  {pid} {p.type} {p.region().literal()}")
    for tid, t in sorted(eng.defects.twist_lines.items()):
        (r0, c0), (r1, c1) = t.start, t.end
        defects.append(f"  {tid} twistline ({r0},{c0})->({r1},{c1}) pairs={len(t.pairs)}")
    for wid, w in sorted(eng.defects.wormholes.items()):
        defects.append(f"  {wid} wormhole{' sink' if w.sink else ''} "
                       f"mouthA={w.mouth_a.literal()} mouthB={w.mouth_b.literal()}")
    lines += defects or ["  (none)"]
    lines += ["", f"logical qubits: k={eng.frame.k} [{' '.join(eng.labels)}]", "", "log:"]
    summary = eng.log.summary()
    lines += [f"  {s}" for s in summary.splitlines()] if summary else ["  (empty)"]
    for title, rows in out.sections:
        lines += ["", f"{title}:"] + [f"  {r}" for r in rows]
    if out.checks:
        lines += ["", "assertions:"]
        lines += [f"  {'PASS' if ok else 'FAIL'} {msg}" for ok, msg in out.checks]
    lines += ["", f"status: {'PASS' if out.passed else 'FAIL'}"]
    return "\n".join(lines) + "\n"


def sidecar(out: Outcome) -> str:
    cfg, eng = out.config, out.engine
    data = {
        "experiment": cfg.name,
        "lattice": {"layout": cfg.layout, "L": cfg.L, "n": eng.lat.n},
        "seed": cfg.seed,
        "script": out.script,
        "k": eng.frame.k,
        "labels": list(eng.labels),
        "gates": [{"step": i, "op": txt, "gate": g.name, "qubits": list(g.qubits),
                   "matrix": ["".join(map(str, r)) for r in g.matrix]} for i, txt, g in out.gates],
        "assertions": [{"ok": ok, "text": msg} for ok, msg in out.checks],
        "passed": out.passed,
    }
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


# ---- bundled experiments -----------------------------------------------------------

def bundled_text(name: str) -> str:
    return resources.files("wormholes").joinpath("experiments", f"{name}.exp").read_text("utf-8")


def load_bundled(name: str) -> ExperimentConfig:
    return parse_config(bundled_text(name), name=name)


def verify_all() -> tuple[str, bool]:
    parts, ok = [], True
    for name in BUNDLED:
        out = run_experiment(load_bundled(name))
        parts.append(render_report(out))
        ok &= out.passed
    parts.append(f"verify-all: {'PASS' if ok else 'FAIL'} ({len(BUNDLED)} experiments)\n")
    return "\n".join(parts), ok
