"""Line-oriented experiment files.

::

    lattice toric L=8
    seed 42
    puncture smooth vertices:(1,1)
    braid P1 around P3
    analyze logical_action
    expect gate CNOT

``#`` starts a comment.  Printing a parsed config gives the normalized text
(comments and blank lines dropped, single spaces, canonical region literals).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .lattice import LatticeError, Region, parse_region

DIRECTIONS = ("up", "down", "left", "right")
_CELL = r"\(\s*-?\d+\s*,\s*-?\d+\s*\)"
_ID = re.compile(r"^[A-Z]\d+$")


class ConfigError(ValueError):
    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line, self.column = line, column


@dataclass(frozen=True)
class Line:
    number: int
    verb: str
    args: dict

    def text(self) -> str:
        a = self.args
        v = self.verb
        if v == "puncture":
            return f"puncture {a['type']} {a['region'].literal()}"
        if v == "twistline":
            (r0, c0), (r1, c1) = a["start"], a["end"]
            return f"twistline ({r0},{c0})->({r1},{c1})"
        if v == "wormhole":
            out = f"wormhole mouthA={a['mouth_a'].literal()} mouthB={a['mouth_b'].literal()}"
            if a["pairing"] is not None:
                out += " pairing=" + ",".join(f"{e}:{f}" for e, f in a["pairing"])
            return out + (" sink" if a["sink"] else "")
        if v == "move":
            return f"move {a['id']} {a['direction']}"
        if v == "walk":
            return f"walk {a['id']} ({a['cell'][0]},{a['cell'][1]})"
        if v == "braid":
            return f"braid {a['id']} around {a['target']}"
        if v == "stitch":
            return f"stitch {a['id']} through {a['wormhole']} via {a['sink']}"
        if v == "measure":
            out = f"measure {a['id']} {a['basis']}"
            return out + (f" outcome={a['outcome']:+d}" if a["outcome"] is not None else "")
        if v == "analyze":
            return " ".join(["analyze", a["kind"]] + a["rest"])
        if v == "expect":
            return " ".join(["expect", a["what"]] + a["rest"])
        raise AssertionError(v)


@dataclass
class ExperimentConfig:
    L: int = 8
    layout: str = "toric"
    seed: int = 0
    name: str = ""
    lines: list[Line] = field(default_factory=list)

    @property
    def script(self) -> list[Line]:
        return [ln for ln in self.lines if ln.verb not in ("analyze", "expect")]

    @property
    def analyses(self) -> list[Line]:
        return [ln for ln in self.lines if ln.verb == "analyze"]

    @property
    def expects(self) -> list[Line]:
        return [ln for ln in self.lines if ln.verb == "expect"]

    def text(self) -> str:
        out = [f"lattice {self.layout} L={self.L}", f"seed {self.seed}"]
        out += [ln.text() for ln in self.lines]
        return "\n".join(out) + "\n"


def normalize(text: str) -> str:
    return parse_config(text).text()


# ---- parsing ---------------------------------------------------------------------

class _Cursor:
    def __init__(self, raw: str, number: int):
        self.raw, self.number = raw, number

    def fail(self, token: str, message: str):
        col = self.raw.find(token) + 1 if token and token in self.raw else 1
        raise ConfigError(self.number, col, message)


def _cell(text: str, cur: _Cursor) -> tuple[int, int]:
    m = re.fullmatch(r"\(\s*(-?\d+)\s*,\s*(-?\d+)\s*\)", text.strip())
    if not m:
        cur.fail(text, f"malformed cell {text!r}")
    return int(m.group(1)), int(m.group(2))


def _region(text: str, cur: _Cursor) -> Region:
    try:
        return parse_region(text)
    except LatticeError as e:
        cur.fail(text, str(e))


def _defect_id(tok: str, cur: _Cursor) -> str:
    if not _ID.match(tok):
        cur.fail(tok, f"expected a defect id, got {tok!r}")
    return tok


def _parse_op(verb: str, rest: str, cur: _Cursor) -> dict:
    toks = rest.split()
    if verb == "puncture":
        if not toks or toks[0] not in ("smooth", "rough"):
            cur.fail(toks[0] if toks else verb, "puncture type must be smooth or rough")
        return {"type": toks[0], "region": _region(rest.split(None, 1)[1] if len(toks) > 1 else "", cur)}
    if verb == "twistline":
        m = re.fullmatch(rf"\s*({_CELL})\s*->\s*({_CELL})\s*", rest)
        if not m:
            cur.fail(rest.strip(), "expected (r,c)->(r,c)")
        return {"start": _cell(m.group(1), cur), "end": _cell(m.group(2), cur)}
    if verb == "wormhole":
        m = re.fullmatch(r"\s*mouthA=(\S+)\s+mouthB=(\S+)((?:\s+\S+)*)\s*", rest)
        if not m:
            cur.fail(rest.strip(), "expected mouthA=<region> mouthB=<region>")
        out = {"mouth_a": _region(m.group(1), cur), "mouth_b": _region(m.group(2), cur),
               "pairing": None, "sink": False}
        for tok in m.group(3).split():
            if tok == "sink":
                out["sink"] = True
            elif tok == "pairing=default":
                pass
            elif tok.startswith("pairing="):
                pairs = []
                for item in tok[len("pairing="):].split(","):
                    e, _, f = item.partition(":")
                    if not (e.isdigit() and f.isdigit()):
                        cur.fail(item, f"malformed pairing entry {item!r}")
                    pairs.append((int(e), int(f)))
                out["pairing"] = pairs
            else:
                cur.fail(tok, f"unknown wormhole option {tok!r}")
        return out
    if verb == "move":
        if len(toks) != 2 or toks[1] not in DIRECTIONS:
            cur.fail(toks[-1] if toks else verb, "expected: move <id> up|down|left|right")
        return {"id": _defect_id(toks[0], cur), "direction": toks[1]}
    if verb == "walk":
        if len(toks) < 2:
            cur.fail(verb, "expected: walk <id> (r,c)")
        return {"id": _defect_id(toks[0], cur), "cell": _cell(rest.split(None, 1)[1], cur)}
    if verb == "braid":
        if len(toks) != 3 or toks[1] != "around":
            cur.fail(verb, "expected: braid <id> around <target>")
        return {"id": _defect_id(toks[0], cur), "target": toks[2]}
    if verb == "stitch":
        if len(toks) != 5 or toks[1] != "through" or toks[3] != "via":
            cur.fail(verb, "expected: stitch <id> through <wormhole> via <sink>")
        return {"id": _defect_id(toks[0], cur), "wormhole": _defect_id(toks[2], cur),
                "sink": _defect_id(toks[4], cur)}
    if verb == "measure":
        if len(toks) not in (2, 3) or toks[1] not in ("X", "Y", "Z"):
            cur.fail(verb, "expected: measure <id> X|Z [outcome=+1|-1]")
        outcome = None
        if len(toks) == 3:
            if toks[2] not in ("outcome=+1", "outcome=-1", "outcome=1"):
                cur.fail(toks[2], f"bad outcome {toks[2]!r}")
            outcome = -1 if toks[2].endswith("-1") else 1
        return {"id": _defect_id(toks[0], cur), "basis": toks[1], "outcome": outcome}
    cur.fail(verb, f"unknown keyword {verb!r}")


ANALYSES = ("logical_action", "distance", "entropy", "transport", "dump")


def parse_config(text: str, name: str = "") -> ExperimentConfig:
    cfg = ExperimentConfig(name=name)
    seen_lattice = False
    for number, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        cur = _Cursor(raw, number)
        verb, _, rest = body.partition(" ")
        if verb == "lattice":
            m = re.fullmatch(r"(toric|planar)\s+L=(\d+)", rest.strip())
            if not m:
                cur.fail(rest.strip() or verb, "expected: lattice toric|planar L=<int>")
            cfg.layout, cfg.L = m.group(1), int(m.group(2))
            seen_lattice = True
        elif verb == "seed":
            if not rest.strip().lstrip("-").isdigit():
                cur.fail(rest.strip() or verb, "seed must be an integer")
            cfg.seed = int(rest)
        elif verb == "analyze":
            toks = rest.split()
            if not toks or toks[0] not in ANALYSES:
                cur.fail(toks[0] if toks else verb, f"unknown analysis; expected one of {', '.join(ANALYSES)}")
            cfg.lines.append(Line(number, "analyze", {"kind": toks[0], "rest": toks[1:]}))
        elif verb == "expect":
            toks = rest.split()
            if not toks:
                cur.fail(verb, "empty expectation")
            cfg.lines.append(Line(number, "expect", {"what": toks[0], "rest": toks[1:]}))
        else:
            cfg.lines.append(Line(number, verb, _parse_op(verb, rest, cur)))
    if not seen_lattice:
        raise ConfigError(1, 1, "missing 'lattice' line")
    return cfg
