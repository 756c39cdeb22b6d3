"""Protocol messages, check records and the replayable transcript."""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Iterable


class CheckId(str, enum.Enum):
    A4_COUNTS = "A4-counts"
    A4_MSIZE = "A4-Msize"
    B6_LSIZE = "B6-Lsize"
    B6_LALLLIES = "B6-LallLies"
    B91_CODEWORD = "B9.1-codeword"
    B92_SIZES = "B9.2-sizes"
    B93_NOTYPEB = "B9.3-noTypeB"
    B94_ALPHASTATES = "B9.4-alphaStates"


# Checks that never use a statistical tolerance.
EXACT_CHECKS = frozenset(
    {CheckId.A4_MSIZE, CheckId.B6_LALLLIES, CheckId.B91_CODEWORD, CheckId.B93_NOTYPEB, CheckId.B94_ALPHASTATES}
)
TOLERANCE_CHECKS = frozenset({CheckId.B6_LSIZE, CheckId.B92_SIZES})


@dataclass(frozen=True)
class CheckRecord:
    check_id: CheckId
    party: str
    observed: Any
    expected: Any
    tolerance: Any
    passed: bool
    detail: str = ""

    def payload(self) -> dict:
        return {
            "check_id": self.check_id.value,
            "party": self.party,
            "observed": self.observed,
            "expected": self.expected,
            "tolerance": self.tolerance,
            "verdict": "pass" if self.passed else "fail",
            "detail": self.detail,
        }


# Messages -------------------------------------------------------------------------


@dataclass(frozen=True)
class BetaTransfer:
    handles: tuple[int, ...]

    def payload(self) -> dict:
        return {"handles": list(self.handles)}


@dataclass(frozen=True)
class AnnounceResults:
    results: tuple[tuple[int, int], ...]

    def payload(self) -> dict:
        return {"results": [list(r) for r in self.results]}


@dataclass(frozen=True)
class AnnounceL:
    L: frozenset[int]

    def payload(self) -> dict:
        return {"L": sorted(self.L)}


@dataclass(frozen=True)
class AnnounceF:
    f: int

    def payload(self) -> dict:
        return {"f": self.f}


@dataclass(frozen=True)
class AnnounceNU:
    N: frozenset[int]
    U: frozenset[int]

    def payload(self) -> dict:
        return {"N": sorted(self.N), "U": sorted(self.U)}


@dataclass(frozen=True)
class AlphaTransfer:
    handles: tuple[int, ...]

    def payload(self) -> dict:
        return {"handles": list(self.handles)}


@dataclass(frozen=True)
class Abort:
    check_id: CheckId

    def payload(self) -> dict:
        return {"check_id": self.check_id.value}


# Outcomes -------------------------------------------------------------------------


@dataclass(frozen=True)
class Completed:
    c: int
    alice_c: int
    bob_c: int

    completed = True

    def payload(self) -> dict:
        return {"status": "completed", "c": self.c, "alice_c": self.alice_c, "bob_c": self.bob_c}


@dataclass(frozen=True)
class Aborted:
    check_id: CheckId
    by: str

    completed = False

    def payload(self) -> dict:
        return {"status": "aborted", "check_id": self.check_id.value, "by": self.by}


Outcome = Completed | Aborted


# Transcript -------------------------------------------------------------------------


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def digest(payload: Any) -> str:
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()[:16]


@dataclass
class TranscriptEntry:
    step: str
    sender: str
    kind: str
    name: str
    payload: dict

    def as_dict(self) -> dict:
        out = {"step": self.step, "sender": self.sender, "kind": self.kind, "name": self.name, "digest": digest(self.payload)}
        if self.kind == "check":
            out.update(
                check_id=self.payload["check_id"],
                verdict=self.payload["verdict"],
                observed=self.payload["observed"],
                expected=self.payload["expected"],
            )
        return out

    def line(self) -> str:
        head = f"[{self.step}] {self.sender} {self.kind} {self.name}"
        if self.kind == "check":
            p = self.payload
            return f"{head} {p['verdict']} observed={canonical_json(p['observed'])} expected={canonical_json(p['expected'])}"
        return f"{head} digest={digest(self.payload)}"


@dataclass
class Transcript:
    entries: list[TranscriptEntry] = field(default_factory=list)
    outcome: Outcome | None = None

    def message(self, step: str, sender: str, msg) -> None:
        self.entries.append(TranscriptEntry(step, sender, "message", type(msg).__name__, msg.payload()))

    def check(self, step: str, record: CheckRecord) -> None:
        self.entries.append(TranscriptEntry(step, record.party, "check", record.check_id.value, record.payload()))

    def finish(self, step: str, outcome: Outcome) -> None:
        self.outcome = outcome
        self.entries.append(TranscriptEntry(step, "-", "outcome", type(outcome).__name__, outcome.payload()))

    @property
    def checks(self) -> list[dict]:
        return [e.payload for e in self.entries if e.kind == "check"]

    def find(self, name: str) -> dict | None:
        for e in self.entries:
            if e.name == name:
                return e.payload
        return None

    def set_sizes(self) -> dict[str, int] | None:
        """|U|, |L|, |N|, |M| as announced by Alice, when the run got that far."""
        nu = self.find("AnnounceNU")
        lmsg = self.find("AnnounceL")
        if nu is None or lmsg is None:
            return None
        nl, nn = len(lmsg["L"]), len(nu["N"])
        return {"U": len(nu["U"]), "L": nl, "N": nn, "M": nl + nn}

    def lines(self) -> list[str]:
        return [e.line() for e in self.entries]

    def to_text(self) -> str:
        return "\n".join(self.lines()) + "\n"

    def to_json(self) -> list[dict]:
        return [e.as_dict() for e in self.entries]

    def full_digest(self) -> str:
        return digest([[e.step, e.sender, e.kind, e.name, e.payload] for e in self.entries])


def records_passed(records: Iterable[CheckRecord]) -> bool:
    return all(r.passed for r in records)
