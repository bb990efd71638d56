"""User/system dialogue acts and summary actions."""

from __future__ import annotations

import re
from dataclasses import dataclass

ACT_TYPES = ("inform", "request", "confirm", "select", "affirm", "negate", "bye", "hello",
             "repeat", "reqalts")
_NEEDS_SLOT = {"inform", "request", "confirm", "select"}
_NEEDS_VALUE = {"inform", "confirm", "select"}

DONTCARE = "dontcare"


@dataclass(frozen=True)
class DialogueAct:
    """A dialogue act such as ``inform(food=thai)``.

    ``alt`` carries the second value of a ``select``; ``answers`` carries the
    informable slot values attached to a system ``inform`` that offers an entity.
    """

    act: str
    slot: str | None = None
    value: str | None = None
    alt: str | None = None
    answers: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if self.act not in ACT_TYPES:
            raise ValueError(f"unknown act type {self.act!r}")
        if self.act in _NEEDS_SLOT and self.slot is None:
            raise ValueError(f"{self.act} needs a slot")
        if self.act in _NEEDS_VALUE and self.value is None:
            raise ValueError(f"{self.act} needs a value")

    def __str__(self):
        if self.slot is None:
            return f"{self.act}()"
        if self.value is None:
            return f"{self.act}({self.slot})"
        body = f"{self.slot}={self.value}"
        if self.alt is not None:
            body += f"|{self.alt}"
        for s, v in self.answers:
            body += f",{s}={v}"
        return f"{self.act}({body})"

    def to_dict(self) -> dict:
        d = {"act": self.act}
        if self.slot is not None:
            d["slot"] = self.slot
        if self.value is not None:
            d["value"] = self.value
        if self.alt is not None:
            d["alt"] = self.alt
        if self.answers:
            d["answers"] = [list(a) for a in self.answers]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DialogueAct":
        return cls(d["act"], d.get("slot"), d.get("value"), d.get("alt"),
                   tuple(tuple(a) for a in d.get("answers", ())))


_ACT_RE = re.compile(r"^\s*(\w+)\s*\(\s*([^)]*?)\s*\)\s*$")


def parse_act(text: str) -> DialogueAct:
    """Parse the plain-text grammar ``inform(food=thai)``, ``request(phone)``, ``bye()``."""
    m = _ACT_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse dialogue act {text!r}")
    act, body = m.group(1), m.group(2)
    if not body:
        return DialogueAct(act)
    if "=" not in body:
        return DialogueAct(act, body.strip())
    slot, value = (p.strip() for p in body.split("=", 1))
    alt = None
    if "|" in value:
        value, alt = (p.strip() for p in value.split("|", 1))
    return DialogueAct(act, slot, value, alt)


SUMMARY_KINDS = ("request", "confirm", "select", "inform", "repeat", "bye")
SLOT_KINDS = ("request", "confirm", "select")


@dataclass(frozen=True, order=True)
class SummaryAction:
    kind: str
    slot: str | None = None

    def __post_init__(self):
        if self.kind not in SUMMARY_KINDS:
            raise ValueError(f"unknown summary action kind {self.kind!r}")
        if (self.kind in SLOT_KINDS) != (self.slot is not None):
            raise ValueError(f"summary action {self.kind!r} slot mismatch: {self.slot!r}")

    def __str__(self):
        return f"{self.kind}({self.slot})" if self.slot else self.kind

    @classmethod
    def parse(cls, text: str) -> "SummaryAction":
        m = re.match(r"^(\w+)(?:\((\w+)\))?$", text.strip())
        if not m:
            raise ValueError(f"cannot parse summary action {text!r}")
        return cls(m.group(1), m.group(2))
