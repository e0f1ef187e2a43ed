"""IPC classification codes: parsing, validation, and level truncation.

An IPC code is hierarchical: section (one letter), class (two digits),
subclass (one letter), and an optional group written ``NN/NN``.  Example:
``G06F 17/30`` is section G, class 06, subclass F, group 17/30.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

LEVELS = ("section", "class", "subclass", "group")

_IPC_RE = re.compile(r"^([A-HY])(\d{2})([A-Z])(?:\s*(\d{1,4})/(\d{1,6}))?$")


@dataclass(frozen=True)
class IpcCode:
    raw: str
    section: str
    class_: str
    subclass: str
    group: str | None = None

    @classmethod
    def parse(cls, text: str) -> "IpcCode":
        """Parse a code string; raises ValueError on malformed input."""
        m = _IPC_RE.match(text.strip())
        if m is None:
            raise ValueError(f"malformed IPC code: {text!r}")
        section, class_, subclass, g1, g2 = m.groups()
        group = f"{g1}/{g2}" if g1 is not None else None
        return cls(raw=text.strip(), section=section, class_=class_,
                   subclass=subclass, group=group)

    def canonical(self) -> str:
        """Normalized string form: subclass glued, one space before group."""
        base = f"{self.section}{self.class_}{self.subclass}"
        return f"{base} {self.group}" if self.group else base

    def truncate(self, level: str) -> str:
        """Code string cut to the given hierarchy level.

        Truncation never invents detail: asking for ``group`` on a code
        that has none returns the subclass form.  Idempotent per level.
        """
        if level == "section":
            return self.section
        if level == "class":
            return self.section + self.class_
        if level == "subclass":
            return f"{self.section}{self.class_}{self.subclass}"
        if level == "group":
            return self.canonical()
        raise ValueError(f"unknown IPC level: {level!r}")


def is_valid_ipc(text: str) -> bool:
    return _IPC_RE.match(text.strip()) is not None


def truncate_code(text: str, level: str) -> str:
    """Truncate an arbitrary code string to a hierarchy level.

    Accepts already-truncated inputs (bare sections like ``G`` or classes
    like ``G06``) so repeated truncation is stable.
    """
    if level not in LEVELS:
        raise ValueError(f"unknown IPC level: {level!r}")
    s = text.strip()
    if _IPC_RE.match(s):
        return IpcCode.parse(s).truncate(level)
    # partial forms produced by earlier truncation
    if re.match(r"^[A-HY]$", s):
        return s[: 1]
    if re.match(r"^[A-HY]\d{2}$", s):
        return s if level != "section" else s[:1]
    raise ValueError(f"malformed IPC code: {text!r}")
