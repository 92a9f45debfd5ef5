"""Event text normalization, behaviorally identical to the detector's.

This is a deliberate re-implementation: the exporter and the detector
share only file formats, so each carries its own copy of the rules. The
shared golden file (tests/data/preprocess_golden.tsv at the repository
root) pins both to the same behavior string-for-string; change nothing
here without regenerating agreement on that file.

Rules, in order: lowercase; canonicalize whitespace to single spaces;
substitute MAC-like tokens, absolute paths, IPv4-like addresses, and hex
addresses with space-padded spelled-out placeholders; delete every
character outside [a-z] and space; collapse spaces and trim.
"""

from __future__ import annotations

import re

_MAC_RE = re.compile(r"(?<![0-9a-z:*])[a-z]?[0-9a-f*]{2}(?::[0-9a-f*]{2}){5}(?![0-9a-z:*])")
_PATH_RE = re.compile(r"(?<![\w./\-*])/(?:[^\s/]+/)*[^\s/]+/?")
_IP_RE = re.compile(r"(?<![\d.])(?:\d{1,3}\.){3}\d{1,3}(?!\d)")
_HEX_RE = re.compile(r"\b0x[0-9a-f]+\b|\b(?=[0-9a-f]*\d)(?=[0-9a-f]*[a-f])[0-9a-f]{8,}\b")

_RULES = (
    (_MAC_RE, " mac address "),
    (_PATH_RE, " file path "),
    (_IP_RE, " ip address "),
    (_HEX_RE, " hex address "),
)

_WHITESPACE_RE = re.compile(r"\s+")
_NON_ALPHA_SPACE_RE = re.compile(r"[^a-z ]")


def preprocess(text: str) -> str:
    out = text.lower()
    out = _WHITESPACE_RE.sub(" ", out)
    for pattern, replacement in _RULES:
        out = pattern.sub(replacement, out)
    out = _NON_ALPHA_SPACE_RE.sub("", out)
    return _WHITESPACE_RE.sub(" ", out).strip()
