"""Text-command channel: the typed stand-in for the voice interface.

Utterances are matched against a small fixed grammar; anything else becomes
an "unknown" intent that the session answers with an explanation rather
than acting on.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

WAKE_PREFIXES = ("hey robot", "robot")


@dataclass(frozen=True)
class TextIntent:
    kind: str            # one of KINDS
    arg: str | None = None

    KINDS = ("start_gesture", "stop_gesture", "next_mode", "room_mode",
             "go_room", "exit_room", "align", "stop_align", "photo",
             "status", "unknown")


def _normalize(text: str) -> str:
    text = text.lower().strip()
    text = re.sub(r"[^\w\s]", " ", text)
    text = re.sub(r"\s+", " ", text).strip()
    for prefix in WAKE_PREFIXES:
        if text.startswith(prefix + " "):
            text = text[len(prefix):].strip()
            break
    return text


def _strip_article(phrase: str) -> str:
    for art in ("the ", "a ", "an "):
        if phrase.startswith(art):
            return phrase[len(art):]
    return phrase


def parse_text(text: str) -> TextIntent:
    t = _normalize(text)
    if not t:
        return TextIntent("unknown", text)

    if "gesture" in t:
        if t.startswith(("start", "begin", "enable", "resume")):
            return TextIntent("start_gesture")
        if t.startswith(("stop", "pause", "disable", "end")):
            return TextIntent("stop_gesture")

    if t == "next mode":
        return TextIntent("next_mode")

    if t in ("room mode", "enter room mode", "start room mode"):
        return TextIntent("room_mode")
    if t in ("exit room mode", "stop room mode", "leave room mode"):
        return TextIntent("exit_room")

    m = re.match(r"(?:go|drive|navigate) to (.+)$", t)
    if m:
        return TextIntent("go_room", _strip_article(m.group(1)))

    if t in ("stop align", "stop alignment", "cancel align", "cancel alignment"):
        return TextIntent("stop_align")
    m = re.match(r"align (?:with )?(.+)$", t)
    if m:
        return TextIntent("align", _strip_article(m.group(1)))

    if re.match(r"take (?:a )?(photo|picture)$", t) or t in ("photo", "picture"):
        return TextIntent("photo")

    if t in ("status", "status report", "where are you", "what mode"):
        return TextIntent("status")

    return TextIntent("unknown", text)
