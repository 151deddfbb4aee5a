"""Parsers and serializers for ratings files, connection logs and bit-string sets."""

import re
from typing import Union

from .encoding import (
    DEFAULT_VOTE_RANGE,
    WILDCARD,
    AttributeString,
    BitString,
    ConnectionRecord,
    UserProfile,
    VoteRange,
    Wildcard,
    is_dotted_quad,
)
from .types import ItemId, Score, UserId

RATING_LINE = re.compile(r"^(-?\d+)\t(-?\d+)\t(-?\d+)$")
BIT_LINE = re.compile(r"^[01]+$")


class ParseError(Exception):
    """Raised when an input file cannot be parsed."""

    def __init__(self, message: str, line_number: int | None = None) -> None:
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


def _content_lines(content: str) -> list[tuple[int, str]]:
    """Numbered non-blank, non-comment lines; tolerates CRLF and a BOM."""
    lines = []
    for number, raw in enumerate(content.lstrip("\ufeff").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        lines.append((number, line))
    return lines


def parse_ratings(
    content: str, vote_range: VoteRange = DEFAULT_VOTE_RANGE
) -> list[UserProfile]:
    """Parse `user_id TAB item_id TAB score` lines into profiles.

    Profiles are ordered by first appearance of their user id; a repeated
    (user, item) pair keeps the last score seen.

    Args:
        content: Ratings file content
        vote_range: Accepted score bounds

    Returns:
        List of user profiles

    Raises:
        ParseError: If a line is malformed or a score is out of range
    """
    votes: dict[UserId, dict[ItemId, Score]] = {}
    for number, line in _content_lines(content):
        match = RATING_LINE.match(line)
        if not match:
            raise ParseError(f"expected 'user<TAB>item<TAB>score': {line!r}", number)
        user_id, item_id, score = (int(group) for group in match.groups())
        if not vote_range.contains(score):
            raise ParseError(
                f"score {score} outside [{vote_range.low}, {vote_range.high}]",
                number,
            )
        votes.setdefault(user_id, {})[item_id] = score

    return [UserProfile(user_id=user_id, votes=v) for user_id, v in votes.items()]


def format_ratings(profiles: list[UserProfile]) -> str:
    """Serialize profiles back to the tab-separated ratings format."""
    lines = [
        f"{profile.user_id}\t{item_id}\t{score}"
        for profile in profiles
        for item_id, score in profile.votes.items()
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def _parse_port(token: str, number: int) -> Union[int, Wildcard]:
    if token == str(WILDCARD):
        return WILDCARD
    if not token.isdigit():
        raise ParseError(f"invalid port {token!r}", number)
    port = int(token)
    if not 0 <= port <= 65535:
        raise ParseError(f"port {port} outside [0, 65535]", number)
    return port


def _parse_ip(token: str, number: int) -> Union[str, Wildcard]:
    if token == str(WILDCARD):
        return WILDCARD
    if not is_dotted_quad(token):
        raise ParseError(f"invalid IP address {token!r}", number)
    return token


def parse_record_line(line: str, number: int = 1) -> ConnectionRecord:
    """Parse one `protocol src_ip src_port dst_ip dst_port` line.

    Raises:
        ParseError: If the field count, an address or a port is invalid
    """
    tokens = line.split()
    if len(tokens) != 5:
        raise ParseError(f"expected 5 fields, got {len(tokens)}", number)
    protocol, source_ip, source_port, dest_ip, dest_port = tokens
    return ConnectionRecord(
        protocol=WILDCARD if protocol == str(WILDCARD) else protocol,
        source_ip=_parse_ip(source_ip, number),
        source_port=_parse_port(source_port, number),
        dest_ip=_parse_ip(dest_ip, number),
        dest_port=_parse_port(dest_port, number),
    )


def parse_connection_log(content: str) -> list[ConnectionRecord]:
    """Parse a whitespace-separated connection log, one record per line."""
    return [parse_record_line(line, number) for number, line in _content_lines(content)]


def parse_bitstrings(content: str) -> list[BitString]:
    """Parse one bit string per line; all strings must share one length."""
    patterns: list[BitString] = []
    for number, line in _content_lines(content):
        if not BIT_LINE.match(line):
            raise ParseError(f"not a bit string: {line!r}", number)
        pattern = BitString.from_text(line)
        if patterns and len(pattern) != len(patterns[0]):
            raise ParseError(
                f"length {len(pattern)} differs from {len(patterns[0])}", number
            )
        patterns.append(pattern)
    return patterns


def parse_patterns(content: str) -> list[AttributeString]:
    """Parse a self or traffic file, detecting bit strings vs connection records.

    A file whose first content line is a bare bit string is read as bit
    strings; anything else is read as a connection log.
    """
    lines = _content_lines(content)
    if not lines:
        return []
    if BIT_LINE.match(lines[0][1]):
        return list(parse_bitstrings(content))
    return list(parse_connection_log(content))


def format_pattern(pattern: AttributeString) -> str:
    """Text form of a pattern as it appears in input files and reports."""
    if isinstance(pattern, (BitString, ConnectionRecord)):
        return str(pattern)
    return " ".join(repr(float(value)) for value in pattern.values)
