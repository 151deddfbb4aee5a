"""Tests for ratings, connection-log and bit-string parsing."""

import pytest

from ais.encoding import WILDCARD, BitString, ConnectionRecord, UserProfile, VoteRange
from ais.parsers import (
    ParseError,
    format_pattern,
    format_ratings,
    parse_bitstrings,
    parse_connection_log,
    parse_patterns,
    parse_ratings,
    parse_record_line,
)
from tests.conftest import bits


class TestRatings:
    """Tests for the tab-separated ratings format."""

    def test_parse_groups_votes_by_user(self) -> None:
        """Test profiles are built per user in order of first appearance.

        Given: Interleaved votes of two users
        When: Parsing the file
        Then: Should return one profile per user, first-seen user first
        """
        content = "7\t1\t5\n3\t1\t2\n7\t2\t4\n"
        profiles = parse_ratings(content)

        assert [p.user_id for p in profiles] == [7, 3]
        assert profiles[0].votes == {1: 5, 2: 4}
        assert profiles[1].votes == {1: 2}

    def test_repeated_vote_keeps_last(self) -> None:
        profiles = parse_ratings("1\t1\t2\n1\t1\t4\n")
        assert profiles[0].votes == {1: 4}

    def test_skips_comments_blank_lines_bom_and_crlf(self) -> None:
        """Test tolerated noise around the data lines.

        Given: A file with a BOM, CRLF endings, comments and blank lines
        When: Parsing the file
        Then: Should return only the data lines' votes
        """
        content = "\ufeff# header\r\n\r\n1\t1\t3\r\n  \r\n# trailing\r\n1\t2\t1\r\n"
        profiles = parse_ratings(content)

        assert profiles == [UserProfile(user_id=1, votes={1: 3, 2: 1})]

    @pytest.mark.parametrize(
        "line",
        [
            "1 2 3",  # Spaces instead of tabs
            "1\t2",  # Missing score
            "1\t2\t3.5",  # Non-integer score
            "a\t2\t3",  # Non-integer user
            "1\t2\t3\t4",  # Extra column
        ],
    )
    def test_malformed_line_reports_line_number(self, line: str) -> None:
        """Test malformed lines are rejected with their line number.

        Given: A valid first line and a malformed second line
        When: Parsing the file
        Then: Should raise ParseError naming line 2
        """
        with pytest.raises(ParseError, match="line 2") as info:
            parse_ratings(f"1\t1\t3\n{line}\n")
        assert info.value.line_number == 2

    def test_score_outside_vote_range(self) -> None:
        with pytest.raises(ParseError, match="score 6 outside"):
            parse_ratings("1\t1\t6\n")

    def test_binary_vote_range(self) -> None:
        """Test a configured binary range accepts 0/1 and rejects 2."""
        binary = VoteRange(low=0, high=1)

        assert parse_ratings("1\t1\t1\n1\t2\t0\n", binary)[0].votes == {1: 1, 2: 0}
        with pytest.raises(ParseError):
            parse_ratings("1\t1\t2\n", binary)

    def test_empty_file_has_no_profiles(self) -> None:
        assert parse_ratings("# nothing here\n") == []

    def test_format_round_trips(self) -> None:
        """Test formatted profiles parse back to the same profiles."""
        profiles = [
            UserProfile(user_id=2, votes={5: 1, 3: 4}),
            UserProfile(user_id=9, votes={5: 0}),
        ]
        assert parse_ratings(format_ratings(profiles)) == profiles


class TestConnectionLog:
    """Tests for whitespace-separated connection records."""

    def test_parse_concrete_record(self) -> None:
        parsed = parse_record_line("tcp 10.0.0.1 1234 10.0.0.2 80")

        assert parsed == ConnectionRecord("tcp", "10.0.0.1", 1234, "10.0.0.2", 80)
        assert not parsed.has_wildcards

    def test_parse_wildcards(self) -> None:
        """Test '*' in any field becomes the wildcard token."""
        parsed = parse_record_line("* 10.0.0.1 * * 80")

        assert parsed.protocol is WILDCARD
        assert parsed.source_port is WILDCARD
        assert parsed.dest_ip is WILDCARD
        assert parsed.has_wildcards

    @pytest.mark.parametrize(
        "line,message",
        [
            ("tcp 10.0.0.1 70000 10.0.0.2 80", "port 70000"),
            ("tcp 10.0.0.1 -1 10.0.0.2 80", "invalid port"),
            ("tcp 10.0.0.300 1 10.0.0.2 80", "invalid IP"),
            ("tcp 10.0.0 1 10.0.0.2 80", "invalid IP"),
            ("tcp 10.0.0.1 1 10.0.0.2", "expected 5 fields"),
        ],
    )
    def test_invalid_record_names_line(self, line: str, message: str) -> None:
        """Test invalid fields are rejected with the offending line number.

        Given: A valid record followed by an invalid one
        When: Parsing the log
        Then: Should raise ParseError naming line 3 and the problem
        """
        content = f"# log\nudp 1.2.3.4 53 5.6.7.8 53\n{line}\n"
        with pytest.raises(ParseError, match=message) as info:
            parse_connection_log(content)
        assert info.value.line_number == 3


class TestBitStrings:
    """Tests for bit-string sets."""

    def test_parse_bitstrings(self) -> None:
        assert parse_bitstrings("0101\n1111\n") == [bits("0101"), bits("1111")]

    def test_length_mismatch(self) -> None:
        with pytest.raises(ParseError, match="line 2"):
            parse_bitstrings("0101\n111\n")

    def test_invalid_character(self) -> None:
        with pytest.raises(ParseError, match="not a bit string"):
            parse_bitstrings("0101\n01a1\n")


class TestPatternFiles:
    """Tests for auto-detected self and traffic files."""

    def test_detects_bitstrings(self) -> None:
        patterns = parse_patterns("# self\n0011\n1100\n")
        assert all(isinstance(p, BitString) for p in patterns)

    def test_detects_records(self) -> None:
        patterns = parse_patterns("tcp 1.1.1.1 1 2.2.2.2 2\n")
        assert isinstance(patterns[0], ConnectionRecord)

    def test_empty_file(self) -> None:
        assert parse_patterns("\n# only comments\n") == []

    def test_format_pattern_matches_input_text(self) -> None:
        """Test patterns format back to their input-file text."""
        line = "tcp 10.0.0.1 * 10.0.0.2 80"
        assert format_pattern(parse_record_line(line)) == line
        assert format_pattern(bits("0110")) == "0110"
