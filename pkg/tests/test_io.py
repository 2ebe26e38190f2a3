"""Round-trip and error-reporting tests for the text file formats."""

import numpy as np
import pytest

from seriation import Permutation
from seriation.duplication import AssignmentMatrix, DuplicationCounts
from seriation.generators import gen_banded
from seriation.io import (
    ParseError,
    read_assignment,
    read_counts,
    read_permutation,
    read_similarity,
    write_assignment,
    write_counts,
    write_permutation,
    write_similarity,
)


class TestSimilarityFormat:
    def test_round_trip(self, tmp_path):
        A = gen_banded(25, 4, s_ratio=1.0, seed=6).A
        p = tmp_path / "a.sim"
        write_similarity(p, A)
        B = read_similarity(p)
        assert B.n == A.n
        assert np.array_equal(B.dense(), A.dense())

    def test_round_trip_preserves_float_bits(self, tmp_path):
        from seriation import as_similarity_matrix

        rng = np.random.default_rng(0)
        M = rng.random((6, 6))
        M = M + M.T
        A = as_similarity_matrix(M)
        p = tmp_path / "a.sim"
        write_similarity(p, A)
        B = read_similarity(p)
        assert np.array_equal(B.val, A.val)  # repr round-trips exactly

    def test_write_is_byte_deterministic(self, tmp_path):
        A = gen_banded(12, 3, seed=1).A
        p1, p2 = tmp_path / "x1", tmp_path / "x2"
        write_similarity(p1, A)
        write_similarity(p2, A)
        assert p1.read_bytes() == p2.read_bytes()

    def test_empty_file(self, tmp_path):
        p = tmp_path / "bad"
        p.write_text("")
        with pytest.raises(ParseError, match="empty"):
            read_similarity(p)

    @pytest.mark.parametrize(
        "text,lineno",
        [
            ("2\n", 1),  # short header
            ("a b\n", 1),  # non-integer header
            ("2 1\n0 0\n", 2),  # short triple
            ("2 1\nx 0 1.0\n", 2),  # bad index
            ("2 1\n0 0 oops\n", 2),  # bad value
            ("2 1\n1 0 1.0\n", 2),  # i > j
            ("2 1\n0 5 1.0\n", 2),  # j out of range
            ("2 1\n0 0 1.0\n0 1 1.0\n", 3),  # too many triples
            ("2 2\n0 0 1.0\n", 2),  # too few triples
        ],
    )
    def test_malformed_reports_line(self, tmp_path, text, lineno):
        p = tmp_path / "bad"
        p.write_text(text)
        with pytest.raises(ParseError) as err:
            read_similarity(p)
        assert err.value.line == lineno
        assert str(p) in str(err.value)

    def test_semantic_error_becomes_parse_error(self, tmp_path):
        # duplicate entry is caught by matrix validation
        p = tmp_path / "bad"
        p.write_text("2 2\n0 1 1.0\n0 1 2.0\n")
        with pytest.raises(ParseError):
            read_similarity(p)

    def test_blank_lines_ignored(self, tmp_path):
        p = tmp_path / "ok"
        p.write_text("2 1\n\n0 1 2.5\n\n")
        A = read_similarity(p)
        assert A.dense()[0, 1] == 2.5


class TestPermutationFormat:
    def test_round_trip(self, tmp_path):
        perm = Permutation(np.random.default_rng(5).permutation(17))
        p = tmp_path / "perm"
        write_permutation(p, perm)
        back = read_permutation(p)
        assert np.array_equal(back.positions, perm.positions)

    def test_rejects_non_permutation(self, tmp_path):
        p = tmp_path / "bad"
        p.write_text("0\n0\n")
        with pytest.raises(ParseError):
            read_permutation(p)

    def test_rejects_negative(self, tmp_path):
        p = tmp_path / "bad"
        p.write_text("0\n-1\n")
        with pytest.raises(ParseError) as err:
            read_permutation(p)
        assert err.value.line == 2

    def test_rejects_two_per_line(self, tmp_path):
        p = tmp_path / "bad"
        p.write_text("0 1\n")
        with pytest.raises(ParseError):
            read_permutation(p)


class TestCountsFormat:
    def test_round_trip(self, tmp_path):
        counts = DuplicationCounts([3, 1, 2, 1])
        p = tmp_path / "counts"
        write_counts(p, counts)
        back = read_counts(p)
        assert np.array_equal(back.c, counts.c)

    def test_rejects_zero(self, tmp_path):
        p = tmp_path / "bad"
        p.write_text("1\n0\n")
        with pytest.raises(ParseError) as err:
            read_counts(p)
        assert err.value.line == 2

    def test_rejects_empty(self, tmp_path):
        p = tmp_path / "bad"
        p.write_text("\n")
        with pytest.raises(ParseError):
            read_counts(p)


class TestAssignmentFormat:
    def test_round_trip(self, tmp_path):
        Z = AssignmentMatrix([2, 0, 1, 0, 2, 2])
        p = tmp_path / "assign"
        write_assignment(p, Z)
        back = read_assignment(p)
        assert back == Z

    def test_rejects_double_assignment(self, tmp_path):
        p = tmp_path / "bad"
        p.write_text("0 1\n1 2\n")
        with pytest.raises(ParseError, match="assigned twice") as err:
            read_assignment(p)
        assert err.value.line == 2

    def test_rejects_gap(self, tmp_path):
        # positions {0,1,3} leave slot 2 unfilled -> bin_of keeps a -1
        p = tmp_path / "bad"
        p.write_text("0 3\n1\n")
        with pytest.raises(ParseError):
            read_assignment(p)

    def test_rejects_out_of_range(self, tmp_path):
        p = tmp_path / "bad"
        p.write_text("0 9\n1\n")
        with pytest.raises(ParseError, match="out of range"):
            read_assignment(p)

    def test_rejects_non_integer(self, tmp_path):
        p = tmp_path / "bad"
        p.write_text("0 x\n")
        with pytest.raises(ParseError) as err:
            read_assignment(p)
        assert err.value.line == 1
