import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zerostats import zero_ingest as zi
from zerostats.zeta_engine import ZeroSequence, find_riemann_zeros


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_plain_three_values(tmp_path):
    p = _write(tmp_path, "z.txt", "14.134725142\n21.022039639\n25.010857580\n")
    seq = zi.parse_zero_file(zi.ZeroFileSpec(p))
    assert len(seq) == 3 and not seq.signed
    assert seq.max_ordinate == 25.010857580


def test_empty_file(tmp_path):
    p = _write(tmp_path, "e.txt", "")
    assert len(zi.parse_zero_file(zi.ZeroFileSpec(p))) == 0


def test_comments_and_blank_lines(tmp_path):
    p = _write(tmp_path, "c.txt", "# header\n\n1.5\n2.5  # trailing\n\n3.5\n")
    assert np.array_equal(zi.parse_zero_file(zi.ZeroFileSpec(p)).ordinates, [1.5, 2.5, 3.5])


def test_columnar_skip_and_max_rows(tmp_path):
    rows = [f"{k} 7 {v!r}" for k, v in enumerate([-9.5, -3.25, 4.5, 8.75, 10.5, 12.0])]
    p = _write(tmp_path, "t.dat", "\n".join(rows) + "\n")
    seq = zi.parse_zero_file(zi.ZeroFileSpec(p, "columnar", skip_rows=1, max_rows=3, column=3))
    assert seq.signed
    assert np.array_equal(seq.ordinates, [-3.25, 4.5, 8.75])


def test_offset(tmp_path):
    p = _write(tmp_path, "o.txt", "0.25\n0.5\n")
    seq = zi.parse_zero_file(zi.ZeroFileSpec(p, offset=1e6))
    assert np.array_equal(seq.ordinates, [1e6 + 0.25, 1e6 + 0.5])


def test_malformed_line_reported(tmp_path):
    p = _write(tmp_path, "bad.txt", "1.0\n2.0\nabc\n4.0\n")
    with pytest.raises(zi.ZeroFileError) as e:
        zi.parse_zero_file(zi.ZeroFileSpec(p))
    assert e.value.line == 3


def test_decreasing_plain_rejected(tmp_path):
    p = _write(tmp_path, "d.txt", "# c\n1.0\n3.0\n2.0\n")
    with pytest.raises(zi.ZeroFileError) as e:
        zi.parse_zero_file(zi.ZeroFileSpec(p))
    assert e.value.line == 4


def test_column_out_of_range(tmp_path):
    p = _write(tmp_path, "c.dat", "1 2\n3 4\n")
    with pytest.raises(zi.ZeroFileError):
        zi.parse_zero_file(zi.ZeroFileSpec(p, "columnar", column=3))


def test_spec_validation():
    with pytest.raises(ValueError):
        zi.ZeroFileSpec("x", "plain", column=2)
    with pytest.raises(ValueError):
        zi.ZeroFileSpec("x", "csv")
    with pytest.raises(ValueError):
        zi.ZeroFileSpec("x", skip_rows=-1)


def test_split_signed():
    seq = ZeroSequence(np.array([-6.201230, 4.356402, 8.785555]), signed=True)
    pos, neg = zi.split_signed(seq)
    assert np.array_equal(pos.ordinates, [4.356402, 8.785555])
    assert np.array_equal(neg.ordinates, [6.201230])
    allpos = ZeroSequence(np.array([1.0, 2.0]), signed=True)
    p, n = zi.split_signed(allpos)
    assert np.array_equal(p.ordinates, [1.0, 2.0]) and len(n) == 0
    sym = ZeroSequence(np.array([-3.0, 3.0]), signed=True)
    p, n = zi.split_signed(sym)
    assert np.array_equal(p.ordinates, n.ordinates)
    with pytest.raises(ValueError):
        zi.split_signed(ZeroSequence(np.array([1.0])))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6).filter(lambda v: v != 0), max_size=200, unique=True))
def test_split_partitions(values):
    seq = ZeroSequence(np.sort(np.array(values, dtype=float)), signed=True)
    pos, neg = zi.split_signed(seq)
    assert len(pos) + len(neg) == len(seq)


def test_cache_roundtrip_computed():
    seq = find_riemann_zeros(100)
    back = zi.cache_roundtrip(seq)
    assert back == seq and back.signed == seq.signed


def test_cache_roundtrip_empty_and_signed(tmp_path):
    e = ZeroSequence(np.empty(0))
    assert zi.cache_roundtrip(e, tmp_path / "e.zseq") == e
    s = ZeroSequence(np.array([-2.5, 1.0]), signed=True)
    assert zi.cache_roundtrip(s, tmp_path / "s.zseq").signed


def test_cache_mmap(tmp_path):
    seq = find_riemann_zeros(50)
    zi.write_cache(seq, tmp_path / "m.zseq")
    assert zi.read_cache(tmp_path / "m.zseq", mmap=True) == seq


def test_truncated_cache(tmp_path):
    p = tmp_path / "t.zseq"
    zi.write_cache(find_riemann_zeros(20), p)
    data = p.read_bytes()
    p.write_bytes(data[:-8])
    with pytest.raises(zi.CacheIntegrityError):
        zi.read_cache(p)


def test_tampered_cache(tmp_path):
    p = tmp_path / "t.zseq"
    zi.write_cache(find_riemann_zeros(20), p)
    data = bytearray(p.read_bytes())
    data[-3] ^= 0x01
    p.write_bytes(bytes(data))
    with pytest.raises(zi.CacheIntegrityError):
        zi.read_cache(p)


def test_version_mismatch(tmp_path):
    p = tmp_path / "v.zseq"
    zi.write_cache(find_riemann_zeros(5), p)
    data = bytearray(p.read_bytes())
    data[4] = 99
    p.write_bytes(bytes(data))
    with pytest.raises(zi.CacheVersionError):
        zi.read_cache(p)


def test_plain_write_parse_identity(tmp_path):
    seq = find_riemann_zeros(300)
    p = tmp_path / "z.txt"
    zi.write_plain(seq, p)
    assert zi.parse_zero_file(zi.ZeroFileSpec(p)) == seq
    zi.write_plain(seq, p, precision=10)
    back = zi.parse_zero_file(zi.ZeroFileSpec(p))
    assert np.max(np.abs(back.ordinates - seq.ordinates)) < 1e-7


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 50), st.integers(0, 60))
def test_count_bounded_by_max_rows(max_rows, n):
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as d:
        p = Path(d) / "z.txt"
        p.write_text("".join(f"{k + 1}.5\n" for k in range(n)))
        seq = zi.parse_zero_file(zi.ZeroFileSpec(p, max_rows=max_rows))
        assert len(seq) == min(n, max_rows)


def test_load_sequence_dispatch(tmp_path):
    seq = find_riemann_zeros(10)
    zi.write_cache(seq, tmp_path / "a.zseq")
    zi.write_plain(seq, tmp_path / "a.txt")
    assert zi.load_sequence(tmp_path / "a.zseq") == seq
    assert zi.load_sequence(tmp_path / "a.txt") == seq
