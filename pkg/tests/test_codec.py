import pytest
from hypothesis import given, strategies as st

from evaba.codec import Decoder, DecodeError, Encoder, digest


def test_digest_is_sha256():
    assert digest(b"abc").hex().startswith("ba7816bf")


@given(st.integers(0, 255), st.integers(0, 2**32 - 1), st.integers(0, 2**64 - 1), st.binary(max_size=64))
def test_roundtrip(a, b, c, blob):
    data = Encoder(7).u8(a).u32(b).u64(c).blob(blob).fixed(b"xy").bytes()
    dec = Decoder(data)
    assert dec.u8() == 7
    assert (dec.u8(), dec.u32(), dec.u64(), dec.blob(), dec.fixed(2)) == (a, b, c, blob, b"xy")
    dec.done()


def test_sig_len_tracks_signature_bytes():
    enc = Encoder(1).u32(5).sig_fixed(b"d" * 32).sig_blob(b"s" * 10)
    assert enc.sig_len == 32 + 4 + 10
    assert len(enc.bytes()) == 1 + 4 + 46


def test_decoder_errors():
    with pytest.raises(DecodeError):
        Decoder(b"\x00\x00").u32()
    with pytest.raises(DecodeError):
        Decoder(Encoder().blob(b"x" * 10).bytes()).blob(limit=5)
    dec = Decoder(b"\x01\x02")
    dec.u8()
    with pytest.raises(DecodeError):
        dec.done()
