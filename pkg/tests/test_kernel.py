"""Keyword-scanning kernel: pure backend, compiled backend, and an
independent brute-force oracle that both must agree with."""

import random

import pytest

from dfdscan import _scan_py


def oracle_scan(text, keyword):
    """Reference result computed without the kernel: check every offset."""
    hits = []
    n = len(keyword)
    for pos in range(len(text) - n + 1):
        if text[pos:pos + n] != keyword:
            continue
        line = text.count("\n", 0, pos)
        line_start = text.rfind("\n", 0, pos) + 1
        col = pos - line_start
        hits.append((line, col, col + n))
    return hits


def line_starts_of(text):
    starts = [0]
    for i, ch in enumerate(text):
        if ch == "\n":
            starts.append(i + 1)
    return starts


def backends():
    out = [("pure", _scan_py.scan)]
    try:
        from dfdscan import _scan
    except ImportError:
        return out
    out.append(("compiled", _scan.scan))
    return out


BACKENDS = backends()


@pytest.mark.parametrize("name,scan", BACKENDS, ids=[n for n, _ in BACKENDS])
def test_simple_hits(name, scan):
    text = "abc def abc\nxabc"
    got = scan(text, "abc", line_starts_of(text))
    assert got == [(0, 0, 3), (0, 8, 11), (1, 1, 4)]
    assert got == oracle_scan(text, "abc")


@pytest.mark.parametrize("name,scan", BACKENDS, ids=[n for n, _ in BACKENDS])
def test_overlapping_hits_are_all_reported(name, scan):
    text = "aaaa"
    got = scan(text, "aa", line_starts_of(text))
    assert got == [(0, 0, 2), (0, 1, 3), (0, 2, 4)]
    assert got == oracle_scan(text, "aa")


@pytest.mark.parametrize("name,scan", BACKENDS, ids=[n for n, _ in BACKENDS])
def test_no_hits(name, scan):
    text = "nothing to see here"
    assert scan(text, "xyz", line_starts_of(text)) == []


@pytest.mark.parametrize("name,scan", BACKENDS, ids=[n for n, _ in BACKENDS])
def test_hit_at_text_boundaries(name, scan):
    text = "end\nmiddle\nend"
    got = scan(text, "end", line_starts_of(text))
    assert got == [(0, 0, 3), (2, 0, 3)]


@pytest.mark.parametrize("name,scan", BACKENDS, ids=[n for n, _ in BACKENDS])
def test_empty_keyword_rejected(name, scan):
    with pytest.raises(ValueError):
        scan("text", "", [0])


@pytest.mark.parametrize("name,scan", BACKENDS, ids=[n for n, _ in BACKENDS])
def test_newline_in_keyword_rejected(name, scan):
    with pytest.raises(ValueError):
        scan("text", "a\nb", [0])


@pytest.mark.parametrize("name,scan", BACKENDS, ids=[n for n, _ in BACKENDS])
def test_non_ascii_text(name, scan):
    text = "café getLogger\nüber getLogger"
    got = scan(text, "getLogger", line_starts_of(text))
    assert got == oracle_scan(text, "getLogger")
    assert [h[0] for h in got] == [0, 1]


@pytest.mark.parametrize("name,scan", BACKENDS, ids=[n for n, _ in BACKENDS])
def test_non_ascii_keyword(name, scan):
    text = "x café y\ncafé"
    got = scan(text, "café", line_starts_of(text))
    assert got == oracle_scan(text, "café")


@pytest.mark.parametrize("name,scan", BACKENDS, ids=[n for n, _ in BACKENDS])
def test_randomized_against_oracle(name, scan):
    rng = random.Random(20240817)
    alphabet = "ab\nc"
    for _ in range(200):
        text = "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 120)))
        keyword = "".join(rng.choice("abc") for _ in range(rng.randrange(1, 5)))
        got = scan(text, keyword, line_starts_of(text))
        assert got == oracle_scan(text, keyword), (text, keyword)


def test_backends_agree_on_random_input():
    if len(BACKENDS) < 2:
        pytest.skip("compiled backend not built")
    pure = BACKENDS[0][1]
    compiled = BACKENDS[1][1]
    rng = random.Random(7)
    for _ in range(300):
        text = "".join(rng.choice("xyz \n.") for _ in range(rng.randrange(0, 200)))
        keyword = "".join(rng.choice("xyz.") for _ in range(rng.randrange(1, 6)))
        ls = line_starts_of(text)
        assert pure(text, keyword, ls) == compiled(text, keyword, ls)


def test_selected_backend_exports_scan():
    from dfdscan import _kernel

    assert _kernel.BACKEND in ("pure", "compiled")
    text = "k in line"
    assert _kernel.scan(text, "k", [0]) == [(0, 0, 1)]
