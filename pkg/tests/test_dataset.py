import pytest

from kwspot.dataset import (CLASSES, REFERENCE_COUNTS, REFERENCE_TOTALS, SILENCE, UNKNOWN, Manifest,
                            ManifestError, ManifestRow, format_manifest, load_manifest, lookup_class,
                            parse_manifest, reference_manifest, speaker_disjointness, validate_counts)


def test_registry():
    assert len(CLASSES) == 20
    assert len({c.name for c in CLASSES}) == 20
    assert (SILENCE, UNKNOWN) == (18, 19)
    assert CLASSES[18].name == "Silence" and CLASSES[19].name == "Unknown"
    assert all(c.dirname.isascii() for c in CLASSES)
    assert lookup_class("red card") is lookup_class("red_card") is lookup_class(12)
    assert lookup_class("Hand").ipa == "/hand/"
    with pytest.raises(KeyError):
        lookup_class("Referee")
    with pytest.raises(KeyError):
        lookup_class(20)


def test_reference_totals_are_column_sums():
    for split, total in REFERENCE_TOTALS.items():
        assert sum(REFERENCE_COUNTS[split].values()) == total
    assert REFERENCE_TOTALS == {"train": 24435, "test": 6000, "css": 1002}


def test_reference_manifest_has_zero_deltas():
    rep = validate_counts(reference_manifest())
    assert rep["all_zero_deltas"]
    test = rep["splits"]["test"]["classes"]
    assert len(test) == 20 and all(v["count"] == 300 for v in test.values())


def test_count_deltas_reported():
    m = reference_manifest()
    rows = tuple(r for r in m.rows if not (r.split == "train" and r.label == 5))[:-1]
    rep = validate_counts(Manifest(rows))
    assert not rep["all_zero_deltas"]
    assert rep["splits"]["train"]["classes"]["Hand"]["delta"] == -1588
    assert rep["splits"]["css"]["delta"] == -1


def test_parse_errors():
    head = "path,class,split\n"
    with pytest.raises(ManifestError, match=r":3: unknown class 'Referee'"):
        parse_manifest(head + "a.wav,Goal,train\nb.wav,Referee,train\n", "m.csv")
    with pytest.raises(ManifestError, match="duplicate path"):
        parse_manifest(head + "a.wav,Goal,train\na.wav,Out,test\n")
    with pytest.raises(ManifestError, match="split"):
        parse_manifest(head + "a.wav,Goal,valid\n")
    with pytest.raises(ManifestError, match="header"):
        parse_manifest("file,label\n")
    with pytest.raises(ManifestError, match="fields"):
        parse_manifest(head + "a.wav,Goal\n")
    with pytest.raises(ManifestError, match="empty"):
        parse_manifest("")


def test_round_trip(tmp_path):
    m = parse_manifest("path,class,split,speaker\nx/a.wav,Throw-in,train,s1\nx/b.wav,silence,css,\n")
    assert m.rows[0] == ManifestRow("x/a.wav", 16, "train", "s1")
    assert m.rows[1].speaker is None
    assert parse_manifest(format_manifest(m)) == m


def test_check_files(tmp_path):
    (tmp_path / "a.wav").write_bytes(b"")
    (tmp_path / "m.csv").write_text("path,class,split\na.wav,Goal,train\nb.wav,Goal,test\n")
    assert len(load_manifest(tmp_path / "m.csv")) == 2
    with pytest.raises(ManifestError, match="b.wav"):
        load_manifest(tmp_path / "m.csv", check_files=True)


def test_speaker_disjointness():
    assert not speaker_disjointness(reference_manifest())["evaluable"]
    m = parse_manifest("path,class,split,speaker\n"
                       "a,Goal,train,s1\nb,Goal,test,s1\nc,Goal,test,s2\nd,Out,test,s3\n")
    rep = speaker_disjointness(m)
    assert rep["evaluable"]
    assert rep["classes"]["Goal"] == {"test": 2, "unseen_speaker": 1, "overlapping": 1}
    assert rep["classes"]["Out"]["unseen_speaker"] == 1
