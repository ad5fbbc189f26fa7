import pytest

from kgchains.errors import AmbiguousNameError, FormatError, UnknownEntityError
from kgchains.kg import Entity, Triplet, build_graph, load_graph


def write(path, text):
    path.write_text(text)
    return str(path)


def small_files(tmp_path, triplet_rows=None):
    ent = write(tmp_path / "e.tsv",
                "id\tname\tcategory\tdescription\n"
                "a\tAlpha\tGene\tfirst\n"
                "b\tBeta\tGene\tsecond\n"
                "c\tGamma\tDrug\tthird\n")
    rows = triplet_rows if triplet_rows is not None else [
        "a\tbinds\tb", "b\tregulates\tc",
    ]
    trip = write(tmp_path / "t.tsv", "head\trelation\ttail\n" + "\n".join(rows) + "\n")
    return ent, trip


def test_load_and_counts(tmp_path):
    g = load_graph(*small_files(tmp_path))
    assert g.counts() == {"entities": 3, "triplets": 2, "relations": 2}
    assert [(r, nb.id) for r, nb in g.neighbors("a", "out")] == [("binds", "b")]
    assert [(r, nb.id) for r, nb in g.neighbors("b", "in")] == [("binds", "a")]
    # both = out then in
    assert [(r, nb.id) for r, nb in g.neighbors("b", "both")] == [
        ("regulates", "c"), ("binds", "a"),
    ]
    assert g.degree("b") == 2
    assert g.edge_exists("a", "b") == ("binds", "out")
    assert g.edge_exists("b", "a") == ("binds", "in")
    assert g.edge_exists("a", "c") is None


def test_bad_header_has_line_number(tmp_path):
    ent = write(tmp_path / "e.tsv", "id\tname\tcategory\n")
    with pytest.raises(FormatError) as exc:
        load_graph(ent, ent)
    assert exc.value.line == 1


def test_wrong_field_count_reports_line(tmp_path):
    ent = write(tmp_path / "e.tsv",
                "id\tname\tcategory\tdescription\na\tAlpha\tGene\n")
    trip = write(tmp_path / "t.tsv", "head\trelation\ttail\n")
    with pytest.raises(FormatError) as exc:
        load_graph(ent, trip)
    assert exc.value.line == 2


def test_dangling_triplet_rejected(tmp_path):
    ent, trip = small_files(tmp_path, ["a\tbinds\tzz"])
    with pytest.raises(FormatError) as exc:
        load_graph(ent, trip)
    assert "zz" in str(exc.value)
    assert exc.value.line == 2


def test_duplicate_entity_id_rejected(tmp_path):
    ent = write(tmp_path / "e.tsv",
                "id\tname\tcategory\tdescription\n"
                "a\tAlpha\tGene\tx\na\tAlpha2\tGene\ty\n")
    trip = write(tmp_path / "t.tsv", "head\trelation\ttail\n")
    with pytest.raises(FormatError):
        load_graph(ent, trip)


def test_duplicate_triplets_dropped_with_count(tmp_path, capsys):
    import io

    diag = io.StringIO()
    ent, trip = small_files(tmp_path, ["a\tbinds\tb", "a\tbinds\tb"])
    g = load_graph(ent, trip, diagnostics=diag)
    assert g.triplet_count == 1
    assert g.duplicate_triplets_dropped == 1
    assert "duplicate" in diag.getvalue()


def test_name_resolution_fallbacks():
    g = build_graph(
        [Entity("a", "BRCA1", "Gene", ""), Entity("b", "tp 53", "Gene", "")],
        [],
    )
    assert g.resolve_name("BRCA1") == "a"
    assert g.resolve_name("brca1") == "a"
    assert g.resolve_name("  TP  53 ") == "b"
    assert g.resolve_name("nope") is None


def test_ambiguous_name_raises():
    g = build_graph(
        [Entity("a", "dup", "Gene", ""), Entity("b", "DUP", "Gene", "")],
        [],
    )
    # exact match on one casing still works
    assert g.resolve_name("dup") == "a"
    with pytest.raises(AmbiguousNameError):
        g.resolve_name("Dup")


def test_append_is_idempotent_and_validated():
    g = build_graph(
        [Entity(x, x.upper(), "Gene", "") for x in "abc"],
        [Triplet("a", "r", "b")],
    )
    out = g.append_triplets([Triplet("b", "r", "c"), Triplet("a", "r", "b")])
    assert out["added"] == 1 and out["skipped"] == 1
    assert g.triplet_count == 2
    again = g.append_triplets([Triplet("b", "r", "c")])
    assert again["added"] == 0 and again["skipped"] == 1
    with pytest.raises(UnknownEntityError):
        g.append_triplets([Triplet("a", "r", "zz")])


def test_neighbors_unknown_entity():
    g = build_graph([Entity("a", "A", "Gene", "")], [])
    with pytest.raises(UnknownEntityError):
        g.neighbors("zz")


def test_neighbors_sorted_deterministically():
    trips = [Triplet("a", r, t) for r, t in
             [("z_rel", "b"), ("a_rel", "c"), ("a_rel", "b")]]
    g = build_graph([Entity(x, x.upper(), "Gene", "") for x in "abc"], trips)
    out = [(r, nb.id) for r, nb in g.neighbors("a", "out")]
    assert out == [("a_rel", "b"), ("a_rel", "c"), ("z_rel", "b")]
