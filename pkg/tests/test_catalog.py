import math
import random
from dataclasses import replace
from datetime import timedelta

import pytest

import corpus
from dfskit.canonical import serialize_canonical
from dfskit.catalog import (
    InterestProfile,
    Repository,
    TfIdfIndex,
    doc_vector,
    document_terms,
    index_build,
    load_profile,
    profile_update,
    recommend,
    save_profile,
    search,
)
from dfskit.catalog.index import cosine, tf_weights
from dfskit.errors import ImmutabilityError, IntegrityError, NotFoundError, ValidationError
from dfskit.integrity import VersionBump, bump, seal
from dfskit.model import DatasetRef, Measurement
from dfskit.validation import generate_skeleton


def keyword_only(keyword, id_n=1, name="-"):
    return corpus.build([("f1", f"{keyword}.bin", [])], name=name, keywords=[keyword],
                        id_=f"00000000-0000-4000-8000-{id_n:012x}")


def tree_bytes(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture
def dataset(tmp_path):
    data = tmp_path / "data"
    (data / "sub").mkdir(parents=True)
    (data / "a.csv").write_text("id,age\n1,30\n")
    (data / "sub" / "b.csv").write_text("id,weight\n1,70\n")
    m = generate_skeleton(data, "demo", now=corpus.FIXED_TIME, new_id=corpus.uuid_sequence())
    return m, data


# --- repository


def test_put_get_round_trip(tmp_path, dataset):
    m, data = dataset
    repo = Repository(tmp_path / "repo")
    ref = repo.put(m, data)
    slot = repo.slot(ref)
    assert slot == tmp_path / "repo" / "datasets" / m.id / "v1"
    assert (slot / "metafile.json").read_bytes() == serialize_canonical(m)
    assert (slot / "sub" / "b.csv").read_text() == "id,weight\n1,70\n"
    assert repo.get(ref) == m


def test_put_is_idempotent(tmp_path, dataset):
    m, data = dataset
    repo = Repository(tmp_path / "repo")
    ref = repo.put(m, data)
    before = tree_bytes(repo.root)
    assert repo.put(m, data) == ref
    assert tree_bytes(repo.root) == before


def test_put_refuses_overwrite(tmp_path, dataset):
    m, data = dataset
    repo = Repository(tmp_path / "repo")
    repo.put(m, data)
    before = tree_bytes(repo.slot(m.ref))
    changed = seal(replace(m, meta=replace(m.meta, description="changed")))
    with pytest.raises(ImmutabilityError):
        repo.put(changed, data)
    assert tree_bytes(repo.slot(m.ref)) == before


def test_put_new_version_is_sibling(tmp_path, dataset):
    m, data = dataset
    repo = Repository(tmp_path / "repo")
    repo.put(m, data)
    repo.put(bump(m, VersionBump.meta_only(), m.modified + timedelta(hours=1)), data)
    assert sorted(p.name for p in (repo.datasets_dir / m.id).iterdir()) == ["v1", "v2"]
    assert repo.latest(m.id) == DatasetRef(m.id, 2)


def test_put_rejects_invalid(tmp_path, dataset):
    m, data = dataset
    (data / "a.csv").write_text("tampered")
    with pytest.raises(ValidationError):
        Repository(tmp_path / "repo").put(m, data)
    assert not (tmp_path / "repo" / "datasets" / m.id / "v1").exists()


def test_get_unknown(tmp_path):
    with pytest.raises(NotFoundError):
        Repository(tmp_path).get(DatasetRef("00000000-0000-4000-8000-000000000000", 1))


def test_get_detects_tampering(tmp_path, dataset):
    m, data = dataset
    repo = Repository(tmp_path / "repo")
    ref = repo.put(m, data)
    path = repo.slot(ref) / "metafile.json"
    raw = bytearray(path.read_bytes())
    pos = raw.index(b'"name":"demo"') + len(b'"name":"d')
    raw[pos] = ord("x")
    path.write_bytes(bytes(raw))
    with pytest.raises(IntegrityError):
        repo.get(ref)


def test_get_detects_data_tampering(tmp_path, dataset):
    m, data = dataset
    repo = Repository(tmp_path / "repo")
    ref = repo.put(m, data)
    (repo.slot(ref) / "a.csv").write_text("evil")
    with pytest.raises(IntegrityError):
        repo.get(ref)


def test_export(tmp_path, dataset):
    m, data = dataset
    repo = Repository(tmp_path / "repo")
    ref = repo.put(m, data)
    out = tmp_path / "out"
    repo.export(ref, out)
    assert (out / "sub" / "b.csv").is_file() and (out / "metafile.json").is_file()


# --- documents and index


def test_single_keyword_vector():
    assert doc_vector(keyword_only("ecg")) == {"ecg": 1.0}


def test_tf_weight():
    assert tf_weights({"t": 3})["t"] == pytest.approx(1 + math.log(3))
    assert tf_weights({"t": 3})["t"] == pytest.approx(2.0986, abs=1e-4)


def test_document_terms_sources():
    m = corpus.build(
        [("f1", "a.csv", [("heartRate", "number", "beats per minute")])],
        name="Cardio Study", description="resting data", keywords=["ecg"],
    )
    m = seal(replace(m, meta=replace(m.meta, files=(replace(
        m.meta.files[0], description="ignored text",
        measurement=Measurement("pulse", "strap", "bpm")),))))
    terms = document_terms(m)
    assert terms == {"cardio": 1, "study": 1, "resting": 1, "data": 1, "ecg": 2, "heart": 1,
                     "rate": 1, "beats": 1, "per": 1, "minute": 1, "pulse": 1}


def test_identical_text_identical_vectors():
    a = keyword_only("ecg", 1, name="same words")
    b = keyword_only("ecg", 2, name="same words")
    ix = TfIdfIndex.from_documents([a, b])
    assert ix.vectors[a.ref] == ix.vectors[b.ref]


def test_index_counts(tmp_path):
    repo = Repository(tmp_path)
    assert index_build(repo).doc_count == 0
    for i in range(3):
        repo.put(corpus.build([("f1", "x.csv", [])], name=f"common unique{i}",
                              id_=f"00000000-0000-4000-8000-{i + 1:012x}"))
    ix = index_build(repo)
    assert ix.doc_count == 3
    assert ix.df["common"] == 3 and ix.df["unique0"] == 1
    for ref, vec in ix.vectors.items():
        assert math.isclose(math.sqrt(sum(w * w for w in vec.values())), 1.0)
        for term in vec:
            assert ref in ix.inverted[term]
    for term, refs in ix.inverted.items():
        assert ix.df[term] == len(refs) == sum(term in v for v in ix.vectors.values())


def test_index_latest_version_only(tmp_path):
    repo = Repository(tmp_path)
    m = corpus.build([("f1", "x.csv", [])], name="oldword")
    repo.put(m)
    newer = bump(seal(replace(m, meta=replace(m.meta, name="newword"))), VersionBump.meta_only(), m.modified)
    repo.put(newer)
    ix = index_build(repo)
    assert set(ix.vectors) == {newer.ref}
    assert "newword" in ix.df and "oldword" not in ix.df


def test_index_skips_corrupt(tmp_path):
    repo = Repository(tmp_path)
    good = keyword_only("ecg", 1)
    bad = keyword_only("eeg", 2)
    repo.put(good)
    repo.put(bad)
    (repo.slot(bad.ref) / "metafile.json").write_bytes(b"{broken")
    ix = index_build(repo)
    assert set(ix.vectors) == {good.ref}
    assert len(ix.skipped) == 1


def test_index_persistence(tmp_path):
    docs = [corpus.random_metafile(random.Random(i)) for i in range(5)]
    ix = TfIdfIndex.from_documents(docs)
    ix.save(tmp_path / "index.json")
    loaded = TfIdfIndex.load(tmp_path / "index.json")
    assert loaded.vectors == ix.vectors and loaded.df == ix.df and loaded.inverted == ix.inverted
    assert search(loaded, "patient heart", 5) == search(ix, "patient heart", 5)


# --- search


def test_search_basics():
    docs = [keyword_only(k, i) for i, k in enumerate(["ecg", "eeg", "emg"], start=1)]
    ix = TfIdfIndex.from_documents(docs)
    assert search(ix, "eeg", 5)[0][0] == docs[1].ref
    assert search(ix, "nothing indexed", 5) == []
    assert search(ix, "", 5) == []
    assert len(search(ix, "ecg eeg emg", 1)) == 1
    with pytest.raises(ValueError):
        search(ix, "ecg", 0)


def test_search_tie_break_is_citation_order():
    docs = [keyword_only("ecg", i, name="x") for i in (3, 1, 2)]
    ix = TfIdfIndex.from_documents(docs)
    results = search(ix, "ecg", 10)
    assert [str(r) for r, _ in results] == sorted(str(d.ref) for d in docs)
    assert results == search(ix, "ecg", 10)


def test_search_own_text_is_best_match():
    rng = random.Random(40)
    docs = [corpus.random_metafile(rng) for _ in range(15)]
    ix = TfIdfIndex.from_documents(docs)
    for m in docs:
        text = " ".join(t for t, c in document_terms(m).items() for _ in range(c))
        results = search(ix, text, len(docs))
        assert results[0][0] == m.ref
        assert results[0][1] == pytest.approx(1.0)
        assert all(0 < s <= 1 for _, s in results)


# --- profiles


def test_first_update_is_document_vector():
    p = profile_update(InterestProfile("u"), keyword_only("ecg"))
    assert p.weights == {"ecg": 1.0}
    assert p.interaction_count == 1 and p.seen == {keyword_only("ecg").ref}


def test_update_arithmetic():
    p = profile_update(InterestProfile("u", {"a": 1.0}), keyword_only("b"), 0.3)
    assert p.weights["a"] == pytest.approx(0.7 / math.sqrt(0.58))
    assert p.weights["b"] == pytest.approx(0.3 / math.sqrt(0.58))
    assert p.weights["a"] == pytest.approx(0.9191, abs=1e-4)
    assert p.weights["b"] == pytest.approx(0.3939, abs=1e-4)


def test_repeated_updates_move_toward_document():
    target = keyword_only("ecg", 1, name="heart signal")
    p = profile_update(InterestProfile("u"), keyword_only("gaze", 2, name="pupil"))
    d = doc_vector(target)
    p1 = profile_update(p, target)
    p2 = profile_update(p1, target)
    assert cosine(p.weights, d) < cosine(p1.weights, d) < cosine(p2.weights, d)


def test_profile_norm_stays_unit():
    rng = random.Random(41)
    p = InterestProfile("u")
    for i in range(40):
        p = profile_update(p, corpus.random_metafile(rng), rng.choice([0.05, 0.3, 1.0]))
        assert math.sqrt(sum(w * w for w in p.weights.values())) == pytest.approx(1.0, abs=1e-9)
        assert p.interaction_count == i + 1


def test_profile_lambda_range():
    with pytest.raises(ValueError):
        profile_update(InterestProfile("u"), keyword_only("ecg"), 0.0)


def test_recommend_rules():
    seen_doc = keyword_only("ecg", 1)
    other = keyword_only("ecg", 2)
    unrelated = keyword_only("gaze", 3)
    ix = TfIdfIndex.from_documents([seen_doc, other, unrelated])
    p = profile_update(InterestProfile("u"), seen_doc)
    assert [r for r, _ in recommend(ix, p)] == [other.ref]
    assert {r for r, _ in recommend(ix, p, include_seen=True)} == {seen_doc.ref, other.ref}
    only_seen = TfIdfIndex.from_documents([seen_doc, unrelated])
    assert recommend(only_seen, p) == []
    assert recommend(ix, InterestProfile("u")) == []


def test_profile_persistence(tmp_path):
    p = profile_update(InterestProfile("alice"), keyword_only("ecg"))
    path = save_profile(tmp_path, p)
    assert path == tmp_path / "profiles" / "alice.json"
    assert load_profile(tmp_path, "alice") == p
    assert load_profile(tmp_path, "bob") == InterestProfile("bob")
    with pytest.raises(ValueError):
        load_profile(tmp_path, "../evil")
