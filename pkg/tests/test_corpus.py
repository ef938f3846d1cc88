import json

import pytest

from turducken.corpus import (
    Sample,
    build_training_pairs,
    convert_external,
    load_jsonl,
    make_mtl_pairs,
    stats,
    write_jsonl,
)
from turducken.errors import CorpusFormatError
from turducken.prompts import PromptTemplate
from turducken.sat import parse_rendered, sat_decode
from turducken.synthetic import synthetic_corpus


def sample(i, nl="do the thing", code="return 1"):
    return Sample(id=f"s{i}", nl=nl, code=code)


def test_load_single_file(tmp_path):
    path = tmp_path / "data.jsonl"
    write_jsonl(str(path), [sample(1), sample(2)])
    split = load_jsonl(str(path))
    assert len(split.train) == 2
    assert split.train[0].id == "s1"


def test_load_split_directory(tmp_path):
    write_jsonl(str(tmp_path / "train.jsonl"), [sample(i) for i in range(3)])
    write_jsonl(str(tmp_path / "valid.jsonl"), [sample(10)])
    write_jsonl(str(tmp_path / "test.jsonl"), [sample(20)])
    split = load_jsonl(str(tmp_path))
    assert (len(split.train), len(split.valid), len(split.test)) == (3, 1, 1)


def test_malformed_line_reports_line_number(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"id": "a", "nl": "x", "code": "return 1"}\nnot json\n')
    with pytest.raises(CorpusFormatError) as err:
        load_jsonl(str(path))
    assert err.value.line_no == 2


def test_duplicate_id_rejected_with_name(tmp_path):
    path = tmp_path / "dup.jsonl"
    write_jsonl(str(path), [sample(1)])
    with path.open("a") as fh:
        fh.write(json.dumps({"id": "s1", "nl": "again", "code": "return 2"}) + "\n")
    with pytest.raises(CorpusFormatError) as err:
        load_jsonl(str(path))
    assert "s1" in str(err.value)


def test_duplicate_id_across_splits_rejected(tmp_path):
    write_jsonl(str(tmp_path / "train.jsonl"), [sample(1)])
    write_jsonl(str(tmp_path / "valid.jsonl"), [sample(1)])
    with pytest.raises(CorpusFormatError):
        load_jsonl(str(tmp_path))


def test_sample_validation():
    with pytest.raises(ValueError):
        Sample(id="x", nl="", code="return 1")
    with pytest.raises(ValueError):
        Sample(id="x", nl="y", code="c", language="rust")
    with pytest.raises(ValueError):
        Sample(id="x", nl="y", code="c", style="graphql")


def test_stats_exact_means():
    samples = [sample(1, nl="a b c"), sample(2, nl="a b c d e")]
    report = stats(samples)
    assert report.count == 2
    assert report.mean_nl_tokens == pytest.approx(4.0)
    assert report.to_json_dict()["mean_nl_tokens"] == 4.0


def test_stats_empty_split_is_an_error():
    with pytest.raises(ValueError):
        stats([])


def test_make_mtl_pairs_targets():
    pair = make_mtl_pairs(sample(1))
    assert pair.primary_input == "Generate origin code : do the thing"
    assert pair.auxiliary_input == "Generate syntax code : do the thing"
    assert pair.primary_target == "return 1"
    assert pair.auxiliary_target == "<mod> <ret> return 1 </ret> </mod>"


def test_make_mtl_pairs_none_template_uses_bare_description():
    pair = make_mtl_pairs(sample(1), tpl=PromptTemplate("none"))
    assert pair.auxiliary_input == "do the thing"


def test_make_mtl_pairs_rejects_unparseable_code():
    with pytest.raises(ValueError):
        make_mtl_pairs(sample(1, code="return (("))


def test_build_training_pairs_skips_and_counts():
    samples = [sample(1), sample(2, code="return (("), sample(3)]
    pairs, skipped = build_training_pairs(samples)
    assert len(pairs) == 2
    assert skipped == ["s2"]


def test_aux_target_decodes_back_to_code_tokens():
    # tag stream invariant: stripping tags recovers the code's leaf tokens
    # (string literals appear as the placeholder in rendered model targets)
    from turducken.grammar import parse
    from turducken.syntax_tree import leaf_tokens

    for s in synthetic_corpus(40, seed=3):
        pair = make_mtl_pairs(s)
        decoded = sat_decode(parse_rendered(pair.auxiliary_target))
        expected = [v for _, v in leaf_tokens(parse(s.code))]
        assert len(decoded) == len(expected)
        for got, want in zip(decoded, expected):
            assert got == want or got == "STR"


def test_synthetic_corpus_is_deterministic_and_parseable():
    a = synthetic_corpus(50, seed=9)
    b = synthetic_corpus(50, seed=9)
    assert [s.code for s in a] == [s.code for s in b]
    pairs, skipped = build_training_pairs(a)
    assert not skipped
    assert len({s.id for s in a}) == 50


def test_convert_external(tmp_path):
    src = tmp_path / "released.jsonl"
    src.write_text(
        json.dumps({"question": "add", "answer": "return 1 + 2"}) + "\n"
        + json.dumps({"question": "sub", "answer": "return 1 - 2"}) + "\n"
    )
    samples = convert_external(str(src), nl_key="question", code_key="answer")
    assert len(samples) == 2
    assert samples[0].nl == "add"
    out = tmp_path / "converted.jsonl"
    write_jsonl(str(out), samples)
    assert len(load_jsonl(str(out)).train) == 2
