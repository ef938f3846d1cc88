import itertools

import pytest

from turducken.prompts import PROMPT_KINDS, PromptTemplate, TaskId, build_prompt


def test_standard_template_surface():
    text, n = build_prompt(PromptTemplate("standard"), TaskId.ORIGIN, "sum a list")
    assert text == "Generate origin code : sum a list"
    assert n == 0


def test_none_template_is_bare_description():
    text, n = build_prompt(PromptTemplate("none"), TaskId.SYNTAX, "d")
    assert (text, n) == ("d", 0)


def test_mixed_template_reports_virtual_tokens():
    text, n = build_prompt(PromptTemplate("mixed"), TaskId.ORIGIN, "d")
    assert text == "Generate origin code : d"
    assert n == 4


def test_task_only_and_long_templates():
    assert build_prompt(PromptTemplate("task_only"), TaskId.SYNTAX, "d")[0] == "syntax : d"
    assert (
        build_prompt(PromptTemplate("long"), TaskId.ORIGIN, "d")[0]
        == "Generate Turducken-Style code under origin : d"
    )


def test_soft_template_has_no_task_words():
    text, n = build_prompt(PromptTemplate("soft", n_soft=6), TaskId.ORIGIN, "d")
    assert "origin" not in text
    assert n == 6


def test_n_soft_normalized_for_hard_kinds():
    assert PromptTemplate("standard", n_soft=9).n_soft == 0
    with pytest.raises(ValueError):
        PromptTemplate("soft", n_soft=0)


def test_empty_description_rejected():
    with pytest.raises(ValueError):
        build_prompt(PromptTemplate(), TaskId.ORIGIN, "")


def test_deterministic():
    tpl = PromptTemplate("standard")
    assert build_prompt(tpl, TaskId.ORIGIN, "d") == build_prompt(tpl, TaskId.ORIGIN, "d")


def test_injective_over_kind_and_task_bearing_templates():
    # every (kind, task) with a task-bearing template yields a distinct
    # output; the none/soft kinds omit the task by design (routing happens in
    # the task heads), so injectivity is over kind only there.
    outputs = {}
    for kind, task in itertools.product(PROMPT_KINDS, TaskId):
        out = build_prompt(PromptTemplate(kind), task, "d")
        key = (kind, task) if kind in ("task_only", "standard", "long", "mixed") else (kind,)
        if key in outputs:
            assert outputs[key] == out
        else:
            assert out not in [v for k, v in outputs.items() if k != key], (kind, task, out)
            outputs[key] = out
