"""
tests/test_mdp_document.py

Tests for the JSON document formats: MDP parsing and diagnostics,
policy documents and report documents.
"""

import json

import numpy as np
import pytest

from src.config import MDPS_DIR
from src.errors import DocumentError
from src.instances import loop_exit, loop_exit_policy, two_path
from src.mdp_document import (
    PolicyDocument,
    load_mdp,
    parse_mdp,
    policy_document,
    policy_from_document,
    report_document,
    serialize_mdp,
)
from src.deterministic_exact import solve_exact
from src.epsilon_synthesis import synth_eps_optimal


LOOP_EXIT_TEXT = (MDPS_DIR / "loop_exit.json").read_text(encoding="utf-8")


def _edited(**changes):
    doc = json.loads(LOOP_EXIT_TEXT)
    doc.update(changes)
    return json.dumps(doc)


def test_loop_exit_file_matches_builder():
    mdp = load_mdp(MDPS_DIR / "loop_exit.json")
    assert mdp.same_as(loop_exit())
    assert mdp.actions(0) == [0, 1]


def test_two_path_file_matches_builder():
    assert load_mdp(MDPS_DIR / "twopath.json").same_as(two_path())


def test_serialized_document_parses_back():
    mdp = two_path()
    assert parse_mdp(serialize_mdp(mdp)).same_as(mdp)


def test_unknown_field_rejected():
    with pytest.raises(DocumentError) as err:
        parse_mdp(_edited(comment="hello"))
    assert any("comment" in d for d in err.value.diagnostics)


def test_unknown_next_state_located():
    doc = json.loads(LOOP_EXIT_TEXT)
    doc["transitions"][1]["next"] = "s9"
    with pytest.raises(DocumentError) as err:
        parse_mdp(json.dumps(doc))
    assert any("transitions[1]" in d and "s9" in d for d in err.value.diagnostics)


def test_row_sum_reported():
    doc = json.loads(LOOP_EXIT_TEXT)
    doc["transitions"][1]["prob"] = 0.5
    with pytest.raises(DocumentError) as err:
        parse_mdp(json.dumps(doc))
    assert any("row sum 0.5" in d for d in err.value.diagnostics)


def test_discount_out_of_range():
    with pytest.raises(DocumentError):
        parse_mdp(_edited(discount=1.0))


def test_policy_document_keeps_positive_entries():
    mdp = loop_exit()
    doc = policy_document(mdp, loop_exit_policy(mdp, 0.25))
    assert doc.policy == {"s1": {"a1": 0.75, "a2": 0.25}, "s2": {"a1": 1.0}}
    back = policy_from_document(mdp, doc)
    assert np.allclose(back.prob, loop_exit_policy(mdp, 0.25).prob)


def test_policy_document_missing_state():
    with pytest.raises(DocumentError) as err:
        policy_from_document(loop_exit(), PolicyDocument(policy={"s1": {"a2": 1.0}}))
    assert any("no distribution" in d for d in err.value.diagnostics)


def test_policy_document_unknown_action():
    doc = PolicyDocument(policy={"s1": {"a7": 1.0}, "s2": {"a1": 1.0}})
    with pytest.raises(DocumentError):
        policy_from_document(loop_exit(), doc)


def test_report_document_of_exact_synthesis():
    mdp = two_path()
    doc = report_document(mdp, solve_exact(mdp))
    assert doc.method == "exact"
    assert doc.deterministic
    assert doc.feasible
    assert doc.cost == pytest.approx(1.5)
    assert doc.policy["s1"] == {"b": 1.0}
    assert doc.bounds["big_m_certified"] is True


def test_report_document_is_json_serializable():
    mdp = loop_exit()
    doc = report_document(mdp, synth_eps_optimal(mdp, 0.01))
    text = doc.model_dump_json()
    assert json.loads(text)["method"] == "eps"
