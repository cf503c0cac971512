"""
tests/test_data_loader.py — Device files, catalog names and line-numbered diagnostics.

Run with:
    pytest tests/test_data_loader.py -v
"""

from __future__ import annotations

import json

import pytest

from config import SAMPLES_DIR
from data_loader import (
    catalog_monoid,
    load_automaton,
    load_device,
    load_genmap,
    load_grammar,
    load_monoid,
    load_tree,
    load_witness,
    resolve_valence,
)
from errors import DeviceFileError, UnknownSymbolError, ValenceError
from grammars import ValenceGrammar
from machines import ValenceAutomaton, ValenceTransducer
from monoid import BICYCLIC, INT_VECTORS, GenMap, cyclic_group, identity, int_vectors

# ──────────────────────────────────────────────────────────────────────────────
# Helpers
# ──────────────────────────────────────────────────────────────────────────────

def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


AUTOMATON_WITH_BAD_EDGE = """{
  "monoid": "Z2",
  "alphabet": ["a", "b"],
  "states": ["q"],
  "initial": "q",
  "final": ["q"],
  "edges": [
    {"from": "q", "input": "a", "valence": "g", "to": "q"},
    {"from": "q", "input": "z", "to": "q"}
  ]
}
"""


# ──────────────────────────────────────────────────────────────────────────────
# Catalog names and monoid files
# ──────────────────────────────────────────────────────────────────────────────

class TestCatalog:
    @pytest.mark.parametrize("name, size", [("1", 1), ("Z2", 2), ("Z5", 5), ("S3", 6), ("T2", 4)])
    def test_finite_names(self, name, size):
        assert len(catalog_monoid(name).elements) == size

    def test_int_vectors(self):
        assert catalog_monoid("Z") == int_vectors(1)
        assert catalog_monoid("Z^3") == int_vectors(3)

    def test_bicyclic(self):
        assert catalog_monoid("B").kind == BICYCLIC
        assert catalog_monoid("B^2").power == 2

    @pytest.mark.parametrize("name", ["Q", "S", "Z-2"])
    def test_unknown(self, name):
        with pytest.raises(ValenceError):
            catalog_monoid(name)


class TestMonoidFiles:
    def test_samples(self):
        assert len(load_monoid(SAMPLES_DIR / "z2.json").elements) == 2
        assert load_monoid(SAMPLES_DIR / "z1.json").kind == INT_VECTORS
        assert load_monoid(SAMPLES_DIR / "bicyclic.json").kind == BICYCLIC

    def test_non_associative_table(self, tmp_path):
        path = write(tmp_path, "bad.json", json.dumps({
            "kind": "finite-table",
            "elements": ["1", "a", "b"],
            "identity": "1",
            "table": [["1", "a", "b"], ["a", "b", "b"], ["b", "1", "b"]],
        }, indent=2))
        with pytest.raises(DeviceFileError) as info:
            load_monoid(path)
        assert info.value.line == 9

    def test_missing_fields(self, tmp_path):
        path = write(tmp_path, "m.json", '{\n  "kind": "int-vectors"\n}\n')
        with pytest.raises(DeviceFileError) as info:
            load_monoid(path)
        assert "rank" in str(info.value)

    def test_broken_json_line(self, tmp_path):
        path = write(tmp_path, "m.json", '{\n  "kind": "bicyclic",\n  "power": \n}\n')
        with pytest.raises(DeviceFileError) as info:
            load_monoid(path)
        assert info.value.line == 4
        assert str(info.value).startswith(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(DeviceFileError):
            load_monoid(tmp_path / "absent.json")

    def test_genmap(self):
        Z1 = load_monoid(SAMPLES_DIR / "z1.json")
        gm = load_genmap(SAMPLES_DIR / "z1_genmap.json", Z1)
        assert gm.mapping == {"x1": (1,), "x2": (-1,)}


# ──────────────────────────────────────────────────────────────────────────────
# Valences
# ──────────────────────────────────────────────────────────────────────────────

class TestValences:
    def test_identity_default(self):
        Z2 = cyclic_group(2)
        assert resolve_valence(Z2, None, None) == identity(Z2)

    def test_generator_word(self):
        Z1 = int_vectors(1)
        gm = GenMap.of(Z1, {"inc": (1,), "dec": (-1,)})
        assert resolve_valence(Z1, gm, "inc inc dec") == (1,)
        assert resolve_valence(Z1, gm, ["inc", "inc"]) == (2,)
        assert resolve_valence(Z1, gm, [3]) == (3,)

    def test_table_literal_fallback(self):
        Z2 = cyclic_group(2)
        gm = GenMap.of(Z2, {"x": "g"})
        assert resolve_valence(Z2, gm, "g") == "g"

    def test_unknown_generator_over_infinite_monoid(self):
        Z1 = int_vectors(1)
        gm = GenMap.of(Z1, {"inc": (1,)})
        with pytest.raises(UnknownSymbolError):
            resolve_valence(Z1, gm, "dec")


# ──────────────────────────────────────────────────────────────────────────────
# Devices
# ──────────────────────────────────────────────────────────────────────────────

class TestDevices:
    def test_automaton_sample(self):
        A = load_automaton(SAMPLES_DIR / "z1_counter.json")
        assert A.states == ("q0", "q1")
        assert [e.valence for e in A.edges] == [(1,), (0,), (-1,)]

    def test_transducer_sample(self):
        assert isinstance(load_automaton(SAMPLES_DIR / "z2_swap_transducer.json"), ValenceTransducer)

    def test_edge_error_points_at_edge(self, tmp_path):
        path = write(tmp_path, "a.json", AUTOMATON_WITH_BAD_EDGE)
        with pytest.raises(DeviceFileError) as info:
            load_automaton(path)
        assert info.value.line == 9
        assert "edges[1]" in str(info.value)

    def test_schema_error_line(self, tmp_path):
        text = AUTOMATON_WITH_BAD_EDGE.replace('"states": ["q"]', '"states": []')
        path = write(tmp_path, "a.json", text)
        with pytest.raises(DeviceFileError) as info:
            load_automaton(path)
        assert info.value.line == 4

    def test_inline_monoid(self, tmp_path):
        path = write(tmp_path, "a.json", json.dumps({
            "monoid": {"kind": "int-vectors", "rank": 2},
            "alphabet": ["a"],
            "states": ["q"],
            "initial": "q",
            "final": ["q"],
            "edges": [{"from": "q", "input": "a", "valence": [1, -1], "to": "q"}],
        }))
        assert load_automaton(path).monoid == int_vectors(2)

    def test_grammar_error_points_at_production(self, tmp_path):
        path = write(tmp_path, "g.json", json.dumps({
            "monoid": "Z2",
            "nonterminals": ["S"],
            "terminals": ["a"],
            "start": "S",
            "productions": [{"lhs": "S", "rhs": "aS"}, {"lhs": "S", "rhs": "aQ"}],
        }, indent=2))
        with pytest.raises(DeviceFileError) as info:
            load_grammar(path)
        assert "productions[1]" in str(info.value)
        assert info.value.line == 16

    def test_tree_sample(self):
        tree = load_tree(SAMPLES_DIR / "z2_tree.json")
        assert tree.root == "r"
        assert tree.valences["b"] == "1"
        assert tree.valences["c"] == "g"

    def test_duplicate_tree_node(self, tmp_path):
        path = write(tmp_path, "t.json", json.dumps({
            "monoid": "Z2",
            "nodes": [{"id": "r"}, {"id": "r", "parent": "r"}],
        }))
        with pytest.raises(DeviceFileError):
            load_tree(path)

    def test_device_dispatch(self):
        assert isinstance(load_device(SAMPLES_DIR / "z2_even_a_grammar.json"), ValenceGrammar)
        assert isinstance(load_device(SAMPLES_DIR / "z2_even_a.json"), ValenceAutomaton)

    def test_witness_bad_kind(self, tmp_path):
        path = write(tmp_path, "w.json", json.dumps({"kind": "other", "monoid": "Z", "generators": {"x": [1]}}))
        with pytest.raises(DeviceFileError):
            load_witness(path)
