"""Smoke test for the compiled `specnorm` extension.

Build it first:

    cargo build --release -p specnorm-py --features extension-module
    cp target/release/libspecnorm_py.so python/specnorm.so
"""

import json
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent))

import specnorm  # noqa: E402

BOOLEAN_SQUARE = json.dumps(
    {
        "elements": ["0", "a", "b", "ab"],
        "leq": [["0", "a"], ["0", "b"], ["a", "ab"], ["b", "ab"]],
        "zero": "0",
    }
)

V_DOWNSETS = json.dumps(
    {
        "elements": ["0", "p", "pq", "pr", "pqr"],
        "leq": [["0", "p"], ["p", "pq"], ["p", "pr"], ["pq", "pqr"], ["pr", "pqr"]],
        "zero": "0",
    }
)


def check_entailment():
    holds, cert = specnorm.entail('[{"x": "1"}]', '[{"x": "2"}, {"y": "1"}]')
    assert holds and "farkas" in json.loads(cert)
    holds, cert = specnorm.entail('[{"x": "1"}]', '[{"y": "1"}]')
    assert not holds and "witness" in json.loads(cert)


def check_terms():
    term = '{"or": [{"and": [{"x": "2"}]}, {"and": [{"x": "1"}, {"y": "1"}]}]}'
    canon = json.loads(specnorm.canonicalize(term))
    assert canon == {"or": [{"and": [{"x": "1"}]}]}, canon
    holds, witness = specnorm.leq(
        '{"or": [{"and": [{"x": "1"}]}]}', '{"or": [{"and": [{"y": "1"}]}]}'
    )
    assert not holds and witness is not None


def check_lattices():
    sq = specnorm.Lattice(BOOLEAN_SQUARE)
    assert len(sq) == 4
    assert sq.join("a", "b") == "ab" and sq.meet("a", "b") == "0"
    assert sq.is_distributive() and sq.is_completely_normal()
    assert sq.to_dot().count("->") == 4
    v = specnorm.Lattice(V_DOWNSETS)
    assert v.cn_counterexample() == ("pq", "pr")
    try:
        specnorm.Lattice('{"elements": ["0", "1"], "leq": [], "zero": "0"}')
    except ValueError:
        pass
    else:
        raise AssertionError("an order without a join was accepted")


def check_construction():
    trace = specnorm.construct(BOOLEAN_SQUARE, stages=24, seed=7)
    header = json.loads(trace.splitlines()[0])
    assert header["format"] == specnorm.FORMAT
    report = json.loads(specnorm.verify_trace(trace))
    assert report["ok"] and report["surjective"] and report["coherent"], report
    hom = {
        "target": json.loads(BOOLEAN_SQUARE),
        "generators": [{"o": "1"}, {"o": "-1"}],
        "values": {"0": "a", "1": "b"},
    }
    assert specnorm.hom_coherent(json.dumps(hom))
    hom["values"] = {"0": "a", "1": "a"}
    assert not specnorm.hom_coherent(json.dumps(hom))


if __name__ == "__main__":
    for check in (check_entailment, check_terms, check_lattices, check_construction):
        check()
        print(f"ok  {check.__name__}")
