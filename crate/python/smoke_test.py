"""Exercise the schemeflow extension module end to end."""

import json
import sys

import schemeflow as sf

FIG = "(let ((f (lambda (x) x))) (let ((a (f #t)) (b (f #f))) (if a 4 5)))"


def applied(result):
    return {row.split("\t")[0] for row in result.rows("state_a")}


def main():
    prog = sf.Program.parse(FIG)
    assert len(prog) > 0
    assert prog.facts()["top_exp"] == [["e0"]]

    r0 = sf.analyze(prog, sf.Config(m=0))
    assert r0.values_at("(VAddr x (Context))") == ["(Bool #f)", "(Bool #t)"]
    assert {"(Number 4)", "(Number 5)"} <= applied(r0)

    r1 = sf.analyze(prog, sf.Config(m=1))
    assert "(Number 4)" in applied(r1) and "(Number 5)" not in applied(r1)

    for m in range(3):
        for mode in ("both-branches", "appendix-exact"):
            cfg = sf.Config(m=m, truthiness=mode)
            assert sf.diff(prog, cfg, flows=True) is None, (m, mode)
            assert sf.analyze(prog, cfg) == sf.run_oracle(prog, cfg)

    back = sf.Result.from_json(r1.to_json())
    assert back == r1
    assert json.loads(r1.to_json())["state_e"]

    vh = sf.Program.parse(sf.gen_vanhorn())
    assert sf.diff(vh, sf.Config(m=1)) is None
    term = sf.gen_term(4, 1, 0)
    counts = sf.analyze(sf.Program.parse(term), sf.Config(m=1)).counts()
    assert counts["stored_val"] > 0

    try:
        sf.Program.parse("(let () 1)")
    except sf.ParseError as e:
        assert "1:" in str(e)
    else:
        raise AssertionError("expected a parse error")

    loop = sf.Program.parse("((lambda (g) (g g 0)) (lambda (self n) (self self (+ n 1))))")
    sf.analyze(loop)
    try:
        sf.analyze(loop, sf.Config(strict_appendix=True, fact_ceiling=20000))
    except sf.CeilingError:
        pass
    else:
        raise AssertionError("expected the ceiling to trip")

    print("smoke test passed", file=sys.stderr)


if __name__ == "__main__":
    main()
