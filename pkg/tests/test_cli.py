import json

import pytest

from reviewgraph.cli import main


@pytest.fixture
def data(corpus):
    return corpus.root


def test_query_csv(data, capsys):
    assert main(["query", str(data / "comparisons"), str(data / "queries" / "q02.rq")]) == 0
    out = capsys.readouterr().out
    assert "0.00572" in out and "0.00400" in out


def test_query_markdown_and_explain(data, capsys):
    assert main(["query", str(data / "comparisons"), str(data / "queries" / "q14.rq"), "--format", "md"]) == 0
    assert capsys.readouterr().out.startswith("|")
    assert main(["query", str(data / "comparisons"), str(data / "queries" / "q14.rq"), "--explain"]) == 0
    assert "bind:" in capsys.readouterr().out


def test_query_syntax_error(data, tmp_path, capsys):
    bad = tmp_path / "bad.rq"
    bad.write_text("SELECT ?x WHERE {")
    assert main(["query", str(data / "comparisons"), str(bad)]) == 2
    assert "line 1" in capsys.readouterr().err


def test_score(tmp_path, capsys):
    gold = tmp_path / "g.csv"
    gold.write_text("k,v\na,10\nb,20\n")
    pred = tmp_path / "p.csv"
    pred.write_text("k,v\na,10\nb,20\n")
    assert main(["score", str(pred), str(gold), "--percent"]) == 0
    assert "f1 100.0" in capsys.readouterr().out
    pred.write_text("k,v\na,9\n")
    assert main(["score", str(pred), str(gold), "--tau", "0.5", "--theta", "0.5"]) == 0
    out = capsys.readouterr().out
    assert "precision 0.8000" in out and "recall 0.4000" in out


def test_score_bad_table(tmp_path, capsys):
    gold = tmp_path / "g.csv"
    gold.write_text("k,v\na,10\n")
    pred = tmp_path / "p.txt"
    pred.write_text("just words")
    assert main(["score", str(pred), str(gold)]) == 2
    assert "error" in capsys.readouterr().err


def test_bench_sparql(data, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["bench", str(data / "manifest.json"), "--system", "sparql", "--out", str(out)]) == 0
    lines = (out / "report.csv").read_text().splitlines()
    assert lines[0] == "setting,model,#queries,RMS-prec,RMS-rec,RMS-F1"
    assert lines[1].endswith("100.0,100.0,100.0")
    assert json.loads((out / "per_query.json").read_text())["n_valid"] >= 19
    assert "100.0" in capsys.readouterr().out


def test_bench_echo_symbolic(data, tmp_path):
    providers = tmp_path / "providers.json"
    providers.write_text(json.dumps({"echo": {"kind": "gold-echo"}}))
    out = tmp_path / "run"
    args = ["bench", str(data / "manifest.json"), "--system", "symbolic_context:echo", "--providers", str(providers),
            "--out", str(out)]
    assert main(args) == 0
    assert (out / "report.csv").read_text().splitlines()[1].startswith("symbolic_context,echo,")
    assert len(list((out / "responses").glob("*.json"))) >= 19


def test_bench_self_check_failure(corpus, tmp_path, capsys):
    import shutil

    root = tmp_path / "data"
    shutil.copytree(corpus.root, root)
    gold = root / "gold" / "q02.csv"
    gold.write_text(gold.read_text().replace("0.00572", "0.9"))
    assert main(["bench", str(root / "manifest.json"), "--system", "sparql", "--out", str(tmp_path / "o")]) == 1
    assert "self-check" in capsys.readouterr().err


def test_agree(tmp_path, capsys):
    f = tmp_path / "r.csv"
    rows = ["item,rater,rating"]
    for i, (a, b, c) in enumerate([(1, 1, 1), (2, 2, 2), (3, 3, 4), (5, 5, 5)]):
        rows += [f"q{i},A,{a}", f"q{i},B,{b}", f"q{i},C,{c}"]
    f.write_text("\n".join(rows) + "\n")
    assert main(["agree", str(f), "--stat", "exact", "--raters", "A,B"]) == 0
    assert capsys.readouterr().out.strip() == "1.000"
    assert main(["agree", str(f), "--stat", "cohen", "--raters", "A,C"]) == 0
    assert float(capsys.readouterr().out) < 1
    assert main(["agree", str(f), "--stat", "fleiss"]) == 0
    assert main(["agree", str(f), "--stat", "alpha"]) == 0
    assert main(["agree", str(f), "--stat", "cohen", "--raters", "A"]) == 2
