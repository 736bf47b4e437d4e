import json
import os

import pytest

from combpricing.cli import main, parse_method
from combpricing.driver import MethodConfig, solve
from combpricing.io import (InstanceFormatError, dumps_instance, format_rows, geometric_mean, load_instance,
                            loads_instance, parse_rows, result_row, summarize)
from combpricing.problems import generate_kip, generate_kpp, generate_maxsspp, generate_minscpp


def test_round_trip_all_problems(knap4, pentagon, cover5):
    for inst in (knap4, pentagon, cover5, generate_kpp(12, 0.5, 1), generate_maxsspp(12, 0.2, 1),
                 generate_minscpp(10, 1.0, 1), generate_kip(8, 1)):
        text = dumps_instance(inst)
        back = loads_instance(text)
        assert back == inst
        assert dumps_instance(back) == text


def test_bad_documents_rejected():
    with pytest.raises(InstanceFormatError):
        loads_instance("{not json")
    doc = json.loads(dumps_instance(generate_kpp(5, 0.5, 0)))
    doc["problem"] = "tsp"
    with pytest.raises(InstanceFormatError):
        loads_instance(json.dumps(doc))
    doc = json.loads(dumps_instance(generate_minscpp(5, 1.0, 0)))
    doc["payload"]["sets"] = [[] for _ in doc["payload"]["sets"]]
    with pytest.raises(InstanceFormatError):
        loads_instance(json.dumps(doc))


def test_generate_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["generate", "kpp", "--n", "10", "--count", "3", "--seed", "4", "--out", str(out)]) == 0
    names = sorted(os.listdir(a))
    assert len(names) == 3 and names == sorted(os.listdir(b))
    for nm in names:
        assert (a / nm).read_bytes() == (b / nm).read_bytes()
    assert load_instance(a / names[0]) == generate_kpp(10, 0.5, 4)


def test_generate_count_zero(tmp_path):
    assert main(["generate", "maxsspp", "--n", "8", "--count", "0", "--out", str(tmp_path)]) == 0
    assert os.listdir(tmp_path) == []


def _write(tmp_path, inst, name="inst.json"):
    p = tmp_path / name
    p.write_text(dumps_instance(inst))
    return str(p)


def test_solve_exit_codes_and_solution(tmp_path, knap4, capsys):
    f = _write(tmp_path, knap4)
    sol = tmp_path / "sol.json"
    assert main(["solve", f, "--method", "dd", "--width", "2", "--solution", str(sol)]) == 0
    rows = parse_rows(capsys.readouterr().out)
    assert rows[0].objective == pytest.approx(1.5) and rows[0].status == "optimal"
    doc = json.loads(sol.read_text())
    assert doc["verified"] and doc["response"] == [0, 1, 2]
    big = _write(tmp_path, generate_kip(12, 3), "kip.json")
    assert main(["solve", big, "--node-limit", "1"]) == 2
    assert main(["solve", str(tmp_path / "missing.json")]) == 1
    assert main(["solve", f, "--method", "dd", "--layers", "9"]) == 1


def test_oracle(tmp_path, knap4, capsys):
    f = _write(tmp_path, knap4)
    assert main(["oracle", f]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[1].split(",")[2] == "1.5"
    big = _write(tmp_path, generate_kpp(25, 0.5, 0), "big.json")
    assert main(["oracle", big]) == 1


def test_parse_method():
    assert parse_method("vf") == {"method": "vf"}
    assert parse_method("sd:3") == {"method": "sd", "pairs": 3}
    assert parse_method("dd:4:half") == {"method": "dd", "width": 4, "layers": "half"}
    with pytest.raises(ValueError):
        parse_method("dd")


def test_bench_rows_and_summary(tmp_path, capsys):
    for s in range(2):
        _write(tmp_path, generate_kpp(7, 0.5, s), f"k{s}.json")
    out = tmp_path / "res.csv"
    assert main(["bench", str(tmp_path / "k*.json"), "--methods", "vf,sd:2,dd:2:half",
                 "--out", str(out)]) == 0
    rows = parse_rows(out.read_text())
    assert len(rows) == 6
    # the written summary can be recomputed from the raw rows
    summary_file = tmp_path / "res_summary.csv"
    from combpricing.io import format_summary
    assert summary_file.read_text() == format_summary(summarize(rows))
    objs = {}
    for r in rows:
        objs.setdefault(r.instance, set()).add(round(r.objective, 6))
    assert all(len(v) == 1 for v in objs.values())


def test_geometric_mean():
    assert geometric_mean([1, 4]) == pytest.approx(2)
    assert geometric_mean([0.01, 4]) == pytest.approx(2)


def test_result_row_round_trip(knap4):
    cfg = MethodConfig("dd", width=2)
    row = result_row("ex", cfg, solve(knap4, cfg))
    assert parse_rows(format_rows([row]))[0].objective == pytest.approx(row.objective)


def test_diagram_dot(tmp_path, knap4, capsys):
    f = _write(tmp_path, knap4)
    assert main(["diagram", f]) == 0
    text = capsys.readouterr().out
    assert text.startswith("digraph") and text.count("[label=") == 2
    assert main(["diagram", f, "--method", "sd", "--pairs", "2", "--seed", "5"]) == 0
    assert capsys.readouterr().out.count("->") == 7


def test_difficulty_cli(tmp_path, knap4, capsys):
    f = _write(tmp_path, knap4)
    assert main(["difficulty", f]) == 0
    line = capsys.readouterr().out.splitlines()[1].split(",")
    assert [float(x) for x in line[1:]] == pytest.approx([3, 1, 1.5, 4 / 3])
