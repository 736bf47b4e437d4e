import numpy as np
import pytest

from combpricing.core import brute_force_cpp, brute_force_kip, items_of
from combpricing.diagrams import dd_full, make_grouping, sd_full, vf_diagram
from combpricing.milp import milp_solve
from combpricing.problems import generate_kip, generate_kpp, generate_maxsspp, generate_minscpp
from combpricing.reformulate import (TollFreeCoverError, build_kip_master, build_master,
                                     mccormick_bounds, primal_constraints)

# arc inequalities y_src >= rhs - sum(t_i) + y_dst on the four-item knapsack
SD_FULL_ROWS = {
    ("", "1", (1,), 1), ("", "2", (2,), 1), ("", "3", (3,), 1), ("", "4", (), 1),
    ("1", "12", (2,), 1), ("2", "12", (1,), 1), ("3", "13", (1,), 1), ("4", "14", (1,), 1),
    ("1", "13", (3,), 1), ("2", "23", (3,), 1), ("3", "23", (2,), 1), ("4", "24", (2,), 1),
    ("1", "14", (), 1), ("2", "24", (), 1), ("3", "34", (), 1), ("4", "34", (3,), 1),
    ("12", "123", (3,), 1), ("13", "123", (2,), 1), ("23", "123", (1,), 1),
    ("14", "q", (), 0), ("24", "q", (), 0), ("34", "q", (), 0), ("123", "q", (), 0),
}
DD_FULL_ROWS = {
    ("0,3", "1,3", (), 0), ("0,3", "1,2", (1,), 1), ("2,1", "3,1", (), 0), ("2,1", "3,0", (3,), 1),
    ("1,2", "2,2", (), 0), ("1,2", "2,1", (2,), 1), ("2,2", "3,2", (), 0), ("2,2", "3,1", (3,), 1),
    ("1,3", "2,3", (), 0), ("1,3", "2,2", (2,), 1), ("3,0", "q", (), 0), ("2,3", "3,2", (3,), 1),
    ("3,1", "q", (), 0), ("3,2", "q", (), 1),
}


def _rows_as_display(spec, diagram, label):
    node_of = {j: nid for nid, j in spec.y.items()}
    item_of = {j: i for i, j in spec.t.items()}
    out = set()
    for c in spec.arc_rows():
        assert c.sense == ">="
        src = dst = None
        tolls = []
        for j, a in c.coef.items():
            if j in node_of:
                if a == 1:
                    src = node_of[j]
                else:
                    assert a == -1
                    dst = node_of[j]
            else:
                assert a == 1
                tolls.append(item_of[j] + 1)
        if dst is None:  # y_q is fixed at 0 but still appears in the row
            dst = diagram.q
        out.add((label(src), label(dst), tuple(sorted(tolls)), c.rhs))
    return out


def test_sd_full_rows_verbatim(knap4):
    d = sd_full(knap4)
    spec = build_master(knap4, d)

    def label(nid):
        return "q" if nid == d.q else "".join(str(i + 1) for i in items_of(d.nodes[nid].state))

    assert len(spec.arc_rows()) == 23
    assert _rows_as_display(spec, d, label) == SD_FULL_ROWS


def test_dd_full_rows_verbatim(knap4):
    d = dd_full(knap4)
    spec = build_master(knap4, d)

    def label(nid):
        return "q" if nid == d.q else f"{d.nodes[nid].layer},{d.nodes[nid].state}"

    assert len(spec.arc_rows()) == 14
    assert _rows_as_display(spec, d, label) == DD_FULL_ROWS


def test_master_structure(knap4):
    spec = build_master(knap4, vf_diagram(knap4))
    names = [c.name for c in spec.constraints]
    assert names.count("duality") == 1
    assert names.count("mc_upper") == names.count("mc_lower") == names.count("mc_gap") == 3
    assert names.count("primal") == 1
    assert spec.maximize and set(spec.objective) == set(spec.s.values())
    yq = spec.variables[spec.y[1]]
    assert yq.lb == yq.ub == 0
    lp = spec.to_lp()
    assert lp.startswith("Maximize") and "Binaries" in lp and lp.rstrip().endswith("End")
    assert " y_p free" in lp and " y_q = 0" in lp


def test_mccormick_max_sense(knap4):
    assert mccormick_bounds(knap4).tolist() == [1, 1, 1, 0]


def test_mccormick_min_sense_by_hand(cover5):
    # item 1 {a,b}: P = 5 - 1 (cover {a,b} by {a,c},{b,c,d}); Q = 5 - 3 - 1
    # item 5 {c}:   P = 2 - 1 ({a,c});                          Q = 5 - 3 - 1
    assert mccormick_bounds(cover5).tolist() == [1, 0, 0, 0, 1]


def test_mccormick_requires_toll_free_cover():
    from combpricing.core import PricingInstance
    from combpricing.problems import SetCoverData
    inst = PricingInstance("minscpp", [1, 1], (0,), SetCoverData(2, [(0,), (1,)]))
    with pytest.raises(TollFreeCoverError):
        mccormick_bounds(inst)


def test_primal_rows(knap4, pentagon, cover5):
    assert primal_constraints(knap4) == [({0: 1, 1: 1, 2: 1, 3: 2}, "<=", 3)]
    assert len(primal_constraints(pentagon)) == 6
    rows = primal_constraints(cover5)
    assert len(rows) == 4 and all(s == ">=" for _, s, _ in rows)


@pytest.mark.parametrize("make", [lambda s: generate_kpp(7, 0.5, s), lambda s: generate_maxsspp(7, 0.3, s),
                                  lambda s: generate_minscpp(6, 1.0, s)])
def test_full_diagram_master_matches_oracle(make):
    for seed in range(8):
        inst = make(seed)
        ref = brute_force_cpp(inst).revenue
        grouping = make_grouping(inst.n, 3, np.random.default_rng(seed))
        for d in (sd_full(inst), dd_full(inst), dd_full(inst, grouping=grouping)):
            sol = milp_solve(build_master(inst, d).to_milp())
            assert sol.status == "optimal"
            assert sol.objective == pytest.approx(ref, abs=1e-6)


def test_full_diagram_kip_master_matches_oracle():
    for seed in range(8):
        inst = generate_kip(7, seed)
        ref = brute_force_kip(inst).objective
        for d in (sd_full(inst), dd_full(inst)):
            spec = build_kip_master(inst, d)
            assert spec.variables[spec.y[d.p]].lb == 0
            sol = milp_solve(spec.to_milp())
            assert sol.objective == pytest.approx(ref, abs=1e-6)
