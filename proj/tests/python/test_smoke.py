import json
import os
from pathlib import Path

import pytest

import cpo

FIXTURES = Path(os.environ.get("CPO_FIXTURES", Path(__file__).resolve().parents[1] / "fixtures"))


def load(name):
    return json.loads((FIXTURES / "one_app" / name).read_text())


def test_optimize_fixture_costs_four():
    alloc = cpo.optimize(load("apps.json"), load("types.json"))
    assert alloc["algorithm"] == "ERICH"
    assert alloc["total_cost"] == pytest.approx(4.0)
    assert [s["app_id"] for s in alloc["assignment"]] == ["p"]


def test_georg_is_seeded():
    cfg = {"seed": 5, "max_generations": 3}
    a = cpo.optimize(load("apps.json"), load("types.json"), "georg", ga_config=cfg)
    b = cpo.optimize(load("apps.json"), load("types.json"), "georg", ga_config=cfg)
    assert a == b
    assert a["total_cost"] == pytest.approx(4.0)


def test_infeasible_app_raises():
    with pytest.raises(cpo.InfeasibleAppError, match="huge"):
        cpo.optimize(load("huge.json"), load("types.json"))


def test_bad_input_raises_value_error():
    apps = load("apps.json")
    apps[0]["finish"] = apps[0]["start"]
    with pytest.raises(ValueError):
        cpo.optimize(apps, load("types.json"))


def test_generated_case_validates():
    case = cpo.generate_case(1, seed=3)
    assert case["apps"] and case["types"]
    alloc = cpo.optimize(case["apps"], case["types"], q_min=case["q_min"])
    portfolio = {
        "id": "pf",
        "name": "case",
        "providers": ["AWS", "GoogleCloud", "Azure", "Alibaba"],
        "q_min": case["q_min"],
        "app_ids": [a["id"] for a in case["apps"]],
        "version": 1,
    }
    assert cpo.validate_allocation(alloc, portfolio, case["apps"]) == []
    assert cpo.generate_case(1, seed=3) == case


def test_catalog_filter_and_quantile():
    types = cpo.parse_catalog_csv(
        "provider,name,market,capacity,price_per_slot\n"
        "AWS,a,Spot,2,0.1\n"
        "Azure,b,OnDemand,8,1\n"
    )
    assert [t["name"] for t in cpo.filter_catalog(types, providers=["Azure"])] == ["b"]
    assert cpo.filter_catalog(types, min_capacity=4, max_price=0.5) == []
    assert cpo.normal_quantile(0.975) == pytest.approx(1.959963984540054, abs=1e-9)
    assert cpo.normal_cdf(0.0) == pytest.approx(0.5)


def test_bench_case_reports_both_algorithms():
    report = cpo.bench_case(1, repetitions=1, seed=2)
    assert {r["algorithm"] for r in report["results"]} == {"ERICH", "GEORG"}
