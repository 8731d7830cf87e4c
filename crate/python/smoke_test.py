"""Quick end-to-end check of the Python bindings on a small experiment."""

import math
import sys
import tempfile

import promowall


def main() -> int:
    h = promowall.dropout_hazard(0.5, 0.5, -3.0, 3.5, -2.5)
    assert math.isclose(h, 1.0 / (1.0 + math.exp(-(-3.0 + 1.75 - 1.25))), rel_tol=1e-12)
    assert promowall.rmse([0.1, 0.2], [0.1, 0.2]) == 0.0

    exp = promowall.Experiment(overrides={"cohort_size": 200, "replications_per_scenario": 2})
    assert exp.cohort_size == 200
    run = exp.run()
    assert run.agent_count == 200 * 3 * 2

    rows = {r["scenario"]: r for r in run.summary()}
    assert set(rows) == {"A_HISTORICAL", "B_DIRECT_PROMOTION", "C_SAFETY_NET"}
    assert rows["B_DIRECT_PROMOTION"]["mean_final_debt"] == 0.0

    curve = run.yearly_dropout("A_HISTORICAL")
    assert len(curve) == 6 and all(a <= b for a, b in zip(curve, curve[1:]))
    assert len(run.trajectories("C")["mean_stress_active"]) == 12

    with tempfile.TemporaryDirectory() as d:
        run.write(d)
        report = promowall.audit(d)
        names = [c["name"] for c in report["checks"]]
        assert "dropout_curve_consistency" in names
        assert report["checks"][names.index("row_count")]["status"] == "pass"

    try:
        promowall.Experiment(overrides={"cohort_size": 0})
    except ValueError:
        pass
    else:
        raise AssertionError("invalid config accepted")

    for name, r in rows.items():
        print(f"{name:<20} dropout {r['overall_dropout_rate']:.3f} gap {r['equity_gap_low_vs_high_resilience']:.3f}")
    print("smoke test ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
