"""Scenario files, command dispatch, exit codes, and the REPL."""

import io
import json

import pytest

from surprise_engine import ScenarioError, bounds, feasible
from surprise_engine.cli import Repl, bundled_scenario, main
from surprise_engine.scenario import load_scenario, parse_scenario

CORPUS = ["hire.bel", "nixon.bel", "temperature.bel", "window.bel", "bunker.bel", "bird.bel"]


class TestScenarioParsing:
    def test_hire_loads(self):
        sc = load_scenario(bundled_scenario("hire.bel"))
        assert sc.frame.names == ("HIRE",)
        assert len(sc.constraints) == 2
        assert [name for name, _ in sc.queries] == ["hire", "no_hire"]

    def test_bunker_independence_toggle(self):
        on = load_scenario(bundled_scenario("bunker.bel"))
        off = load_scenario(bundled_scenario("bunker.bel"), {"independence": "off"})
        assert len(on.constraints) == 16
        assert len(off.constraints) == 14

    def test_constants_substituted(self):
        sc = load_scenario(bundled_scenario("bunker.bel"), {"c": "0.5"})
        assert sc.constraints[0].const == 0.5

    def test_empty_constraints_section_valid(self):
        sc = parse_scenario("""
[variables]
A: Yes, No

[constraints]

[queries]
a: Bel(A)
""")
        assert sc.constraints == []
        res = bounds(sc.system(), sc.queries[0][1])
        assert (res.lo, res.hi) == (pytest.approx(0.0, abs=1e-9), pytest.approx(1.0, abs=1e-9))

    def test_unknown_section_reports_line(self):
        with pytest.raises(ScenarioError) as err:
            parse_scenario("[variables]\nA: Yes, No\n[wat]\n")
        assert err.value.line == 3

    def test_bad_constraint_reports_line(self):
        with pytest.raises(ScenarioError) as err:
            parse_scenario("[variables]\nA: Yes, No\n\n[constraints]\nBel(B) = 1\n")
        assert err.value.line == 5

    def test_undeclared_when_flag(self):
        with pytest.raises(ScenarioError, match="undeclared flag"):
            parse_scenario("[variables]\nA: Yes, No\n[constraints]\nwhen foo: Bel(A) = 0\n")

    def test_missing_constant_named(self):
        with pytest.raises(ScenarioError, match="'k'"):
            parse_scenario("[variables]\nA: Yes, No\n[constraints]\nBel(A) = k\n")

    def test_no_variables_rejected(self):
        with pytest.raises(ScenarioError, match="no variables"):
            parse_scenario("[constraints]\n")

    def test_comments_and_blank_lines_ignored(self):
        sc = parse_scenario("""
# header comment
[variables]
A: Yes, No   # trailing comment

[constraints]
Bel(A) = 0   # another
""")
        assert len(sc.constraints) == 1

    def test_calibration_section(self):
        sc = parse_scenario("""
[variables]
A: Yes, No

[calibration]
51 vs 43 -> 4
""")
        assert sc.calibration is not None
        assert sc.calibration.to_surprise(51, 43) == 0.4


class TestCorpus:
    @pytest.mark.parametrize("name", CORPUS)
    def test_loads_and_checks(self, name):
        sc = load_scenario(bundled_scenario(name))
        assert feasible(sc.system()).feasible

    def test_every_query_answers(self):
        for name in ["hire.bel", "window.bel", "bird.bel"]:
            sc = load_scenario(bundled_scenario(name))
            system = sc.system()
            for _, term in sc.queries:
                res = bounds(system, term)
                assert 0.0 <= res.lo <= res.hi <= 1.0


class TestCli:
    def test_check_exit_codes(self, capsys, tmp_path):
        assert main(["check", str(bundled_scenario("hire.bel"))]) == 0
        assert "CHECK feasible" in capsys.readouterr().out
        bad = tmp_path / "bad.bel"
        bad.write_text("[variables]\nA: Yes, No\n[constraints]\nBel(A) = 0\nBel(A) = 1\n")
        assert main(["check", str(bad)]) == 1
        out = capsys.readouterr().out
        assert "CHECK infeasible" in out and "CONFLICT" in out

    def test_parse_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "broken.bel"
        bad.write_text("[variables]\nA Yes No\n")
        assert main(["check", str(bad)]) == 2
        assert "error" in capsys.readouterr().err

    def test_bounds_named_queries(self, capsys):
        assert main(["bounds", str(bundled_scenario("window.bel"))]) == 0
        out = capsys.readouterr().out
        assert "QUERY trio = [0.6, 0.6]" in out

    def test_bounds_ad_hoc_query(self, capsys):
        assert main(["bounds", str(bundled_scenario("hire.bel")), "Bel(HIRE)"]) == 0
        assert "[0, 0]" in capsys.readouterr().out

    def test_json_lines_format(self, capsys):
        assert main(["bounds", str(bundled_scenario("hire.bel")), "--format", "json-lines"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        for line in lines:
            record = json.loads(line)
            assert record["kind"] == "interval"
            assert 0.0 <= record["lo"] <= record["hi"] <= 1.0

    def test_mincommit_window(self, capsys):
        assert main(["mincommit", str(bundled_scenario("window.bel"))]) == 0
        out = capsys.readouterr().out
        assert "MASS" in out and "0.6" in out and "0.4" in out

    def test_classify_window(self, capsys):
        assert main(["classify", str(bundled_scenario("window.bel"))]) == 0
        out = capsys.readouterr().out
        assert "CLASSIFY vacuous = false" in out
        assert "CLASSIFY consonant = true" in out
        assert "CLASSIFY conjunctive = true" in out

    def test_surprise_bird(self, capsys):
        assert main(["surprise", str(bundled_scenario("bird.bel")),
                     "not FLY", "--given", "BIRD"]) == 0
        assert "[0.4, 0.4]" in capsys.readouterr().out

    def test_condition_window(self, capsys):
        assert main(["condition", str(bundled_scenario("window.bel")),
                     "not X=T and not X=J"]) == 0
        out = capsys.readouterr().out
        assert "MASS {(X=P)} = 0.6" in out

    def test_calibrate(self, capsys, tmp_path):
        f = tmp_path / "cal.bel"
        f.write_text("[variables]\nA: Yes, No\n\n[calibration]\n51 vs 43 -> 4\n")
        assert main(["calibrate", str(f), "51", "43"]) == 0
        assert "0.4" in capsys.readouterr().out

    def test_set_override(self, capsys):
        assert main(["bounds", str(bundled_scenario("bunker.bel")), "Bel(M | P)",
                     "--set", "independence=off"]) == 0
        assert "[0.6, 0.6]" in capsys.readouterr().out

    def test_output_is_stable(self, capsys):
        main(["bounds", str(bundled_scenario("window.bel"))])
        first = capsys.readouterr().out
        main(["bounds", str(bundled_scenario("window.bel"))])
        assert capsys.readouterr().out == first


def _run_repl(scenario_text, commands):
    sc = parse_scenario(scenario_text)
    out = io.StringIO()
    code = Repl(sc, stdin=io.StringIO("\n".join(commands) + "\n"), stdout=out).run()
    return code, out.getvalue()


RAIN_SCENARIO = """
[variables]
RAIN: Yes, No
WET: Yes, No
"""


class TestRepl:
    def test_assume_feasible_pair(self):
        code, out = _run_repl(RAIN_SCENARIO, [
            "assume Bel(RAIN | WET) = 0.4",
            "assume Bel(not RAIN | WET) = 0",
            "quit",
        ])
        assert code == 0
        assert out.count("ASSUMED") == 2
        assert "infeasible" not in out

    def test_contradiction_names_both_rows(self):
        code, out = _run_repl(RAIN_SCENARIO, [
            "assume Bel(RAIN) = 0.6",
            "assume Bel(RAIN) = 0.3",
            "quit",
        ])
        assert "CHECK infeasible" in out
        assert "CONFLICT 1: Bel(RAIN) = 0.6" in out
        assert "CONFLICT 2: Bel(RAIN) = 0.3" in out

    def test_retract_restores_feasibility(self):
        code, out = _run_repl(RAIN_SCENARIO, [
            "assume Bel(RAIN) = 0.6",
            "assume Bel(RAIN) = 0.3",
            "retract 2",
            "quit",
        ])
        assert "RETRACTED 2" in out
        assert out.rindex("CHECK feasible") > out.index("CHECK infeasible")

    def test_bounds_narrowing_report(self):
        code, out = _run_repl(RAIN_SCENARIO, [
            "bounds Bel(RAIN)",
            "assume Bel(RAIN) = 0.25",
            "quit",
        ])
        assert "QUERY Bel(RAIN) = [0, 1]" in out
        assert "NARROWED Bel(RAIN): [0, 1] -> [0.25, 0.25]" in out

    def test_malformed_input_keeps_state(self):
        code, out = _run_repl(RAIN_SCENARIO, [
            "assume Bel(RAIN = 1",
            "list",
            "quit",
        ])
        assert "ERROR" in out
        assert "1:" not in out.split("list")[-1] if "list" in out else True
        assert code == 0

    def test_batch_repl_equivalence(self, tmp_path):
        save_path = tmp_path / "session.bel"
        code, out = _run_repl(RAIN_SCENARIO, [
            "assume Bel(RAIN | WET) = 0.4",
            "assume Bel(not RAIN | WET) = 0",
            "bounds Bel(RAIN | WET)",
            "bounds Bel(not WET)",
            f"save {save_path}",
            "quit",
        ])
        saved = load_scenario(save_path)
        system = saved.system()
        repl_lines = [l for l in out.splitlines() if l.startswith("QUERY")]
        for (name, term), line in zip(saved.queries, repl_lines):
            res = bounds(system, term)
            value = f"[{res.lo:.9g}, {res.hi:.9g}]"
            assert line.endswith(value)
