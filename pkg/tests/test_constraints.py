"""Constraint parsing, compilation, feasibility, bounds, minimum
commitment, and surprise reports."""

import random

import numpy as np
import pytest

from surprise_engine import (
    BelTerm,
    CompileError,
    ConstraintError,
    MassFunction,
    ProductFrame,
    QueryUndefinedEverywhere,
    bounds,
    compile_constraints,
    conflict_core,
    constraint_satisfied,
    evaluate_term,
    extension,
    feasible,
    leq_committed,
    lower_envelope,
    mincommit,
    parse_constraint,
    parse_formula,
    surprise_report,
)
from surprise_engine.errors import ConditioningUndefined
from conftest import random_frame, random_mass, random_subset


@pytest.fixture
def hire_frame():
    return ProductFrame([("HIRE", ("Yes", "No"))])


@pytest.fixture
def hire_system(hire_frame):
    cons = [parse_constraint("Bel(HIRE) = 0", hire_frame),
            parse_constraint("Bel(not HIRE) = 0", hire_frame)]
    return compile_constraints(cons, hire_frame)


def term(frame, target, evidence=None):
    return BelTerm(parse_formula(target, frame),
                   None if evidence is None else parse_formula(evidence, frame))


class TestParsing:
    def test_simple_equality(self, hire_frame):
        con = parse_constraint("Bel(not HIRE) = 0.3", hire_frame)
        assert con.relop == "=" and con.const == 0.3
        assert len(con.terms) == 1 and con.terms[0][0] == 1.0

    def test_conditional_with_constant(self):
        frame = ProductFrame([("M", ("Yes", "No")), ("P", ("Yes", "No"))])
        con = parse_constraint("Bel(M | P) = c", frame, {"c": 0.6})
        assert con.const == 0.6
        assert con.terms[0][1].evidence is not None

    def test_unresolved_constant(self):
        frame = ProductFrame([("M", ("Yes", "No"))])
        with pytest.raises(ConstraintError, match="has no value"):
            parse_constraint("Bel(M) = c", frame)

    def test_linear_combination(self):
        frame = ProductFrame([("TEMP", ("low", "med", "high"))])
        con = parse_constraint(
            "Bel(TEMP=med or TEMP=low) > Bel(TEMP=med) + Bel(TEMP=low)", frame)
        assert con.relop == ">" and con.const == 0.0
        assert sorted(c for c, _ in con.terms) == [-1.0, -1.0, 1.0]

    def test_equality_between_terms(self):
        frame = ProductFrame([("PARTY", ("Yes", "No")), ("RAIN", ("Yes", "No"))])
        con = parse_constraint("Bel(PARTY) = Bel(PARTY | RAIN)", frame)
        assert con.const == 0.0
        assert sorted(c for c, _ in con.terms) == [-1.0, 1.0]

    def test_coefficients(self, hire_frame):
        con = parse_constraint("0.5 * Bel(HIRE) + 0.25 <= 1", hire_frame)
        assert con.terms[0][0] == 0.5
        assert con.const == 0.75

    def test_rejects_missing_relop(self, hire_frame):
        with pytest.raises(ConstraintError, match="exactly one relational"):
            parse_constraint("Bel(HIRE) + 0.2", hire_frame)

    def test_rejects_no_term(self, hire_frame):
        with pytest.raises(ConstraintError):
            parse_constraint("0.3 = 0.3", hire_frame)

    def test_double_bar_rejected(self, hire_frame):
        with pytest.raises(ConstraintError, match="more than one"):
            parse_constraint("Bel(HIRE | HIRE | HIRE) = 1", hire_frame)

    def test_formula_errors_surface(self, hire_frame):
        with pytest.raises(ConstraintError, match="unknown variable"):
            parse_constraint("Bel(FIRE) = 1", hire_frame)


class TestCompile:
    def test_unconditional_single_row(self, hire_frame):
        con = parse_constraint("Bel(not HIRE) = 0.3", hire_frame)
        system = compile_constraints([con], hire_frame)
        assert len(system.static_rows) == 1 and not system.param_rows
        row = system.static_rows[0]
        # Bel(not HIRE) sums masses of subsets of {No}: index 0b10
        expected = np.zeros(4)
        expected[0] = expected[2] = 1.0
        assert np.array_equal(row.coeffs, expected)
        assert row.relop == "=" and row.const == 0.3

    def test_conditional_cleared_row_matches_oracle(self, rng):
        # Row satisfaction must coincide with condition()+belief() values.
        frame = ProductFrame([("M", ("Yes", "No")), ("P", ("Yes", "No"))])
        for _ in range(50):
            m = random_mass(frame, rng)
            evidence = extension(frame, parse_formula("P", frame))
            try:
                c = m.condition(evidence).belief(extension(frame, parse_formula("M", frame)))
            except ConditioningUndefined:
                continue
            con = parse_constraint(f"Bel(M | P) = {c!r}", frame)
            system = compile_constraints([con], frame)
            vec = m.to_vector()
            row = system.static_rows[0]
            assert abs(float(row.coeffs @ vec) - row.const) <= 1e-9

    def test_parameter_introduced_for_term_equality(self):
        frame = ProductFrame([("PARTY", ("Yes", "No")), ("RAIN", ("Yes", "No"))])
        con = parse_constraint("Bel(PARTY) = Bel(PARTY | RAIN)", frame)
        system = compile_constraints([con], frame)
        assert system.num_params == 1
        assert len(system.param_rows) == 2

    def test_parameter_budget(self):
        frame = ProductFrame([(v, ("Yes", "No")) for v in ("A", "B", "C")])
        cons = [parse_constraint(f"Bel(A | {v}) = Bel(A)", frame) for v in ("A", "B", "C")]
        with pytest.raises(CompileError, match="parameters"):
            compile_constraints(cons, frame, max_parameters=2)

    def test_nonlinear_mixture_rejected(self):
        frame = ProductFrame([("A", ("Yes", "No")), ("B", ("Yes", "No"))])
        con = parse_constraint("Bel(A | B) + Bel(A) <= 0.9", frame)
        with pytest.raises(CompileError, match="nonlinear"):
            compile_constraints([con], frame)

    def test_guard_rows_present(self):
        frame = ProductFrame([("M", ("Yes", "No")), ("P", ("Yes", "No"))])
        con = parse_constraint("Bel(M | P) = 0.6", frame)
        system = compile_constraints([con], frame)
        guards = [r for r in system.static_rows if isinstance(r.origin, str)]
        assert len(guards) == 1
        assert guards[0].relop == "<=" and guards[0].const == pytest.approx(1 - 1e-9)

    def test_strict_rows_get_slack(self, hire_frame):
        con = parse_constraint("Bel(HIRE) > 0", hire_frame)
        system = compile_constraints([con], hire_frame)
        row = system.static_rows[0]
        assert row.relop == ">=" and row.const == pytest.approx(1e-6) and row.strict

    def test_theta_cap(self):
        frame = ProductFrame([(f"V{i}", ("Yes", "No")) for i in range(13)])
        with pytest.raises(Exception, match="cap"):
            compile_constraints([], frame)


class TestFeasibility:
    def test_hire_feasible_with_vacuous_witness(self, hire_system):
        res = feasible(hire_system)
        assert res.feasible and res.witness.is_vacuous()

    def test_nixon_strict_positives(self):
        frame = ProductFrame([("PAC", ("Yes", "No"))])
        cons = [parse_constraint("Bel(PAC) > 0", frame),
                parse_constraint("Bel(not PAC) > 0", frame)]
        res = feasible(compile_constraints(cons, frame))
        assert res.feasible
        pac = extension(frame, parse_formula("PAC", frame))
        assert res.witness.belief(pac) > 0
        assert res.witness.belief(~pac) > 0

    def test_additivity_breaks_hire(self, hire_frame):
        cons = [parse_constraint("Bel(HIRE) = 0", hire_frame),
                parse_constraint("Bel(not HIRE) = 0", hire_frame),
                parse_constraint("Bel(HIRE) + Bel(not HIRE) = 1", hire_frame)]
        assert not feasible(compile_constraints(cons, hire_frame)).feasible

    def test_witness_satisfies_all_constraints(self, rng):
        for _ in range(20):
            frame = random_frame(rng, max_points=6)
            anchor = random_mass(frame, rng)
            cons = []
            for _ in range(rng.randint(1, 4)):
                s = random_subset(frame, rng)
                value = anchor.belief(s)
                text_op = rng.choice(["=", "<=", ">="])
                cons.append(parse_constraint(
                    f"Bel({_subset_formula(frame, s)}) {text_op} {value!r}", frame))
            system = compile_constraints(cons, frame)
            res = feasible(system)
            assert res.feasible  # anchor itself satisfies everything
            for con in cons:
                assert constraint_satisfied(res.witness, con)


def _subset_formula(frame, subset):
    """Any formula whose extension is the subset (disjunction of points)."""
    if subset.is_empty():
        name = frame.names[0]
        v = frame.values(name)[0]
        return f"({name}={v} and not {name}={v})"
    parts = []
    for p in subset.points():
        values = frame.point_values(p)
        conj = " and ".join(f"{n}={v}" for n, v in zip(frame.names, values))
        parts.append(f"({conj})")
    return " or ".join(parts)


class TestBounds:
    def test_empty_system_unit_interval(self, hire_frame):
        system = compile_constraints([], hire_frame)
        res = bounds(system, term(hire_frame, "HIRE"))
        assert res.lo == pytest.approx(0.0, abs=1e-9)
        assert res.hi == pytest.approx(1.0, abs=1e-9)

    def test_tautology_pinned_to_one(self, hire_system):
        res = bounds(hire_system, term(hire_system.frame, "HIRE or not HIRE"))
        assert res.lo == pytest.approx(1.0, abs=1e-9) and res.hi == pytest.approx(1.0, abs=1e-9)

    def test_contradiction_pinned_to_zero(self, hire_system):
        res = bounds(hire_system, term(hire_system.frame, "HIRE and not HIRE"))
        assert res.lo == pytest.approx(0.0, abs=1e-9) and res.hi == pytest.approx(0.0, abs=1e-9)

    def test_witnesses_attain_reported_bounds(self, rng):
        for _ in range(15):
            frame = random_frame(rng, max_points=6)
            anchor = random_mass(frame, rng)
            cons = []
            for _ in range(rng.randint(1, 3)):
                s = random_subset(frame, rng)
                cons.append(parse_constraint(
                    f"Bel({_subset_formula(frame, s)}) <= {anchor.belief(s)!r}", frame))
            system = compile_constraints(cons, frame)
            q = term(frame, _subset_formula(frame, random_subset(frame, rng, nonempty=True)))
            res = bounds(system, q)
            assert evaluate_term(res.witness_lo, q) == pytest.approx(res.lo, abs=1e-6)
            assert evaluate_term(res.witness_hi, q) == pytest.approx(res.hi, abs=1e-6)
            assert res.lo <= res.hi + 1e-12

    def test_adding_constraints_never_widens(self, rng):
        for _ in range(10):
            frame = random_frame(rng, max_points=6)
            anchor = random_mass(frame, rng)
            q = term(frame, _subset_formula(frame, random_subset(frame, rng, nonempty=True)))
            cons = []
            prev = None
            for _ in range(3):
                s = random_subset(frame, rng)
                op = rng.choice(["<=", ">="])
                cons.append(parse_constraint(
                    f"Bel({_subset_formula(frame, s)}) {op} {anchor.belief(s)!r}", frame))
                res = bounds(compile_constraints(cons, frame), q)
                if prev is not None:
                    assert res.lo >= prev.lo - 1e-6
                    assert res.hi <= prev.hi + 1e-6
                prev = res

    def test_tautology_rows_preserved_alongside_other_constraints(self):
        # systems carrying the canonical tautology/contradiction rows keep
        # them pinned no matter what else is asserted
        frame = ProductFrame([("HIRE", ("Yes", "No"))])
        cons = [parse_constraint("Bel(HIRE or not HIRE) = 1", frame),
                parse_constraint("Bel(HIRE and not HIRE) = 0", frame),
                parse_constraint("Bel(HIRE) <= 0.3", frame)]
        system = compile_constraints(cons, frame)
        assert feasible(system).feasible
        taut = bounds(system, term(frame, "HIRE or not HIRE"))
        contra = bounds(system, term(frame, "HIRE and not HIRE"))
        assert (taut.lo, taut.hi) == (pytest.approx(1.0, abs=1e-9), pytest.approx(1.0, abs=1e-9))
        assert (contra.lo, contra.hi) == (pytest.approx(0.0, abs=1e-9), pytest.approx(0.0, abs=1e-9))

    def test_conditional_query_by_bisection(self):
        frame = ProductFrame([("M", ("Yes", "No")), ("P", ("Yes", "No"))])
        cons = [parse_constraint("Bel(M | P) = 0.6", frame)]
        system = compile_constraints(cons, frame)
        res = bounds(system, term(frame, "M", "P"))
        assert res.lo == pytest.approx(0.6, abs=1e-4)
        assert res.hi == pytest.approx(0.6, abs=1e-4)

    def test_query_undefined_everywhere(self):
        frame = ProductFrame([("A", ("Yes", "No"))])
        cons = [parse_constraint("Bel(not A) = 1", frame)]
        system = compile_constraints(cons, frame)
        with pytest.raises(QueryUndefinedEverywhere):
            bounds(system, term(frame, "A", "A"))

    def test_strict_bound_marks_open_endpoint(self):
        frame = ProductFrame([("A", ("Yes", "No"))])
        cons = [parse_constraint("Bel(A) < 0.5", frame)]
        system = compile_constraints(cons, frame)
        res = bounds(system, term(frame, "A"))
        assert res.hi == pytest.approx(0.5, abs=1e-5)
        assert res.hi_open


class TestCompilerOracleEquivalence:
    def test_rows_agree_with_conditioning_oracle(self, rng):
        agree = violate = 0
        while agree < 120 or violate < 120:
            frame = random_frame(rng, max_points=5)
            m = random_mass(frame, rng, max_focals=4)
            g = random_subset(frame, rng, nonempty=True)
            try:
                conditioned = m.condition(g)
            except ConditioningUndefined:
                continue
            if m.belief(~g) > 0.95:
                continue  # keep the normalizer comfortably positive
            f = random_subset(frame, rng)
            value = conditioned.belief(f)
            con = parse_constraint(
                f"Bel({_subset_formula(frame, f)} | {_subset_formula(frame, g)}) = {value!r}",
                frame)
            system = compile_constraints([con], frame)
            vec = m.to_vector()
            row = [r for r in system.static_rows if not isinstance(r.origin, str)][0]
            assert abs(float(row.coeffs @ vec) - row.const) <= 1e-7
            agree += 1
            # now a perturbed target value must violate the row
            wrong = value + (0.2 if value <= 0.5 else -0.2)
            con2 = parse_constraint(
                f"Bel({_subset_formula(frame, f)} | {_subset_formula(frame, g)}) = {wrong!r}",
                frame)
            system2 = compile_constraints([con2], frame)
            row2 = [r for r in system2.static_rows if not isinstance(r.origin, str)][0]
            assert abs(float(row2.coeffs @ vec) - row2.const) > 1e-7
            violate += 1


class TestMincommit:
    def test_hire_returns_vacuous(self, hire_system):
        assert mincommit(hire_system).is_vacuous()

    def test_window_masses(self):
        frame = ProductFrame([("X", ("T", "J", "P", "O"))])
        lines = [
            "Bel(X=T or X=J or X=P or X=O) = 1",
            "Bel(X=T or X=J or X=P) = 0.6",
            "Bel(X=T or X=J) = 0", "Bel(X=T or X=P) = 0", "Bel(X=J or X=P) = 0",
            "Bel(X=T) = 0", "Bel(X=J) = 0", "Bel(X=P) = 0",
        ]
        system = compile_constraints([parse_constraint(t, frame) for t in lines], frame)
        result = mincommit(system)
        tjp = extension(frame, parse_formula("X=T or X=J or X=P", frame))
        assert result.mass(tjp) == pytest.approx(0.6, abs=1e-7)
        assert result.mass(frame.full()) == pytest.approx(0.4, abs=1e-7)
        assert len(result) == 2

    def test_split_pair(self):
        frame = ProductFrame([("A", ("Yes", "No"))])
        cons = [parse_constraint("Bel(A) >= 0.5", frame),
                parse_constraint("Bel(not A) >= 0.5", frame)]
        system = compile_constraints(cons, frame)
        result = mincommit(system)
        a = extension(frame, parse_formula("A", frame))
        assert result.mass(a) == pytest.approx(0.5, abs=1e-7)
        assert result.mass(~a) == pytest.approx(0.5, abs=1e-7)
        # dominated by every feasible witness under the commitment order
        rng = random.Random(99)
        for _ in range(100):
            w = _random_feasible_witness(system, rng)
            assert leq_committed(result, w)

    def test_absent_when_no_minimum_exists(self):
        # Bel(A) + Bel(not A) = 0.9 admits a segment of incomparable
        # solutions; the lower envelope is vacuous, which violates the
        # constraint, so there is no minimum-committed element.
        frame = ProductFrame([("A", ("Yes", "No"))])
        cons = [parse_constraint("Bel(A) + Bel(not A) = 0.9", frame)]
        system = compile_constraints(cons, frame)
        assert feasible(system).feasible
        assert mincommit(system) is None
        env = lower_envelope(system)
        # the envelope itself is still reported: zero on both singletons
        assert env[1] == pytest.approx(0.0, abs=1e-9)
        assert env[2] == pytest.approx(0.0, abs=1e-9)
        assert env[frame.full_bits] == pytest.approx(1.0)


def _random_feasible_witness(system, rng):
    from surprise_engine.constraints import _probe
    objective = np.array([rng.uniform(-1, 1) for _ in range(system.mass_dim)])
    res = _probe(system, (), objective=objective, maximize=rng.random() < 0.5)
    return MassFunction.from_vector(system.frame, res.point)


class TestSurpriseReport:
    def test_bird_pinned(self):
        frame = ProductFrame([("BIRD", ("Yes", "No")), ("FLY", ("Yes", "No"))])
        cons = [parse_constraint("Bel(FLY | BIRD) = 0.4", frame),
                parse_constraint("Bel(not FLY | BIRD) = 0", frame)]
        system = compile_constraints(cons, frame)
        res = surprise_report(system, parse_formula("not FLY", frame),
                              parse_formula("BIRD", frame))
        assert res.lo == pytest.approx(0.4, abs=1e-4)
        assert res.hi == pytest.approx(0.4, abs=1e-4)

    def test_unconstrained_event_full_range(self, hire_frame):
        system = compile_constraints([], hire_frame)
        res = surprise_report(system, parse_formula("HIRE", hire_frame), None)
        assert res.lo == pytest.approx(0.0, abs=1e-9)
        assert res.hi == pytest.approx(1.0, abs=1e-9)

    def test_hire_never_surprised(self, hire_system):
        res = surprise_report(hire_system, parse_formula("HIRE", hire_system.frame), None)
        assert res.lo == pytest.approx(0.0, abs=1e-9)
        assert res.hi == pytest.approx(0.0, abs=1e-9)
        res2 = surprise_report(hire_system, parse_formula("not HIRE", hire_system.frame), None)
        assert res2.hi == pytest.approx(0.0, abs=1e-9)


class TestDiagnostics:
    def test_conflict_core_names_the_clash(self, hire_frame):
        cons = [parse_constraint("Bel(HIRE) = 0", hire_frame),
                parse_constraint("Bel(HIRE) <= 0.4", hire_frame),
                parse_constraint("Bel(HIRE) = 0.6", hire_frame)]
        system = compile_constraints(cons, hire_frame)
        assert not feasible(system).feasible
        core = conflict_core(system)
        assert 2 in core
        assert 0 in core or 1 in core
        # the core is irreducible: every proper subset is feasible
        for drop in core:
            rest = [cons[i] for i in core if i != drop]
            assert feasible(compile_constraints(rest, hire_frame)).feasible
