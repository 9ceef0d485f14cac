import numpy as np
import pytest

from abae.predicates import (
    And,
    Base,
    BindingError,
    ExpressionSyntaxError,
    Not,
    Or,
    base_names,
    combine_scores,
    eval_oracle_expr,
    parse_predicate,
    to_text,
)


def random_expr(rng, names=("a", "b", "c", "d"), depth=0):
    roll = rng.random()
    if depth >= 4 or roll < 0.4:
        return Base(str(rng.choice(names)))
    if roll < 0.55:
        return Not(random_expr(rng, names, depth + 1))
    kind = And if roll < 0.8 else Or
    width = int(rng.integers(2, 4))
    return kind(tuple(random_expr(rng, names, depth + 1) for _ in range(width)))


class TestParsing:
    def test_not_binds_tighter_than_and(self):
        assert parse_predicate("a AND NOT b") == And((Base("a"), Not(Base("b"))))

    def test_and_binds_tighter_than_or(self):
        assert parse_predicate("a OR b AND c") == Or((Base("a"), And((Base("b"), Base("c")))))

    def test_keywords_case_insensitive(self):
        assert parse_predicate("a and not b") == And((Base("a"), Not(Base("b"))))
        assert parse_predicate("a AnD nOt b") == parse_predicate("a AND NOT b")

    def test_parentheses_override_precedence(self):
        assert parse_predicate("(a OR b) AND c") == And((Or((Base("a"), Base("b"))), Base("c")))

    def test_chains_parse_flat(self):
        assert parse_predicate("a AND b AND c") == And((Base("a"), Base("b"), Base("c")))
        assert parse_predicate("a OR b OR c") == Or((Base("a"), Base("b"), Base("c")))

    def test_double_negation(self):
        assert parse_predicate("NOT NOT a") == Not(Not(Base("a")))

    @pytest.mark.parametrize("text", ["a AND", "AND a", "(a OR b", "a )", "a b", ""])
    def test_syntax_errors_carry_position(self, text):
        with pytest.raises(ExpressionSyntaxError) as err:
            parse_predicate(text)
        assert err.value.position >= 0

    def test_roundtrip_random_expressions(self):
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            expr = random_expr(rng)
            assert parse_predicate(to_text(expr)) == expr

    def test_base_names_sorted_distinct(self):
        expr = parse_predicate("b AND a OR NOT b")
        assert base_names(expr) == ("a", "b")


class TestOracleEval:
    def test_not_true_is_false(self):
        assert eval_oracle_expr(Not(Base("a")), {"a": True}) is False

    def test_or_and_combination(self):
        expr = parse_predicate("(a OR b) AND c")
        assert eval_oracle_expr(expr, {"a": True, "b": False, "c": True}) is True
        assert eval_oracle_expr(expr, {"a": False, "b": False, "c": True}) is False

    def test_vectorized_matches_scalar(self):
        rng = np.random.default_rng(5)
        expr = parse_predicate("a AND NOT b OR c")
        labels = {k: rng.random(64) < 0.5 for k in "abc"}
        vec = eval_oracle_expr(expr, labels)
        for i in range(64):
            scalar = eval_oracle_expr(expr, {k: bool(v[i]) for k, v in labels.items()})
            assert vec[i] == scalar

    def test_unbound_name_raises(self):
        with pytest.raises(BindingError):
            eval_oracle_expr(Base("missing"), {"a": True})


class TestCombineScores:
    def test_negation_subtracts_from_one(self):
        assert combine_scores(Not(Base("a")), {"a": 0.3}) == pytest.approx(0.7)

    def test_conjunction_is_product(self):
        expr = parse_predicate("a AND b")
        assert combine_scores(expr, {"a": 0.5, "b": 0.4}) == pytest.approx(0.2)

    def test_hand_evaluated_mixed_expression(self):
        expr = parse_predicate("(a OR b) AND NOT c")
        scores = {"a": 0.5, "b": 0.4, "c": 0.1}
        assert combine_scores(expr, scores) == pytest.approx(0.45)

    def test_result_stays_in_unit_interval(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            expr = random_expr(rng)
            scores = {k: rng.random() for k in "abcd"}
            assert 0.0 <= combine_scores(expr, scores) <= 1.0

    def test_scores_outside_unit_interval_rejected(self):
        with pytest.raises(ValueError):
            combine_scores(Base("a"), {"a": 1.5})

    def test_unbound_proxy_raises(self):
        with pytest.raises(BindingError):
            combine_scores(parse_predicate("a AND b"), {"a": 0.5})

    def test_calibrated_scores_match_oracle(self):
        # With exact 0/1 scores the arithmetic folding reproduces the
        # boolean evaluation.
        rng = np.random.default_rng(99)
        for _ in range(1000):
            expr = random_expr(rng)
            bits = {k: bool(rng.integers(0, 2)) for k in "abcd"}
            scores = {k: 1.0 if v else 0.0 for k, v in bits.items()}
            assert combine_scores(expr, scores) == float(eval_oracle_expr(expr, bits))

    def test_monotone_in_scores_without_negation(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            expr = random_expr(rng)
            if "NOT" in to_text(expr):
                continue
            scores = {k: rng.random() for k in "abcd"}
            before = combine_scores(expr, scores)
            bump = str(rng.choice(list("abcd")))
            scores[bump] = min(1.0, scores[bump] + rng.random() * (1 - scores[bump]))
            assert combine_scores(expr, scores) >= before - 1e-12

    def test_vectorized_scores(self):
        expr = parse_predicate("a AND NOT b")
        out = combine_scores(expr, {"a": np.array([0.5, 1.0]), "b": np.array([0.4, 0.0])})
        np.testing.assert_allclose(out, [0.3, 1.0])
