import math

import pytest
from hypothesis import given, settings, strategies as st

from pureloss.bounds import (CodeParams, ConverseSlack, lemma1_chain, lemma1_minimal_delta,
                             lemma1_rank_bound, qubit_strong_converse, simulation_rate,
                             strong_converse_success_bound, tradeoff_point,
                             weak_converse_rate_bound, weak_converse_report)
from pureloss.channel import ChannelParams
from pureloss.errors import DomainError, PreconditionError
from pureloss.numerics import LOG2E, g_entropy


def test_weak_converse():
    assert weak_converse_rate_bound(0.0, ChannelParams(1.0, 1, 1.0)) == 2
    assert weak_converse_rate_bound(0.5, ChannelParams(1.0, 1, 1.0)) == pytest.approx(6.0)
    with pytest.raises(DomainError):
        weak_converse_rate_bound(1.0, ChannelParams(1.0, 1, 1.0))
    assert weak_converse_report(0.0, ChannelParams(1.0, 1, 1.0)).rate_upper == 2


def test_qubit_strong_converse():
    assert qubit_strong_converse(1, 17) == 1
    assert qubit_strong_converse(2, 10) == pytest.approx(9.7656e-4, rel=1e-4)
    assert qubit_strong_converse(0.5, 10) == 1


def test_lemma1_examples():
    assert lemma1_rank_bound(2, 1.0).exact_rank == 6
    assert lemma1_minimal_delta(10, 1.0) == pytest.approx((LOG2E + 1) / 10, abs=1e-15)
    assert lemma1_minimal_delta(10, 1.0) == pytest.approx(0.244270, abs=1e-6)
    rb = lemma1_rank_bound(1, 1.0)
    assert rb.exact_rank == 2
    assert rb.bound.log2_value == pytest.approx(2 + 2.442695, abs=1e-6)


@settings(deadline=None)
@given(st.integers(1, 200), st.floats(0.01, 20.0))
def test_lemma1_chain_is_ordered(n, ns):
    a, b, c = lemma1_chain(n, ns)
    assert a <= b + 1e-9 <= c + 2e-9


def test_success_bound_vacuous_at_threshold():
    params = ChannelParams(0.5, 100, 1.0)
    slack = ConverseSlack(0.0, 0.25, 0.2)
    delta = lemma1_minimal_delta(100, 0.5 + 0.25)
    R = g_entropy(0.5) + 0.25 + delta
    rep = strong_converse_success_bound(CodeParams(rate=R), params, slack)
    assert rep.bound_terms["rank_term"] == pytest.approx(1.0, abs=1e-12)


def test_success_bound_term_values():
    params = ChannelParams(0.5, 100, 1.0)
    # fix the slack delta so that R - g - delta2 - delta = 0.1, i.e. rank term 2^-10
    slack = ConverseSlack(0.0, 0.25, 0.2, delta=0.05)
    R = g_entropy(0.5) + 0.25 + 0.05 + 0.1
    rep = strong_converse_success_bound(CodeParams(rate=R), params, slack)
    t = rep.bound_terms
    assert t["rank_term"] == pytest.approx(2 ** -10, rel=1e-12)
    assert t["disturbance_term"] == pytest.approx(2 * math.exp(-2), rel=1e-12)
    assert t["disturbance_term"] == pytest.approx(0.270671, abs=1e-6)
    assert t["raw_total"] == pytest.approx(0.271648, abs=1e-6)
    assert rep.flags["decaying"]


def test_success_bound_clamps():
    params = ChannelParams(0.5, 100, 1.0)
    rep = strong_converse_success_bound(CodeParams(rate=3.0), params, ConverseSlack(1.0, 0.25, 0.2))
    assert rep.bound_terms["raw_total"] >= 1 and rep.success_upper == 1


def test_success_bound_precondition():
    with pytest.raises(PreconditionError):
        strong_converse_success_bound(CodeParams(rate=3.0), ChannelParams(0.5, 10, 1.0),
                                      ConverseSlack(0.01, 0.1, 0.2))


def test_rate_from_messages_must_agree():
    assert CodeParams(messages=1024).rate_for(10) == 1.0
    with pytest.raises(DomainError):
        CodeParams(messages=1024, rate=2.0).rate_for(10)


def test_report_serializes():
    rep = strong_converse_success_bound(CodeParams(rate=2.0), ChannelParams(0.5, 50, 1.0),
                                        ConverseSlack(0.01, 0.1, 0.05))
    d = rep.to_dict()
    assert d["params"]["eta"] == 0.5 and "rank_term" in d["bound_terms"]


def test_tradeoff_and_simulation_rate():
    p = ChannelParams(1.0, 1, 1.0)
    assert tradeoff_point(0.0, p) == (2.0, 0.0)
    r, e = tradeoff_point(0.5, p)
    assert r == pytest.approx(2.754887, abs=1e-6) and e == 0.5
    with pytest.raises(DomainError):
        tradeoff_point(1.0, p)
    assert simulation_rate(ChannelParams(0.0, 1, 3.0)) == 0
    assert simulation_rate(p) == 2
    assert simulation_rate(ChannelParams(0.5, 1, 1.0)) == pytest.approx(1.377444, abs=1e-6)
