"""Mechanism checks applied to every auction trace the tests generate."""

import math

CLEAR_TOL = 1e-9


def trace_violations(outcome, config):
    """Return a list of human-readable invariant breaches (empty when the trace is sound)."""
    problems = []
    trace = outcome.trace
    supply, p0, step = config.supply, config.initial_price, config.step
    n = len(outcome.allocations)
    for t, rec in enumerate(trace):
        if rec.clock != t:
            problems.append(f"clock {rec.clock} at position {t}")
        if rec.price != p0 + t * step:
            problems.append(f"clock {t}: price {rec.price} != {p0} + {t}*{step}")
        if any(b < 0 for b in rec.bids):
            problems.append(f"clock {t}: negative bid")
        if math.fsum(rec.clinches) > supply * (1 + CLEAR_TOL):
            problems.append(f"clock {t}: clinches exceed supply")
    for prev, rec in zip(trace, trace[1:]):
        if rec.demand > prev.demand:
            problems.append(f"demand rose from {prev.demand} to {rec.demand} at clock {rec.clock}")
        for i in range(n):
            if rec.clinches[i] < prev.clinches[i]:
                problems.append(f"buyer {i} clinch fell at clock {rec.clock}")
    total = math.fsum(outcome.allocations)
    if outcome.final_clock >= 1:
        if abs(total - supply) > CLEAR_TOL * supply:
            problems.append(f"market not cleared: {total} of {supply}")
    elif abs(total - trace[0].demand) > CLEAR_TOL * max(1.0, supply):
        problems.append("clock-0 allocations differ from clock-0 bids")
    p_final = trace[-1].price
    for i, (alloc, pay) in enumerate(zip(outcome.allocations, outcome.payments)):
        if alloc < 0:
            problems.append(f"buyer {i}: negative allocation")
        slack = 1e-9 * max(1.0, abs(pay))
        if not p0 * alloc - slack <= pay <= p_final * alloc + slack:
            problems.append(f"buyer {i}: payment {pay} outside [{p0 * alloc}, {p_final * alloc}]")
    return problems
