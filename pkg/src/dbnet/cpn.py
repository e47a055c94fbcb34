"""Coloured Petri nets with priorities, read arcs and name creation.

This is the target formalism of the translation: a plain token game with
three extensions.

* **Priorities** with global filtering: a binding may fire only if no
  strictly higher-priority binding is enabled anywhere in the net.
* **Read arcs** test for presence without consuming; two read arcs of the
  same transition may rely on the same token (needed for self-joins).
  Input arcs, by contrast, demand multiset inclusion.
* **Fresh variables** bind to values not occurring anywhere in the
  current marking; **external variables** (otherwise unbound, non-fresh)
  draw from per-type sample domains, as in the source formalism.

Transitions are silent by default.  A transition constructed with an
``emit`` descriptor produces an observable label from its binding, which
is how the translated commit/rollback steps surface the original firing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

from .fo import Formula, TRUE
from .freshness import FreshPolicy
from .lts import EPS, Lts, explore
from .marking import Marking
from .model import _match_tuple, _walk_guard_vars, eval_guard
from .relational import (
    ContractError,
    DataType,
    Value,
    Variable,
    render_value,
)

__all__ = [
    "P_LOW",
    "P_NORMAL",
    "P_HIGH",
    "CpnPlace",
    "Emit",
    "CpnTransition",
    "NuCpn",
    "cpn_validate",
    "cpn_enabled",
    "cpn_fire",
    "cpn_build_lts",
]

P_LOW = 0
P_NORMAL = 1
P_HIGH = 2
_PRIORITY_NAMES = {P_LOW: "low", P_NORMAL: "normal", P_HIGH: "high"}


@dataclass(frozen=True)
class CpnPlace:
    name: str
    column_types: tuple  # tuple of type names


@dataclass(frozen=True)
class Emit:
    """Recipe for an observable label: report ``transition`` with
    ``outcome``, exposing the binding restricted to ``var_names`` (a
    canonically ordered tuple)."""

    transition: str
    outcome: str
    var_names: tuple


@dataclass(frozen=True)
class CpnTransition:
    name: str
    inputs: tuple = ()  # (place name, tuple of Term); constants permitted
    reads: tuple = ()  # (place name, tuple of Term)
    guard: Formula = TRUE
    outputs: tuple = ()  # (place name, tuple of Term)
    priority: int = P_NORMAL
    emit: Optional[Emit] = None


@dataclass
class NuCpn:
    name: str
    types: dict  # type name -> DataType
    places: dict  # name -> CpnPlace
    transitions: tuple
    initial_marking: Marking
    samples: dict = field(default_factory=dict)
    default_policy: FreshPolicy = field(default_factory=FreshPolicy)
    # Optional bookkeeping set by the translator: place name -> role.
    place_classes: dict = field(default_factory=dict)

    def transition(self, name: str) -> CpnTransition:
        for t in self.transitions:
            if t.name == name:
                return t
        raise ContractError(f"no transition named {name!r}")


# ---------------------------------------------------------------------------
# Scoping and validation


def _cpn_scope(t: CpnTransition):
    """(bound, fresh, external) variable groups, plus the full name map."""
    bound: dict = {}
    for _, terms in tuple(t.inputs) + tuple(t.reads):
        for term in terms:
            if isinstance(term, Variable):
                bound.setdefault(term.name, term)
    rest: dict = {}
    _walk_guard_vars(t.guard, rest)
    for _, terms in t.outputs:
        for term in terms:
            if isinstance(term, Variable):
                rest.setdefault(term.name, term)
    fresh: dict = {}
    external: dict = {}
    for name, v in rest.items():
        if name in bound:
            continue
        (fresh if v.fresh else external).setdefault(name, v)
    by_name = dict(bound)
    by_name.update(fresh)
    by_name.update(external)
    return bound, fresh, external, by_name


def cpn_validate(net: NuCpn) -> list:
    problems: list = []
    for place in net.places.values():
        for i, tn in enumerate(place.column_types):
            if tn not in net.types:
                problems.append(f"place {place.name}: column {i + 1} has unknown type {tn!r}")
    tnames = [t.name for t in net.transitions]
    if len(set(tnames)) != len(tnames):
        problems.append("duplicate transition name")
    for t in net.transitions:
        who = f"transition {t.name}"
        if t.priority not in _PRIORITY_NAMES:
            problems.append(f"{who}: unknown priority {t.priority!r}")
        for kind, arcs in (("input", t.inputs), ("read", t.reads), ("output", t.outputs)):
            for place, terms in arcs:
                if place not in net.places:
                    problems.append(f"{who}: {kind} arc to unknown place {place!r}")
                    continue
                cols = net.places[place].column_types
                if len(terms) != len(cols):
                    problems.append(f"{who}: {kind} inscription on {place} has wrong arity")
                    continue
                for i, term in enumerate(terms):
                    dt = term.dtype
                    if dt != cols[i]:
                        problems.append(
                            f"{who}: {kind} inscription on {place}, position {i + 1}: "
                            f"{dt} does not match {cols[i]}"
                        )
                    if kind != "output" and isinstance(term, Variable) and term.fresh:
                        problems.append(f"{who}: fresh variable {term.name} on a non-output arc")
        try:
            bound, fresh, external, _ = _cpn_scope(t)
        except ContractError as e:
            problems.append(f"{who}: {e}")
            continue
        for name, v in external.items():
            if not net.samples.get(v.dtype):
                problems.append(
                    f"{who}: variable {name} is bound nowhere and type {v.dtype} has no sample domain"
                )
        if t.emit is not None:
            known = set(bound) | set(fresh) | set(external)
            for n in t.emit.var_names:
                if n not in known:
                    problems.append(f"{who}: emitted variable {n!r} not in scope")
    for place in net.initial_marking.places_marked():
        if place not in net.places:
            problems.append(f"initial marking on unknown place {place!r}")
            continue
        cols = net.places[place].column_types
        for tok, _ in net.initial_marking.tokens(place):
            if len(tok) != len(cols) or any(v.dtype != tn for v, tn in zip(tok, cols)):
                problems.append(f"initial marking: token {tok!r} does not fit place {place!r}")
    return problems


# ---------------------------------------------------------------------------
# Enabling


def _match_terms(terms, values, theta: dict) -> Optional[dict]:
    """Like joining a token against an inscription, but inscriptions here
    may mix constants with variables."""
    out = theta
    copied = False
    for term, val in zip(terms, values):
        if isinstance(term, Variable):
            bound = out.get(term.name)
            if bound is None:
                if not copied:
                    out = dict(out)
                    copied = True
                out[term.name] = val
            elif bound != val:
                return None
        elif term != val:
            return None
    return out


def _transition_bindings(net: NuCpn, marking: Marking, t: CpnTransition, policy: FreshPolicy):
    # Cheap rejection: some input place empty means nothing to join.
    for place, _ in t.inputs:
        if marking.total(place) == 0:
            return []
    bound_vars, fresh_vars, external_vars, _ = _cpn_scope(t)

    partials = [({}, [])]
    for place, terms in t.inputs:
        grown = []
        for theta, demands in partials:
            for token, _n in marking.tokens(place):
                theta2 = _match_terms(terms, token, theta)
                if theta2 is not None:
                    grown.append((theta2, demands + [(place, token)]))
        partials = grown
        if not partials:
            return []
    partials = [(th, d) for th, d in partials if marking.covers(d)]

    for place, terms in t.reads:
        grown = []
        for theta, demands in partials:
            for token, _n in marking.tokens(place):
                theta2 = _match_terms(terms, token, theta)
                if theta2 is not None:
                    grown.append((theta2, demands))
        partials = grown
        if not partials:
            return []

    for name in sorted(external_vars):
        var = external_vars[name]
        values = sorted(net.samples.get(var.dtype, ()), key=lambda v: v.sort_key())
        partials = [(dict(th, **{name: v}), d) for th, d in partials for v in values]
        if not partials:
            return []

    if fresh_vars:
        grown = []
        for theta, demands in partials:
            for theta2 in _bind_fresh_cpn(net, marking, fresh_vars, theta, policy):
                grown.append((theta2, demands))
        partials = grown

    out = []
    seen = set()
    for theta, _demands in partials:
        if not eval_guard(t.guard, theta):
            continue
        key = tuple(sorted(theta.items()))
        if key not in seen:
            seen.add(key)
            out.append(theta)
    return out


def _bind_fresh_cpn(net: NuCpn, marking: Marking, fresh_vars: dict, theta: dict, policy: FreshPolicy):
    results = [dict(theta)]
    base_names = set(theta)
    for name in sorted(fresh_vars):
        var = fresh_vars[name]
        dtype = net.types[var.dtype]
        grown = []
        for th in results:
            used = {v for v in marking.all_values() if v.dtype == var.dtype}
            used.update(v for n, v in th.items() if n not in base_names and v.dtype == var.dtype)
            for v in policy.candidates(dtype, used):
                th2 = dict(th)
                th2[name] = v
                grown.append(th2)
        results = grown
    return results


def cpn_enabled(net: NuCpn, marking: Marking, policy: Optional[FreshPolicy] = None) -> list:
    """All ``(transition, binding)`` pairs that may actually fire: the
    token- and guard-enabled bindings of the highest priority level that
    has any.  Lower levels are filtered globally, per the reference
    semantics of prioritized coloured nets."""
    policy = policy or net.default_policy
    for prio in (P_HIGH, P_NORMAL, P_LOW):
        level = []
        for t in net.transitions:
            if t.priority != prio:
                continue
            for theta in _transition_bindings(net, marking, t, policy):
                level.append((t, theta))
        if level:
            return level
    return []


# ---------------------------------------------------------------------------
# Firing


def _instantiate(terms, theta: Mapping[str, Value]):
    return tuple(theta[x.name] if isinstance(x, Variable) else x for x in terms)


def _locally_enabled(net: NuCpn, marking: Marking, t: CpnTransition, theta, policy: FreshPolicy) -> bool:
    demands = [(place, _instantiate(terms, theta)) for place, terms in t.inputs]
    if not marking.covers(demands):
        return False
    for place, terms in t.reads:
        if marking.count(place, _instantiate(terms, theta)) < 1:
            return False
    bound_vars, fresh_vars, external_vars, _ = _cpn_scope(t)
    for name, var in external_vars.items():
        if theta[name] not in net.samples.get(var.dtype, ()):
            return False
    picked: set = set()
    for name, var in fresh_vars.items():
        v = theta[name]
        if any(u == v for u in marking.all_values()) or v in picked:
            return False
        picked.add(v)
    return eval_guard(t.guard, theta)


def cpn_fire(net: NuCpn, marking: Marking, t: CpnTransition, theta: Mapping[str, Value],
             policy: Optional[FreshPolicy] = None):
    """Fire one binding; returns ``(marking', label)`` where the label is
    the silent ``EPS`` or the transition's observable emission.  The
    binding must come from :func:`cpn_enabled`: local enabledness *and*
    priority dominance are both rechecked here."""
    policy = policy or net.default_policy
    if not _locally_enabled(net, marking, t, theta, policy):
        raise ContractError(f"transition {t.name}: binding not enabled")
    for other in net.transitions:
        if other.priority > t.priority and _transition_bindings(net, marking, other, policy):
            raise ContractError(
                f"transition {t.name}: blocked by higher-priority {other.name}"
            )
    return _fire_unchecked(net, marking, t, theta)


def _fire_unchecked(net: NuCpn, marking: Marking, t: CpnTransition, theta):
    demands = [(place, _instantiate(terms, theta)) for place, terms in t.inputs]
    additions = [(place, _instantiate(terms, theta)) for place, terms in t.outputs]
    label = EPS
    if t.emit is not None:
        pairs = tuple((n, render_value(theta[n])) for n in t.emit.var_names)
        label = ("obs", t.emit.transition, pairs, t.emit.outcome)
    return marking.minus(demands).plus(additions), label


def cpn_build_lts(
    net: NuCpn,
    policy: Optional[FreshPolicy] = None,
    *,
    max_states: Optional[int] = None,
    max_depth: Optional[int] = None,
    jobs: int = 1,
) -> Lts:
    """Reachability graph over markings.  Silent transitions produce
    ``eps`` edges; emitting transitions produce observable edges.  Refuses
    unbounded freshness for the same reason the source layer does."""
    policy = policy or net.default_policy
    if not policy.finite_branching:
        raise ContractError(
            "state-space construction requires a finite freshness policy "
            "(recycling or bounded); got unbounded"
        )

    def step(marking: Marking):
        steps = []
        for t, theta in cpn_enabled(net, marking, policy):
            succ, label = _fire_unchecked(net, marking, t, theta)
            steps.append((label, succ))
        return steps

    return explore(
        net.initial_marking, step, max_states=max_states, max_depth=max_depth, jobs=jobs
    )
