"""The three-layer net model and its execution semantics.

A model couples a relational schema (persistence layer), view queries and
parameterized actions (data logic layer) with a coloured control net whose
transitions may read views, call one action, and route tokens differently
depending on whether the action committed or rolled back.

States are snapshots ``(database instance, control marking)``.  Firings
are atomic at this layer: query evaluation, the update, the constraint
check and the token moves all happen in one step.  The translated form in
:mod:`dbnet.translate` stretches the same step over many small ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

from .fo import And, Compare, Formula, Not, Or, Truth, TRUE, _compare
from .freshness import FreshPolicy
from .marking import Marking
from .queries import UcqQuery, eval_ucq, validate_view_query
from .relational import (
    COMMITTED,
    Action,
    ContractError,
    DataType,
    Instance,
    Schema,
    Value,
    Variable,
    active_domain,
    apply_action,
    check_constraint,
    render_value,
)
from .lts import Lts, explore

__all__ = [
    "ControlPlace",
    "ViewPlace",
    "Transition",
    "DbNet",
    "Snapshot",
    "TransitionScope",
    "analyze_transition",
    "eval_guard",
    "validate",
    "enabled_bindings",
    "fire",
    "build_lts",
    "binding_label",
    "render_snapshot",
]


@dataclass(frozen=True)
class ControlPlace:
    name: str
    column_types: tuple  # tuple of type names


@dataclass(frozen=True)
class ViewPlace:
    """A place whose content is not stored but assigned: it always holds
    exactly the answers of its query on the current database instance."""

    name: str
    query: str


@dataclass(frozen=True)
class Transition:
    name: str
    inputs: tuple = ()  # (control place name, tuple of Variable)
    views: tuple = ()  # (view place name, tuple of Variable)
    guard: Formula = TRUE
    action: Optional[tuple] = None  # (action name, tuple of Term)
    outputs: tuple = ()  # (control place name, tuple of Term)
    rollbacks: tuple = ()  # (control place name, tuple of Term)


@dataclass(frozen=True)
class Snapshot:
    instance: Instance
    marking: Marking


@dataclass
class DbNet:
    name: str
    types: dict  # type name -> DataType
    schema: Schema
    queries: dict  # query name -> UcqQuery
    actions: dict  # action name -> Action
    control_places: dict  # name -> ControlPlace
    view_places: dict  # name -> ViewPlace
    transitions: tuple
    initial_instance: Instance
    initial_marking: Marking
    samples: dict = field(default_factory=dict)  # type name -> tuple of Value
    default_policy: FreshPolicy = field(default_factory=FreshPolicy)

    def initial_snapshot(self) -> Snapshot:
        return Snapshot(self.initial_instance, self.initial_marking)

    def transition(self, name: str) -> Transition:
        for t in self.transitions:
            if t.name == name:
                return t
        raise ContractError(f"no transition named {name!r}")


# ---------------------------------------------------------------------------
# Variable scoping


@dataclass(frozen=True)
class TransitionScope:
    """Where each variable of a transition gets its value from."""

    by_name: Mapping[str, Variable]
    input_vars: tuple  # bound by consuming control tokens
    view_vars: tuple  # bound by matching a view answer
    fresh_vars: tuple  # name-creation variables
    external_vars: tuple  # free in outputs/guard/action, fed from samples
    order: tuple  # every variable, sorted by name: the binding domain

    def categories(self, name: str) -> str:
        for label, group in (
            ("input", self.input_vars),
            ("view", self.view_vars),
            ("fresh", self.fresh_vars),
            ("external", self.external_vars),
        ):
            if any(v.name == name for v in group):
                return label
        raise ContractError(f"variable {name!r} not in scope")


def _walk_guard_vars(f: Formula, acc: dict):
    if isinstance(f, Truth):
        return
    if isinstance(f, Compare):
        for t in (f.left, f.right):
            if isinstance(t, Variable):
                acc.setdefault(t.name, t)
        return
    if isinstance(f, Not):
        _walk_guard_vars(f.sub, acc)
        return
    if isinstance(f, (And, Or)):
        for p in f.parts:
            _walk_guard_vars(p, acc)
        return
    raise ContractError(f"guards cannot contain {type(f).__name__} nodes")


def analyze_transition(t: Transition) -> TransitionScope:
    """Classify every variable of ``t``.  Inputs win over views for the
    purpose of the bookkeeping; a name used in both is a join."""
    by_name: dict = {}
    inputs: dict = {}
    views: dict = {}
    for _, vars_ in t.inputs:
        for v in vars_:
            by_name.setdefault(v.name, v)
            inputs.setdefault(v.name, v)
    for _, vars_ in t.views:
        for v in vars_:
            by_name.setdefault(v.name, v)
            if v.name not in inputs:
                views.setdefault(v.name, v)
    fresh: dict = {}
    external: dict = {}
    rest: dict = {}
    _walk_guard_vars(t.guard, rest)
    if t.action is not None:
        for term in t.action[1]:
            if isinstance(term, Variable):
                rest.setdefault(term.name, term)
    for _, terms in tuple(t.outputs) + tuple(t.rollbacks):
        for term in terms:
            if isinstance(term, Variable):
                rest.setdefault(term.name, term)
    for name, v in rest.items():
        by_name.setdefault(name, v)
        if name in inputs or name in views:
            continue
        if v.fresh:
            fresh.setdefault(name, v)
        else:
            external.setdefault(name, v)
    order = tuple(by_name[n] for n in sorted(by_name))
    pick = lambda d: tuple(d[n] for n in sorted(d))
    return TransitionScope(
        by_name=by_name,
        input_vars=pick(inputs),
        view_vars=pick(views),
        fresh_vars=pick(fresh),
        external_vars=pick(external),
        order=order,
    )


def eval_guard(guard: Formula, theta: Mapping[str, Value]) -> bool:
    if isinstance(guard, Truth):
        return True
    if isinstance(guard, Compare):
        left = theta[guard.left.name] if isinstance(guard.left, Variable) else guard.left
        right = theta[guard.right.name] if isinstance(guard.right, Variable) else guard.right
        return _compare(guard.op, left, right)
    if isinstance(guard, Not):
        return not eval_guard(guard.sub, theta)
    if isinstance(guard, And):
        return all(eval_guard(p, theta) for p in guard.parts)
    if isinstance(guard, Or):
        return any(eval_guard(p, theta) for p in guard.parts)
    raise ContractError(f"guards cannot contain {type(guard).__name__} nodes")


# ---------------------------------------------------------------------------
# Validation


def validate(model: DbNet) -> list:
    """Every structural problem in the model, as readable strings.  An
    empty result means the model is well-formed and the initial snapshot
    is admissible."""
    problems: list = []
    problems.extend(model.schema.validate(model.types))
    for q in model.queries.values():
        problems.extend(validate_view_query(model.types, model.schema, q))
    for a in model.actions.values():
        problems.extend(a.validate(model.schema))
        for p in a.params:
            if p.dtype not in model.types:
                problems.append(f"action {a.name}: parameter {p.name} has unknown type {p.dtype!r}")

    names = [p for p in model.control_places] + [p for p in model.view_places]
    if len(set(names)) != len(names):
        problems.append("control and view place names overlap")
    for place in model.control_places.values():
        for i, tn in enumerate(place.column_types):
            if tn not in model.types:
                problems.append(f"place {place.name}: column {i + 1} has unknown type {tn!r}")
    for vp in model.view_places.values():
        if vp.query not in model.queries:
            problems.append(f"view place {vp.name}: unknown query {vp.query!r}")

    tnames = [t.name for t in model.transitions]
    if len(set(tnames)) != len(tnames):
        problems.append("duplicate transition name")
    for t in model.transitions:
        problems.extend(_validate_transition(model, t))

    for tn, values in model.samples.items():
        if tn not in model.types:
            problems.append(f"sample domain for unknown type {tn!r}")
            continue
        for v in values:
            if v.dtype != tn:
                problems.append(f"sample domain of {tn}: value {v!r} of wrong type")

    problems.extend(f"initial database: {p}" for p in model.initial_instance.typecheck())
    if not problems:
        for c in model.schema.constraints:
            if not check_constraint(model.initial_instance, c):
                problems.append(f"initial database violates a constraint ({type(c).__name__})")
    for place in model.initial_marking.places_marked():
        if place not in model.control_places:
            problems.append(f"initial marking on unknown place {place!r}")
            continue
        cols = model.control_places[place].column_types
        for tok, _ in model.initial_marking.tokens(place):
            if len(tok) != len(cols) or any(v.dtype != tn for v, tn in zip(tok, cols)):
                problems.append(f"initial marking: token {tok!r} does not fit place {place!r}")
    return problems


def _inscription_types(model: DbNet, place: str):
    if place in model.control_places:
        return model.control_places[place].column_types
    if place in model.view_places:
        q = model.queries.get(model.view_places[place].query)
        if q is not None:
            return tuple(v.dtype for v in q.head)
    return None


def _validate_transition(model: DbNet, t: Transition) -> list:
    problems: list = []
    who = f"transition {t.name}"

    for place, vars_ in t.inputs:
        if place in model.view_places:
            problems.append(f"{who}: view place {place!r} used as consuming input")
            continue
        if place not in model.control_places:
            problems.append(f"{who}: input from unknown place {place!r}")
            continue
        problems.extend(_check_inscription(model, who, place, vars_, require_vars=True))
    for place, vars_ in t.views:
        if place not in model.view_places:
            problems.append(f"{who}: view arc from non-view place {place!r}")
            continue
        problems.extend(_check_inscription(model, who, place, vars_, require_vars=True))

    try:
        scope = analyze_transition(t)
    except ContractError as e:
        return problems + [f"{who}: {e}"]

    # Type agreement: one variable name, one type.
    seen: dict = {}
    def note(v: Variable):
        prev = seen.get(v.name)
        if prev is not None and prev.dtype != v.dtype:
            problems.append(f"{who}: variable {v.name} used at types {prev.dtype} and {v.dtype}")
        seen.setdefault(v.name, v)

    for _, vars_ in tuple(t.inputs) + tuple(t.views):
        for v in vars_:
            note(v)
            if v.fresh:
                problems.append(f"{who}: fresh variable {v.name} cannot appear on an input arc")
    for _, terms in tuple(t.outputs) + tuple(t.rollbacks):
        for term in terms:
            if isinstance(term, Variable):
                note(term)
    guard_vars: dict = {}
    try:
        _walk_guard_vars(t.guard, guard_vars)
    except ContractError as e:
        problems.append(f"{who}: {e}")
    for v in guard_vars.values():
        note(v)

    for v in scope.fresh_vars:
        if v.dtype not in model.types:
            problems.append(f"{who}: fresh variable {v.name} has unknown type {v.dtype!r}")
    for v in scope.external_vars:
        if not model.samples.get(v.dtype):
            problems.append(
                f"{who}: variable {v.name} is bound nowhere and type {v.dtype} has no sample domain"
            )

    if t.action is not None:
        aname, args = t.action
        action = model.actions.get(aname)
        if action is None:
            problems.append(f"{who}: unknown action {aname!r}")
        else:
            if len(args) != len(action.params):
                problems.append(f"{who}: action {aname} takes {len(action.params)} arguments")
            else:
                for term, param in zip(args, action.params):
                    dt = term.dtype if not isinstance(term, Variable) else seen.get(term.name, term).dtype
                    if dt != param.dtype:
                        problems.append(
                            f"{who}: action {aname} argument {param.name} expects {param.dtype}, got {dt}"
                        )
    elif t.rollbacks:
        problems.append(f"{who}: rollback outputs make no sense without an action")

    for place, terms in tuple(t.outputs) + tuple(t.rollbacks):
        if place in model.view_places:
            problems.append(f"{who}: cannot output to view place {place!r}")
            continue
        if place not in model.control_places:
            problems.append(f"{who}: output to unknown place {place!r}")
            continue
        problems.extend(_check_inscription(model, who, place, terms, require_vars=False))
    return problems


def _check_inscription(model: DbNet, who: str, place: str, terms, require_vars: bool) -> list:
    problems = []
    expected = _inscription_types(model, place)
    if expected is None:
        return problems
    if len(terms) != len(expected):
        return [f"{who}: inscription on {place!r} has arity {len(terms)}, place wants {len(expected)}"]
    for i, term in enumerate(terms):
        if isinstance(term, Variable):
            if term.dtype != expected[i]:
                problems.append(
                    f"{who}: {place} position {i + 1} is {expected[i]}, variable {term.name} is {term.dtype}"
                )
        elif require_vars:
            problems.append(f"{who}: inscription on {place!r} must use variables only")
        elif term.dtype != expected[i]:
            problems.append(f"{who}: {place} position {i + 1} constant of wrong type")
    return problems


# ---------------------------------------------------------------------------
# Enabled bindings and firing


def _match_tuple(vars_, values, theta: dict) -> Optional[dict]:
    out = dict(theta)
    for var, val in zip(vars_, values):
        bound = out.get(var.name)
        if bound is None:
            out[var.name] = val
        elif bound != val:
            return None
    return out


def _used_values(instance: Instance, marking: Marking, dtype: str) -> set:
    used = active_domain(instance, dtype)
    for v in marking.all_values():
        if v.dtype == dtype:
            used.add(v)
    return used


def enabled_bindings(model: DbNet, snap: Snapshot, policy: Optional[FreshPolicy] = None) -> list:
    """All ``(transition, binding)`` pairs enabled in ``snap``; binding
    domain is the transition's full variable scope.  Deterministic order."""
    policy = policy or model.default_policy
    out = []
    for t in model.transitions:
        for theta in transition_bindings(model, snap, t, policy):
            out.append((t, theta))
    return out


def transition_bindings(model: DbNet, snap: Snapshot, t: Transition, policy: FreshPolicy) -> list:
    scope = analyze_transition(t)
    partials = [({}, [])]  # (theta, token demands)

    for place, vars_ in t.inputs:
        grown = []
        for theta, demands in partials:
            for token, _count in snap.marking.tokens(place):
                theta2 = _match_tuple(vars_, token, theta)
                if theta2 is not None:
                    grown.append((theta2, demands + [(place, token)]))
        partials = grown
        if not partials:
            return []
    partials = [(th, d) for th, d in partials if snap.marking.covers(d)]

    for place, vars_ in t.views:
        query = model.queries[model.view_places[place].query]
        answers = sorted(eval_ucq(snap.instance, query), key=lambda row: tuple(v.sort_key() for v in row))
        grown = []
        for theta, demands in partials:
            for row in answers:
                theta2 = _match_tuple(vars_, row, theta)
                if theta2 is not None:
                    grown.append((theta2, demands))
        partials = grown
        if not partials:
            return []

    for var in scope.external_vars:
        values = sorted(model.samples.get(var.dtype, ()), key=lambda v: v.sort_key())
        partials = [(dict(theta, **{var.name: v}), d) for theta, d in partials for v in values]
        if not partials:
            return []

    if scope.fresh_vars:
        grown = []
        for theta, demands in partials:
            for theta2 in _bind_fresh(model, snap, scope.fresh_vars, theta, policy):
                grown.append((theta2, demands))
        partials = grown

    bindings = []
    seen = set()
    for theta, _demands in partials:
        if not eval_guard(t.guard, theta):
            continue
        key = tuple(sorted((n, v) for n, v in theta.items()))
        if key not in seen:
            seen.add(key)
            bindings.append(theta)
    return bindings


def _bind_fresh(model: DbNet, snap: Snapshot, fresh_vars, theta: dict, policy: FreshPolicy):
    """Extend ``theta`` over the fresh variables, branching per the policy.
    Freshness is judged against active domain plus marking plus the fresh
    values already picked for this same firing."""
    results = [dict(theta)]
    base_names = set(theta)
    for var in fresh_vars:
        dtype = model.types[var.dtype]
        grown = []
        for th in results:
            used = _used_values(snap.instance, snap.marking, var.dtype)
            # plus the picks already made for earlier fresh variables of
            # this same firing
            used.update(v for n, v in th.items() if n not in base_names and v.dtype == var.dtype)
            for v in policy.candidates(dtype, used):
                th2 = dict(th)
                th2[var.name] = v
                grown.append(th2)
        results = grown
    return results


def fire(model: DbNet, snap: Snapshot, t: Transition, theta: Mapping[str, Value]):
    """One atomic firing.  Returns ``(successor, outcome)`` where outcome
    is ``"commit"`` or ``"rollback"``.  Raises ``ContractError`` if the
    binding is not enabled in ``snap``."""
    scope = analyze_transition(t)
    missing = [v.name for v in scope.order if v.name not in theta]
    if missing:
        raise ContractError(f"transition {t.name}: binding misses {missing}")

    demands = [
        (place, tuple(theta[v.name] for v in vars_)) for place, vars_ in t.inputs
    ]
    if not snap.marking.covers(demands):
        raise ContractError(f"transition {t.name}: input tokens not available")
    for place, vars_ in t.views:
        query = model.queries[model.view_places[place].query]
        row = tuple(theta[v.name] for v in vars_)
        if row not in eval_ucq(snap.instance, query):
            raise ContractError(f"transition {t.name}: view {place} does not contain {row}")
    for var in scope.external_vars:
        if theta[var.name] not in model.samples.get(var.dtype, ()):
            raise ContractError(f"transition {t.name}: {var.name} outside its sample domain")
    picked: set = set()
    for var in scope.fresh_vars:
        v = theta[var.name]
        if v in _used_values(snap.instance, snap.marking, var.dtype) or v in picked:
            raise ContractError(f"transition {t.name}: value for {var.name} is not fresh")
        picked.add(v)
    if not eval_guard(t.guard, theta):
        raise ContractError(f"transition {t.name}: guard rejects the binding")

    marking = snap.marking.minus(demands)
    instance = snap.instance
    outcome = "commit"
    emit = t.outputs
    if t.action is not None:
        aname, args = t.action
        action = model.actions[aname]
        call = {
            p.name: (theta[a.name] if isinstance(a, Variable) else a)
            for p, a in zip(action.params, args)
        }
        instance, status = apply_action(snap.instance, action, call)
        if status != COMMITTED:
            outcome = "rollback"
            emit = t.rollbacks
    additions = [
        (place, tuple(theta[x.name] if isinstance(x, Variable) else x for x in terms))
        for place, terms in emit
    ]
    return Snapshot(instance, marking.plus(additions)), outcome


def binding_label(t_name: str, scope: TransitionScope, theta: Mapping[str, Value], outcome: str):
    pairs = tuple((v.name, render_value(theta[v.name])) for v in scope.order)
    return ("obs", t_name, pairs, outcome)


def render_snapshot(snap: Snapshot) -> str:
    from .relational import instance_lines

    return "; ".join(instance_lines(snap.instance)) + " | " + snap.marking.render()


def build_lts(
    model: DbNet,
    policy: Optional[FreshPolicy] = None,
    *,
    max_states: Optional[int] = None,
    max_depth: Optional[int] = None,
    jobs: int = 1,
) -> Lts:
    """Exhaustive reachability graph of the model under the policy.  Edge
    labels expose the transition name, the full binding and the outcome.
    Refuses unbounded freshness, whose branching is infinite by design."""
    policy = policy or model.default_policy
    if not policy.finite_branching:
        raise ContractError(
            "state-space construction requires a finite freshness policy "
            "(recycling or bounded); got unbounded"
        )
    scopes = {t.name: analyze_transition(t) for t in model.transitions}

    def step(snap: Snapshot):
        steps = []
        for t, theta in enabled_bindings(model, snap, policy):
            succ, outcome = fire(model, snap, t, theta)
            steps.append((binding_label(t.name, scopes[t.name], theta, outcome), succ))
        return steps

    return explore(
        model.initial_snapshot(), step, max_states=max_states, max_depth=max_depth, jobs=jobs
    )
