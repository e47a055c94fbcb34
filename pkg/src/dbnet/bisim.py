"""Flattened weak-bisimulation checking between the two net layers.

The comparison works on *flattened* labelled transition systems: every
state carries a :class:`FlatState` (database facts plus tokens on the
original control places, nothing else) and a stability flag.  For the
source layer every snapshot is stable and the projection is the identity;
for the translated layer a state is stable exactly when the lock token is
at home, and the gadget-interior states in between are silent.

``check_weak_bisim`` decides weak bisimilarity over the stable states,
with two silent-run side conditions that make the notion sensitive to
broken gadget plumbing:

* every maximal silent run out of a stable state must be able to reach a
  stable state again (no silent dead-ends, no cycles that never pass
  through a stable state), and
* stable states are related only if their flat contents are equal.

Transfer goes over weak steps on both sides: a weak observable step is
``eps* ; label ; eps*`` landing on a stable state.  On silent-free inputs
this coincides with ordinary strong bisimulation with content equality.
Interior states never enter the relation themselves: their silent moves
are absorbed into the weak steps, and the convergence conditions above
keep that absorption honest.  A relation over interior states cannot
exist at all once a state enables two distinct observables — past the
guard stage a gadget can only finish its own firing, so an interior state
has no weak answer to the other observable; requiring convergence instead
keeps exactly the rejection power that such pairs would have provided.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace as _dc_replace
from typing import Mapping, Optional

from .cpn import cpn_build_lts
from .lts import EPS, Lts, format_label
from .marking import Marking
from .model import DbNet, Snapshot, build_lts
from .freshness import FreshPolicy
from .relational import ContractError, render_fact, render_value
from .translate import TranslationOutput, translate

__all__ = [
    "BISIMILAR",
    "NOT_BISIMILAR",
    "FlatState",
    "WeakBisimResult",
    "flatten",
    "check_weak_bisim",
    "verify_relation",
    "certify_translation",
]

BISIMILAR = "bisimilar"
NOT_BISIMILAR = "not-bisimilar"


@dataclass(frozen=True)
class FlatState:
    """What two states must agree on to be comparable: the facts (as a
    multiset, so duplicated relation tokens are visible) and the tokens on
    the original control places.  Both parts are canonically sorted."""

    facts: tuple
    control: tuple

    def render(self) -> str:
        return "facts{" + ";".join(self.facts) + "}|ctl{" + ";".join(self.control) + "}"


@dataclass
class WeakBisimResult:
    verdict: str
    witness: Optional[dict] = None
    relation: Optional[tuple] = None  # related (state1, state2) pairs
    trace: tuple = ()  # counterexample lines, empty on success
    stats: dict = field(default_factory=dict)

    @property
    def bisimilar(self) -> bool:
        return self.verdict == BISIMILAR


def _token_lines(place: str, token, count: int) -> list:
    text = f"{place}({','.join(render_value(v) for v in token)})"
    return [text] * count


def _flat_of_snapshot(snap: Snapshot) -> FlatState:
    from .relational import instance_lines

    control = []
    for place in snap.marking.places_marked():
        for token, n in snap.marking.tokens(place):
            control.extend(_token_lines(place, token, n))
    return FlatState(tuple(instance_lines(snap.instance)), tuple(sorted(control)))


def _flat_of_marking(m: Marking, classes: Mapping, relation_names: Mapping) -> FlatState:
    facts = []
    control = []
    for place in m.places_marked():
        cls = classes.get(place)
        if cls == "relation":
            rel = relation_names[place]
            for token, n in m.tokens(place):
                facts.extend([render_fact(rel, token)] * n)
        elif cls == "original-control":
            for token, n in m.tokens(place):
                control.extend(_token_lines(place, token, n))
        # lock and gadget-interior places are not part of the flat view
    return FlatState(tuple(sorted(facts)), tuple(sorted(control)))


def flatten(
    lts: Lts,
    classes: Optional[Mapping] = None,
    label_map: Optional[Mapping] = None,
    *,
    relation_names: Optional[Mapping] = None,
) -> Lts:
    """Annotate every state with its flat projection and stability flag.

    For a source-layer LTS (``classes`` omitted) the projection is the
    identity and every state is stable.  For a translated LTS, ``classes``
    is the translator's place classification and ``relation_names`` maps
    relation places back to relation names; a state is stable iff the
    lock place is marked.  Edge labels are kept: observable labels were
    already produced per the translator's label map, and every other step
    is silent.  Flattening an already-flattened LTS is the identity.
    """
    annotations = dict(lts.annotations)
    first = lts.states[0] if lts.states else None
    if first is not None and annotations.get(first, {}).get("flat") is not None:
        return Lts(lts.initial, list(lts.states), list(lts.edges), lts.truncated, annotations)
    if classes is None:
        for s in lts.states:
            ann = dict(annotations.get(s, ()))
            ann["flat"] = _flat_of_snapshot(s).render()
            ann["stable"] = True
            annotations[s] = ann
    else:
        if relation_names is None:
            raise ContractError("flattening a translated LTS needs relation_names")
        lock_places = [p for p, c in classes.items() if c == "lock"]
        if len(lock_places) != 1:
            raise ContractError("place classification must contain exactly one lock place")
        lock = lock_places[0]
        for m in lts.states:
            ann = dict(annotations.get(m, ()))
            ann["flat"] = _flat_of_marking(m, classes, relation_names).render()
            ann["stable"] = m.total(lock) >= 1
            annotations[m] = ann
    return Lts(lts.initial, list(lts.states), list(lts.edges), lts.truncated, annotations)


# ---------------------------------------------------------------------------
# Silent-run analysis: convergence and weak steps over the stable kernel


class _Side:
    """Preprocessed view of one flattened LTS."""

    def __init__(self, lts: Lts, tag: str):
        self.lts = lts
        self.tag = tag
        self.flat = {}
        self.stable = {}
        for s in lts.states:
            ann = lts.annotations.get(s)
            if ann is None or "flat" not in ann or "stable" not in ann:
                raise ContractError(f"{tag}: state not flattened; call flatten() first")
            self.flat[s] = ann["flat"]
            self.stable[s] = bool(ann["stable"])
        self.eps_succ = {s: [] for s in lts.states}
        self.obs_succ = {s: [] for s in lts.states}
        self.out_degree = {s: 0 for s in lts.states}
        for src, label, dst in lts.edges:
            self.out_degree[src] += 1
            if label == EPS:
                self.eps_succ[src].append(dst)
            else:
                self.obs_succ[src].append((label, dst))
        self._reach = self._stable_reach()
        self._big: dict = {}

    # -- convergence -------------------------------------------------------

    def silent_dead_end(self):
        for s in self.lts.states:
            if not self.stable[s] and self.out_degree[s] == 0:
                return s
        return None

    def silent_divergence(self):
        """A state on a silent cycle that never passes a stable state."""
        interior = [s for s in self.lts.states if not self.stable[s]]
        succ = {
            s: [d for d in self.eps_succ[s] if not self.stable[d]] for s in interior
        }
        indeg = {s: 0 for s in interior}
        for s in interior:
            for d in succ[s]:
                indeg[d] += 1
        queue = [s for s in interior if indeg[s] == 0]
        seen = 0
        while queue:
            s = queue.pop()
            seen += 1
            for d in succ[s]:
                indeg[d] -= 1
                if indeg[d] == 0:
                    queue.append(d)
        if seen == len(interior):
            return None
        for s in interior:
            if indeg[s] > 0:
                return s
        return None

    # -- weak steps --------------------------------------------------------

    def _stable_reach(self) -> dict:
        """state -> frozenset of stable states reachable via silent steps
        (including itself when stable).  Iterative Tarjan over the silent
        edges; each strongly connected component shares one reach set."""
        index = {}
        low = {}
        comp = {}
        stack = []
        on_stack = set()
        counter = [0]
        comp_reach: list = []
        order: list = []

        for root in self.lts.states:
            if root in index:
                continue
            work = [(root, 0)]
            while work:
                node, pi = work[-1]
                if pi == 0:
                    index[node] = low[node] = counter[0]
                    counter[0] += 1
                    stack.append(node)
                    on_stack.add(node)
                succs = self.eps_succ[node]
                advanced = False
                while pi < len(succs):
                    nxt = succs[pi]
                    pi += 1
                    if nxt not in index:
                        work[-1] = (node, pi)
                        work.append((nxt, 0))
                        advanced = True
                        break
                    if nxt in on_stack:
                        low[node] = min(low[node], index[nxt])
                if advanced:
                    continue
                work[-1] = (node, pi)
                if pi >= len(succs):
                    work.pop()
                    if work:
                        parent = work[-1][0]
                        low[parent] = min(low[parent], low[node])
                    if low[node] == index[node]:
                        cid = len(comp_reach)
                        members = []
                        while True:
                            x = stack.pop()
                            on_stack.discard(x)
                            comp[x] = cid
                            members.append(x)
                            if x is node or x == node:
                                break
                        comp_reach.append(members)
                        order.append(cid)

        # Tarjan emits components in reverse topological order, so every
        # silent successor's component is finished before its sources.
        reach_of_comp: dict = {}
        for cid in order:
            members = comp_reach[cid]
            acc = {s for s in members if self.stable[s]}
            for s in members:
                for d in self.eps_succ[s]:
                    if comp[d] != cid:
                        acc |= reach_of_comp[comp[d]]
            reach_of_comp[cid] = frozenset(acc)
        return {s: reach_of_comp[comp[s]] for s in self.lts.states}

    def eps_targets(self, s) -> frozenset:
        return self._reach[s]

    def big_steps(self, s) -> dict:
        """label -> frozenset of stable states reachable as eps*;label;eps*."""
        hit = self._big.get(s)
        if hit is not None:
            return hit
        closure = set()
        queue = [s]
        while queue:
            x = queue.pop()
            if x in closure:
                continue
            closure.add(x)
            queue.extend(self.eps_succ[x])
        out: dict = {}
        for x in closure:
            for label, y in self.obs_succ[x]:
                # _reach[y] already contains y itself when y is stable
                out.setdefault(label, set()).update(self._reach[y])
        frozen = {label: frozenset(ts) for label, ts in out.items()}
        self._big[s] = frozen
        return frozen


def _path_to(lts: Lts, target) -> list:
    """Shortest path of labels from the initial state to ``target``."""
    parent = {lts.initial: None}
    queue = [lts.initial]
    idx = lts.outgoing_index()
    while queue and target not in parent:
        nxt = []
        for s in queue:
            for label, d in idx[s]:
                if d not in parent:
                    parent[d] = (s, label)
                    nxt.append(d)
        queue = nxt
    if target not in parent:
        return []
    steps = []
    cur = target
    while parent[cur] is not None:
        prev, label = parent[cur]
        steps.append(format_label(label))
        cur = prev
    steps.reverse()
    return steps


def check_weak_bisim(l1: Lts, l2: Lts) -> WeakBisimResult:
    """Decide flattened weak bisimilarity of two finite, flattened LTSs.

    Preconditions: neither input is truncated (raises ``ContractError``
    otherwise) and both were run through :func:`flatten`.  The verdict is
    symmetric in the two arguments.  On success the result carries the
    relation over stable states, on failure a structured witness plus a
    counterexample trace from the initial pair to the mismatch.
    """
    for tag, l in (("left", l1), ("right", l2)):
        if l.truncated:
            raise ContractError(
                f"{tag} LTS is truncated; the check needs the complete state space"
            )
    s1 = _Side(l1, "left")
    s2 = _Side(l2, "right")
    pos1 = {s: i for i, s in enumerate(l1.states)}
    pos2 = {s: i for i, s in enumerate(l2.states)}
    pair_key = lambda pr: (pos1[pr[0]], pos2[pr[1]])

    for side in (s1, s2):
        dead = side.silent_dead_end()
        if dead is not None:
            return WeakBisimResult(
                NOT_BISIMILAR,
                witness={
                    "kind": "silent-dead-end",
                    "side": side.tag,
                    "state": side.flat[dead],
                },
                trace=tuple(
                    [f"silent dead-end on the {side.tag} side", f"state: {side.flat[dead]}"]
                    + [f"  via {s}" for s in _path_to(side.lts, dead)]
                ),
            )
        div = side.silent_divergence()
        if div is not None:
            return WeakBisimResult(
                NOT_BISIMILAR,
                witness={
                    "kind": "silent-divergence",
                    "side": side.tag,
                    "state": side.flat[div],
                },
                trace=tuple(
                    [f"silent divergence on the {side.tag} side", f"state: {side.flat[div]}"]
                    + [f"  via {s}" for s in _path_to(side.lts, div)]
                ),
            )

    init = (l1.initial, l2.initial)
    if s1.flat[init[0]] != s2.flat[init[1]]:
        return WeakBisimResult(
            NOT_BISIMILAR,
            witness={
                "kind": "content-mismatch",
                "left": s1.flat[init[0]],
                "right": s2.flat[init[1]],
            },
            trace=(
                "initial contents differ",
                f"left:  {s1.flat[init[0]]}",
                f"right: {s2.flat[init[1]]}",
            ),
        )

    # Candidate pairs: product-reachable, content-compatible stable pairs.
    parents: dict = {init: None}
    rel = set()
    queue = [init]
    while queue:
        pair = queue.pop(0)
        if pair in rel:
            continue
        rel.add(pair)
        p, q = pair
        b1, b2 = s1.big_steps(p), s2.big_steps(q)
        for label in sorted(set(b1) | set(b2), key=format_label):
            for x in sorted(b1.get(label, ()), key=pos1.get):
                for y in sorted(b2.get(label, ()), key=pos2.get):
                    if s1.flat[x] == s2.flat[y] and (x, y) not in parents:
                        parents[(x, y)] = (pair, format_label(label))
                        queue.append((x, y))
        for x in sorted(s1.eps_targets(p), key=pos1.get):
            for y in sorted(s2.eps_targets(q), key=pos2.get):
                if s1.flat[x] == s2.flat[y] and (x, y) not in parents:
                    parents[(x, y)] = (pair, "eps")
                    queue.append((x, y))

    def unanswered(pair):
        p, q = pair
        b1, b2 = s1.big_steps(p), s2.big_steps(q)
        for label in sorted(set(b1) | set(b2), key=format_label):
            t1 = b1.get(label, frozenset())
            t2 = b2.get(label, frozenset())
            for x in sorted(t1, key=pos1.get):
                if not any(s1.flat[x] == s2.flat[y] and (x, y) in rel for y in t2):
                    return ("left", format_label(label), x)
            for y in sorted(t2, key=pos2.get):
                if not any(s1.flat[x] == s2.flat[y] and (x, y) in rel for x in t1):
                    return ("right", format_label(label), y)
        for x in sorted(s1.eps_targets(p), key=pos1.get):
            if not any(s1.flat[x] == s2.flat[y] and (x, y) in rel for y in s2.eps_targets(q)):
                return ("left", "eps", x)
        for y in sorted(s2.eps_targets(q), key=pos2.get):
            if not any(s1.flat[x] == s2.flat[y] and (x, y) in rel for x in s1.eps_targets(p)):
                return ("right", "eps", y)
        return None

    removed: dict = {}
    changed = True
    while changed:
        changed = False
        for pair in sorted(rel, key=pair_key):
            reason = unanswered(pair)
            if reason is not None:
                rel.discard(pair)
                removed[pair] = (len(removed),) + reason
                changed = True

    if init in rel:
        ordered = tuple(sorted(rel, key=pair_key))
        return WeakBisimResult(BISIMILAR, relation=ordered)

    # Reconstruct a blame chain: each removed pair names a weak move whose
    # content-compatible answers were all removed before it, so following
    # the earliest-removed answer strictly descends and terminates.
    trace = []
    pair = init
    prefix = []
    while True:
        _order, side, label, target = removed[pair]
        trace.extend(prefix)
        trace.append(f"pair: left={s1.flat[pair[0]]} right={s2.flat[pair[1]]}")
        trace.append(f"  {side} side moves [{label}] but no answer survives")
        if side == "left":
            tflat = s1.flat[target]
            answers = _answers_for(pair, label, target, s1, s2, left=True)
        else:
            tflat = s2.flat[target]
            answers = _answers_for(pair, label, target, s1, s2, left=False)
        trace.append(f"  moving to: {tflat}")
        dead_answers = sorted(
            (removed[a][0], a) for a in answers if a in removed
        )
        if not dead_answers:
            trace.append("  no content-compatible weak answer exists at all")
            break
        pair = dead_answers[0][1]
        prefix = ["  descending into the best candidate answer:"]
    witness = {
        "kind": "unmatched-move",
        "side": removed[init][1],
        "label": removed[init][2],
        "left": s1.flat[init[0]],
        "right": s2.flat[init[1]],
    }
    return WeakBisimResult(NOT_BISIMILAR, witness=witness, trace=tuple(trace))


def _answers_for(pair, label_text, target, s1: _Side, s2: _Side, *, left: bool):
    """All content-compatible candidate pairs answering one weak move."""
    p, q = pair
    if label_text == "eps":
        pool = s2.eps_targets(q) if left else s1.eps_targets(p)
    else:
        big = s2.big_steps(q) if left else s1.big_steps(p)
        pool = frozenset().union(
            *[ts for lab, ts in big.items() if format_label(lab) == label_text]
        ) if big else frozenset()
    if left:
        return [(target, y) for y in pool if s1.flat[target] == s2.flat[y]]
    return [(x, target) for x in pool if s1.flat[x] == s2.flat[target]]


def verify_relation(l1: Lts, l2: Lts, relation) -> list:
    """Re-check a claimed relation against the transfer conditions: related
    states have equal flat contents, every weak move of either state is
    answered by a weak move of the other into a related pair, and the
    initial pair is present.  Returns human-readable problems."""
    s1 = _Side(l1, "left")
    s2 = _Side(l2, "right")
    rel = set(relation)
    problems = []
    if (l1.initial, l2.initial) not in rel:
        problems.append("relation does not contain the initial pair")
    for p, q in relation:
        if s1.flat[p] != s2.flat[q]:
            problems.append(f"related pair differs in content: {s1.flat[p]} vs {s2.flat[q]}")
            continue
        b1, b2 = s1.big_steps(p), s2.big_steps(q)
        for label in set(b1) | set(b2):
            t1 = b1.get(label, frozenset())
            t2 = b2.get(label, frozenset())
            for x in t1:
                if not any((x, y) in rel for y in t2):
                    problems.append(
                        f"unanswered left move {format_label(label)} from {s1.flat[p]}"
                    )
            for y in t2:
                if not any((x, y) in rel for x in t1):
                    problems.append(
                        f"unanswered right move {format_label(label)} from {s2.flat[q]}"
                    )
        for x in s1.eps_targets(p):
            if not any((x, y) in rel for y in s2.eps_targets(q)):
                problems.append(f"unanswered left silent move from {s1.flat[p]}")
        for y in s2.eps_targets(q):
            if not any((x, y) in rel for x in s1.eps_targets(p)):
                problems.append(f"unanswered right silent move from {s2.flat[q]}")
    return problems


def certify_translation(
    model: DbNet,
    s0: Optional[Snapshot] = None,
    policy: Optional[FreshPolicy] = None,
    *,
    max_states: Optional[int] = None,
    max_depth: Optional[int] = None,
    jobs: int = 1,
    translation: Optional[TranslationOutput] = None,
) -> WeakBisimResult:
    """Full pipeline: explore the source net and its translation under one
    shared fresh-value regime, flatten both, and decide weak bisimilarity.

    ``translation`` may be supplied to certify a pre-built (for instance
    deliberately mutated) translation of the same model.  Truncation in
    either exploration raises, as the verdict would be meaningless.
    """
    policy = policy or model.default_policy
    if s0 is not None and (
        s0.instance is not model.initial_instance or s0.marking != model.initial_marking
    ):
        model = _dc_replace(model, initial_instance=s0.instance, initial_marking=s0.marking)
    if translation is None:
        translation = translate(model)

    def left():
        return build_lts(model, policy, max_states=max_states, max_depth=max_depth)

    def right():
        return cpn_build_lts(
            translation.net, policy, max_states=max_states, max_depth=max_depth
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=2) as pool:
            f1, f2 = pool.submit(left), pool.submit(right)
            raw1, raw2 = f1.result(), f2.result()
    else:
        raw1, raw2 = left(), right()

    relation_names = {p: r for r, p in translation.relation_places.items()}
    flat1 = flatten(raw1)
    flat2 = flatten(
        raw2,
        translation.place_classes,
        translation.label_map,
        relation_names=relation_names,
    )
    result = check_weak_bisim(flat1, flat2)
    result.stats = {
        "source-states": raw1.state_count,
        "source-edges": raw1.edge_count,
        "translated-states": raw2.state_count,
        "translated-edges": raw2.edge_count,
    }
    return result
