"""Seeded random generators for the query agreement checks.

Shapes follow the documented limits of the agreement audit: at most 3
relations, at most 5 tuples per relation, at most 3 atoms per conjunct,
filters restricted to inequalities between safe terms.
"""

import itertools

from dbnet.fo import Atom, Compare, eval_fo_oracle
from dbnet.queries import Conjunct, UcqQuery, ucq_to_fo
from dbnet.relational import (
    DataType,
    Instance,
    RelationSchema,
    Schema,
    Variable,
    active_domain,
    make_value,
    null_value,
)

INT = DataType("int", "int")
STR = DataType("string", "string")
TYPES = {"int": INT, "string": STR}

_RELS = (
    RelationSchema("A", ("int",)),
    RelationSchema("B", ("int", "string")),
    RelationSchema("C", ("string", "int", "int")),
)
GEN_SCHEMA = Schema(relations={r.name: r for r in _RELS})

_INTS = tuple(make_value(INT, n) for n in range(4))
_STRS = tuple(make_value(STR, s) for s in "abc")


def _pool(tname):
    return _INTS if tname == "int" else _STRS


def _rand_value(rng, tname):
    # an occasional null keeps the null-handling paths honest
    if rng.random() < 0.1:
        return null_value(tname)
    return rng.choice(_pool(tname))


def random_instance(rng) -> Instance:
    facts = {}
    for rel in _RELS:
        rows = set()
        for _ in range(rng.randrange(6)):
            rows.add(tuple(_rand_value(rng, t) for t in rel.column_types))
        facts[rel.name] = rows
    return Instance(GEN_SCHEMA, facts)


def random_query(rng, name="Q") -> UcqQuery:
    """A safe union of conjunctive queries with inequality filters."""
    while True:
        q = _try_query(rng, name)
        if q is not None:
            return q


def _try_query(rng, name):
    n_disj = rng.choice((1, 1, 2))
    conjuncts = []
    per_conjunct_vars = []
    for _ in range(n_disj):
        vartab = {}
        atoms = []
        for _ in range(rng.randrange(1, 4)):
            rel = rng.choice(_RELS)
            terms = []
            for tname in rel.column_types:
                roll = rng.random()
                same_type = [v for v in vartab.values() if v.dtype == tname]
                if roll < 0.5 and same_type:
                    terms.append(rng.choice(sorted(same_type, key=lambda v: v.name)))
                elif roll < 0.8:
                    v = Variable(f"x{len(vartab)}", tname)
                    vartab[v.name] = v
                    terms.append(v)
                else:
                    terms.append(_rand_value(rng, tname))
            atoms.append(Atom(rel.name, tuple(terms)))
        filters = []
        names = sorted(vartab)
        for _ in range(rng.randrange(3)):
            if not names:
                break
            left = vartab[rng.choice(names)]
            mates = [v for v in vartab.values() if v.dtype == left.dtype and v.name != left.name]
            if mates and rng.random() < 0.6:
                right = rng.choice(sorted(mates, key=lambda v: v.name))
            else:
                right = rng.choice(_pool(left.dtype))
            filters.append(Compare("!=", left, right))
        conjuncts.append(Conjunct(tuple(atoms), tuple(filters)))
        per_conjunct_vars.append(vartab)
    shared = set(per_conjunct_vars[0])
    for tab in per_conjunct_vars[1:]:
        shared = {
            n for n in shared if n in tab and tab[n].dtype == per_conjunct_vars[0][n].dtype
        }
    shared = sorted(shared)
    if not shared:
        return None
    head = tuple(per_conjunct_vars[0][n] for n in shared[: rng.choice((1, 1, 2))])
    return UcqQuery(name, head, tuple(conjuncts))


def answers_by_oracle(instance: Instance, query: UcqQuery) -> frozenset:
    """Answer set recomputed through the formula route: enumerate head
    assignments over the active domain and ask the naive evaluator."""
    fo = ucq_to_fo(query)
    columns = []
    for v in query.head:
        columns.append(sorted(active_domain(instance, v.dtype), key=lambda x: x.sort_key()))
    out = set()
    for combo in itertools.product(*columns):
        env = {v.name: val for v, val in zip(query.head, combo)}
        if eval_fo_oracle(instance, fo, env):
            out.add(tuple(combo))
    return frozenset(out)
