#!/usr/bin/env python3
"""Evaluate view queries two ways and watch them agree.

eval_ucq is the engine the nets actually use; eval_fo_oracle is a dumb
quantifier-expansion evaluator over the same active domain.  They are
written independently on purpose — if they ever disagree on a safe
query, one of them has a bug.
"""

import random

from dbnet import (
    Conjunct,
    DataType,
    Instance,
    RelationSchema,
    Schema,
    UcqQuery,
    Variable,
    eval_fo_oracle,
    eval_ucq,
    make_value,
    ucq_to_fo,
)
from dbnet.fo import Atom, Compare, Exists, free_variables
from dbnet.relational import active_domain

INT = DataType("int", "int")

schema = Schema(
    relations={
        "E": RelationSchema("E", ("int", "int")),
        "V": RelationSchema("V", ("int",)),
    },
    constraints=(),
)

rng = random.Random(4)
edges = {(rng.randrange(4), rng.randrange(4)) for _ in range(6)}
inst = Instance(
    schema,
    {
        "E": [(make_value(INT, a), make_value(INT, b)) for a, b in edges],
        "V": [(make_value(INT, k),) for k in range(4)],
    },
)

x, y, z = (Variable(n, "int") for n in "xyz")

# nodes with an outgoing edge to a *different* node
q1 = UcqQuery("out_deg", (x,), (Conjunct((Atom("E", (x, y)),), (Compare("!=", x, y),)),))

# endpoints of length-2 paths, or isolated-looking vertices listed in V
q2 = UcqQuery(
    "two_step_or_vertex",
    (x,),
    (
        Conjunct((Atom("E", (x, y)), Atom("E", (y, z)))),
        Conjunct((Atom("V", (x,)),)),
    ),
)

for q in (q1, q2):
    fast = eval_ucq(inst, q)
    # wrap the query body in explicit quantifiers for the oracle
    formula = ucq_to_fo(q)
    head_names = {v.name for v in q.head}
    slow = set()
    dom = sorted(active_domain(inst, INT), key=lambda v: v.sort_key())
    for v in dom:
        theta = {q.head[0].name: v}
        body = formula
        for var in free_variables(formula).values():
            if var.name not in head_names:
                body = Exists(var, body)
        if eval_fo_oracle(inst, body, theta):
            slow.add((v,))
    agree = fast == frozenset(slow)
    print(f"{q.name}: engine={sorted(t[0].payload for t in fast)} "
          f"oracle={sorted(t[0].payload for t in slow)} agree={agree}")
