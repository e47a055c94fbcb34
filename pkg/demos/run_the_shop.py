#!/usr/bin/env python3
"""Walk through the web-shop net step by step.

Without an argument the script scans seeds until the random walk hits
the bonus renegotiation loop (AcquireBonus firing twice -> the second
one rolls back on the key constraint and lands in `rebonus`), so the
printed trace always shows a rollback.  Pass a seed to see that
particular walk instead.
"""

import random
import sys

from dbnet import FreshPolicy, enabled_bindings, fire
from dbnet.corpus import build_shopping_cart
from dbnet.lts import format_label
from dbnet.model import analyze_transition, binding_label, render_snapshot

net = build_shopping_cart(users=2, products=2)
policy = FreshPolicy.parse("recycling")


def walk(seed):
    rng = random.Random(seed)
    snap = net.initial_snapshot()
    lines, saw_rollback = [], False
    for step in range(1, 30):
        options = enabled_bindings(net, snap, policy)
        if not options:
            lines.append(f"     no transition enabled, the order is done")
            break
        t, theta = options[rng.randrange(len(options))]
        snap, outcome = fire(net, snap, t, theta)
        label = binding_label(t.name, analyze_transition(t), theta, outcome)
        marker = "  <-- rolled back!" if outcome == "rollback" else ""
        saw_rollback |= outcome == "rollback"
        lines.append(f"{step:3d}  {format_label(label)}{marker}")
    return lines, snap, saw_rollback


if len(sys.argv) > 1:
    seed = int(sys.argv[1])
else:
    seed = next(s for s in range(10_000) if walk(s)[2])
    print(f"(scanned for a walk with a rollback; found seed {seed})\n")

lines, final, _ = walk(seed)
print("initial:", render_snapshot(net.initial_snapshot()))
print()
print("\n".join(lines))
print()
print("final:  ", render_snapshot(final))
