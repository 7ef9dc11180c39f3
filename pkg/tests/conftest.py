import itertools

import numpy as np

from hspc import groups as gr
from hspc import sim


def compositions(n):
    """All ordered block-size tuples summing to n."""
    out = []
    for bits in itertools.product([0, 1], repeat=max(n - 1, 0)):
        part, size = [], 1
        for b in bits:
            if b:
                size += 1
            else:
                part.append(size)
                size = 1
        part.append(size)
        out.append(tuple(part))
    return out


def canonical_groups(n):
    return [gr.GroupStructure.canonical(*p) for p in compositions(n)]


def cyclic_subgroups(group):
    """Every distinct single-generator subgroup, one representative generator."""
    seen = {}
    for s in range(group.size):
        sub = gr.subgroup_generated(group, s)
        seen.setdefault(sub.elements, sub)
    return list(seen.values())


def hiding_oracle(group, hidden, m=None, values=None, rng=None):
    """Oracle hiding `hidden` exactly: distinct value per coset."""
    reps = gr.cosets(group, hidden)
    if m is None:
        m = max(1, (len(reps) - 1).bit_length())
    if values is None:
        if rng is None:
            values = list(range(len(reps)))
        else:
            values = rng.choice(1 << m, size=len(reps), replace=False)
    lookup = dict(zip(reps, values))
    table = [lookup[int(r)] for r in gr.mod_h_table(group, hidden)]
    return sim.Oracle(group.n, m, np.array(table))
