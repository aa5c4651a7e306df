"""Working with instances: the text format, precedence tooling, and the
random generator."""

from alwabp import (
    generate_instance,
    parse_instance,
    reverse_instance,
    transitive_closure,
    transitive_reduction,
    write_instance,
)

TEXT = """\
alwabp 1
tasks 6
workers 3
times
4 inf 3
4 5 4
3 6 2
1 5 inf
1 2 3
6 4 inf
precedences
1 2
1 3
3 4
3 5
2 5
5 6
end
"""

inst = parse_instance(TEXT)
print(f"parsed {inst}")
print(f"minimum times per task: {inst.min_times}")
print(f"stored arcs (transitively reduced): {sorted(inst.edges)}")
print(f"closure has {len(inst.closure)} arcs")

# the parser normalizes away redundant arcs, and the tooling is exposed
chain = {(0, 1), (1, 2), (0, 2)}
print(f"\nreduction of a redundant chain {sorted(chain)} -> {sorted(transitive_reduction(chain, 3))}")
print(f"closure of the reduced chain -> {sorted(transitive_closure({(0, 1), (1, 2)}, 3))}")

# reversing all dependencies turns a forward construction into a backward one
rev = reverse_instance(inst)
print(f"\nreversed arcs: {sorted(rev.edges)}")

# a random instance: worker 1 keeps the base times, the others draw from
# [1, p] ("low" variability) or [1, 2p] ("high"), then 20% of the cells
# become infeasible
random_inst = generate_instance(
    base_times=[4, 4, 3, 1, 1, 6],
    base_edges=inst.edges,
    n_workers=4,
    variability="high",
    infeasibility=0.2,
    seed=7,
)
print("\ngenerated instance in canonical form:")
print(write_instance(random_inst))
