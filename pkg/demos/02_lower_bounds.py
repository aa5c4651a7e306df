"""The lower bound families and what each one sees.

The homogeneous-line bounds (LC1, LC2, LC3) relax every task to its fastest
worker; the machine-relaxation bounds (L1, L1a, L2 and their disjunctive
strengthenings) drop the precedence constraints instead.
"""

from alwabp import all_bounds, parse_instance, station_windows
from alwabp.bounds import ALL_BOUNDS

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
report = all_bounds(inst, ALL_BOUNDS)
print(f"{'bound':<10} {'value':>5} {'time':>10}")
for entry in report.entries:
    print(f"{entry.name:<10} {entry.value:>5} {entry.elapsed_s * 1000:>8.2f}ms")
print(f"{'best':<10} {report.best:>5}")

# LC3 is the smallest cycle time at which every task still has a station
# window; at 4 the last task is squeezed out
for c in (4, 5, 6):
    win = station_windows(inst, c)
    rows = ", ".join(f"t{t + 1}:[{e},{l}]" for t, (e, l) in enumerate(zip(win.earliest, win.latest)))
    print(f"C={c}: {rows}")
