"""Small-scale benchmark grid: every algorithm on every scenario.

Reproduces the shape of the headline comparison table -- mean RMSE with
variance in brackets, per-scenario, plus cross-scenario averages and
timing -- at a desk-friendly particle count. The `bench` CLI runs the
same grid at any scale (`bench table1 --particles 10000 --runs 100 ...`)
and writes the CSV artifacts.

Run:  python demos/04_benchmark_grid.py
"""

from modalfuse.bench import format_table1, run_table1

grid = run_table1(n_particles=500, runs=10, master_seed=3)

print("mean RMSE (variance), 500 particles, 10 runs per cell:\n")
print(format_table1(grid))

print("""
Reading the grid:
 * scenario 1 (no failures): DMA matches the plain PF.
 * scenario 2 (one sensor lies at a time): the PF gets dragged by
   garbage; DMA identifies and ignores it.
 * scenario 3 (brief losses): everyone copes except SMA, whose
   single-sensor sub-filters drift on their blind coordinate.
 * scenario 4 (both sensors lie together): DMA coasts through the
   blackout and re-locks; the others never fully recover.
""")
