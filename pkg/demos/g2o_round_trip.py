"""Export a corrupted pose graph to g2o, read it back and solve from the file.

Pass a path to a g2o file to solve that instead:
``python demos/g2o_round_trip.py intel.g2o``.
"""

import sys
import tempfile
from pathlib import Path

from robust_pgo2d import (
    Grid,
    InjectionSpec,
    SyntheticSpec,
    degnc_laf,
    generate_synthetic,
    inject_outliers,
    read_g2o,
    write_g2o,
)

if len(sys.argv) > 1:
    path = Path(sys.argv[1])
else:
    graph, truth = generate_synthetic(SyntheticSpec(Grid(10, 10), 0.01, 0.05, 0.3, rng_seed=3))
    corrupted, _ = inject_outliers(graph, InjectionSpec(0.25, rng_seed=3), extent=truth.t)
    path = Path(tempfile.mkdtemp()) / "corrupted.g2o"
    path.write_text(write_g2o(corrupted))
    print(f"wrote {corrupted.num_edges} edges to {path}")

graph, initial = read_g2o(path)
print(graph)
report = degnc_laf(graph)
print(f"kept {len(report.inlier_set)} of {graph.num_loop_closures} loop closures")

out = path.with_name(path.stem + "_optimized.g2o")
with open(out, "w") as fh:
    write_g2o(graph, report.estimate, fh)
print(f"optimized poses written to {out}")
