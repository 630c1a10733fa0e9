"""When a degree defect beats the community eigenvector.

On bimodal graphs the second eigenvector can abandon the planted
partition: a localized mode seeded by a low-degree vertex (or a cluster
of them within radius g) drops below the community eigenvalue once the
cross-link density is high enough.  This script finds that takeover
point for both Laplacian conventions and checks it against a measured
graph on each side.
"""
import numpy as np

from specdetect import (
    Bimodal,
    BlockParams,
    DefectTree,
    Ema,
    Kind,
    LaplacianKind,
    build_laplacian,
    defect_degree,
    ipr,
    localization_compare,
    localized_mode_ema,
    ncut_ema,
    ratiocut_ema,
    sample_graph,
    second_smallest_eigenpair,
    zero_mode,
)

SPEC = Bimodal(3, 9, 0.1)
P1 = 0.6
N = 4000

print(f"degree classes {{3, 9}}, 10% degree-3 vertices, p1 = {P1}")
print(f"defect degree: {defect_degree(SPEC.c1, SPEC.c2, SPEC.b1)}")

for kind, lap, solver in (
    (Kind.L, LaplacianKind.UNNORMALIZED, lambda g: ratiocut_ema(SPEC, P1, g)[0]),
    (Kind.NCUT, LaplacianKind.NORMALIZED, lambda g: ncut_ema(SPEC, P1, g)),
):
    print(f"\n--- {lap.name} ---")
    takeover = None
    for gamma in np.arange(0.1, 2.0, 0.1):
        sol = solver(gamma)
        c_d = defect_degree(SPEC.c1, SPEC.c2, SPEC.b1)
        best = None
        for g in range(4):
            mode = localized_mode_ema(kind, DefectTree(c_d, g, Ema(SPEC, P1, gamma)))
            if mode is not None and (best is None or mode.lam < best.lam):
                best = mode
        verdict = localization_compare(sol.lambda2, best)
        if verdict["winner"] == "Localized" and takeover is None:
            takeover = gamma
        loc = "none" if best is None else f"{best.lam:.4f}"
        print(f"gamma={gamma:.1f}  community={sol.lambda2:.4f}  localized={loc}"
              f"  winner={verdict['winner']}")
    if takeover is None:
        print("no takeover in the scanned range")
        continue
    print(f"takeover near gamma = {takeover:.1f}")
    for gamma, side in ((takeover - 0.1, "before"), (takeover + 0.3, "after")):
        gamma = round(gamma / 0.05) * 0.05
        graph = sample_graph(SPEC, BlockParams(N, P1, gamma), seed=7)
        m = build_laplacian(graph, lap)
        res = second_smallest_eigenpair(m, zero_mode(graph, lap), seed=7)
        print(f"  measured {side} ({gamma:.2f}): lambda2={res.lambda2:.4f} "
              f"IPR={ipr(res.vector):.4f} ({ipr(res.vector)*N:.0f}/n)")
