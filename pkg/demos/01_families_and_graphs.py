"""Tour of the anomaly families: membership, enumeration, superset counts.

Run:  python demos/01_families_and_graphs.py
"""

import structscan as ss

# Seven families share one interface.  Build a few over small universes.
path4 = ss.generate_graph("path", 4)
families = {
    "interval(5)": ss.interval_family(5),
    "unstructured(5)": ss.unstructured_family(5),
    "connected(P4)": ss.connected_family(path4),
    "graph_cut(P4, rho=2)": ss.graph_cut_family(path4, 2),
    "submatrix(2x3)": ss.submatrix_family(2, 3),
}

print("= membership checks =")
s = ss.IndexSet((1, 2), 5)
print("{1,2} in interval(5)?     ", ss.contains(families["interval(5)"], s))
print("{1,3} in interval(5)?     ", ss.contains(families["interval(5)"], ss.IndexSet((1, 3), 5)))
print("{0,2} connected on P4?    ", ss.contains(families["connected(P4)"], ss.IndexSet((0, 2), 4)))
print("{1,2} cut<=2 on P4?       ", ss.contains(families["graph_cut(P4, rho=2)"], ss.IndexSet((1, 2), 4)))

print("\n= enumeration (lexicographic) =")
for name in ("interval(5)", "connected(P4)"):
    members = ss.enumerate_family(families[name])
    print(f"{name}: {len(members)} members; first five:",
          [m.indices for m in members[:5]])

print("\n= superset counts drive the MLE's bias =")
a = ss.IndexSet((2,), 5)
print("intervals containing {2}:      ", ss.count_supersets(ss.interval_family(5), a))
print("arbitrary subsets containing {2}:", ss.count_supersets(ss.unstructured_family(5), a))
print("(sub-exponential vs exponential growth in n is the whole story)")

print("\n= benchmark graph constructions =")
lol = ss.generate_graph("lollipop", 9, path_len=5, clique_len=5)
print("lollipop(5,5):", lol.n_edges(), "edges,",
      len(lol.components()), "component(s)")
disjoint = ss.generate_graph("disjoint_path_clique", 10, path_len=5, clique_len=5)
print("disjoint path+clique:", [len(c) for c in disjoint.components()], "component sizes")
print("30x30 lattice:", ss.generate_graph("lattice", 900).n_edges(), "edges")
