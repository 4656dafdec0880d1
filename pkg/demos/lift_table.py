"""Print how many lifts to Spin(n) some finite rotation groups have."""

from tale.groups import enumerate_spin_lifts, make_binary_polyhedral, make_cyclic_subgroup, weyl_fixed_subspaces

print("cyclic groups in SO(2)")
for m in range(1, 10):
    print(f"  Z_{m}: {len(enumerate_spin_lifts(make_cyclic_subgroup(2, m)))} lift(s)")

print("groups in SO(4)")
groups = [make_cyclic_subgroup(4, 2, (1, 1)), make_cyclic_subgroup(4, 3, (1, 2)),
          make_binary_polyhedral("dihedral", 3), make_binary_polyhedral("tetrahedral")]
for G in groups:
    lifts = enumerate_spin_lifts(G)
    dims = [weyl_fixed_subspaces(L) for L in lifts]
    print(f"  {G.name} (order {G.order}): {len(lifts)} lift(s), Weyl fixed dims {dims}")
