"""Shared fixtures and randomized generators.

Every randomized driver below derives its stream from METASTAB_SEED (env),
so a run with the same seed is reproducible; the default seed is fixed and
the hypothesis profile is derandomized, which keeps CI output stable.
"""

import os
import zlib

import numpy as np
from hypothesis import HealthCheck, settings

from metastab.landscape import CriticalStructure, Minimum, Saddle
from metastab.prefactors import GradedCore

BASE_SEED = int(os.environ.get("METASTAB_SEED", "70917"))

settings.register_profile(
    "metastab",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("metastab")


def make_rng(tag):
    """Independent deterministic stream per test, salted by a stable hash."""
    return np.random.default_rng([BASE_SEED, zlib.crc32(tag.encode())])


# ---------------------------------------------------------------- matrices


def random_spd_core(rng, max_dim=12):
    """SPD graded core with 2..4 blocks of size 1..3 and eigenvalues in
    [1/2, 2], so consecutive scale blocks never overlap at the tested tau."""
    p = int(rng.integers(2, 5))
    sizes = [int(rng.integers(1, 4)) for _ in range(p)]
    assert sum(sizes) <= max_dim
    dim = sum(sizes)
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    d = rng.uniform(0.5, 2.0, size=dim)
    core = (q * d) @ q.T
    core = 0.5 * (core + core.T)
    blocks = tuple((r, float(j + 1)) for j, r in enumerate(sizes))
    return GradedCore(core, blocks, None)


def random_spd(rng, dim):
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    d = rng.uniform(0.5, 2.0, size=dim)
    m = (q * d) @ q.T
    return 0.5 * (m + m.T)


# -------------------------------------------------------------- landscapes


def _tree_edges(rng, verts):
    order = list(verts)
    rng.shuffle(order)
    return [(order[k], order[int(rng.integers(0, k))])
            for k in range(1, len(order))]


def _gadget(rng, member_levels, conduit_phi, member_tree):
    """One-class landscape: a conduit well plus q member wells, all saddles
    at a single level. ``member_tree`` switches between a tree over members
    with explicit conduit links (keeps every member type I reachable) and a
    tree over everything (the type II layout)."""
    q = len(member_levels)
    ids = [f"w{j + 1:02d}" for j in range(q)]
    minima = [Minimum("c00", conduit_phi, float(rng.uniform(0.1, 10.0)))]
    minima += [Minimum(mid, lvl, float(rng.uniform(0.1, 10.0)))
               for mid, lvl in zip(ids, member_levels)]
    if member_tree:
        edges = _tree_edges(rng, ids)
        links = 1 + int(rng.integers(0, 2))
        for mid in rng.choice(ids, size=min(links, q), replace=False):
            edges.append((str(mid), "c00"))
    else:
        edges = _tree_edges(rng, ids + ["c00"])
    # a couple of extra same-level saddles, avoiding duplicate pairs
    seen = {frozenset(e) for e in edges}
    verts = ids if member_tree else ids + ["c00"]
    for _ in range(int(rng.integers(0, 3)) if len(verts) > 1 else 0):
        a, b = rng.choice(verts, size=2, replace=False)
        if frozenset((a, b)) not in seen:
            seen.add(frozenset((a, b)))
            edges.append((str(a), str(b)))
    saddles = [
        Saddle(f"t{k + 1:02d}", 2.0, float(rng.uniform(0.1, 10.0)),
               float(rng.uniform(0.1, 10.0)), e)
        for k, e in enumerate(edges)
    ]
    return CriticalStructure(minima, saddles)


def type2_gadget(rng, max_members=6, flat=False):
    """Landscape whose single nontrivial class is type II (at least one
    member sits at the conduit's level). ``flat`` puts every member at that
    level, so the class has a single barrier block."""
    q = int(rng.integers(2, max_members + 1))
    levels = [0.0] + [0.0 if flat else float(rng.choice([0.0, 0.3, 0.6]))
                      for _ in range(q - 1)]
    return _gadget(rng, levels, conduit_phi=0.0, member_tree=False)


def type1_gadget(rng, max_members=6):
    """Landscape whose nontrivial classes are all type I (conduit strictly
    below every member)."""
    q = int(rng.integers(1, max_members + 1))
    levels = [float(rng.choice([0.0, 0.3, 0.6])) for _ in range(q)]
    return _gadget(rng, levels, conduit_phi=-0.5, member_tree=True)


def random_tree_structure(rng, n_max=9):
    """Merge-tree landscape with pairwise distinct minimum values and
    pairwise distinct saddle values: satisfies the genericity conditions by
    construction."""
    n = int(rng.integers(3, n_max + 1))
    depth = rng.permutation(n)
    minima = [Minimum(f"m{j + 1:02d}", 0.1 * float(depth[j]),
                      float(rng.uniform(0.1, 10.0)))
              for j in range(n)]
    comps = [[m.id] for m in minima]
    saddles = []
    for k in range(n - 1):
        i, j = rng.choice(len(comps), size=2, replace=False)
        a = str(rng.choice(comps[i]))
        b = str(rng.choice(comps[j]))
        saddles.append(Saddle(f"s{k + 1:02d}", 1.5 + 0.2 * k,
                              float(rng.uniform(0.1, 10.0)),
                              float(rng.uniform(0.1, 10.0)), (a, b)))
        comps[min(i, j)] = comps[i] + comps[j]
        del comps[max(i, j)]
    return CriticalStructure(minima, saddles)


def alternating_family():
    """Two wells of equal depth around a strictly deeper middle well, both
    saddles at one level: fails genericity while every class stays a
    singleton."""
    minima = [Minimum("m1", 1.0, 1.0), Minimum("m2", 0.0, 1.0),
              Minimum("m3", 1.0, 1.0)]
    saddles = [Saddle("s1", 2.0, 1.0, 1.0, ("m1", "m2")),
               Saddle("s2", 2.0, 1.0, 1.0, ("m2", "m3"))]
    return CriticalStructure(minima, saddles)
