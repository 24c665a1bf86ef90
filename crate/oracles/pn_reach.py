"""Independent reachability and firing-language counts for the net fixtures.

Reads the line format directly and applies the firing rule with capacities
(plus the contact rule for nets whose weights and capacities are all 1).
"""
import sys
from collections import deque


def load(path):
    places, caps, init, trans, arcs = [], {}, {}, [], []
    for raw in open(path):
        line = raw.split("#")[0].split()
        if not line:
            continue
        if line[0] == "place":
            p = line[1]
            places.append(p)
            rest = line[2:]
            for i in range(0, len(rest), 2):
                if rest[i] == "cap":
                    caps[p] = int(rest[i + 1])
                elif rest[i] == "tokens":
                    init[p] = int(rest[i + 1])
        elif line[0] == "trans":
            trans.append(line[1])
        elif line[0] == "arc":
            w = int(line[5]) if len(line) > 4 else 1
            arcs.append((line[1], line[3], w))
    elementary = all(w == 1 for _, _, w in arcs) and all(caps.get(p) == 1 for p in places) \
        and all(v <= 1 for v in init.values())
    return places, caps, init, trans, arcs, elementary


def step(net, m, t):
    places, caps, _, _, arcs, elementary = net
    m = dict(m)
    for a, b, w in arcs:
        if b == t:
            if m.get(a, 0) < w:
                return None
            m[a] -= w
    outs = [(b, w) for a, b, w in arcs if a == t]
    if elementary and any(m.get(q, 0) > 0 for q, _ in outs):
        return None
    for q, w in outs:
        m[q] = m.get(q, 0) + w
        if q in caps and m[q] > caps[q]:
            return None
    return m


def key(m):
    return tuple(sorted((p, n) for p, n in m.items() if n))


def reach(net):
    start = dict(net[2])
    seen = {key(start)}
    queue = deque([start])
    edges = 0
    while queue:
        m = queue.popleft()
        for t in net[3]:
            n = step(net, m, t)
            if n is None:
                continue
            edges += 1
            if key(n) not in seen:
                seen.add(key(n))
                queue.append(n)
    return len(seen), edges


def words(net, depth):
    out = set()
    frontier = [(dict(net[2]), ())]
    for _ in range(depth + 1):
        nxt = []
        for m, w in frontier:
            out.add(w)
            if len(w) < depth:
                for t in net[3]:
                    n = step(net, m, t)
                    if n is not None:
                        nxt.append((n, w + (t,)))
        frontier = nxt
    return len(out)


if __name__ == "__main__":
    net = load(sys.argv[1])
    depth = int(sys.argv[2]) if len(sys.argv) > 2 else 6
    n, e = reach(net)
    print(f"markings {n} edges {e} words@{depth} {words(net, depth)}")
