"""Small directed-graph helpers (Tarjan SCC, topological order)."""

from __future__ import annotations

from collections.abc import Hashable, Iterable, Mapping


def strongly_connected_components(
    nodes: Iterable[Hashable], succ: Mapping[Hashable, Iterable[Hashable]]
) -> list[list[Hashable]]:
    """Return SCCs in reverse topological order (sinks first).

    Iterative Tarjan, so deep dependency chains do not hit the recursion limit.
    """
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    out: list[list] = []
    counter = 0

    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(succ.get(root, ())))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for nxt in it:
                if nxt not in index:
                    index[nxt] = low[nxt] = counter
                    counter += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(succ.get(nxt, ()))))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                out.append(comp)
    return out


def cyclic_components(nodes, succ) -> list[list]:
    """SCCs that contain a cycle (size > 1, or a self-loop)."""
    found = []
    for comp in strongly_connected_components(nodes, succ):
        if len(comp) > 1 or comp[0] in set(succ.get(comp[0], ())):
            found.append(comp)
    return found
