"""Ordered tree edit distance (Zhang-Shasha) and the TEDS table score."""

from __future__ import annotations

import logging
from typing import Callable

from ..doctag import DomTree, HTMLTableError, parse_html_table
from .text import ned

log = logging.getLogger(__name__)


class PreparedTree:
    """Post-order numbering, leftmost-leaf descendants, and keyroots of a tree."""

    __slots__ = ("nodes", "lml", "keyroots")

    def __init__(self, root, children: Callable = lambda n: n.children):
        nodes, lml = [], []

        def walk(n):
            first = None
            for c in children(n):
                k = walk(c)
                if first is None:
                    first = k
            nodes.append(n)
            lml.append(len(nodes) - 1 if first is None else first)
            return lml[-1]

        walk(root)
        self.nodes = nodes
        self.lml = lml
        seen = {}
        for i, l in enumerate(lml):
            seen[l] = i  # highest node sharing each leftmost leaf
        self.keyroots = sorted(seen.values())

    def __len__(self):
        return len(self.nodes)


def tree_edit_distance(t1, t2, relabel: Callable, children: Callable = lambda n: n.children) -> float:
    """Insert and delete cost 1; ``relabel(a, b)`` prices a substitution."""
    a = t1 if isinstance(t1, PreparedTree) else PreparedTree(t1, children)
    b = t2 if isinstance(t2, PreparedTree) else PreparedTree(t2, children)
    n1, n2 = len(a), len(b)
    la, lb = a.lml, b.lml
    na, nb = a.nodes, b.nodes
    td = [[0.0] * n2 for _ in range(n1)]
    for i in a.keyroots:
        li = la[i]
        for j in b.keyroots:
            lj = lb[j]
            rows, cols = i - li + 2, j - lj + 2
            fd = [[0.0] * cols for _ in range(rows)]
            for x in range(1, rows):
                fd[x][0] = fd[x - 1][0] + 1
            for y in range(1, cols):
                fd[0][y] = fd[0][y - 1] + 1
            for x in range(1, rows):
                i1 = li + x - 1
                li1 = la[i1]
                row, prow = fd[x], fd[x - 1]
                for y in range(1, cols):
                    j1 = lj + y - 1
                    if li1 == li and lb[j1] == lj:
                        v = min(prow[y] + 1, row[y - 1] + 1, prow[y - 1] + relabel(na[i1], nb[j1]))
                        row[y] = v
                        td[i1][j1] = v
                    else:
                        row[y] = min(prow[y] + 1, row[y - 1] + 1,
                                     fd[li1 - li][lb[j1] - lj] + td[i1][j1])
    return td[n1 - 1][n2 - 1]


def dom_relabel(structure_only: bool) -> Callable[[DomTree, DomTree], float]:
    def cost(x: DomTree, y: DomTree) -> float:
        if x.tag != y.tag:
            return 1.0
        if x.tag != "td":
            return 0.0
        if x.colspan != y.colspan or x.rowspan != y.rowspan:
            return 1.0
        return 0.0 if structure_only else 1.0 - ned(x.text, y.text)
    return cost


def teds_trees(pred: DomTree, gt: DomTree, structure_only: bool = False) -> float:
    d = tree_edit_distance(pred, gt, dom_relabel(structure_only))
    return 100.0 * (1.0 - d / max(pred.size(), gt.size()))


def teds(pred_html: str, gt_html: str, structure_only: bool = False) -> float:
    """Tree-edit-distance similarity of two HTML tables on a 0..100 scale."""
    try:
        gt = parse_html_table(gt_html)
        pred = parse_html_table(pred_html)
    except HTMLTableError as exc:
        log.warning("table markup unparseable, scoring 0: %s", exc)
        return 0.0
    return teds_trees(pred, gt, structure_only)


def chart_score(pred_html: str, gt_html: str) -> float:
    """Charts are compared through their HTML-table rendering."""
    return teds(pred_html, gt_html, structure_only=False)
