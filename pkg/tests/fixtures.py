"""Shared reference instance for the test suite.

A tiny closed 2-block QBF over four variables (1=w, 2=x, 3=y, 4=z in
the comments below) with a 3-DNF matrix, plus two hand-built width-2
tree decompositions of its primal graph.  T2 is almost 3-nice and
carries a full labeling (one node per term), so it can drive the
reduction directly.
"""

from qbfcompress.decomp import LabeledTd, make_td
from qbfcompress.formula import DNF, EXISTS, FORALL, make_matrix, make_qbf

# d1 = w & x & !y, d2 = !w & !x & y, d3 = w & y & !z, d4 = w & y & z
TERMS = [{1, 2, -3}, {-1, -2, 3}, {1, 3, -4}, {1, 3, 4}]


def reference_qbf():
    return make_qbf([(EXISTS, {1, 2}), (FORALL, {3, 4})],
                    make_matrix(DNF, TERMS))


def reference_td1():
    # two bags: {w,x,y} under {w,y,z}
    return make_td({1: 2, 2: 2}, 2, {1: {1, 2, 3}, 2: {1, 3, 4}})


def reference_td2():
    # five bags, duplicated so every term gets its own node:
    # t1,t2 = {w,x,y}; t3,t4 = {w,y,z}; t5 = {w,y} at the root
    bags = {1: {1, 2, 3}, 2: {1, 2, 3}, 3: {1, 3, 4}, 4: {1, 3, 4},
            5: {1, 3}}
    return make_td({1: 2, 2: 5, 3: 4, 4: 5, 5: 5}, 5, bags)


def reference_ltd2(matrix=None):
    td = reference_td2()
    return LabeledTd(td, {1: 0, 2: 1, 3: 2, 4: 3},
                     matrix if matrix is not None else reference_qbf().matrix)
