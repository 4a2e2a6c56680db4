# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled chart filler.

Mirrors ``engine.ReferenceFill`` operation for operation, with the same
tie-breaking, but stores every successful offer as an immutable node in an
append-only arena (children are node ids, never cell references, so a node
keeps describing exactly what was offered even after the cells it came from
improve).
"""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, realloc, free
from libc.string cimport memcpy

cnp.import_array()

ctypedef long long mark_t

cdef enum:
    BASE_UNFILLED = 0
    BASE_EPSILON = 1
    BASE_WRAP = 2
    BASE_COMBINE = 3
    UNDER_SINGLE = 4
    UNDER_LEFT = 5
    UNDER_RUN = 6
    UNDER_RIGHT = 7
    PARSE_TERMINAL = 8
    PARSE_COMBINE = 9
    OVER_WRAP = 10
    OVER_COMBINE = 11

cdef enum:
    NFIELDS = 9

cdef struct NodeRec:
    int cat, op, left, right, prod, seg, a, c, parsed


cdef class _Arena:
    cdef NodeRec* nodes
    cdef mark_t* marks
    cdef Py_ssize_t n, cap
    cdef int K, n_strata
    cdef int* stratum
    cdef mark_t* diff
    cdef mark_t* cand

    def __cinit__(self, int K, int n_strata, int[::1] stratum):
        cdef int k
        self.K = K
        self.n_strata = n_strata
        self.n = 0
        self.cap = 256
        self.nodes = <NodeRec*> malloc(self.cap * sizeof(NodeRec))
        self.marks = <mark_t*> malloc(self.cap * (K if K > 0 else 1) * sizeof(mark_t))
        self.stratum = <int*> malloc((K if K > 0 else 1) * sizeof(int))
        self.diff = <mark_t*> malloc((n_strata if n_strata > 0 else 1) * sizeof(mark_t))
        self.cand = <mark_t*> malloc((K if K > 0 else 1) * sizeof(mark_t))
        if not self.nodes or not self.marks or not self.stratum or not self.diff or not self.cand:
            raise MemoryError()
        for k in range(K):
            self.stratum[k] = stratum[k]

    def __dealloc__(self):
        free(self.nodes)
        free(self.marks)
        free(self.stratum)
        free(self.diff)
        free(self.cand)

    cdef int grow(self) except -1:
        cdef Py_ssize_t cap = self.cap * 2
        cdef NodeRec* nodes = <NodeRec*> realloc(self.nodes, cap * sizeof(NodeRec))
        if not nodes:
            raise MemoryError()
        self.nodes = nodes
        cdef mark_t* marks = <mark_t*> realloc(self.marks, cap * (self.K if self.K > 0 else 1) * sizeof(mark_t))
        if not marks:
            raise MemoryError()
        self.marks = marks
        self.cap = cap
        return 0

    cdef inline bint better(self, int incumbent) noexcept nogil:
        """Is the scratch candidate strictly more harmonic than ``incumbent``?"""
        cdef int k, s
        cdef mark_t* inc
        if incumbent < 0:
            return True
        inc = self.marks + <Py_ssize_t> incumbent * self.K
        for s in range(self.n_strata):
            self.diff[s] = 0
        for k in range(self.K):
            self.diff[self.stratum[k]] += self.cand[k] - inc[k]
        for s in range(self.n_strata):
            if self.diff[s] != 0:
                return self.diff[s] < 0
        return False

    cdef int push(self, int cat, int op, int left, int right, int prod, int seg,
                  int a, int c, int parsed) except -1:
        if self.n == self.cap:
            self.grow()
        cdef NodeRec* rec = &self.nodes[self.n]
        rec.cat = cat
        rec.op = op
        rec.left = left
        rec.right = right
        rec.prod = prod
        rec.seg = seg
        rec.a = a
        rec.c = c
        rec.parsed = parsed
        memcpy(self.marks + self.n * self.K, self.cand, self.K * sizeof(mark_t))
        self.n += 1
        return <int> (self.n - 1)

    cdef inline void set_cand(self, const mark_t* extra, int x, int y) noexcept nogil:
        """cand = extra + marks[x] (if x >= 0) + marks[y] (if y >= 0)."""
        cdef int k
        cdef mark_t* mx
        cdef mark_t* my
        for k in range(self.K):
            self.cand[k] = extra[k]
        if x >= 0:
            mx = self.marks + <Py_ssize_t> x * self.K
            for k in range(self.K):
                self.cand[k] += mx[k]
        if y >= 0:
            my = self.marks + <Py_ssize_t> y * self.K
            for k in range(self.K):
                self.cand[k] += my[k]


cdef inline Py_ssize_t cell(int J, int C, int a, int c, int cat) nogil:
    # a, c are 1-based
    return ((<Py_ssize_t> (a - 1) * J + (c - 1)) * C) + cat


def fill_chart(dict prog, cnp.int32_t[::1] segs):
    """Fill base structures and the chart for ``segs``; return arena + tables."""
    cdef int C = prog["n_cats"]
    cdef int K = prog["n_constraints"]
    cdef int J = segs.shape[0]
    cdef _Arena ar = _Arena(K, prog["n_strata"], prog["stratum"])

    cdef int[::1] t_off = prog["t_off"]
    cdef int[::1] t_prod = prog["t_prod"]
    cdef const mark_t[:, ::1] t_unfilled = prog["t_unfilled"]
    cdef const mark_t[:, :, ::1] t_filled = prog["t_filled"]
    cdef int[::1] e_off = prog["e_off"]
    cdef int[::1] e_prod = prog["e_prod"]
    cdef const mark_t[:, ::1] e_marks = prog["e_marks"]
    cdef int[::1] w_off = prog["w_off"]
    cdef int[::1] w_child = prog["w_child"]
    cdef int[::1] w_prod = prog["w_prod"]
    cdef const mark_t[:, ::1] w_marks = prog["w_marks"]
    cdef int[::1] b_off = prog["b_off"]
    cdef int[::1] b_left = prog["b_left"]
    cdef int[::1] b_right = prog["b_right"]
    cdef int[::1] b_prod = prog["b_prod"]
    cdef const mark_t[:, ::1] b_marks = prog["b_marks"]
    cdef const mark_t[:, ::1] parse_marks = prog["parse_marks"]

    cdef mark_t[::1] run_marks = np.zeros(max(K, 1), dtype=np.int64)

    base_arr = np.full(C, -1, dtype=np.int32)
    cdef int[::1] base = base_arr
    chart_arr = np.full((max(J, 1), max(J, 1), C), -1, dtype=np.int32)
    cdef int[:, :, ::1] chart3 = chart_arr
    cdef int* chart = &chart3[0, 0, 0]
    passes_arr = np.zeros((max(J, 1), max(J, 1)), dtype=np.int32)
    cdef int[:, ::1] passes = passes_arr

    cdef int x, r, i, k, a, c, b, d, l, rt, npass, src
    cdef bint changed
    cdef long long combine_count = 0
    cdef int base_passes = 0
    cdef Py_ssize_t key

    # -- base overparsing structures -------------------------------------
    while True:
        base_passes += 1
        changed = False
        for x in range(C):
            for r in range(t_off[x], t_off[x + 1]):
                ar.set_cand(&t_unfilled[r, 0], -1, -1)
                if ar.better(base[x]):
                    base[x] = ar.push(x, BASE_UNFILLED, -1, -1, t_prod[r], -1, 0, 0, 0)
                    changed = True
            for r in range(e_off[x], e_off[x + 1]):
                ar.set_cand(&e_marks[r, 0], -1, -1)
                if ar.better(base[x]):
                    base[x] = ar.push(x, BASE_EPSILON, -1, -1, e_prod[r], -1, 0, 0, 0)
                    changed = True
            for r in range(w_off[x], w_off[x + 1]):
                src = base[w_child[r]]
                if src < 0:
                    continue
                ar.set_cand(&w_marks[r, 0], src, -1)
                if ar.better(base[x]):
                    base[x] = ar.push(x, BASE_WRAP, src, -1, w_prod[r], -1, 0, 0, 0)
                    changed = True
            for r in range(b_off[x], b_off[x + 1]):
                l = base[b_left[r]]
                rt = base[b_right[r]]
                if l < 0 or rt < 0:
                    continue
                ar.set_cand(&b_marks[r, 0], l, rt)
                if ar.better(base[x]):
                    base[x] = ar.push(x, BASE_COMBINE, l, rt, b_prod[r], -1, 0, 0, 0)
                    changed = True
        if not changed:
            break

    # -- input blocks, level by level --------------------------------------
    for d in range(J):
        for a in range(1, J - d + 1):
            c = a + d

            # underparsing
            for x in range(C):
                key = cell(J, C, a, c, x)
                if a == c:
                    src = base[x]
                    if src >= 0:
                        ar.set_cand(&parse_marks[segs[a - 1], 0], src, -1)
                        if ar.better(chart[key]):
                            chart[key] = ar.push(x, UNDER_SINGLE, src, -1, -1, a, a, c, 0)
                    continue
                if a == 1:
                    for i in range(K):
                        run_marks[i] = 0
                    for k in range(1, c):
                        for i in range(K):
                            run_marks[i] += parse_marks[segs[k - 1], i]
                        src = chart[cell(J, C, k + 1, c, x)]
                        if src < 0:
                            continue
                        ar.set_cand(&run_marks[0], src, -1)
                        if ar.better(chart[key]):
                            chart[key] = ar.push(x, UNDER_LEFT if k == 1 else UNDER_RUN, src, -1, -1, k,
                                                 a, c, ar.nodes[src].parsed)
                else:
                    src = chart[cell(J, C, a + 1, c, x)]
                    if src >= 0 and ar.nodes[src].parsed == 0:
                        ar.set_cand(&parse_marks[segs[a - 1], 0], src, -1)
                        if ar.better(chart[key]):
                            chart[key] = ar.push(x, UNDER_LEFT, src, -1, -1, a, a, c, 0)
                src = chart[cell(J, C, a, c - 1, x)]
                if src >= 0:
                    ar.set_cand(&parse_marks[segs[c - 1], 0], src, -1)
                    if ar.better(chart[key]):
                        chart[key] = ar.push(x, UNDER_RIGHT, src, -1, -1, c, a, c, ar.nodes[src].parsed)

            # parsing
            for x in range(C):
                key = cell(J, C, a, c, x)
                if a == c:
                    for r in range(t_off[x], t_off[x + 1]):
                        ar.set_cand(&t_filled[r, segs[a - 1], 0], -1, -1)
                        if ar.better(chart[key]):
                            chart[key] = ar.push(x, PARSE_TERMINAL, -1, -1, t_prod[r], a, a, c, 1)
                    continue
                for r in range(b_off[x], b_off[x + 1]):
                    for b in range(a, c):
                        combine_count += 1
                        l = chart[cell(J, C, a, b, b_left[r])]
                        rt = chart[cell(J, C, b + 1, c, b_right[r])]
                        if l < 0 or rt < 0:
                            continue
                        ar.set_cand(&b_marks[r, 0], l, rt)
                        if ar.better(chart[key]):
                            chart[key] = ar.push(x, PARSE_COMBINE, l, rt, b_prod[r], -1, a, c,
                                                 ar.nodes[l].parsed + ar.nodes[rt].parsed)

            # overparsing passes
            npass = 0
            while True:
                npass += 1
                changed = False
                for x in range(C):
                    key = cell(J, C, a, c, x)
                    for r in range(w_off[x], w_off[x + 1]):
                        src = chart[cell(J, C, a, c, w_child[r])]
                        if src < 0:
                            continue
                        ar.set_cand(&w_marks[r, 0], src, -1)
                        if ar.better(chart[key]):
                            chart[key] = ar.push(x, OVER_WRAP, src, -1, w_prod[r], -1, a, c, ar.nodes[src].parsed)
                            changed = True
                    for r in range(b_off[x], b_off[x + 1]):
                        for i in range(2):
                            # completions: base on the left first; prefixes: base on the right first
                            if (i == 0) == (b_prod[r] >= 0):
                                l = base[b_left[r]]
                                rt = chart[cell(J, C, a, c, b_right[r])]
                            else:
                                l = chart[cell(J, C, a, c, b_left[r])]
                                rt = base[b_right[r]]
                            if l < 0 or rt < 0:
                                continue
                            ar.set_cand(&b_marks[r, 0], l, rt)
                            if ar.better(chart[key]):
                                chart[key] = ar.push(x, OVER_COMBINE, l, rt, b_prod[r], -1, a, c,
                                                     ar.nodes[l].parsed + ar.nodes[rt].parsed)
                                changed = True
                if not changed:
                    break
            passes[a - 1, c - 1] = npass

    nodes_arr = np.empty((ar.n, NFIELDS), dtype=np.int32)
    marks_arr = np.empty((ar.n, K), dtype=np.int64)
    cdef int[:, ::1] nv = nodes_arr
    cdef mark_t[:, ::1] mv = marks_arr
    cdef NodeRec* rec
    for i in range(ar.n):
        rec = &ar.nodes[i]
        nv[i, 0] = rec.cat
        nv[i, 1] = rec.op
        nv[i, 2] = rec.left
        nv[i, 3] = rec.right
        nv[i, 4] = rec.prod
        nv[i, 5] = rec.seg
        nv[i, 6] = rec.a
        nv[i, 7] = rec.c
        nv[i, 8] = rec.parsed
        for k in range(K):
            mv[i, k] = ar.marks[<Py_ssize_t> i * K + k]

    return {
        "nodes": nodes_arr,
        "marks": marks_arr,
        "base": base_arr,
        "chart": chart_arr,
        "passes": passes_arr,
        "base_passes": base_passes,
        "combine_count": combine_count,
    }
