"""Numba kernels shared by the Python-level walk API and the batch corpus generator."""

import math

import numpy as np
from numba import njit

FIRST_ORDER, VRRW, DRRW_KL, DRRW_JS = 0, 1, 2, 3
NO_EXPLORATION, EPSILON_GREEDY, UCB = 0, 1, 2


@njit(cache=True, nogil=True)
def kl_closed_form(z_x, n, num_nodes):
    # KL(w(n) || w^x(n)); only coordinate x differs in shape from a rescaling
    a = n + num_nodes
    w_x = z_x / a
    return math.log1p(1.0 / a) + w_x * math.log(z_x / (z_x + 1.0))


@njit(cache=True, nogil=True)
def js_closed_form(z_x, n, num_nodes):
    a = float(n + num_nodes)
    b = a + 1.0
    rest = a - z_x  # sum of local times over all nodes other than x
    w_x = z_x / a
    v_x = (z_x + 1.0) / b
    m_x = 0.5 * (w_x + v_x)
    left = rest / a * math.log1p(1.0 / (a + b)) + w_x * math.log(w_x / m_x)
    right = rest / b * math.log1p(-1.0 / (a + b)) + v_x * math.log(v_x / m_x)
    return 0.5 * (left + right)


@njit(cache=True, nogil=True)
def ucb_closed_form(z_start, z_x):
    return math.sqrt(math.log(z_start) / z_x)


@njit(cache=True, nogil=True)
def softmax_inplace(scores, count):
    top = scores[0]
    for i in range(1, count):
        if scores[i] > top:
            top = scores[i]
    total = 0.0
    for i in range(count):
        scores[i] = math.exp(scores[i] - top)
        total += scores[i]
    for i in range(count):
        scores[i] /= total


@njit(cache=True, nogil=True)
def exploit_distribution(z_nbrs, z_start, n, num_nodes, exploit, explore, out):
    """Fill ``out[:deg]`` with the non-random-branch transition distribution.

    ``explore`` only matters for UCB, where the bonus is folded into the softmax.
    Candidates that share a local time share one computed score.
    """
    deg = z_nbrs.shape[0]
    if exploit == FIRST_ORDER:
        for i in range(deg):
            out[i] = 1.0 / deg
        return
    if exploit == VRRW and explore != UCB:
        total = 0.0
        for i in range(deg):
            total += z_nbrs[i]
        for i in range(deg):
            out[i] = z_nbrs[i] / total
        return
    vrrw_total = 0.0
    if exploit == VRRW:
        for i in range(deg):
            vrrw_total += z_nbrs[i]
    cached_z = -1.0
    cached = 0.0
    for i in range(deg):
        z = z_nbrs[i]
        if z == cached_z:
            out[i] = cached
            continue
        if exploit == VRRW:
            s = z / vrrw_total
        elif exploit == DRRW_KL:
            s = 1.0 - kl_closed_form(z, n, num_nodes)
        else:
            s = 1.0 - js_closed_form(z, n, num_nodes)
        if explore == UCB:
            s += ucb_closed_form(z_start, z)
        if z == 1.0:
            cached_z = z
            cached = s
        out[i] = s
    softmax_inplace(out, deg)


@njit(cache=True, nogil=True)
def pick(probs, count, u):
    acc = 0.0
    for i in range(count):
        acc += probs[i]
        if u < acc:
            return i
    return count - 1


@njit(cache=True, nogil=True)
def walk_batch(offsets, nbrs, num_nodes, starts, uniforms, walk_length,
               exploit, explore, epsilon, out, lengths, counts, scratch_z, scratch_p):
    """Generate one walk per entry of ``starts`` into rows of ``out``.

    ``counts`` (length N, all zero on entry and exit) holds visits at steps >= 1.
    ``uniforms[w]`` supplies two draws per step for walk ``w``.
    """
    truncated = 0
    for w in range(starts.shape[0]):
        u = starts[w]
        out[w, 0] = u
        cur = u
        length = 1
        for step in range(walk_length - 1):
            lo = offsets[cur]
            deg = offsets[cur + 1] - lo
            if deg == 0:
                truncated += 1
                break
            r_branch = uniforms[w, 2 * step]
            r_pick = uniforms[w, 2 * step + 1]
            if exploit == FIRST_ORDER or (explore == EPSILON_GREEDY and r_branch < epsilon):
                k = int(r_pick * deg)
                if k >= deg:
                    k = deg - 1
            else:
                for i in range(deg):
                    scratch_z[i] = counts[nbrs[lo + i]] + 1.0
                exploit_distribution(scratch_z[:deg], counts[u] + 1.0, step, num_nodes,
                                     exploit, explore, scratch_p)
                k = pick(scratch_p, deg, r_pick)
            cur = nbrs[lo + k]
            counts[cur] += 1
            out[w, length] = cur
            length += 1
        lengths[w] = length
        for i in range(1, length):
            counts[out[w, i]] = 0
    return truncated
