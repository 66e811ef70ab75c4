"""Hot loops shared by every execution mode.

Only the spring passes live here; everything O(mass-count) is plain numpy in
the engine.  The parallel path follows a slot-reservation scheme: each spring
computes its force once and appends +F / -F into per-mass slot arrays, with
the slot index reserved through an atomic integer increment — that increment
is the only synchronization in the whole spring phase.  A mass then owns all
of its slots exclusively, so the summation phase needs no locks at all.

The serial path accumulates springs in id order.  The deterministic parallel
path sorts each mass's occupied slots by spring id before summing, replaying
the serial addition order exactly, so the two produce bitwise-identical
forces (floating-point addition is not associative, so arrival-order sums in
the default parallel mode only match to rounding).
"""

import numpy as np
from numba import njit, prange, types
from numba.core import cgutils
from numba.extending import intrinsic

# Springs shorter than this are treated as degenerate: zero force, counted.
DEGENERATE_LENGTH = 1e-12


@intrinsic
def _atomic_fetch_add(typingctx, arr, idx, val):
    """``old = arr[idx]; arr[idx] += val`` as one atomic RMW on an int64 array."""
    if not isinstance(arr, types.Array) or arr.dtype != types.int64:
        return None

    sig = types.int64(arr, types.intp, types.int64)

    def codegen(context, builder, signature, args):
        arr_v, idx_v, val_v = args
        aryty = signature.args[0]
        ary = context.make_array(aryty)(context, builder, arr_v)
        ptr = cgutils.get_item_pointer(context, builder, aryty, ary, [idx_v])
        return builder.atomic_rmw("add", ptr, val_v, "monotonic")

    return sig, codegen


@njit(cache=True)
def accumulate_springs_serial(x, si, sj, k, l0, acc):
    """Sum spring forces into ``acc`` (pre-zeroed), springs in id order.

    Returns the number of degenerate (near-coincident-endpoint) springs.
    """
    degenerate = 0
    for s in range(si.size):
        i = si[s]
        j = sj[s]
        dx = x[j, 0] - x[i, 0]
        dy = x[j, 1] - x[i, 1]
        dz = x[j, 2] - x[i, 2]
        length = np.sqrt(dx * dx + dy * dy + dz * dz)
        if length < DEGENERATE_LENGTH:
            degenerate += 1
            continue
        c = k[s] * (length - l0[s]) / length
        fx = c * dx
        fy = c * dy
        fz = c * dz
        acc[i, 0] += fx
        acc[i, 1] += fy
        acc[i, 2] += fz
        acc[j, 0] -= fx
        acc[j, 1] -= fy
        acc[j, 2] -= fz
    return degenerate


@njit(parallel=True, cache=True)
def fill_slots(x, si, sj, k, l0, slots, slot_spring, counter, capacity, overflow):
    """Phase 1: springs in parallel append their force pair into the slabs.

    ``counter`` must be zero on entry.  On capacity overflow the write is
    dropped and ``overflow[0]`` set (racy writes of the same value — benign).
    Returns the degenerate-spring count.
    """
    degenerate = 0
    for s in prange(si.size):
        i = si[s]
        j = sj[s]
        dx = x[j, 0] - x[i, 0]
        dy = x[j, 1] - x[i, 1]
        dz = x[j, 2] - x[i, 2]
        length = np.sqrt(dx * dx + dy * dy + dz * dz)
        if length < DEGENERATE_LENGTH:
            degenerate += 1
            fx = 0.0
            fy = 0.0
            fz = 0.0
        else:
            c = k[s] * (length - l0[s]) / length
            fx = c * dx
            fy = c * dy
            fz = c * dz
        a = _atomic_fetch_add(counter, i, 1)
        if a >= capacity[i]:
            overflow[0] = 1
        else:
            slots[i, a, 0] = fx
            slots[i, a, 1] = fy
            slots[i, a, 2] = fz
            slot_spring[i, a] = s
        b = _atomic_fetch_add(counter, j, 1)
        if b >= capacity[j]:
            overflow[0] = 1
        else:
            slots[j, b, 0] = -fx
            slots[j, b, 1] = -fy
            slots[j, b, 2] = -fz
            slot_spring[j, b] = s
    return degenerate


@njit(parallel=True, cache=True)
def sum_slots(slots, slot_spring, counter, deterministic, acc):
    """Phase 2: each mass sums its occupied slots and resets its counter.

    ``deterministic`` first insertion-sorts the slots by spring id, restoring
    the serial accumulation order; otherwise slots are summed as they arrived.
    """
    for i in prange(counter.size):
        c = counter[i]
        if deterministic:
            for a in range(1, c):
                sid = slot_spring[i, a]
                f0 = slots[i, a, 0]
                f1 = slots[i, a, 1]
                f2 = slots[i, a, 2]
                b = a - 1
                while b >= 0 and slot_spring[i, b] > sid:
                    slot_spring[i, b + 1] = slot_spring[i, b]
                    slots[i, b + 1, 0] = slots[i, b, 0]
                    slots[i, b + 1, 1] = slots[i, b, 1]
                    slots[i, b + 1, 2] = slots[i, b, 2]
                    b -= 1
                slot_spring[i, b + 1] = sid
                slots[i, b + 1, 0] = f0
                slots[i, b + 1, 1] = f1
                slots[i, b + 1, 2] = f2
        s0 = 0.0
        s1 = 0.0
        s2 = 0.0
        for a in range(c):
            s0 += slots[i, a, 0]
            s1 += slots[i, a, 1]
            s2 += slots[i, a, 2]
        acc[i, 0] = s0
        acc[i, 1] = s1
        acc[i, 2] = s2
        counter[i] = 0
