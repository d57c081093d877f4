"""Independent reference implementations shared by the unit and acceptance tests."""
import itertools


def _iou_frames(a, b):
    sa, sb = set(range(*a)), set(range(*b))
    return len(sa & sb) / len(sa | sb)


def brute_force_ap(intervals, scores, gts, threshold):
    """Enumerate every injective matching, keep the one the score-priority rule prefers.

    Walking predictions in ranked order, the preferred matching maximises the
    sequence of (IoU, -gt index) keys lexicographically, unmatched scoring lowest.
    """
    order = sorted(range(len(intervals)), key=lambda i: (-scores[i], intervals[i][0]))
    options = [[None] + [j for j in range(len(gts)) if _iou_frames(intervals[i], gts[j]) >= threshold]
               for i in order]
    best_key, best_flags = None, None
    for choice in itertools.product(*options):
        used = [c for c in choice if c is not None]
        if len(used) != len(set(used)):
            continue
        key = tuple((-1.0, 0) if c is None else (_iou_frames(intervals[i], gts[c]), -c)
                    for i, c in zip(order, choice))
        if best_key is None or key > best_key:
            best_key, best_flags = key, [c is not None for c in choice]
    tp, total = 0, 0.0
    for rank, hit in enumerate(best_flags, 1):
        if hit:
            tp += 1
            total += tp / rank
    return total / len(gts)
