"""Independent reference implementations used only by the tests.

Nothing here imports the package's engine or segmentation code; the oracles
are written from the algorithm description and favour obviousness over speed.
"""

from __future__ import annotations

import random

from dcaseg.core import AntigenEvent, SignalInstance

STANDARD_CSM = (4.0, 2.0, 6.0)
STANDARD_K = (8.0, 4.0, -13.0)


def naive_dca(events, population_size, threshold_step, csm_w=STANDARD_CSM, k_w=STANDARD_K,
              flush=True):
    """Deliberately literal dDCA loop plus end-of-stream flush.

    Returns a list of (presented_at, dc_index, sum_k, antigen_counts, forced)
    tuples and the number of dropped antigens.
    """
    # cell x gets threshold step * x
    dcs = []
    for x in range(1, population_size + 1):
        dcs.append({"threshold": threshold_step * x, "lifespan": threshold_step * x,
                    "sumK": 0.0, "antigens": {}})
    agCounter = 0
    out = []
    last_tick = 0
    # antigens go round-robin, signals hit every cell
    for ev in events:
        if isinstance(ev, AntigenEvent):
            last_tick = max(last_tick, ev.timestamp)
            agCounter += 1
            cellIndex = agCounter % population_size
            if cellIndex == 0:
                cellIndex = population_size
            dc = dcs[cellIndex - 1]
            dc["antigens"][ev.antigen_type] = dc["antigens"].get(ev.antigen_type, 0) + 1
        else:
            last_tick = ev.timestamp
            csm = csm_w[0] * ev.pamp + csm_w[1] * ev.danger + csm_w[2] * ev.safe
            k = k_w[0] * ev.pamp + k_w[1] * ev.danger + k_w[2] * ev.safe
            for i, dc in enumerate(dcs):
                dc["lifespan"] -= csm
                dc["sumK"] += k
                if dc["lifespan"] <= 0:
                    out.append((ev.timestamp, i + 1, dc["sumK"], dict(dc["antigens"]), False))
                    dc["lifespan"] = dc["threshold"]
                    dc["sumK"] = 0.0
                    dc["antigens"] = {}
    dropped = 0
    for i, dc in enumerate(dcs):
        if dc["antigens"]:
            if flush:
                out.append((last_tick, i + 1, dc["sumK"], dict(dc["antigens"]), True))
            else:
                dropped += sum(dc["antigens"].values())
    return out, dropped


def random_stream(seed, n_events, types=("a", "b", "c", "d"), antigen_prob=0.8):
    """Sorted stream: runs of antigens each closed by one signal, uniform signals."""
    rng = random.Random(seed)
    events = []
    tick = 0
    while len(events) < n_events:
        if rng.random() < antigen_prob:
            events.append(AntigenEvent(tick, rng.choice(types)))
        else:
            events.append(SignalInstance(tick, rng.uniform(0, 100), rng.uniform(0, 100),
                                         rng.uniform(0, 100)))
            tick += rng.randint(1, 3)
    return events


def brute_k_alpha(records):
    """Kα straight from the formula: per type, sum k_i over holders / sum of counts."""
    types = set()
    for r in records:
        types.update(r.antigen_counts)
    out = {}
    for ag in types:
        num = sum(r.sum_k for r in records if r.antigen_counts.get(ag, 0) > 0)
        den = sum(r.antigen_counts.get(ag, 0) for r in records)
        out[ag] = num / den
    return out


def brute_abs_boundaries(antigen_totals, size):
    """Indices after which an ABS segment closes, by a running-sum scan."""
    cuts = []
    running = 0
    for i, n in enumerate(antigen_totals):
        running += n
        if running >= size:
            cuts.append(i)
            running = 0
    return cuts
