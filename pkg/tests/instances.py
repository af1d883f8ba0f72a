"""Shared problem instances built with the package under test."""
from __future__ import annotations

import numpy as np

from pairbounds.simulate import TypeDgp
from pairbounds.typespace import PROFILES, encode_type, pack_selection


def own_offer_type(d_by_offer, y_by_treatment):
    """Take-up set by the own offer alone; outcome set by own treatment alone."""
    y0, y1 = y_by_treatment
    resp = [d_by_offer[z] for z, _ in PROFILES for _ in (0, 1)]
    return encode_type([y0, y0, y1, y1], resp), d_by_offer


def independent_members_dgp(rng, size=6):
    """Independent members with own-offer take-up and no outcome spillover.

    Returns the pair-type distribution and member 1's ``P(Y, D | Z)`` as a
    ``[z][y][d]`` array.
    """
    members = []
    for _ in range(2):
        raw = [own_offer_type(tuple(rng.integers(0, 2, 2)), tuple(rng.integers(0, 2, 2))) for _ in range(size)]
        members.append((raw, rng.dirichlet(np.ones(size) * 0.7)))
    (m1, w1), (m2, w2) = members
    s, s2, e, mass = [], [], [], []
    p1 = np.zeros((2, 2, 2))
    for (a, da), wa in zip(m1, w1):
        y0, y1 = a & 1, (a >> 2) & 1
        for z in (0, 1):
            d = da[z]
            p1[z, (y0, y1)[d], d] += wa
        for (b, db), wb in zip(m2, w2):
            s.append(a)
            s2.append(b)
            e.append(pack_selection({k: (da[z], db[zo]) for k, (z, zo) in enumerate(PROFILES)}))
            mass.append(wa * wb)
    return TypeDgp(np.array(s), np.array(s2), np.array(e), np.array(mass)), p1
