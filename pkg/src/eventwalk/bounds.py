"""Constants of the measured bounds, fixed once and asserted by the tests.

They were fitted on the seeded test matrices and rounded up; changing one
is a deliberate act, not a tolerance tweak.
"""

# decision procedure: ops <= DECISION_C1 * (|V| + |E|)
DECISION_C1 = 4
# extracted certifying walks: nodes <= WALK_C2 * n**2
WALK_C2 = 2
# strip queries: lookups <= LOOKUP_ALPHA * s + LOOKUP_BETA
LOOKUP_ALPHA = 5
LOOKUP_BETA = 0
# strip storage: cells <= STORAGE_C * s * n ** (1 + 1/s)
STORAGE_C = 16

# shortest certifying walk on the lower-bound path, m = 2..6 (nodes)
LOWER_BOUND_WALKS = {2: 3, 3: 7, 4: 13, 5: 21, 6: 31}


def lookup_bound(s: int) -> int:
    return LOOKUP_ALPHA * s + LOOKUP_BETA


def storage_bound(n: int, s: int) -> float:
    return STORAGE_C * s * n ** (1.0 + 1.0 / s)
