"""Random instance streams shared by the cross-check tests."""
import random

from omqe import OMQ, Reasoner, Unsatisfiable
from omqe.oracle import brute_answers
from omqe.random_instances import CONCEPTS, ROLES, random_database, random_omq, random_witnessed

SIGMA = frozenset(CONCEPTS) | frozenset(ROLES)


def random_instance(seed: int, nconst: int = 4):
    """(reasoner, Q, d, certain answers) or None when D is inconsistent with O.

    Even seeds hide a query image in the anonymous part, so wildcard answers
    show up often; odd seeds draw ontology, query and data independently.
    """
    rng = random.Random(seed)
    if seed % 2 == 0:
        Q, d = random_witnessed(rng, nvars=rng.randint(2, 5), nanswer=rng.randint(1, 3),
                                nconst=rng.randint(1, nconst))
    else:
        Q = random_omq(rng, 6, rng.randint(1, 4), rng.randint(0, 3))
        Q = OMQ.make(Q.ontology, Q.query, SIGMA)
        d = random_database(rng, rng.randint(1, nconst), rng.randint(0, 8))
    reasoner = Reasoner(Q.ontology)
    try:
        want = brute_answers(reasoner, Q, d)
    except Unsatisfiable:
        return None
    return reasoner, Q, d, want
