"""Enumeration of answers to ontology-mediated queries over ELIHF ontologies."""
from .errors import (DepthCapExceeded, InstanceTooLarge, MalformedWitness, NotApplicable,
                     NotEligible, OMQError, ParseError, Unsatisfiable)
from .reasoner import Reasoner, SuccessorRequirement
from .syntax import (CI, CQ, OMQ, RI, Atom, Conj, Database, Exists, Func, Name, Ontology, Role, Top,
                     normalize, parse_database, parse_ontology, parse_query, print_database,
                     print_ontology, print_query)

__version__ = "0.1.0"
