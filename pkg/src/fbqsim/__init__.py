"""Federated Byzantine quorum systems and the consensus stack built on them.

Library layers, bottom up:

- ``ballot``: round/value ballots over a finite value domain, with the
  total order, compatibility, and below-and-incompatible relations.
- ``fbqs``: quorum slices, quorums, v-blocking sets, projections,
  intertwined pairs, intact sets, and per-view (subjective) systems.
- ``fv``: the three-stage vote/ready/deliver voting state machine.
- ``bv``: bunched voting (finite-state packaging of per-ballot voting).
- ``ascp`` / ``cscp``: abstract (per-ballot, batched network) and
  concrete (bunched) ballot consensus protocols.
- ``simnet``: deterministic discrete-event network simulator.
- ``verdicts``: safety/liveness checks evaluated over recorded traces.
- ``refine``: the concrete-to-abstract trace rewriting and its checker.
- ``cli``: the ``fbqsim`` command line front end.
"""

from fbqsim.ballot import Ballot, NULL
from fbqsim.fbqs import Fbqs, FaultModel, SubjectiveFbqs

__all__ = ["Ballot", "NULL", "Fbqs", "FaultModel", "SubjectiveFbqs"]

__version__ = "0.1.0"
