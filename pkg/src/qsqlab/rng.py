"""Counter-based random streams keyed on (seed, trial, stream)."""
from __future__ import annotations

import numpy as np

STREAMS = {
    "hidden": 0,
    "learner": 1,
    "oracle": 2,
    "samples": 3,
    "scan": 4,
}


def stream(seed: int, trial: int = 0, name: str | int = 0) -> np.random.Generator:
    """Independent generator for one (seed, trial, stream) triple.

    Philox is counter based, so trial t gets the same numbers whether trials
    run serially or in parallel.
    """
    sid = STREAMS[name] if isinstance(name, str) else int(name)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(trial), sid])))
