import hashlib

import numpy as np


def stream(master_seed: int, name: str) -> np.random.Generator:
    """Independent generator for a named sub-stream of ``master_seed``.

    Streams are keyed by hashing, so adding a new name never shifts the
    draws of existing ones.
    """
    digest = hashlib.sha256(f"{int(master_seed)}/{name}".encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:16], "little"))
