import numpy as np

from clusterlab.enums.pauli import Pauli
from clusterlab.pauli import PauliTerm
from clusterlab.sim import DenseState


def random_state(num_sites: int, rng: np.random.Generator) -> DenseState:
    vector = rng.normal(size=1 << num_sites) + 1j * rng.normal(size=1 << num_sites)
    return DenseState.from_vector(vector)


def random_term(num_sites: int, rng: np.random.Generator) -> PauliTerm:
    letters = rng.integers(4, size=num_sites)
    phase = complex(np.exp(1j * rng.uniform(0, 2 * np.pi)))
    return PauliTerm(
        factors={site: Pauli(int(k)) for site, k in enumerate(letters)}, coefficient=phase
    )
