"""
Flux aléatoires déterministes par scène

Chaque scène i reçoit un générateur indépendant dérivé de (seed, i) par un
générateur à compteur (Philox) : le résultat ne dépend ni de l'ordre
d'exécution ni du nombre de workers
"""

import hashlib

import numpy as np


def stream(seed: int, index: int) -> np.random.Generator:
    """
    Flux de la scène `index` pour la graine maîtresse `seed`

    Args:
        seed: Graine maîtresse (entier non signé 64 bits)
        index: Indice de scène (>= 0)

    Returns:
        np.random.Generator indépendant
    """
    if index < 0:
        raise ValueError("L'indice de flux doit être positif")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))


def stable_hash(seed: int, index: int) -> int:
    """Hachage SHA-256 stable de (seed, index), indépendant de la plateforme"""
    digest = hashlib.sha256(f"{int(seed)}:{int(index)}".encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big", signed=False)
