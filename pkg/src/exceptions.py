"""
Exceptions du pipeline synthforge
Chaque famille d'erreur porte un code de sortie distinct utilisé par la CLI
"""

from typing import List, Optional


class SynthForgeError(Exception):
    """Erreur de base du pipeline"""

    exit_code = 1


# ========== CONFIGURATION ==========


class ConfigError(SynthForgeError):
    """Configuration invalide (clé manquante, valeur hors bornes, dossier absent)"""

    exit_code = 2


# ========== GEOMETRIE ==========


class GeometryError(SynthForgeError):
    exit_code = 3


class MeshFormatError(GeometryError):
    """Fichier maillage mal formé"""

    def __init__(self, path: str, offset: int, message: str):
        """
        Args:
            path: Chemin du fichier fautif
            offset: Position (en octets) de l'erreur dans le fichier
            message: Description de l'erreur
        """
        self.path = str(path)
        self.offset = offset
        super().__init__(f"{self.path} (octet {offset}): {message}")


class EmptyMeshError(GeometryError):
    """Maillage sans aucun triangle"""


class BehindCameraError(GeometryError):
    """Point projeté avec z <= 0"""


# ========== ASSEMBLAGE ==========


class AssemblySchemaError(SynthForgeError):
    """CSV ou JSON d'assemblage non conforme au schéma attendu"""

    exit_code = 4


class UnresolvedComponentError(AssemblySchemaError):
    """Composant référencé mais introuvable (liste des pièces ou maillage)"""


# ========== SCENE ==========


class SceneError(SynthForgeError):
    exit_code = 5


class PlacementError(SceneError):
    """Aucune pose sans chevauchement trouvée après max_pose_retries essais"""

    def __init__(self, label: str, retries: int):
        self.label = label
        self.retries = retries
        super().__init__(
            f"Impossible de placer l'objet '{label}' sans chevauchement "
            f"après {retries} essai(s)"
        )


class SettleError(SceneError):
    """Enveloppe convexe dégénérée : mise au repos impossible"""


# ========== JEU DE DONNEES ==========


class DatasetError(SynthForgeError):
    exit_code = 6


class DatasetValidationError(DatasetError):
    """Données incohérentes détectées avant toute écriture"""


class DatasetWriteError(DatasetError):
    """Échec d'entrée/sortie pendant l'écriture"""

    def __init__(self, message: str, written: Optional[List[str]] = None):
        self.written = list(written or [])
        super().__init__(
            f"{message} ({len(self.written)} fichier(s) déjà écrit(s))"
        )


# ========== MELANGE ==========


class MixError(SynthForgeError):
    exit_code = 7


class InsufficientImagesError(MixError):
    """Jeu source trop petit pour le nombre d'images planifié"""


class CategoryMismatchError(MixError):
    """Les jeux sources ne partagent pas les mêmes catégories, résolution ou intrinsèques"""


# ========== EVALUATION ==========


class EvaluationError(SynthForgeError):
    """Catégorie inconnue, paire (modèle, jeu) manquante..."""

    exit_code = 8


EXIT_CODES = {
    "erreur inattendue": SynthForgeError.exit_code,
    "configuration ou arguments invalides": ConfigError.exit_code,
    "maillage / géométrie": GeometryError.exit_code,
    "assemblage (CSV/JSON)": AssemblySchemaError.exit_code,
    "composition de scène": SceneError.exit_code,
    "écriture du jeu de données": DatasetError.exit_code,
    "mélange des jeux": MixError.exit_code,
    "évaluation": EvaluationError.exit_code,
}
