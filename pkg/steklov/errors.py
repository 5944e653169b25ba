class SteklovError(ValueError):
    """Base class for every failure raised by the steklov package"""


class PolynomialError(SteklovError):
    """Bad star order, grid mismatch or an inexact division by z"""


class SchemeError(SteklovError):
    """Schur parameters outside the open unit disk or of the wrong kind"""


class ExtractionError(SteklovError):
    """Moment sequence does not come from a nondegenerate positive measure"""

    def __init__(self, message: str, index: int):
        super().__init__(f"{message} (failing index {index})")
        self.index = index


class SingularPointError(SteklovError):
    """Evaluation requested at a jump point, a Gamma pole or zeta = 0"""


class WeightError(SteklovError):
    """Vanishing denominator or a weight that is not strictly positive"""


class ArtifactError(SteklovError):
    """Upstream artifact missing from the output directory"""

    def __init__(self, message: str, producer: str):
        super().__init__(f"{message}; run `{producer}` first")
        self.producer = producer


class ConfigError(SteklovError):
    """Invalid run configuration"""
