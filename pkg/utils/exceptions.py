# utils/exceptions.py - Jerarquía de errores del motor

class TsBayesError(Exception):
    """Error base de tsbayes. La CLI lo traduce a código de salida 2."""


class SeriesDimensionError(TsBayesError):
    """Longitudes incompatibles al diferenciar o reconstruir una serie"""


class SeriesParseError(TsBayesError):
    """Archivo de datos vacío, columna ausente o valores no numéricos"""


class UndefinedCorrelationError(TsBayesError):
    """Autocorrelación no definida (serie constante)"""


class FourierDomainError(TsBayesError):
    """Número de términos de Fourier incompatible con el periodo"""


class SeriesTooShortError(TsBayesError):
    """Serie demasiado corta para la operación solicitada"""


class InvalidPriorError(TsBayesError):
    """Parámetros de una distribución a priori inválidos"""


class PriorDomainError(TsBayesError):
    """La familia a priori no es compatible con el dominio del parámetro"""


class UnknownParameterError(TsBayesError):
    """El nombre no corresponde a ningún parámetro del modelo"""


class ModelSpecError(TsBayesError):
    """Especificación de modelo incompatible con la serie"""


class MissingRegressorsError(TsBayesError):
    """Faltan regresores futuros para pronosticar"""


class InformationCriterionError(TsBayesError):
    """Criterio de información no definido para el ajuste"""


class IncomparableModelsError(TsBayesError):
    """Modelos ajustados sobre observaciones distintas"""


class BridgeSamplingError(TsBayesError):
    """Bridge sampling sin suficientes draws"""


class ConfigError(TsBayesError):
    """Configuración de ejecución inválida"""


class SamplerInitError(TsBayesError):
    """No se encontró un punto inicial con densidad finita. Código de salida 3."""
