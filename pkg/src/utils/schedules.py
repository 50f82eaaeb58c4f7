import numpy as np

from src.schemas.recovery import HyperParams


def alpha(t: int, hp: HyperParams) -> float:
    """Вес инноваций α_t = a/(t+1)^τ1."""
    return hp.a / (t + 1) ** hp.tau1


def beta(t: int, hp: HyperParams) -> float:
    """Вес консенсуса β_t = b/(t+1)^τ2."""
    return hp.b / (t + 1) ** hp.tau2


def gamma_threshold(t: int, hp: HyperParams) -> float:
    """Порог насыщения γ_t = Γ/(t+1)^τγ."""
    return hp.Gamma / (t + 1) ** hp.tau_gamma


def saturation_gains(residual: np.ndarray, gamma: float) -> np.ndarray:
    """
    Коэффициенты k_p = min(1, γ/|r_p|) для вектора невязок.

    При нулевой невязке k_p = 1: это предел формулы при |r_p| → 0,
    а усиление всё равно умножается на нулевую инновацию.
    """
    magnitude = np.abs(residual)
    gains = np.ones_like(magnitude)
    positive = magnitude > 0
    gains[positive] = np.minimum(1.0, gamma / magnitude[positive])
    return gains
