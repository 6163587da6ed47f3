import numpy as np

from ..fim.numeric import AdditiveGaussianModel, LogLikelihoodModel

__all__ = ["gaussian_mean_model", "gaussian_mean_loglik_model"]


def gaussian_mean_model(n: int, v: float = 1.0) -> AdditiveGaussianModel:
    """
    Constant mean in white noise, y = mu 1_n + w, information n / v.
    """
    return AdditiveGaussianModel(
        signal=lambda theta: np.full(n, theta[0]),
        v=v,
        theta_labels=('mu',),
        signal_gradient=lambda theta: np.ones((n, 1)),
        name='gaussian-mean',
    )


def gaussian_mean_loglik_model(n: int, v: float = 1.0) -> LogLikelihoodModel:
    """
    Log-likelihood of the constant-mean model over theta = (mu,), v known.
    """
    def loglik(theta: np.ndarray, y: np.ndarray) -> np.ndarray:
        return -0.5 * n * np.log(2.0 * np.pi * v) - \
            np.sum((y - theta[0]) ** 2, axis=-1) / (2.0 * v)

    def sampler(theta: np.ndarray, rng: np.random.Generator,
                size: int) -> np.ndarray:
        return theta[0] + np.sqrt(v) * rng.standard_normal((size, n))

    return LogLikelihoodModel(loglik, sampler, ('mu',), name='gaussian-mean')
