from .escape import EscapeReport, measure_escape, predict_escape_time
from .noise import covariance_lipschitz_probe, estimate_noise_covariance, fit_noise_moments
from .regions import ClassifierParams, RegionLabel, classify, spectral_split
from .verify import VerificationReport, verify_descent, verify_final_bound

__all__ = [
    "ClassifierParams",
    "EscapeReport",
    "RegionLabel",
    "VerificationReport",
    "classify",
    "covariance_lipschitz_probe",
    "estimate_noise_covariance",
    "fit_noise_moments",
    "measure_escape",
    "predict_escape_time",
    "spectral_split",
    "verify_descent",
    "verify_final_bound",
]
