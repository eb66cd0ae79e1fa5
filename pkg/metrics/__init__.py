"""
Metrics package initialization.
"""
from metrics.evaluation import accuracy, adversarial_set, bp_trend, evaluate_presets, robust_accuracy
from metrics.mixture import (
    MIXTURE_SOURCES,
    MixtureReport,
    MixtureResult,
    Projection,
    fisher_separation,
    mixture_experiment,
    mixture_report,
    pca2,
)
from metrics.risk import RiskReport, check_report, friendly_loss, risk_decomposition, theorem1_check

__all__ = [
    'MIXTURE_SOURCES', 'MixtureReport', 'MixtureResult', 'Projection', 'RiskReport',
    'accuracy', 'adversarial_set', 'bp_trend', 'check_report', 'evaluate_presets', 'fisher_separation',
    'friendly_loss', 'mixture_experiment', 'mixture_report', 'pca2', 'risk_decomposition',
    'robust_accuracy', 'theorem1_check',
]
