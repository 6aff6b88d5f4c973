"""Deviation measurement, decay verdicts, tangents, jets, classification and blow-ups."""

from .agreement import Agreement, fit_agreement, jet_agreement
from .blowup import (BlowupConfig, BlowupResult, BlowupStage, aitken_limit, inductive_blowup, probe_grid,
                     shear_subtract)
from .classify import ClassifyConfig, Classification, classify_point, classify_points, combine
from .decay import (BOUNDED, DIVERGES, INCONCLUSIVE, VANISHES, DecayReport, VerdictConfig, classify_sequence,
                    decay_report, decay_scan, dyadic_radii)
from .deviation import Deviation, one_sided_deviation, two_sided_deviation
from .dichotomy import INFINITY, INTERMEDIATE, ZERO, DichotomyResult, SampledField, dichotomy_probe, power_field
from .fit import JetFit, fit_jet, fit_level
from .tangent import ConeCertificate, TangentResult, cone_certificate, estimate_tangent, refine_tangent

__all__ = [
    "Agreement", "BOUNDED", "BlowupConfig", "BlowupResult", "BlowupStage", "ClassifyConfig", "Classification",
    "ConeCertificate", "DIVERGES", "DecayReport", "Deviation", "DichotomyResult", "INCONCLUSIVE", "INFINITY",
    "INTERMEDIATE", "JetFit", "SampledField", "TangentResult", "VANISHES", "VerdictConfig", "ZERO", "aitken_limit",
    "classify_point", "classify_points", "classify_sequence", "combine", "cone_certificate", "decay_report",
    "decay_scan", "dichotomy_probe", "dyadic_radii", "estimate_tangent", "fit_agreement", "fit_jet", "fit_level",
    "inductive_blowup", "jet_agreement", "one_sided_deviation", "power_field", "probe_grid", "refine_tangent",
    "shear_subtract", "two_sided_deviation",
]
