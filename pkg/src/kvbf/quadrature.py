"""Fully symmetric Gaussian quadrature on the reference triangle.

The reference triangle has vertices (0, 0), (1, 0), (0, 1). Points are stored
in barycentric coordinates ``(l0, l1, l2)`` with ``x = l1`` and ``y = l2``.
All rules have positive weights and interior points; they were produced by
``tools/gen_quadrature.py`` and are exact for total degree <= ``degree``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_DEGREE = 10

_RULES = {
    1: (
        [
            (0.3333333333333333, 0.3333333333333333, 0.3333333333333333),
        ],
        [0.5],
    ),
    2: (
        [
            (0.16666666666666669, 0.16666666666666669, 0.6666666666666666),
            (0.16666666666666669, 0.6666666666666666, 0.16666666666666669),
            (0.6666666666666666, 0.16666666666666669, 0.16666666666666669),
        ],
        [0.16666666666666666, 0.16666666666666666, 0.16666666666666666],
    ),
    3: (
        [
            (0.15232042827454267, 0.15232042827454267, 0.6953591434509147),
            (0.15232042827454267, 0.6953591434509147, 0.15232042827454267),
            (0.6953591434509147, 0.15232042827454267, 0.15232042827454267),
            (0.45687063121294563, 0.45687063121294563, 0.08625873757410873),
            (0.45687063121294563, 0.08625873757410873, 0.45687063121294563),
            (0.08625873757410873, 0.45687063121294563, 0.45687063121294563),
        ],
        [0.11917433350535317, 0.11917433350535317, 0.11917433350535317, 0.047492333161313495, 0.047492333161313495, 0.047492333161313495],
    ),
    4: (
        [
            (0.09157621350977077, 0.09157621350977077, 0.8168475729804585),
            (0.09157621350977077, 0.8168475729804585, 0.09157621350977077),
            (0.8168475729804585, 0.09157621350977077, 0.09157621350977077),
            (0.4459484909159649, 0.4459484909159649, 0.10810301816807022),
            (0.4459484909159649, 0.10810301816807022, 0.4459484909159649),
            (0.10810301816807022, 0.4459484909159649, 0.4459484909159649),
        ],
        [0.054975871827660956, 0.054975871827660956, 0.054975871827660956, 0.11169079483900571, 0.11169079483900571, 0.11169079483900571],
    ),
    5: (
        [
            (0.3333333333333333, 0.3333333333333333, 0.3333333333333333),
            (0.1012865073234564, 0.1012865073234564, 0.7974269853530872),
            (0.1012865073234564, 0.7974269853530872, 0.1012865073234564),
            (0.7974269853530872, 0.1012865073234564, 0.1012865073234564),
            (0.4701420641051153, 0.4701420641051153, 0.05971587178976945),
            (0.4701420641051153, 0.05971587178976945, 0.4701420641051153),
            (0.05971587178976945, 0.4701420641051153, 0.4701420641051153),
        ],
        [0.1125000000000004, 0.06296959027241363, 0.06296959027241363, 0.06296959027241363, 0.0661970763942529, 0.0661970763942529, 0.0661970763942529],
    ),
    6: (
        [
            (0.2194299825497827, 0.2194299825497827, 0.5611400349004346),
            (0.2194299825497827, 0.5611400349004346, 0.2194299825497827),
            (0.5611400349004346, 0.2194299825497827, 0.2194299825497827),
            (0.4801379641122141, 0.4801379641122141, 0.0397240717755718),
            (0.4801379641122141, 0.0397240717755718, 0.4801379641122141),
            (0.0397240717755718, 0.4801379641122141, 0.4801379641122141),
            (0.01937172436124056, 0.839009259714791, 0.14161901592396842),
            (0.01937172436124056, 0.14161901592396842, 0.839009259714791),
            (0.839009259714791, 0.01937172436124056, 0.14161901592396842),
            (0.839009259714791, 0.14161901592396842, 0.01937172436124056),
            (0.14161901592396842, 0.01937172436124056, 0.839009259714791),
            (0.14161901592396842, 0.839009259714791, 0.01937172436124056),
        ],
        [0.08566656207648979, 0.08566656207648979, 0.08566656207648979, 0.0403655447965162, 0.0403655447965162, 0.0403655447965162, 0.020317279896830333, 0.020317279896830333, 0.020317279896830333, 0.020317279896830333, 0.020317279896830333, 0.020317279896830333],
    ),
    7: (
        [
            (0.1886612270828287, 0.1886612270828287, 0.6226775458343425),
            (0.1886612270828287, 0.6226775458343425, 0.1886612270828287),
            (0.6226775458343425, 0.1886612270828287, 0.1886612270828287),
            (0.4114634546766772, 0.4114634546766772, 0.17707309064664556),
            (0.4114634546766772, 0.17707309064664556, 0.4114634546766772),
            (0.17707309064664556, 0.4114634546766772, 0.4114634546766772),
            (0.060756036641475976, 0.060756036641475976, 0.878487926717048),
            (0.060756036641475976, 0.878487926717048, 0.060756036641475976),
            (0.878487926717048, 0.060756036641475976, 0.060756036641475976),
            (0.3129339914398116, 0.6545396512373327, 0.03252635732285569),
            (0.3129339914398116, 0.03252635732285569, 0.6545396512373327),
            (0.6545396512373327, 0.3129339914398116, 0.03252635732285569),
            (0.6545396512373327, 0.03252635732285569, 0.3129339914398116),
            (0.03252635732285569, 0.3129339914398116, 0.6545396512373327),
            (0.03252635732285569, 0.6545396512373327, 0.3129339914398116),
        ],
        [0.037098543926716444, 0.037098543926716444, 0.037098543926716444, 0.05027972495765292, 0.05027972495765292, 0.05027972495765292, 0.023397594857432095, 0.023397594857432095, 0.023397594857432095, 0.0279454014624326, 0.0279454014624326, 0.0279454014624326, 0.0279454014624326, 0.0279454014624326, 0.0279454014624326],
    ),
    8: (
        [
            (0.3333333333333333, 0.3333333333333333, 0.3333333333333333),
            (0.45929258829271996, 0.45929258829271996, 0.08141482341456008),
            (0.45929258829271996, 0.08141482341456008, 0.45929258829271996),
            (0.08141482341456008, 0.45929258829271996, 0.45929258829271996),
            (0.05054722831703151, 0.05054722831703151, 0.898905543365937),
            (0.05054722831703151, 0.898905543365937, 0.05054722831703151),
            (0.898905543365937, 0.05054722831703151, 0.05054722831703151),
            (0.17056930775175785, 0.17056930775175785, 0.6588613844964843),
            (0.17056930775175785, 0.6588613844964843, 0.17056930775175785),
            (0.6588613844964843, 0.17056930775175785, 0.17056930775175785),
            (0.2631128296346477, 0.7284923929553986, 0.008394777409953758),
            (0.2631128296346477, 0.008394777409953758, 0.7284923929553986),
            (0.7284923929553986, 0.2631128296346477, 0.008394777409953758),
            (0.7284923929553986, 0.008394777409953758, 0.2631128296346477),
            (0.008394777409953758, 0.2631128296346477, 0.7284923929553986),
            (0.008394777409953758, 0.7284923929553986, 0.2631128296346477),
        ],
        [0.07215780383889003, 0.047545817133643906, 0.047545817133643906, 0.047545817133643906, 0.016229248811599435, 0.016229248811599435, 0.016229248811599435, 0.05160868526735924, 0.05160868526735924, 0.05160868526735924, 0.01361515708721703, 0.01361515708721703, 0.01361515708721703, 0.01361515708721703, 0.01361515708721703, 0.01361515708721703],
    ),
    9: (
        [
            (0.3333333333333333, 0.3333333333333333, 0.3333333333333333),
            (0.04472951339445232, 0.04472951339445232, 0.9105409732110954),
            (0.04472951339445232, 0.9105409732110954, 0.04472951339445232),
            (0.9105409732110954, 0.04472951339445232, 0.04472951339445232),
            (0.4896825191987518, 0.4896825191987518, 0.02063496160249645),
            (0.4896825191987518, 0.02063496160249645, 0.4896825191987518),
            (0.02063496160249645, 0.4896825191987518, 0.4896825191987518),
            (0.4370895914929496, 0.4370895914929496, 0.12582081701410075),
            (0.4370895914929496, 0.12582081701410075, 0.4370895914929496),
            (0.12582081701410075, 0.4370895914929496, 0.4370895914929496),
            (0.18820353561903594, 0.18820353561903594, 0.6235929287619282),
            (0.18820353561903594, 0.6235929287619282, 0.18820353561903594),
            (0.6235929287619282, 0.18820353561903594, 0.18820353561903594),
            (0.2219629891607641, 0.7411985987844973, 0.03683841205473859),
            (0.2219629891607641, 0.03683841205473859, 0.7411985987844973),
            (0.7411985987844973, 0.2219629891607641, 0.03683841205473859),
            (0.7411985987844973, 0.03683841205473859, 0.2219629891607641),
            (0.03683841205473859, 0.2219629891607641, 0.7411985987844973),
            (0.03683841205473859, 0.7411985987844973, 0.2219629891607641),
        ],
        [0.0485678981414032, 0.012788837829348813, 0.012788837829348813, 0.012788837829348813, 0.015667350113558146, 0.015667350113558146, 0.015667350113558146, 0.0389137705023967, 0.0389137705023967, 0.0389137705023967, 0.039823869463603875, 0.039823869463603875, 0.039823869463603875, 0.0216417696886457, 0.0216417696886457, 0.0216417696886457, 0.0216417696886457, 0.0216417696886457, 0.0216417696886457],
    ),
    10: (
        [
            (0.3333333333333333, 0.3333333333333333, 0.3333333333333333),
            (0.14216110105661978, 0.14216110105661978, 0.7156777978867604),
            (0.14216110105661978, 0.7156777978867604, 0.14216110105661978),
            (0.7156777978867604, 0.14216110105661978, 0.14216110105661978),
            (0.03205537321693692, 0.03205537321693692, 0.9358892535661262),
            (0.03205537321693692, 0.9358892535661262, 0.03205537321693692),
            (0.9358892535661262, 0.03205537321693692, 0.03205537321693692),
            (0.32181299528887314, 0.5300541189272802, 0.14813288578384676),
            (0.32181299528887314, 0.14813288578384676, 0.5300541189272802),
            (0.5300541189272802, 0.32181299528887314, 0.14813288578384676),
            (0.5300541189272802, 0.14813288578384676, 0.32181299528887314),
            (0.14813288578384676, 0.32181299528887314, 0.5300541189272802),
            (0.14813288578384676, 0.5300541189272802, 0.32181299528887314),
            (0.36914678182778393, 0.6012333286834816, 0.029619889488734508),
            (0.36914678182778393, 0.029619889488734508, 0.6012333286834816),
            (0.6012333286834816, 0.36914678182778393, 0.029619889488734508),
            (0.6012333286834816, 0.029619889488734508, 0.36914678182778393),
            (0.029619889488734508, 0.36914678182778393, 0.6012333286834816),
            (0.029619889488734508, 0.6012333286834816, 0.36914678182778393),
            (0.16370173373714492, 0.8079306009229003, 0.02836766533995483),
            (0.16370173373714492, 0.02836766533995483, 0.8079306009229003),
            (0.8079306009229003, 0.16370173373714492, 0.02836766533995483),
            (0.8079306009229003, 0.02836766533995483, 0.16370173373714492),
            (0.02836766533995483, 0.16370173373714492, 0.8079306009229003),
            (0.02836766533995483, 0.8079306009229003, 0.16370173373714492),
        ],
        [0.040871664573118756, 0.022978981802380363, 0.022978981802380363, 0.022978981802380363, 0.006676484406571995, 0.006676484406571995, 0.006676484406571995, 0.03195245319820257, 0.03195245319820257, 0.03195245319820257, 0.03195245319820257, 0.03195245319820257, 0.03195245319820257, 0.017092324081485744, 0.017092324081485744, 0.017092324081485744, 0.017092324081485744, 0.017092324081485744, 0.017092324081485744, 0.012648878853649057, 0.012648878853649057, 0.012648878853649057, 0.012648878853649057, 0.012648878853649057, 0.012648878853649057],
    ),
}


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (nq, 3) barycentric
    weights: np.ndarray  # (nq,), sums to 1/2
    degree: int

    @property
    def ref_points(self) -> np.ndarray:
        """Cartesian reference coordinates, shape (nq, 2)."""
        return self.points[:, 1:]

    def __len__(self) -> int:
        return len(self.weights)


@lru_cache(maxsize=None)
def rule_for_degree(degree: int) -> QuadratureRule:
    """Return a rule integrating all polynomials of total degree <= `degree` exactly."""
    if not isinstance(degree, (int, np.integer)) or not 1 <= degree <= MAX_DEGREE:
        raise ValueError(f"quadrature degree must be in [1, {MAX_DEGREE}], got {degree!r}")
    pts, wts = _RULES[int(degree)]
    points = np.array(pts, dtype=float)
    points.setflags(write=False)
    weights = np.array(wts, dtype=float)
    weights.setflags(write=False)
    return QuadratureRule(points, weights, int(degree))


def map_to_cell(rule: QuadratureRule, cell: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map a rule onto a physical triangle.

    Parameters
    ----------
    rule : QuadratureRule
    cell : array_like, shape (3, 2)
        Vertex coordinates.

    Returns
    -------
    points : ndarray, shape (nq, 2)
    weights : ndarray, shape (nq,)
        Reference weights scaled by ``|det J| = 2 * area``.
    """
    cell = np.asarray(cell, dtype=float)
    jac = np.column_stack([cell[1] - cell[0], cell[2] - cell[0]])
    det = float(np.linalg.det(jac))
    if abs(det) <= 1e-14 * max(1.0, float(np.abs(jac).max()) ** 2):
        raise ValueError("degenerate cell (zero area)")
    return rule.points @ cell, rule.weights * abs(det)
