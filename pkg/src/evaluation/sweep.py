"""
Parameter sweeps: the detection is repeated for every value of one parameter and scored against
the ground truth.
"""
import os
from dataclasses import replace

import pandas as pd

from src.codebook.codebook import Codebook
from src.descriptors.base_regressor import BaseRegressor
from src.evaluation.matching import GroundTruth, PRF, match_frame
from src.evaluation.pipeline import Detector
from src.geometry.frame import RgbdFrame
from src.rendering.mesh import Mesh
from src.utils.config import PipelineConfig
from src.utils.exceptions import ParameterError
from src.utils.general import plot_sweep
from src.utils.logging import get_default_logger

logger = get_default_logger(__name__)

SWEEP_PARAMETERS = ("tau", "k", "step")
SWEEP_COLUMNS = ["parameter", "value", "tp", "fp", "fn", "precision", "recall", "f1"]


def configure(config: PipelineConfig, parameter: str, value: float) -> PipelineConfig:
    """configuration with the swept parameter set to the value"""
    if parameter == "tau":
        return config.with_overrides(tau=float(value))
    if parameter == "k":
        return config.with_overrides(knn=int(value))
    if parameter == "step":
        return replace(config, patch=replace(config.patch, grid_step=int(value)))
    raise ParameterError(f"Unknown sweep parameter {parameter}, expected one of "
                         f"{SWEEP_PARAMETERS}", "sweep")


def evaluate_frames(scenes: list[tuple[RgbdFrame, GroundTruth]], detector: Detector) -> PRF:
    """detection scores summed over the scenes"""
    total = PRF()
    for frame, gt in scenes:
        result = detector.detect(frame, gt.frame)
        total = total + match_frame(result.detections, gt, detector.meshes,
                                    detector.config.metric).prf()
    return total


def sweep(parameter: str, values: list, config: PipelineConfig,
          scenes: list[tuple[RgbdFrame, GroundTruth]], codebook: Codebook,
          regressor: BaseRegressor, meshes: dict[int, Mesh], out_dir: str = None) -> pd.DataFrame:
    """
    Scores the detection for every value of a parameter, the other parameters fixed.
    :param parameter: "tau", "k" or "step"
    :param values: parameter values in sweep order
    :param config: fixed configuration
    :param scenes: (frame, ground truth) pairs
    :param codebook: joint codebook
    :param regressor: regressor of the codebook
    :param meshes: object id -> mesh
    :param out_dir: if set, sweep_<parameter>.csv and sweep_<parameter>.png are written
    :return: DataFrame with the columns of SWEEP_COLUMNS, one row per value
    :raises ParameterError: for an empty value list or an unknown parameter
    """
    if parameter not in SWEEP_PARAMETERS:
        raise ParameterError(f"Unknown sweep parameter {parameter}, expected one of "
                             f"{SWEEP_PARAMETERS}", "sweep")
    if len(values) == 0:
        raise ParameterError("The sweep needs at least one value", "sweep")

    rows = []
    for value in values:
        detector = Detector(codebook, regressor, meshes, configure(config, parameter, value))
        prf = evaluate_frames(scenes, detector)
        rows.append({"parameter": parameter, "value": value, **prf.as_dict()})
        logger.info(f"Sweep {parameter} = {value}: F1 {prf.f1:.3f}")
    table = pd.DataFrame(rows, columns=SWEEP_COLUMNS)

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        table.to_csv(os.path.join(out_dir, f"sweep_{parameter}.csv"), index=False)
        plot_sweep(table, parameter, os.path.join(out_dir, f"sweep_{parameter}.png"))
    return table
