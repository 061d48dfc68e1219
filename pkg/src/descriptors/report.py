"""
Side by side reconstruction report of several regressors on the same patches, and the retrieval
report pairing scene patches with their nearest codebook patch.
"""
import os

import numpy as np
import pandas as pd

from src.codebook.codebook import Codebook, knn
from src.descriptors.base_regressor import BaseRegressor, as_batch
from src.patches.sampling import Patch
from src.utils.exceptions import ParameterError
from src.utils.general import plot_patch_matches, plot_reconstruction_grid
from src.utils.logging import get_default_logger

logger = get_default_logger(__name__)

RETRIEVAL_COLUMNS = ["patch", "u", "v", "neighbor", "object_id", "distance", "centroid_error",
                     "correct"]


def reconstruction_report(regressors: dict[str, BaseRegressor], patches,
                          out_dir: str = None) -> pd.DataFrame:
    """
    Reconstructs the patches with every regressor and compares the errors.
    :param regressors: column name (e.g. "CAE-64") -> trained regressor
    :param patches: list of Patch or (N, 4, 32, 32) array
    :param out_dir: if set, writes reconstruction.png (rows: patches, columns: input and one
        reconstruction per regressor) and reconstruction.csv (regressor, patch, mse)
    :return: DataFrame with one row per patch and one MSE column per regressor
    """
    data = as_batch(patches)
    reconstructions = {name: regressor.reconstruct(data) for name, regressor in regressors.items()}
    table = pd.DataFrame({name: ((recon - data) ** 2).mean(axis=(1, 2, 3))
                          for name, recon in reconstructions.items()})
    table.index.name = "patch"

    for name in table.columns:
        logger.info(f"Reconstruction MSE {name}: {table[name].mean():.5f}")

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        long = table.reset_index().melt(id_vars="patch", var_name="regressor", value_name="mse")
        long[["regressor", "patch", "mse"]].to_csv(os.path.join(out_dir, "reconstruction.csv"),
                                                   index=False)
        plot_reconstruction_grid(data, reconstructions,
                                 os.path.join(out_dir, "reconstruction.png"))
    return table


def retrieval_report(scene_patches: list[Patch], object_centroids: dict[int, np.ndarray],
                     codebook: Codebook, regressor: BaseRegressor, codebook_patches,
                     centroid_tol: float = 0.025, mode: str = "exact",
                     out_dir: str = None) -> pd.DataFrame:
    """
    Nearest codebook patch of every scene patch. A match is correct if the neighbor belongs to
    an object of the frame and its vote, the scene patch center plus the stored offset, lands
    within centroid_tol of a centroid of that object.
    :param scene_patches: patches of one frame, e.g. from sample_scene
    :param object_centroids: object id -> (M, 3) annotated centroids in the camera frame
    :param codebook: codebook to search
    :param regressor: regressor the codebook was built with
    :param codebook_patches: list of Patch or (N, 4, 32, 32) array in codebook entry order
    :param centroid_tol: largest centroid error of a correct match in meters
    :param mode: "exact" or "approx" retrieval
    :param out_dir: if set, writes retrieval.csv and retrieval.png (scene and codebook patch
        side by side, correct and wrong matches separated)
    :return: DataFrame with the columns patch, u, v, neighbor, object_id, distance,
        centroid_error, correct; centroid_error is NaN if the object is not in the frame
    :raises ParameterError: if the codebook patches do not match the codebook
    """
    neighbor_data = as_batch(codebook_patches)
    if len(neighbor_data) != len(codebook):
        raise ParameterError(f"Got {len(neighbor_data)} patches for a codebook of "
                             f"{len(codebook)} entries", "retrieval_report")
    scene = as_batch(scene_patches)
    descriptors = regressor.encode(scene)

    rows = []
    for index, (patch, descriptor) in enumerate(zip(scene_patches, descriptors)):
        matches = knn(codebook, descriptor, 1, mode)
        if not matches:
            continue
        entry, distance = matches[0]
        error = np.nan
        centroids = object_centroids.get(entry.object_id)
        if centroids is not None and len(centroids):
            vote = patch.center_point + entry.offset
            error = float(np.min(np.linalg.norm(np.atleast_2d(centroids) - vote, axis=1)))
        rows.append({"patch": index, "u": patch.source_pixel[0], "v": patch.source_pixel[1],
                     "neighbor": entry.index, "object_id": entry.object_id,
                     "distance": distance, "centroid_error": error,
                     "correct": bool(error <= centroid_tol)})
    table = pd.DataFrame(rows, columns=RETRIEVAL_COLUMNS)
    table["correct"] = table["correct"].astype(bool)

    if len(table):
        logger.info(f"{int(table['correct'].sum())} of {len(table)} nearest codebook patches "
                    f"are correct, median distance {table['distance'].median():.3f}")
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        table.to_csv(os.path.join(out_dir, "retrieval.csv"), index=False)
        plot_patch_matches(scene[table["patch"].to_numpy()],
                           neighbor_data[table["neighbor"].to_numpy()],
                           table["correct"].to_numpy(), os.path.join(out_dir, "retrieval.png"))
    return table
