"""
This module contains the plotting helpers used across the project. All plots are written to PNG
files and closed afterwards.
"""

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import seaborn as sns

from src.utils.logging import get_default_logger

logger = get_default_logger(__name__)


def _save(fig, path: str):
    fig.tight_layout()
    fig.savefig(path, format='png', dpi=150)
    plt.close(fig)
    logger.debug(f"Wrote plot {path}")


def plot_loss_curve(loss_curve: list[tuple[int, float]], path: str, title: str = None):
    """
    Plots the monitored loss of a training run over the iterations.
    :param loss_curve: (iteration, loss) pairs
    :param path: path of the PNG file
    :param title: optional title prefix
    """
    sns.set(style="whitegrid")
    sns.set_context("paper", font_scale=1.5)
    df = pd.DataFrame(loss_curve, columns=["iteration", "loss"])

    fig, ax = plt.subplots(figsize=(12, 4))
    sns.lineplot(data=df, x="iteration", y="loss", ax=ax, linewidth=2)
    ax.set_yscale("log")
    ax.set_xlabel("Iterations")
    ax.set_ylabel("Reconstruction MSE")
    lowest = df["loss"].min()
    ax.set_title(f"{title + ': ' if title else ''}lowest loss {lowest:.5f} on iteration "
                 f"{int(df['iteration'][df['loss'].idxmin()])}")
    _save(fig, path)


def plot_sweep(df: pd.DataFrame, parameter: str, path: str):
    """
    Line plot of precision, recall and F1 against a swept parameter.
    :param df: sweep table with the columns value, precision, recall, f1
    :param parameter: name of the swept parameter, used as x label
    :param path: path of the PNG file
    """
    sns.set(style="whitegrid")
    sns.set_context("paper", font_scale=1.5)
    long = df.melt(id_vars="value", value_vars=["precision", "recall", "f1"],
                   var_name="measure", value_name="score")

    fig, ax = plt.subplots(figsize=(8, 5))
    sns.lineplot(data=long, x="value", y="score", hue="measure", marker="o", ax=ax, linewidth=2)
    ax.set_xlabel(parameter)
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(f"Detection scores over {parameter}")
    _save(fig, path)


def _patch_image(patch: np.ndarray) -> np.ndarray:
    """color channels left and depth channel right of a (4, 32, 32) patch in [-1, 1]"""
    patch = np.clip((patch + 1.0) / 2.0, 0.0, 1.0)
    color = np.transpose(patch[:3], (1, 2, 0))
    depth = np.repeat(patch[3][..., None], 3, axis=2)
    return np.concatenate([color, depth], axis=1)


def plot_reconstruction_grid(inputs: np.ndarray, reconstructions: dict[str, np.ndarray],
                             path: str):
    """
    Side by side grid of input patches and their reconstructions, one row per patch. Each cell
    shows the color channels left and the depth channel right.
    :param inputs: (N, 4, 32, 32) patches in [-1, 1]
    :param reconstructions: column title -> (N, 4, 32, 32) reconstructions
    :param path: path of the PNG file
    """
    columns = {"input": inputs, **reconstructions}
    rows = len(inputs)
    fig, axes = plt.subplots(nrows=max(rows, 1), ncols=len(columns),
                             figsize=(2.4 * len(columns), 1.3 * max(rows, 1)), squeeze=False)
    for col, (name, data) in enumerate(columns.items()):
        axes[0, col].set_title(name, fontsize=9)
        for row in range(rows):
            axes[row, col].imshow(_patch_image(data[row]), interpolation="nearest")
    for ax in axes.flat:
        ax.axis("off")
    _save(fig, path)


def plot_vote_map(color: np.ndarray, pixels: np.ndarray, weights: np.ndarray, path: str,
                  title: str = None):
    """
    Scatter of projected vote centroids over the frame, colored by vote weight.
    :param color: (H, W, 3) uint8 image
    :param pixels: (N, 2) projected centroids (u, v)
    :param weights: (N,) vote weights
    :param path: path of the PNG file
    :param title: optional title
    """
    height, width = color.shape[:2]
    fig, ax = plt.subplots(figsize=(width / 80, height / 80))
    ax.imshow(color)
    if len(pixels):
        order = np.argsort(weights)
        points = ax.scatter(pixels[order, 0], pixels[order, 1], c=weights[order], s=6,
                            cmap="inferno", vmin=0.0, vmax=1.0)
        fig.colorbar(points, ax=ax, fraction=0.03)
    ax.set_xlim(0, width)
    ax.set_ylim(height, 0)
    ax.axis("off")
    if title:
        ax.set_title(title)
    _save(fig, path)


def plot_label_map(labels: np.ndarray, path: str):
    """
    Writes a label image with one color per object id, background black.
    :param labels: (H, W) int label image, 0 is background
    :param path: path of the PNG file
    """
    palette = np.array(sns.color_palette("tab10", 10))
    image = np.zeros(labels.shape + (3,))
    foreground = labels > 0
    image[foreground] = palette[(labels[foreground] - 1) % len(palette)]
    plt.imsave(path, image)


def plot_patch_matches(scene: np.ndarray, neighbors: np.ndarray, correct: np.ndarray, path: str,
                       rows: int = 8):
    """
    Scene patches next to their nearest codebook patch, correct matches in the left column pair
    and wrong matches in the right one.
    :param scene: (N, 4, 32, 32) scene patches in [-1, 1]
    :param neighbors: (N, 4, 32, 32) nearest codebook patches
    :param correct: (N,) bool, True if the neighbor votes for the right object and centroid
    :param path: path of the PNG file
    :param rows: maximum number of matches shown per column pair
    """
    groups = [np.flatnonzero(correct)[:rows], np.flatnonzero(~correct)[:rows]]
    count = max(max(len(group) for group in groups), 1)
    fig, axes = plt.subplots(nrows=count, ncols=4, figsize=(2.4 * 4, 1.3 * count), squeeze=False)
    for pair, (group, label) in enumerate(zip(groups, ["correct", "wrong"])):
        axes[0, 2 * pair].set_title(f"{label}: scene", fontsize=9)
        axes[0, 2 * pair + 1].set_title("codebook", fontsize=9)
        for row, index in enumerate(group):
            axes[row, 2 * pair].imshow(_patch_image(scene[index]), interpolation="nearest")
            axes[row, 2 * pair + 1].imshow(_patch_image(neighbors[index]), interpolation="nearest")
    for ax in axes.flat:
        ax.axis("off")
    _save(fig, path)
