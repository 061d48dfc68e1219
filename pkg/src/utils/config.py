"""
This module reads the pipeline configuration file. The file has INI syntax with one section per
parameter block, every key is a field of the block's dataclass:

    [vote]
    k = 3
    tau = 10.0

Missing keys keep their defaults, unknown sections or keys raise a ConfigError.
"""
import configparser
import os
import types
import typing
from dataclasses import dataclass, field, fields, replace
from enum import Enum

from src.codebook.index import IndexParams
from src.descriptors.training import RegressorConfig, TrainConfig
from src.evaluation.metrics import MetricConfig
from src.evaluation.synthetic import SceneConfig
from src.geometry.camera import CameraIntrinsics
from src.geometry.viewpoints import RenderConfig
from src.patches.sampling import PatchConfig
from src.utils.exceptions import ConfigError
from src.utils.logging import get_default_logger
from src.utils.static import default_config_file
from src.verification.detections import VerifyParams
from src.verification.selection import DetectionConfig
from src.voting.votes import VoteParams

logger = get_default_logger(__name__)

_TRUE = {"1", "yes", "true", "on"}
_FALSE = {"0", "no", "false", "off"}


@dataclass(frozen=True)
class PipelineConfig:
    """
    All parameter blocks of the pipeline, one per section of the configuration file.
    """
    camera: CameraIntrinsics = field(default_factory=CameraIntrinsics)
    render: RenderConfig = field(default_factory=RenderConfig)
    patch: PatchConfig = field(default_factory=PatchConfig)
    regressor: RegressorConfig = field(default_factory=RegressorConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    index: IndexParams = field(default_factory=IndexParams)
    vote: VoteParams = field(default_factory=VoteParams)
    verify: VerifyParams = field(default_factory=VerifyParams)
    metric: MetricConfig = field(default_factory=MetricConfig)
    detect: DetectionConfig = field(default_factory=DetectionConfig)
    scene: SceneConfig = field(default_factory=SceneConfig)

    @classmethod
    def sections(cls) -> dict[str, type]:
        """section name -> dataclass of the section"""
        return {f.name: f.type for f in fields(cls)}

    def with_overrides(self, tau: float = None, knn: int = None, step: int = None,
                       protocol: str = None, exact_nn: bool = None, n: int = None,
                       seed: int = None) -> "PipelineConfig":
        """
        Applies command line values on top of the configuration, None keeps the current value.
        :param tau: vote distance threshold
        :param knn: neighbors per scene patch
        :param step: scene sampling step in pixels
        :param protocol: "original" or "modes", resets N to the protocol default unless n is set
        :param exact_nn: brute-force retrieval
        :param n: number of hypotheses
        :param seed: seed of training, regressor initialization and index construction
        """
        config = self
        if tau is not None:
            config = replace(config, vote=replace(config.vote, tau=tau))
        if knn is not None:
            config = replace(config, vote=config.vote.with_k(knn))
        if step is not None:
            config = replace(config, patch=replace(config.patch, grid_step=step))
        if protocol is not None:
            config = replace(config, detect=DetectionConfig(protocol, n, config.detect.nms_radius))
        elif n is not None:
            config = replace(config, detect=replace(config.detect, n=n))
        if exact_nn is not None:
            config = replace(config, index=replace(config.index, exact=exact_nn))
        if seed is not None:
            config = replace(config, train=replace(config.train, seed=seed),
                             regressor=replace(config.regressor, seed=seed),
                             index=replace(config.index, seed=seed))
        return config

    def save(self, path: str):
        """writes the complete configuration, loading the file gives an equal configuration"""
        parser = configparser.ConfigParser()
        parser.optionxform = str
        for section in self.sections():
            block = getattr(self, section)
            parser[section] = {f.name: _format(getattr(block, f.name)) for f in fields(block)
                               if f.init}
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", encoding="utf-8") as config_file:
            parser.write(config_file)


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, (frozenset, set)):
        value = sorted(value)
    if isinstance(value, (tuple, list)):
        return ", ".join(_format(v) for v in value)
    return str(value)


def _convert(value: str, hint):
    """converts a configuration string to the annotated type of a field"""
    if value.strip().lower() in ("none", ""):
        return None
    origin = typing.get_origin(hint)
    if origin in (typing.Union, types.UnionType):
        hint = next(arg for arg in typing.get_args(hint) if arg is not type(None))
        origin = typing.get_origin(hint)
    if origin in (tuple, frozenset):
        element = typing.get_args(hint)[0]
        return origin(_convert(part, element) for part in value.split(",") if part.strip())
    if hint is bool:
        lowered = value.strip().lower()
        if lowered not in _TRUE | _FALSE:
            raise ValueError(f"{value} is not a boolean")
        return lowered in _TRUE
    if isinstance(hint, type) and issubclass(hint, Enum):
        return hint(value.strip())
    return hint(value.strip())


def _read_section(name: str, cls: type, items: dict[str, str]):
    known = {f.name: f.type for f in fields(cls) if f.init}
    unknown = set(items).difference(known)
    if unknown:
        raise ConfigError(f"Unknown keys {sorted(unknown)} in section [{name}]", "config")
    values = {}
    for key, value in items.items():
        try:
            values[key] = _convert(value, known[key])
        except ValueError as ex:
            raise ConfigError(f"Invalid value '{value}' for {key} in section [{name}]",
                              "config") from ex
    return cls(**values)


def load_config(path: str = None) -> PipelineConfig:
    """
    Reads a configuration file.
    :param path: configuration file, the bundled default configuration if None
    :return: PipelineConfig
    :raises ConfigError: for unreadable files, unknown sections or keys and unparsable values
    :raises ParameterError: for values a parameter block rejects
    """
    path = path or default_config_file
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        with open(path, "r", encoding="utf-8") as config_file:
            parser.read_file(config_file)
    except OSError as ex:
        raise ConfigError(f"Could not read configuration file {path}: {ex}", "config") from ex
    except configparser.Error as ex:
        raise ConfigError(f"Malformed configuration file {path}: {ex}", "config") from ex

    sections = PipelineConfig.sections()
    unknown = set(parser.sections()).difference(sections)
    if unknown:
        raise ConfigError(f"Unknown sections {sorted(unknown)} in {path}", "config")
    blocks = {name: _read_section(name, cls, dict(parser[name]))
              for name, cls in sections.items() if parser.has_section(name)}
    logger.debug(f"Loaded configuration {path} with sections {sorted(blocks)}")
    return PipelineConfig(**blocks)
