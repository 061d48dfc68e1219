"""
This module contains function for logging.
"""

import logging
import os

logging.basicConfig(format='%(asctime)s-%(levelname)s-%(name)s: %(message)s')

logging_levels = {
    "DEBUG": logging.DEBUG,
    "INFO": logging.INFO,
    "WARN": logging.WARN,
    "WARNING": logging.WARN,
    "ERROR": logging.ERROR,
    "CRITICAL": logging.CRITICAL}

LOG_LEVEL_VARIABLE = "PVOTE_LOG_LEVEL"


def get_default_logger(name: str) -> logging.Logger:
    """
    Get a logger with the specified name and log level. The log level can be set with the
    PVOTE_LOG_LEVEL environment variable, the name of the logger is modified to remove the "src."
    prefix.
    :param name: name of the logger use __name__ to get the module name
    :return: configured logger
    """

    name = name.replace("src.", "")

    logger = logging.getLogger(name)
    log_level = os.environ.get(LOG_LEVEL_VARIABLE)

    if log_level is None:
        logger.setLevel(logging.WARN)
    else:
        logger.setLevel(logging_levels.get(log_level.upper(), logging.WARN))
    return logger


def set_log_level(level: str):
    """
    Sets the log level of all loggers created by get_default_logger, already existing ones
    included. Used by the command line to apply -v flags.
    :param level: one of the keys of logging_levels
    """
    os.environ[LOG_LEVEL_VARIABLE] = level.upper()
    for name in list(logging.root.manager.loggerDict):
        if name.split(".")[0] in ("geometry", "rendering", "patches", "descriptors", "codebook",
                                  "voting", "verification", "evaluation", "utils", "app"):
            logging.getLogger(name).setLevel(logging_levels[level.upper()])
