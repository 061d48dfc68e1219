"""
This module contains the exception hierarchy of the project. Every error raised on purpose by the
library derives from PoseVotingError, the command line maps the subclasses to exit codes.
"""


class PoseVotingError(Exception):
    """
    Base class for all errors raised by the library. It inherits from the built-in Exception
    class and remembers which component (module or object) raised it.
    """

    def __init__(self, message: str = "Pose voting pipeline error", component: str = None):
        """
        :param message: The error message to be passed to the Exception class.
        :param component: Name of the component that caused the error.
        """
        super().__init__(message)
        self.component = component

    @property
    def traceback(self) -> str:
        """
        This property returns a description of the cause of the error.
        :return: A string message describing the error. If the error has a cause, the message
            includes the type and message of the cause.
        """
        if not self.__cause__:
            message = "This error has been raised by itself"
        else:
            cause = self.__cause__
            message = "This error has been caught, it has been caused by:\n"
            message += f"Error type: {type(cause).__name__}\n Message: {str(cause)}"
        return message


class ParameterError(PoseVotingError, ValueError):
    """Exception raised if a parameter or configuration value is out of its valid range"""
    def __init__(self, message: str = "Invalid parameter", component: str = None):
        super().__init__(message, component)


class InvalidDepthError(ParameterError):
    """Exception raised for non-positive depth values"""
    def __init__(self, message: str = "Depth has to be positive", component: str = None):
        super().__init__(message, component)


class RankError(PoseVotingError):
    """Exception raised if there are fewer samples than requested dimensions"""
    def __init__(self, message: str = "Not enough samples for the requested rank",
                 component: str = None):
        super().__init__(message, component)


class RegressorStateError(PoseVotingError):
    """Exception raised if a regressor is used in a state that does not allow the operation"""
    def __init__(self, message: str = "Regressor is not trained", component: str = None):
        super().__init__(message, component)


class TrainingDivergenceError(PoseVotingError):
    """Exception raised if the training loss becomes non-finite"""
    def __init__(self, message: str = "Training diverged", component: str = None):
        super().__init__(message, component)


class CodebookBuildError(PoseVotingError):
    """Exception raised if a codebook can not be built from the given input"""
    def __init__(self, message: str = "Codebook could not be built", component: str = None):
        super().__init__(message, component)


class DimensionMismatchError(PoseVotingError):
    """Exception raised if descriptor dimensions of combined objects differ"""
    def __init__(self, message: str = "Descriptor dimensions do not match",
                 component: str = None):
        super().__init__(message, component)


class FormatError(PoseVotingError):
    """Exception raised for malformed binary or text files, remembers the byte offset"""
    def __init__(self, message: str = "Malformed file", offset: int = None,
                 component: str = None):
        """
        :param message: message to display
        :param offset: byte (or line) offset at which the file became unreadable
        :param component: name of the reader
        """
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message, component)
        self.offset = offset


class ConfigError(PoseVotingError):
    """Exception raised for unreadable or inconsistent configuration"""
    def __init__(self, message: str = "Invalid configuration", component: str = None):
        super().__init__(message, component)


class DatasetIOError(PoseVotingError, OSError):
    """Exception raised if frames, meshes or ground truth files can not be read or written"""
    def __init__(self, message: str = "Could not access dataset file", component: str = None):
        super().__init__(message, component)
