"""Exception hierarchy shared across the pipeline."""


class FaceveilError(Exception):
    """Base class for all pipeline errors."""


# --- video ingest ---

class UnreadableFile(FaceveilError):
    pass


class UnsupportedCodec(FaceveilError):
    pass


class EmptyVideo(FaceveilError):
    pass


class FaceOutOfFrame(FaceveilError):
    pass


# --- landmarks / conditions ---

class MissingLandmarks(FaceveilError):
    pass


class NoFaceDetected(FaceveilError):
    pass


class MultipleFaces(FaceveilError):
    pass


class SchemaMismatch(FaceveilError):
    pass


# --- generation ---

class BackendFailure(FaceveilError):
    pass


class NoQualifyingCandidate(FaceveilError):
    pass


# --- motion transfer ---

class DegenerateConfiguration(FaceveilError):
    pass


class SingularSystem(FaceveilError):
    pass


class LandmarkTrackingLost(FaceveilError):
    def __init__(self, frame_index, msg=None):
        super().__init__(msg or f"landmark tracking lost at frame {frame_index}")
        self.frame_index = frame_index


# --- privacy eval ---

class ZeroVector(FaceveilError):
    pass


class DimensionMismatch(FaceveilError):
    pass


class InsufficientFrames(FaceveilError):
    pass


class EmptyGroup(FaceveilError):
    pass


# --- triage eval ---

class TooFewFrames(FaceveilError):
    pass


class SingleClassTrainingSet(FaceveilError):
    pass


class SingleClassTestSet(FaceveilError):
    pass


class TooFewCases(FaceveilError):
    pass


class DatasetMismatch(FaceveilError):
    pass


class CaseMismatch(FaceveilError):
    pass


# --- human eval service ---

class UnknownVideo(FaceveilError):
    pass


class UnknownRater(FaceveilError):
    pass


class CorruptEventLog(FaceveilError):
    pass
