"""Low-latency time-frequency mask separation with asymmetric STFT windows."""

from .errors import (
    AsymSepError, ConfigMismatchError, DataError, EmptySignalError,
    EmptySpectrogramError, InvalidConfigError,
)
from .masks import (
    Mask, OverlapStats, apply_mask, ideal_binary_mask, ideal_ratio_mask,
    load_mask, overlap_proportion, save_mask,
)
from .metrics import SeparationScores, bss_eval, permute_and_score
from .pipeline import (
    ExperimentResult, MixtureSpec, make_mixture, oracle_separate,
    sweep_analysis_lengths, trim_leading_silence,
)
from .stft import Spectrogram, analyze, synthesize
from .streaming import StreamProcessor, StreamState, stream_process
from .windows import (
    WindowConfig, WindowPair, design_asymmetric_pair, design_symmetric_pair,
    hann_prototype, verify_perfect_reconstruction,
)

__version__ = "0.1.0"
