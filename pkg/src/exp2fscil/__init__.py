"""Few-shot class-incremental simulation with inference-time prototype refinement."""

from .core import (DatasetInvalid, InvariantError, ProtocolConfig, ProtocolError, SessionDataset,
                   Split, StrategyConfig, ValidationReport, Variant, Violation, validate)
from .exp2 import (ExplorationResult, apply_plan, beta_schedule, exploit_update, explore,
                   plan_updates, run_session_inference, select_top_r)
from .io import DatasetFormatError, RunConfig, load_dataset, write_dataset, write_report
from .protocol import (ProtocolReport, SessionReport, incremental_accuracy, overall_accuracy,
                       run_protocol)
from .prototype import (PrototypeBank, compute_prototype, cosine_similarity, predict,
                        predict_many)
from .synth import (MeanPlacement, OverlapQuery, SynthSpec, generate_dataset, measure_separation,
                    monte_carlo_overlap, overlap_bound, std_normal_cdf)

__version__ = "0.1.0"
