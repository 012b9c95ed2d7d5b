"""Per-breath ventilator mode classification from flow/pressure waveforms."""

__version__ = "0.1.0"

from .core import (CLASS_ORDER, BreathAnnotation, RawBreathRecord,
                   SamplingSpec, VentMode, WaveformFile)
from .breath import Breath, BreathMetadata, compute_metadata, find_x0, \
    make_breath
from .features import (FeatureConfig, FeatureStream, FeatureVector,
                       block_slopes, detect_plateau, extract_features,
                       feature_matrix, insp_flow_slope_variance,
                       pressure_itime, pressure_variance)
from .forest import (ForestConfig, RandomForestModel, deserialize_model,
                     predict, predict_batch, serialize_model, train_forest)
from .io import (LabeledDataset, join_dataset, parse_annotations,
                 parse_waveform_file, serialize_waveform_file,
                 write_predictions)
from .metrics import (ConfusionMatrix, CVGrouping, MetricsReport,
                      PipelineConfig, evaluate_model, f1_score, kfold_cv,
                      per_class_metrics, split_by_patient, train_on_dataset)
from .smoothing import (SmoothingConfig, SmoothingVariant, latency_bound,
                        look_ahead_smooth, look_behind_smooth, smooth)
from .ablation import (FirstMConfig, RandomAblationConfig, first_m_ablate,
                       missing_data_curve, random_ablate, reduction_summary,
                       sweep_first_m)
from .synth import ArtifactKind, SynthConfig, generate_breath, \
    generate_patient, generate_session, inject_artifact
